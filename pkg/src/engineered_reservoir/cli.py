"""Command-line batch runner: ``engres {run,scan,validate,steady}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .analysis import run_fock_converged, run_scenario, scan, steady_value
from .config import RunConfig, load_config, load_preset, preset_names
from .errors import ConfigError, FockConvergenceError, IntegrationError, TrajectoryTooShortError
from .ioncavity import analytic_steady, build_effective_model, derive_dressed, rwa_validity
from .lindblad import steady_state

log = logging.getLogger("engres")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_CONVERGENCE = 4
EXIT_VALIDATION = 5

TRAJECTORY_HEADER = ("time", "fidelity", "trace_error", "purity", "pop_e", "pop_g", "mean_photon")


def fmt(x: float) -> str:
    return "%.17g" % x


def label(x: float) -> str:
    """Shortest round-trip form for file names."""
    return np.format_float_positional(float(x), trim="-")


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_csv(traj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    cols = (traj.times, traj.fidelities, traj.trace_errors, traj.purities, traj.pop_e, traj.pop_g, traj.mean_photons)
    for row in zip(*cols):
        w.writerow([fmt(float(x)) for x in row])
    return buf.getvalue()


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def write_json(path: Path, data: dict) -> None:
    atomic_write(path, json.dumps(jsonable(data), indent=2, sort_keys=True) + "\n")


def resolve_config(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        cfg = RunConfig()
    if args.fock_dim is not None:
        cfg = cfg.replace(fock_dim=args.fock_dim)
    return cfg


def steady_summary(traj, params) -> dict:
    try:
        sv = steady_value(traj, params)
    except TrajectoryTooShortError as exc:
        return {"fidelity": None, "std": None, "window": None, "note": str(exc)}
    return {"fidelity": sv.mean, "std": sv.std, "window": list(sv.window), "drift": sv.drift}


def trajectory_diagnostics(traj) -> dict:
    return {
        "max_trace_error": float(np.max(traj.trace_errors)),
        "min_eigenvalue": float(np.min(traj.min_eigenvalues)),
        "max_hermiticity_residual": float(np.max(traj.hermiticity_residuals)),
        "rhs_evaluations": int(traj.nfev),
        "samples": len(traj),
    }


def cmd_run(cfg: RunConfig, out: Path) -> int:
    params = cfg.params()
    fock = None
    if cfg.model == "full" and cfg.fock_check:
        traj, report = run_fock_converged(params, cfg.initial_atom, cfg.t_max, cfg.dt_out, cfg.rtol, cfg.atol)
        fock = report.as_dict()
    else:
        traj = run_scenario(params, cfg.model, cfg.initial_atom, cfg.t_max, cfg.dt_out, cfg.rtol, cfg.atol)
    atomic_write(out / f"{cfg.name}.csv", trajectory_csv(traj))
    summary = {
        "name": cfg.name,
        "steady": steady_summary(traj, params),
        "final_fidelity": float(traj.fidelities[-1]),
        "rwa": rwa_validity(params).as_dict(),
        "params": cfg.to_mapping(),
        "fock_convergence": fock,
        "diagnostics": trajectory_diagnostics(traj),
    }
    write_json(out / f"{cfg.name}.json", summary)
    log.info("%s: steady F = %s", cfg.name, summary["steady"]["fidelity"])
    return EXIT_OK


def scan_csv(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [result.axis_name, "steady_fidelity", "deviation", "drift", "max_trace_error", "min_eigenvalue", "t_end"]
    )
    rows = zip(result.axis, result.steady_fidelities, result.deviations, result.drifts, result.trajectories)
    for v, f, dev, drift, traj in rows:
        w.writerow(
            [
                fmt(v),
                fmt(f),
                fmt(dev),
                fmt(drift),
                fmt(float(np.max(traj.trace_errors))),
                fmt(float(np.min(traj.min_eigenvalues))),
                fmt(float(traj.times[-1])),
            ]
        )
    return buf.getvalue()


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    if cfg.scan_axis is None:
        raise ConfigError("scan requires scan_axis", key="scan_axis")
    if not cfg.scan_values:
        raise ConfigError("scan_values is empty", key="scan_values")
    if cfg.series_axis is not None and not cfg.series_values:
        raise ConfigError("series_values is empty", key="series_values")
    series = [(None, cfg)]
    if cfg.series_axis is not None:
        series = [(v, _with_axis(cfg, cfg.series_axis, v)) for v in cfg.series_values]
    verdicts = []
    for value, c in series:
        result = scan(
            c.params(),
            cfg.scan_axis,
            cfg.scan_values,
            t_max=cfg.t_max,
            dt_out=cfg.dt_out,
            model_kind=cfg.model,
            rho0=cfg.initial_atom,
            rtol=cfg.rtol,
            atol=cfg.atol,
            workers=cfg.workers,
        )
        stem = cfg.name if value is None else f"{cfg.name}_{cfg.series_axis}={label(value)}"
        atomic_write(out / f"{stem}.csv", scan_csv(result))
        for v, traj in zip(result.axis, result.trajectories):
            atomic_write(out / f"{stem}_{cfg.scan_axis}={label(v)}.csv", trajectory_csv(traj))
        verdicts.append(
            {
                "series_axis": cfg.series_axis,
                "series_value": value,
                "file": f"{stem}.csv",
                "axis": result.axis,
                "steady_fidelities": result.steady_fidelities,
                "strictly_decreasing": result.strictly_decreasing,
                "non_decreasing": result.non_decreasing,
            }
        )
        log.info("%s: %s", stem, ", ".join(f"{f:.4f}" for f in result.steady_fidelities))
    write_json(out / f"{cfg.name}.json", {"name": cfg.name, "scan_axis": cfg.scan_axis, "series": verdicts,
                                           "params": cfg.to_mapping()})
    return EXIT_OK


def _with_axis(cfg: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == "nbar":
        return cfg.replace(nbar_a=value, nbar_s=value)
    return cfg.replace(**{axis: value})


def cmd_validate(out: Path | None, basis_mutator=None) -> int:
    from .validation import run_checks

    results = run_checks(basis_mutator=basis_mutator)
    report = {"passed": all(r.passed for r in results), "checks": [r.as_dict() for r in results]}
    for r in results:
        log.info("%-26s %s  value=%.3g tol=%.3g  %s", r.name, "PASS" if r.passed else "FAIL", r.value, r.tolerance, r.detail)
    if out is not None:
        write_json(out / "validate.json", report)
    print(json.dumps(jsonable(report), sort_keys=True))
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def cmd_steady(cfg: RunConfig) -> int:
    params = cfg.params()
    basis = derive_dressed(params)
    rho = steady_state(build_effective_model(params, basis))
    plus, minus = basis.plus, basis.minus
    num_pp = float(np.real(plus.conj() @ rho @ plus))
    num_pm = complex(plus.conj() @ rho @ minus)
    an = analytic_steady(params, basis)
    print(f"{'quantity':<14}{'analytic':>26}{'null-space':>26}")
    print(f"{'rho_++':<14}{an.rho_pp:>26.10f}{num_pp:>26.10f}")
    print(f"{'|rho_+-|':<14}{abs(an.rho_pm):>26.10f}{abs(num_pm):>26.10f}")
    print(f"{'fidelity':<14}{an.fidelity:>26.10f}{num_pp:>26.10f}")
    print(f"{'eps_++':<14}{an.eps_pp:>26.3e}{1 - num_pp:>26.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--preset", metavar="NAME", help=f"shipped configuration ({', '.join(preset_names())})")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    common.add_argument("--fock-dim", metavar="N", type=int, help="override the Fock truncation")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")

    parser = argparse.ArgumentParser(prog="engres", description="Engineered-reservoir ion-cavity simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate one scenario, write CSV + JSON")
    sub.add_parser("scan", parents=[common], help="steady fidelity along a parameter axis")
    sub.add_parser("validate", parents=[common], help="run the oracle checks")
    sub.add_parser("steady", parents=[common], help="analytic vs null-space steady state")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    out = Path(args.out)
    try:
        if args.command == "validate":
            return cmd_validate(out)
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "scan":
            return cmd_scan(cfg, out)
        return cmd_steady(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except FockConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
