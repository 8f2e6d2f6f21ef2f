"""Run every shipped figure preset through the CLI and collect the outputs.

    python3 scripts/reproduce_figures.py --out figures
    python3 scripts/reproduce_figures.py --only fig2 fig3 --fock-dim 10
"""
import argparse
import sys
import time

from engineered_reservoir.cli import main as engres
from engineered_reservoir.config import load_preset, preset_names


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures", help="output directory (default: figures)")
    ap.add_argument("--only", nargs="+", metavar="PRESET", help="subset of presets to run")
    ap.add_argument("--fock-dim", type=int, help="override the Fock truncation")
    args = ap.parse_args(argv)

    names = args.only or preset_names()
    failed = []
    for name in names:
        command = "scan" if load_preset(name).scan_axis else "run"
        cli_args = [command, "--preset", name, "--out", args.out, "--quiet"]
        if args.fock_dim is not None:
            cli_args += ["--fock-dim", str(args.fock_dim)]
        t0 = time.perf_counter()
        code = engres(cli_args)
        print(f"{name:<18} {command:<5} exit {code}  {time.perf_counter() - t0:7.1f} s", flush=True)
        if code:
            failed.append(name)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
