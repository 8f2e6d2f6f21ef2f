"""Fidelity trajectories, steady-value extraction and parameter scans."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import FockConvergenceError, TrajectoryTooShortError
from .ioncavity import (
    IonCavityParams,
    build_effective_model,
    build_full_model,
    derive_dressed,
    initial_full_state,
    interaction_rotation,
)
from .lindblad import DEFAULT_ATOL, DEFAULT_RTOL, evolve
from .operators import (
    annihilation,
    atom_ket,
    hermiticity_residual,
    min_eigenvalue,
    partial_trace_field,
    protected_state,
    purity,
    tensor,
    trace_distance,
)

log = logging.getLogger(__name__)

FIDELITY_TOL = 1e-9
MODEL_KINDS = ("full", "effective")
SCAN_AXES = ("nbar", "g", "delta_c")
DRIFT_WARN = 1e-3
MAX_DEFAULT_SAMPLES = 100_000


def fidelity(rho_at: np.ndarray, ket: np.ndarray, herm_tol: float = 1e-8) -> float:
    """<ket| rho |ket>, clamped into [0, 1] once inside a 1e-9 margin."""
    rho_at = np.asarray(rho_at)
    if hermiticity_residual(rho_at) > herm_tol:
        raise ValueError("density operator is not Hermitian")
    F = float(np.real(np.vdot(ket, rho_at @ ket)))
    if F < -FIDELITY_TOL or F > 1.0 + FIDELITY_TOL:
        log.warning("fidelity %.3g outside [0, 1] beyond tolerance", F)
    return min(max(F, 0.0), 1.0)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    fidelities: np.ndarray
    trace_errors: np.ndarray
    purities: np.ndarray
    pop_e: np.ndarray
    pop_g: np.ndarray
    mean_photons: np.ndarray
    min_eigenvalues: np.ndarray
    hermiticity_residuals: np.ndarray
    model_kind: str = "full"
    fock_dim: int | None = None
    nfev: int = 0

    def __len__(self):
        return len(self.times)


def initial_atom_state(label, params: IonCavityParams) -> np.ndarray:
    if isinstance(label, np.ndarray):
        return label
    if label in ("g", "e"):
        k = atom_ket(label)
    elif label == "plus":
        k = protected_state(0.0, params, derive_dressed(params))
    else:
        raise ValueError(f"initial atom state must be 'g', 'e' or 'plus', got {label!r}")
    return np.outer(k, k.conj())


def default_dt_out(params: IonCavityParams, t_max: float) -> float:
    """Resolve both the protected-state phase and the engineered relaxation."""
    basis = derive_dressed(params)
    scales = [t_max / 200.0]
    if params.delta_c:
        scales.append(2 * math.pi / abs(params.delta_c) / 20.0)
    if basis.gamma_eng > 0:
        scales.append(1.0 / basis.gamma_eng / 10.0)
    return max(min(scales), t_max / MAX_DEFAULT_SAMPLES)


def run_scenario(
    params: IonCavityParams,
    model_kind: str = "full",
    rho0="g",
    t_max: float = 1.0,
    dt_out: float | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    thermal_effective: bool = False,
) -> Trajectory:
    """Integrate one scenario and record fidelity against |+(t)>.

    ``rho0`` is an atomic label or density matrix; full runs may also pass a
    state on the whole 2N space. Effective-model states are rotated into the
    same interaction picture as the full model before analysis.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {model_kind!r}")
    basis = derive_dressed(params)
    dt_out = dt_out or default_dt_out(params, t_max)
    n = int(round(t_max / dt_out))
    times = np.linspace(0.0, n * dt_out, n + 1)

    if model_kind == "full":
        model = build_full_model(params)
        layout = params.layout
        rho0 = np.asarray(initial_atom_state(rho0, params), dtype=complex)
        if rho0.shape == (2, 2):
            rho0 = initial_full_state(params, rho0)
        res = evolve(model, rho0, times, rtol=rtol, atol=atol)
        atoms = np.array([partial_trace_field(r, layout) for r in res.states])
        num = tensor(annihilation(params.fock_dim).conj().T @ annihilation(params.fock_dim), np.eye(2))
        photons = np.real(np.einsum("ij,tji->t", num, res.states))
        min_eigs = np.array([min_eigenvalue(r) for r in res.states])
        herm = np.array([hermiticity_residual(r) for r in res.states])
        fock_dim = params.fock_dim
    else:
        model = build_effective_model(params, basis, thermal=thermal_effective)
        rho0 = np.asarray(initial_atom_state(rho0, params), dtype=complex)
        res = evolve(model, rho0, times, rtol=rtol, atol=atol)
        rots = [interaction_rotation(params, t) for t in times]
        atoms = np.array([R @ r @ R.conj().T for R, r in zip(rots, res.states)])
        photons = np.zeros(len(times))
        min_eigs = np.array([min_eigenvalue(r) for r in res.states])
        herm = np.array([hermiticity_residual(r) for r in res.states])
        fock_dim = None

    fids = np.array([fidelity(r, protected_state(t, params, basis)) for t, r in zip(times, atoms)])
    return Trajectory(
        times=times,
        states=atoms,
        fidelities=fids,
        trace_errors=np.abs(np.real(np.trace(atoms, axis1=1, axis2=2)) - 1.0),
        purities=np.array([purity(r) for r in atoms]),
        pop_e=np.real(atoms[:, 1, 1]),
        pop_g=np.real(atoms[:, 0, 0]),
        mean_photons=photons,
        min_eigenvalues=min_eigs,
        hermiticity_residuals=herm,
        model_kind=model_kind,
        fock_dim=fock_dim,
        nfev=res.nfev,
    )


def relaxation_rate(params: IonCavityParams) -> float:
    """Engineered rate, or the natural rate when the engineered one vanishes."""
    rate = derive_dressed(params).gamma_eng
    if rate > 0:
        return rate
    if params.gamma > 0:
        return params.gamma
    raise ValueError("no dissipation: neither engineered nor natural decay is present")


def steady_window(params: IonCavityParams) -> tuple[float, float]:
    """(transient cutoff, averaging window length)."""
    rate = relaxation_rate(params)
    window = 1.0 / rate
    if params.delta_c:
        window = max(2 * math.pi / abs(params.delta_c), window)
    return 10.0 / rate, window


def required_span(params: IonCavityParams) -> float:
    transient, window = steady_window(params)
    return transient + window


@dataclass(frozen=True)
class SteadyValue:
    """Window mean of the fidelity.

    ``drift`` is the change from the preceding window of equal length (nan if
    the trajectory is too short to have one); a large drift means the plateau
    has not been reached yet.
    """

    mean: float
    std: float
    window: tuple[float, float]
    drift: float = math.nan


def _window_mean(t: np.ndarray, f: np.ndarray, lo: float, hi: float) -> tuple[float, float]:
    mask = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    tw, fw = t[mask], f[mask]
    if tw.size < 2 or tw[-1] == tw[0]:
        return float(fw.mean()), 0.0
    span = tw[-1] - tw[0]
    mean = float(np.trapezoid(fw, tw) / span)
    return mean, float(np.sqrt(np.trapezoid((fw - mean) ** 2, tw) / span))


def steady_value(traj: Trajectory, params: IonCavityParams) -> SteadyValue:
    """Time-average of the fidelity over the final window after the transient."""
    transient, T_w = steady_window(params)
    t = np.asarray(traj.times)
    f = np.asarray(traj.fidelities)
    t_end = float(t[-1])
    if t_end + 1e-12 < transient + T_w:
        raise TrajectoryTooShortError(transient + T_w, t_end)
    mean, std = _window_mean(t, f, t_end - T_w, t_end)
    drift = math.nan
    if t_end - 2 * T_w >= t[0] - 1e-12:
        drift = mean - _window_mean(t, f, t_end - 2 * T_w, t_end - T_w)[0]
    return SteadyValue(mean, std, (max(t_end - T_w, float(t[0])), t_end), drift)


@dataclass
class ComparisonReport:
    degenerate: bool
    reason: str = ""
    max_fidelity_gap: float = math.nan
    steady_full: float = math.nan
    steady_effective: float = math.nan
    steady_gap: float = math.nan
    state_distance: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def compare_full_vs_effective(
    params: IonCavityParams,
    t_max: float | None = None,
    dt_out: float | None = None,
    rho0="g",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> ComparisonReport:
    basis = derive_dressed(params)
    if basis.gamma_eng == 0:
        return ComparisonReport(True, "engineered rate is zero (g = 0): no effective reservoir to compare")
    t_max = t_max or required_span(params)
    full = run_scenario(params, "full", rho0, t_max, dt_out, rtol, atol)
    eff = run_scenario(params, "effective", rho0, t_max, dt_out, rtol, atol)
    transient, _ = steady_window(params)
    late = full.times >= transient
    gap = np.abs(full.fidelities - eff.fidelities)
    sf, se = steady_value(full, params), steady_value(eff, params)
    return ComparisonReport(
        degenerate=False,
        max_fidelity_gap=float(gap[late].max()),
        steady_full=sf.mean,
        steady_effective=se.mean,
        steady_gap=abs(sf.mean - se.mean),
        state_distance=trace_distance(full.states[-1], eff.states[-1]),
    )


@dataclass
class ScanResult:
    axis_name: str
    axis: list[float]
    steady_fidelities: list[float]
    deviations: list[float]
    metadata: dict = field(default_factory=dict)
    trajectories: list = field(default_factory=list, repr=False)
    drifts: list[float] = field(default_factory=list)

    @property
    def strictly_decreasing(self) -> bool:
        f = self.steady_fidelities
        return all(b < a for a, b in zip(f, f[1:]))

    @property
    def non_decreasing(self) -> bool:
        f = self.steady_fidelities
        return all(b >= a for a, b in zip(f, f[1:]))


def with_axis(params: IonCavityParams, axis: str, value: float) -> IonCavityParams:
    if axis == "nbar":
        return params.with_nbar(value)
    if axis == "g":
        return replace(params, g=value)
    if axis == "delta_c":
        return replace(params, delta_c=value)
    raise ValueError(f"scan axis must be one of {SCAN_AXES}, got {axis!r}")


def with_axis_value(params: IonCavityParams, axis: str) -> float:
    return {"nbar": params.nbar_a, "g": params.g, "delta_c": params.delta_c}[axis]


def scan(
    params: IonCavityParams,
    axis: str,
    values: Sequence[float],
    t_max: float | None = None,
    dt_out: float | None = None,
    model_kind: str = "full",
    rho0="g",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    workers: int = 1,
) -> ScanResult:
    """Steady fidelity along one parameter axis; runs are independent."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("scan needs at least one axis value")
    points = [with_axis(params, axis, v) for v in values]

    def one(p):
        span = max(t_max or 0.0, required_span(p))
        traj = run_scenario(p, model_kind, rho0, span, dt_out, rtol, atol)
        sv = steady_value(traj, p)
        if abs(sv.drift) > DRIFT_WARN:
            log.warning(
                "%s = %g: steady fidelity still drifting (%.2g per window); raise t_max",
                axis,
                with_axis_value(p, axis),
                sv.drift,
            )
        return traj, sv

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, points))
    else:
        results = [one(p) for p in points]
    meta = {k: v for k, v in asdict(params).items()}
    meta["model_kind"] = model_kind
    return ScanResult(
        axis,
        values,
        [sv.mean for _, sv in results],
        [sv.std for _, sv in results],
        meta,
        [traj for traj, _ in results],
        [sv.drift for _, sv in results],
    )


def scan_nbar(params: IonCavityParams, nbar_values: Sequence[float], **kwargs) -> ScanResult:
    nbar_values = [float(v) for v in nbar_values]
    if any(v < 0 for v in nbar_values):
        raise ValueError("thermal occupations must be >= 0")
    if any(b <= a for a, b in zip(nbar_values, nbar_values[1:])):
        raise ValueError("nbar values must be strictly ascending")
    result = scan(params, "nbar", nbar_values, **kwargs)
    if len(nbar_values) > 1 and not result.strictly_decreasing:
        log.warning("steady fidelity is not strictly decreasing in nbar: %s", result.steady_fidelities)
    return result


@dataclass
class FockReport:
    fock_dims: list[int]
    max_deltas: list[float]
    converged: bool

    def as_dict(self) -> dict:
        return asdict(self)


def run_fock_converged(
    params: IonCavityParams,
    rho0="g",
    t_max: float = 1.0,
    dt_out: float | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    tol: float = 1e-4,
    step: int = 5,
    max_fock: int = 40,
) -> tuple[Trajectory, FockReport]:
    """Full-model run at N, repeated at N + step until max |dF(t)| < tol."""
    dims = [params.fock_dim]
    deltas = []
    prev = run_scenario(params, "full", rho0, t_max, dt_out, rtol, atol)
    while True:
        N = dims[-1] + step
        if N > max_fock:
            last = f"last max |dF| = {deltas[-1]:.3g}" if deltas else f"no room to compare below max_fock={max_fock}"
            raise FockConvergenceError(f"fidelity not converged up to fock_dim={dims[-1]} ({last})")
        nxt = run_scenario(replace(params, fock_dim=N), "full", rho0, t_max, dt_out, rtol, atol)
        dims.append(N)
        deltas.append(float(np.max(np.abs(nxt.fidelities - prev.fidelities))))
        if deltas[-1] < tol:
            return prev, FockReport(dims, deltas, True)
        prev = nxt
