"""Oracle checks run by ``engres validate``.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
comparison.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .analysis import fidelity, run_scenario
from .ioncavity import (
    DressedBasis,
    IonCavityParams,
    build_effective_model,
    derive_dressed,
    generic_elimination_check,
    h1_hamiltonian,
    h2_hamiltonian,
    u2,
)
from .lindblad import HamiltonianSpec, LindbladModel, evolve, steady_state, thermal_dissipator_pair
from .operators import annihilation, atomic_projector, dagger, number_operator


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def damped_mode_model(N: int, kappa: float, nbar: float) -> LindbladModel:
    a = annihilation(N)
    return LindbladModel(
        HamiltonianSpec(static=np.zeros((N, N), dtype=complex)),
        tuple(thermal_dissipator_pair(a, kappa, nbar, "cavity")),
    )


def check_thermal_fixed_point(nbar: float = 0.1, N: int = 20, kappa: float = 1.0, tol: float = 1e-8) -> CheckResult:
    rho = steady_state(damped_mode_model(N, kappa, nbar))
    mean_n = float(np.real(np.trace(number_operator(N) @ rho)))
    p = np.real(np.diag(rho))
    ratios = p[1 : N - 1] / p[: N - 2]
    balance = float(np.max(np.abs(ratios - nbar / (nbar + 1.0))))
    err = max(abs(mean_n - nbar), balance)
    return CheckResult(
        "thermal_fixed_point", err < tol, err, tol, f"<n> = {mean_n:.12g}, detailed-balance residual {balance:.2g}"
    )


def reference_params(**overrides) -> IonCavityParams:
    base = dict(g=100.0, kappa=100.0, omega_c=2000.0, delta_c=0.0, phi_c=0.0, gamma=1.0)
    base.update(overrides)
    return IonCavityParams(**base)


def check_nullspace_vs_integration(params: IonCavityParams | None = None, tol: float = 1e-6) -> CheckResult:
    params = params or reference_params()
    basis = derive_dressed(params)
    model = build_effective_model(params, basis)
    rho_ss = steady_state(model)
    t_end = 50.0 / basis.gamma_eng
    res = evolve(model, np.diag([1.0, 0.0]).astype(complex), np.linspace(0.0, t_end, 51))
    err = float(np.max(np.abs(res.states[-1] - rho_ss)))
    return CheckResult("nullspace_vs_integration", err < tol, err, tol, f"integrated to t = {t_end:.4g}")


def frame_residual(
    params: IonCavityParams,
    t: float,
    basis_mutator: Callable[[DressedBasis], DressedBasis] | None = None,
    h: float = 1e-6,
) -> float:
    """max |U2^dag H1 U2 - i U2^dag dU2/dt - H2| with a central-difference derivative."""
    basis = derive_dressed(params)
    if basis_mutator is not None:
        basis = basis_mutator(basis)
    U = u2(params, t)
    Udot = (u2(params, t + h) - u2(params, t - h)) / (2 * h)
    lhs = dagger(U) @ h1_hamiltonian(params)(t) @ U - 1j * dagger(U) @ Udot
    return float(np.max(np.abs(lhs - h2_hamiltonian(params, basis)(t))))


def random_frame_params(rng: np.random.Generator, fock_dim: int = 4) -> IonCavityParams:
    delta_a = "auto" if rng.random() < 0.5 else float(rng.uniform(-3.0, 3.0))
    return IonCavityParams(
        g=float(rng.uniform(0.1, 1.0)),
        omega_c=float(rng.uniform(0.5, 2.0)),
        phi_c=float(rng.uniform(0.0, 2 * math.pi)),
        delta_c=float(rng.uniform(-2.0, 2.0)),
        delta_a=delta_a,
        kappa=1.0,
        fock_dim=fock_dim,
    )


def check_frame_consistency(
    n_params: int = 5,
    n_times: int = 10,
    seed: int = 2009,
    tol: float = 1e-8,
    basis_mutator: Callable[[DressedBasis], DressedBasis] | None = None,
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_params):
        params = random_frame_params(rng)
        for t in rng.uniform(0.0, 2.0, n_times):
            worst = max(worst, frame_residual(params, float(t), basis_mutator))
    return CheckResult(
        "frame_consistency", worst < tol, worst, tol, f"{n_params} parameter sets x {n_times} times"
    )


def check_dressed_coefficients(tol: float = 1e-14) -> CheckResult:
    worst = 0.0
    for chi in (0.0, 0.15, -0.15, 1.0, -1.0):
        # omega_c = 1 fixes xi through chi = delta_c / xi
        xi = 1.0 / math.sqrt(1.0 - chi**2 / 4.0)
        b = derive_dressed(IonCavityParams(g=1.0, omega_c=1.0, delta_c=chi * xi, kappa=1.0, fock_dim=2))
        worst = max(
            worst,
            abs(b.chi - chi),
            abs(b.lam - math.sqrt(4 - chi**2) / 4),
            abs(b.lambda_pm + (2 + chi) / 4),
            abs(b.lambda_mp - (2 - chi) / 4),
        )
    return CheckResult("dressed_coefficients", worst < tol, worst, tol, "chi in {0, +-0.15, +-1}")


def check_elimination(ratio: float = 25.0, tol: float = 0.03) -> CheckResult:
    O = atomic_projector("g", "e")
    r1 = generic_elimination_check(1.0, ratio, O)
    r2 = generic_elimination_check(1.0, 2 * ratio, O)
    ok = r1.max_distance < tol and r2.max_distance < r1.max_distance
    return CheckResult(
        "elimination",
        ok,
        r1.max_distance,
        tol,
        f"kappa/lambda = {ratio:g}: {r1.max_distance:.3g}; {2 * ratio:g}: {r2.max_distance:.3g}",
    )


def check_dark_state(tol: float = 1e-6) -> CheckResult:
    params = reference_params(gamma=0.0)
    basis = derive_dressed(params)
    traj = run_scenario(params, "effective", "g", t_max=30.0 / basis.gamma_eng)
    err = abs(1.0 - traj.fidelities[-1])
    return CheckResult("engineered_dark_state", err < tol, err, tol, "gamma = 0, rho0 = |g><g|")


def check_analytic_steady(factor: float = 5.0) -> CheckResult:
    from .ioncavity import analytic_steady

    params = reference_params()
    basis = derive_dressed(params)
    rho = steady_state(build_effective_model(params, basis))
    F = fidelity(rho, basis.plus)
    an = analytic_steady(params, basis)
    gap = abs(F - an.fidelity)
    return CheckResult(
        "analytic_steady", gap <= factor * an.eps_pp, gap, factor * an.eps_pp, f"numeric F = {F:.6f}, 1 - eps = {an.fidelity:.6f}"
    )


def run_checks(basis_mutator: Callable[[DressedBasis], DressedBasis] | None = None) -> list[CheckResult]:
    return [
        check_thermal_fixed_point(),
        check_nullspace_vs_integration(),
        check_frame_consistency(basis_mutator=basis_mutator),
        check_dressed_coefficients(),
        check_elimination(),
        check_dark_state(),
        check_analytic_steady(),
    ]


def flip_lambda_pm(basis: DressedBasis) -> DressedBasis:
    """Sign error fixture for mutation testing of the frame check."""
    return replace(basis, lambda_pm=-basis.lambda_pm)
