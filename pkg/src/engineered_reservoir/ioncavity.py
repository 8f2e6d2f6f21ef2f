"""Driven two-level ion in a leaky cavity: parameters, frames and models.

All rates are in units of the atomic decay rate (``gamma = 1`` by default)
and times in units of ``1/gamma``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .lindblad import (
    Dissipator,
    HamiltonianSpec,
    LindbladModel,
    RotatingTerm,
    evolve,
    thermal_dissipator_pair,
)
from .operators import (
    HilbertLayout,
    annihilation,
    atomic_projector,
    dagger,
    dressed_states,
    partial_trace_field,
    sigma_z,
    tensor,
    thermal_state,
    trace_distance,
)

AUTO = "auto"
RWA_MIN_DETUNING = 10.0
MIN_COOPERATIVITY = 10.0
MIN_ELIMINATION_RATIO = 4.0


@dataclass(frozen=True)
class IonCavityParams:
    g: float = 100.0
    omega_c: float = 2000.0
    phi_c: float = 0.0
    delta_c: float = 0.0
    delta_a: float | str = AUTO
    kappa: float = 100.0
    gamma: float = 1.0
    nbar_a: float = 0.0
    nbar_s: float | None = None
    fock_dim: int = 15

    def __post_init__(self):
        if self.nbar_s is None:
            object.__setattr__(self, "nbar_s", self.nbar_a)
        for name in ("g", "omega_c", "kappa", "gamma", "nbar_a", "nbar_s"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if isinstance(self.delta_a, str) and self.delta_a != AUTO:
            raise ValueError(f"delta_a must be a number or 'auto', got {self.delta_a!r}")
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise ValueError(f"fock_dim must be an integer >= 2, got {self.fock_dim}")
        if self.delta_c != 0 and self.omega_c == 0:
            raise ValueError("omega_c must be > 0 when delta_c != 0")

    @property
    def xi(self) -> float:
        return math.sqrt(self.omega_c**2 + self.delta_c**2 / 4.0)

    @property
    def delta_a_value(self) -> float:
        """Cavity-laser detuning; ``auto`` resolves to the resonance ``-2 xi``."""
        if self.delta_a == AUTO:
            return -2.0 * self.xi
        return float(self.delta_a)

    @property
    def cooperativity(self) -> float:
        if self.gamma == 0 or self.kappa == 0:
            return math.inf
        return self.g**2 / (self.gamma * self.kappa)

    @property
    def layout(self) -> HilbertLayout:
        return HilbertLayout(self.fock_dim)

    def with_nbar(self, nbar: float) -> "IonCavityParams":
        return replace(self, nbar_a=nbar, nbar_s=nbar)


@dataclass(frozen=True)
class DressedBasis:
    xi: float
    chi: float
    lam: float
    lambda_pm: float
    lambda_mp: float
    g_eff: float
    gamma_eng: float
    plus: np.ndarray = field(repr=False)
    minus: np.ndarray = field(repr=False)

    def projector(self, r: str, s: str) -> np.ndarray:
        """Dressed operator ``|r><s|`` with r, s in {'+', '-'}."""
        kets = {"+": self.plus, "-": self.minus}
        return np.outer(kets[r], kets[s].conj())


def derive_dressed(params: IonCavityParams) -> DressedBasis:
    xi = params.xi
    if xi == 0:
        raise DomainError("degenerate drive: omega_c = delta_c = 0 gives xi = 0")
    chi = params.delta_c / xi
    g_eff = params.g * (1.0 - chi / 2.0) / 2.0
    gamma_eng = 4.0 * g_eff**2 / params.kappa if params.kappa > 0 else math.inf
    plus, minus = dressed_states(params.phi_c, chi)
    return DressedBasis(
        xi=xi,
        chi=chi,
        lam=math.sqrt(4.0 - chi**2) / 4.0,
        lambda_pm=-(2.0 + chi) / 4.0,
        lambda_mp=(2.0 - chi) / 4.0,
        g_eff=g_eff,
        gamma_eng=gamma_eng,
        plus=plus,
        minus=minus,
    )


def _field_ops(N: int):
    a = annihilation(N)
    return a, np.eye(N, dtype=complex)


def full_interaction_hamiltonian(params: IonCavityParams) -> HamiltonianSpec:
    """V(t) = g a s_eg e^{-i delta_a t} + omega_c s_eg e^{i(phi_c - delta_c t)} + h.c."""
    a, I = _field_ops(params.fock_dim)
    s_eg = atomic_projector("e", "g")
    return HamiltonianSpec(
        terms=(
            RotatingTerm(tensor(a, s_eg), params.g, -params.delta_a_value, "cavity"),
            RotatingTerm(tensor(I, s_eg), params.omega_c * np.exp(1j * params.phi_c), -params.delta_c, "drive"),
        )
    )


def drive_generator(params: IonCavityParams) -> np.ndarray:
    """Atomic generator of the dressing frame, ``delta_c/2 s_z + omega_c (e^{i phi} s_eg + h.c.)``."""
    X = params.omega_c * np.exp(1j * params.phi_c) * atomic_projector("e", "g")
    return 0.5 * params.delta_c * sigma_z() + X + dagger(X)


def h1_hamiltonian(params: IonCavityParams) -> HamiltonianSpec:
    a, I = _field_ops(params.fock_dim)
    return HamiltonianSpec(
        static=tensor(I, drive_generator(params)),
        terms=(RotatingTerm(tensor(a, atomic_projector("e", "g")), params.g, -params.delta_a_value, "cavity"),),
    )


def u2_atomic(params: IonCavityParams, t: float) -> np.ndarray:
    """exp(-i A t) for the drive generator A, using A^2 = xi^2."""
    xi = params.xi
    A = drive_generator(params)
    if xi == 0:
        return np.eye(2, dtype=complex)
    return math.cos(xi * t) * np.eye(2) - 1j * math.sin(xi * t) * A / xi


def u2(params: IonCavityParams, t: float) -> np.ndarray:
    return tensor(np.eye(params.fock_dim), u2_atomic(params, t))


def h2_hamiltonian(params: IonCavityParams, basis: DressedBasis) -> HamiltonianSpec:
    """Cavity coupling in the dressed frame; each dressed operator rotates at its own rate."""
    a, _ = _field_ops(params.fock_dim)
    amp = params.g * np.exp(-1j * params.phi_c)
    da = params.delta_a_value
    P = basis.projector
    return HamiltonianSpec(
        terms=(
            RotatingTerm(tensor(a, P("+", "+") - P("-", "-")), amp * basis.lam, -da, "diag"),
            RotatingTerm(tensor(a, P("+", "-")), amp * basis.lambda_pm, 2.0 * basis.xi - da, "+-"),
            RotatingTerm(tensor(a, P("-", "+")), amp * basis.lambda_mp, -2.0 * basis.xi - da, "-+"),
        )
    )


def effective_hamiltonian(params: IonCavityParams, basis: DressedBasis) -> HamiltonianSpec:
    """g_eff (e^{i phi_c} s_+- a^dag + e^{-i phi_c} s_-+ a)."""
    a, _ = _field_ops(params.fock_dim)
    X = basis.g_eff * np.exp(1j * params.phi_c) * tensor(dagger(a), basis.projector("+", "-"))
    return HamiltonianSpec(static=X + dagger(X))


def build_full_model(params: IonCavityParams) -> LindbladModel:
    a, I = _field_ops(params.fock_dim)
    dissipators = thermal_dissipator_pair(tensor(a, np.eye(2)), params.kappa, params.nbar_a, "cavity")
    dissipators += thermal_dissipator_pair(
        tensor(I, atomic_projector("g", "e")), params.gamma, params.nbar_s, "atom"
    )
    return LindbladModel(full_interaction_hamiltonian(params), tuple(dissipators), params.layout)


def build_effective_model(
    params: IonCavityParams, basis: DressedBasis | None = None, thermal: bool = False
) -> LindbladModel:
    """Atom-only model after eliminating the cavity, written in the H1 frame.

    With ``thermal=True`` both channels acquire their thermal partners
    (upward rates ``Gamma_eng nbar_a`` and ``gamma nbar_s``).
    """
    basis = basis or derive_dressed(params)
    H = basis.xi * (basis.projector("+", "+") - basis.projector("-", "-"))
    nbar_a = params.nbar_a if thermal else 0.0
    nbar_s = params.nbar_s if thermal else 0.0
    dissipators = thermal_dissipator_pair(basis.projector("+", "-"), basis.gamma_eng, nbar_a, "engineered")
    dissipators += thermal_dissipator_pair(atomic_projector("g", "e"), params.gamma, nbar_s, "atom")
    return LindbladModel(HamiltonianSpec(static=H), tuple(dissipators))


def interaction_rotation(params: IonCavityParams, t: float) -> np.ndarray:
    """Atomic phase rotation carrying the static dressed ket |+> onto |+(t)>."""
    return np.diag([np.exp(1j * params.delta_c * t), 1.0]).astype(complex)


def initial_full_state(params: IonCavityParams, atom_rho: np.ndarray) -> np.ndarray:
    """Field in thermal equilibrium with its reservoir, atom in ``atom_rho``."""
    return tensor(thermal_state(params.fock_dim, params.nbar_a), atom_rho)


@dataclass(frozen=True)
class AnalyticSteady:
    rho_pp: float
    rho_pm: complex
    fidelity: float
    eps_pp: float
    eps_pm: float


def analytic_steady(params: IonCavityParams, basis: DressedBasis | None = None) -> AnalyticSteady:
    """Leading-order steady state for large cooperativity."""
    basis = basis or derive_dressed(params)
    if basis.gamma_eng == 0:
        raise ZeroDivisionError("engineered rate is zero; the expansion in gamma/Gamma_eng is undefined")
    if params.cooperativity < 10:
        warnings.warn(
            f"cooperativity {params.cooperativity:.3g} < 10: the large-C expansion is unreliable",
            stacklevel=2,
        )
    eps_pp = (params.gamma / basis.gamma_eng) * ((2.0 + basis.chi) / 8.0) ** 2
    eps_pm = params.gamma / (4.0 * basis.g_eff)
    return AnalyticSteady(1.0 - eps_pp, -1j * eps_pm, 1.0 - eps_pp, eps_pp, eps_pm)


@dataclass(frozen=True)
class RWAReport:
    detuning_ratio: float
    cooperativity: float
    engineered_ratio: float
    elimination_ratio: float
    warnings: tuple[str, ...]

    @property
    def detuning_ok(self) -> bool:
        return self.detuning_ratio >= RWA_MIN_DETUNING

    @property
    def cooperativity_ok(self) -> bool:
        return self.cooperativity >= MIN_COOPERATIVITY

    @property
    def elimination_ok(self) -> bool:
        return self.elimination_ratio >= MIN_ELIMINATION_RATIO

    @property
    def ok(self) -> bool:
        return not self.warnings

    def as_dict(self) -> dict:
        return {
            "detuning_ratio": self.detuning_ratio,
            "cooperativity": self.cooperativity,
            "engineered_ratio": self.engineered_ratio,
            "elimination_ratio": self.elimination_ratio,
            "detuning_ok": self.detuning_ok,
            "cooperativity_ok": self.cooperativity_ok,
            "elimination_ok": self.elimination_ok,
            "warnings": list(self.warnings),
            "ok": self.ok,
        }


def rwa_validity(params: IonCavityParams, basis: DressedBasis | None = None) -> RWAReport:
    basis = basis or derive_dressed(params)
    detuning = abs(params.delta_a_value) / params.g if params.g > 0 else math.inf
    coop = params.cooperativity
    eng = basis.gamma_eng / params.gamma if params.gamma > 0 else math.inf
    elim = params.kappa / basis.g_eff if basis.g_eff > 0 else math.inf
    msgs = []
    if detuning < RWA_MIN_DETUNING:
        msgs.append(f"|delta_a|/g = {detuning:.3g} < 10: rotating-wave approximation questionable")
    if coop < MIN_COOPERATIVITY:
        msgs.append(f"cooperativity {coop:.3g} < 10: natural decay competes with the engineered reservoir")
    if elim < MIN_ELIMINATION_RATIO:
        msgs.append(f"kappa/g_eff = {elim:.3g} < 4: adiabatic elimination of the cavity questionable")
    return RWAReport(detuning, coop, eng, elim, tuple(msgs))


@dataclass
class EliminationReport:
    gamma_eng: float
    transient: float
    max_distance: float
    max_distance_all: float
    final_distance: float
    times: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    reduced_final: np.ndarray = field(repr=False)
    full_final: np.ndarray = field(repr=False)
    warnings: tuple[str, ...] = ()


def generic_elimination_check(
    lambda_eff: float,
    kappa: float,
    O: np.ndarray,
    rho_sys0: np.ndarray | None = None,
    t_max: float | None = None,
    n_samples: int = 401,
    fock_dim: int = 6,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> EliminationReport:
    """Compare the bipartite system-cavity model with its eliminated reduction.

    Full: H = lambda (O a^dag + O^dag a), kappa D[a]. Reduced: (4 lambda^2/kappa) D[O].
    Distances are trace distances between the cavity-traced full state and the
    reduced state; ``max_distance`` covers t >= 10/Gamma_eng, ``max_distance_all``
    covers t >= 10/kappa (after the cavity transient only).
    """
    O = np.asarray(O, dtype=complex)
    s = O.shape[0]
    if O.shape != (s, s) or s > 4:
        raise ValueError(f"O must be square with dim <= 4, got {O.shape}")
    notes = []
    if lambda_eff > 0 and kappa / lambda_eff < 4:
        notes.append(f"kappa/lambda_eff = {kappa / lambda_eff:.3g} < 4: outside the elimination regime")
    fock_dim = min(fock_dim, 6)
    layout = HilbertLayout(fock_dim, s)
    a = annihilation(fock_dim)
    gamma_eng = 4.0 * lambda_eff**2 / kappa
    if rho_sys0 is None:
        rho_sys0 = np.zeros((s, s), dtype=complex)
        rho_sys0[-1, -1] = 1.0
    X = lambda_eff * np.kron(dagger(a), O)
    full = LindbladModel(
        HamiltonianSpec(static=X + dagger(X)),
        (Dissipator(np.kron(a, np.eye(s)), kappa, "cavity"),),
        layout,
    )
    reduced = LindbladModel(
        HamiltonianSpec(static=np.zeros((s, s), dtype=complex)), (Dissipator(O, gamma_eng, "engineered"),)
    )
    transient = 10.0 / gamma_eng if gamma_eng > 0 else 0.0
    if t_max is None:
        t_max = 2.0 * transient if gamma_eng > 0 else 10.0 / kappa
    times = np.linspace(0.0, t_max, n_samples)
    rho0_full = np.kron(thermal_state(fock_dim, 0.0), rho_sys0)
    res_full = evolve(full, rho0_full, times, rtol=rtol, atol=atol)
    res_red = evolve(reduced, rho_sys0, times, rtol=rtol, atol=atol)
    reduced_full = np.array([partial_trace_field(r, layout) for r in res_full.states])
    dist = np.array([trace_distance(x, y) for x, y in zip(reduced_full, res_red.states)])
    late = times >= transient
    after_cavity = times >= 10.0 / kappa
    return EliminationReport(
        gamma_eng=gamma_eng,
        transient=transient,
        max_distance=float(dist[late].max()) if late.any() else 0.0,
        max_distance_all=float(dist[after_cavity].max()) if after_cavity.any() else 0.0,
        final_distance=float(dist[-1]),
        times=times,
        distances=dist,
        reduced_final=res_red.states[-1],
        full_final=reduced_full[-1],
        warnings=tuple(notes),
    )
