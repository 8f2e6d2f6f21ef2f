"""Lindblad generators, integration and steady states.

A model is a Hamiltonian made of a static Hermitian part plus rotating terms
``amp * exp(i freq t) * B + h.c.``, and a list of dissipators ``(C, rate)``
contributing ``rate/2 (2 C rho C^dag - C^dag C rho - rho C^dag C)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import (
    DimensionError,
    IntegrationError,
    NonUniqueSteadyStateError,
    ResourceError,
    StiffnessError,
    UnsupportedModelError,
)
from .operators import HilbertLayout, dagger

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
TRACE_TOL = 1e-6
MAX_DENSE_DIM = 256
NULL_THRESHOLD = 1e-10


@dataclass(frozen=True)
class Dissipator:
    collapse: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError(f"dissipator rate must be >= 0, got {self.rate}")
        c = np.asarray(self.collapse)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionError(f"collapse operator must be square, got {c.shape}")


@dataclass(frozen=True)
class RotatingTerm:
    """``amplitude * exp(i * frequency * t) * base`` plus its Hermitian conjugate."""

    base: np.ndarray
    amplitude: complex
    frequency: float
    label: str = ""


@dataclass(frozen=True)
class HamiltonianSpec:
    static: np.ndarray | None = None
    terms: tuple[RotatingTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        dims = {np.asarray(t.base).shape for t in self.terms}
        if self.static is not None:
            dims.add(np.asarray(self.static).shape)
            if np.max(np.abs(self.static - dagger(self.static)), initial=0.0) > 1e-12:
                raise ValueError("static Hamiltonian part is not Hermitian")
        if len(dims) > 1:
            raise DimensionError(f"Hamiltonian parts disagree in shape: {sorted(dims)}")
        if not dims:
            raise ValueError("empty Hamiltonian: pass a zero static operator instead")

    @property
    def dim(self) -> int:
        if self.static is not None:
            return self.static.shape[0]
        return self.terms[0].base.shape[0]

    @property
    def is_time_independent(self) -> bool:
        return all(t.frequency == 0 for t in self.terms)

    def __call__(self, t: float) -> np.ndarray:
        H = np.zeros((self.dim, self.dim), dtype=complex)
        if self.static is not None:
            H += self.static
        for term in self.terms:
            X = term.amplitude * np.exp(1j * term.frequency * t) * term.base
            H += X + dagger(X)
        return H


@dataclass(frozen=True)
class LindbladModel:
    hamiltonian: HamiltonianSpec
    dissipators: tuple[Dissipator, ...] = ()
    layout: HilbertLayout | None = None

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        d = self.hamiltonian.dim
        for diss in self.dissipators:
            if diss.collapse.shape != (d, d):
                raise DimensionError(
                    f"collapse operator {diss.label or ''} has shape {diss.collapse.shape}, model dim is {d}"
                )
        if self.layout is not None and self.layout.total_dim != d:
            raise DimensionError(f"layout {self.layout} does not match model dim {d}")

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @property
    def is_time_independent(self) -> bool:
        return self.hamiltonian.is_time_independent

    @cached_property
    def compiled(self) -> tuple:
        return compile_model(self)


def thermal_dissipator_pair(C: np.ndarray, rate: float, nbar: float, label: str = "") -> list[Dissipator]:
    """Down/up channels of a thermal bath: ``[(C, rate(nbar+1)), (C^dag, rate nbar)]``.

    The upward channel is dropped when ``nbar == 0``.
    """
    if nbar < 0:
        raise ValueError(f"thermal occupation must be >= 0, got {nbar}")
    pair = [Dissipator(C, rate * (nbar + 1.0), label + "-")]
    if nbar > 0:
        pair.append(Dissipator(dagger(C), rate * nbar, label + "+"))
    return pair


def _check_square(model_dim: int, rho: np.ndarray):
    if rho.shape != (model_dim, model_dim):
        raise DimensionError(f"rho has shape {rho.shape}, model dim is {model_dim}")


def lindblad_rhs(model: LindbladModel, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Dense reference evaluation of the master-equation generator."""
    rho = np.asarray(rho, dtype=complex)
    _check_square(model.dim, rho)
    H = model.hamiltonian(t)
    out = -1j * (H @ rho - rho @ H)
    for diss in model.dissipators:
        C = diss.collapse
        Cd = dagger(C)
        CdC = Cd @ C
        out += 0.5 * diss.rate * (2.0 * C @ rho @ Cd - CdC @ rho - rho @ CdC)
    return out


def _coo(op: np.ndarray):
    rows, cols = np.nonzero(op)
    return rows.astype(np.int64), cols.astype(np.int64), op[rows, cols].astype(np.complex128)


def compile_model(model: LindbladModel) -> tuple:
    """Pack a model into the sparse tuple consumed by the compiled kernel."""
    d = model.dim
    static_K = np.zeros((d, d), dtype=complex)
    if model.hamiltonian.static is not None:
        static_K += -1j * model.hamiltonian.static
    for diss in model.dissipators:
        C = diss.collapse
        static_K += -0.5 * diss.rate * dagger(C) @ C

    rows, cols, vals, term_idx, conj = [], [], [], [], []
    r, c, v = _coo(static_K)
    rows.append(r), cols.append(c), vals.append(v)
    term_idx.append(np.full(r.size, -1, dtype=np.int64))
    conj.append(np.zeros(r.size, dtype=np.bool_))

    amps = np.array([complex(t.amplitude) for t in model.hamiltonian.terms], dtype=np.complex128)
    freqs = np.array([float(t.frequency) for t in model.hamiltonian.terms], dtype=np.float64)
    for j, term in enumerate(model.hamiltonian.terms):
        for op, flag in ((np.asarray(term.base, dtype=complex), False), (dagger(term.base), True)):
            r, c, v = _coo(op)
            rows.append(r), cols.append(c), vals.append(v)
            term_idx.append(np.full(r.size, j, dtype=np.int64))
            conj.append(np.full(r.size, flag, dtype=np.bool_))

    j_rows, j_cols, j_vals, j_ptr = [], [], [], [0]
    for diss in model.dissipators:
        if diss.rate == 0:
            continue
        r, c, v = _coo(np.sqrt(diss.rate) * np.asarray(diss.collapse, dtype=complex))
        j_rows.append(r), j_cols.append(c), j_vals.append(v)
        j_ptr.append(j_ptr[-1] + r.size)

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    return (
        cat(rows, np.int64),
        cat(cols, np.int64),
        cat(vals, np.complex128),
        cat(term_idx, np.int64),
        cat(conj, np.bool_),
        amps,
        freqs,
        cat(j_rows, np.int64),
        cat(j_cols, np.int64),
        cat(j_vals, np.complex128),
        np.array(j_ptr, dtype=np.int64),
    )


def fast_rhs(model: LindbladModel, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Compiled matrix-free generator applied to the Hermitian part of ``rho``."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    _check_square(model.dim, rho)
    out = np.empty_like(rho)
    work = np.empty((3,) + rho.shape, dtype=np.complex128)
    coef = np.empty(max(len(model.hamiltonian.terms), 1), dtype=np.complex128)
    _kernels.apply_generator(float(t), rho, out, work, coef, model.compiled)
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def liouvillian_matrix(model: LindbladModel, t: float = 0.0, max_dim: int = MAX_DENSE_DIM) -> np.ndarray:
    """Dense superoperator with ``L @ vec(rho) == vec(lindblad_rhs(model, rho, t))``."""
    d = model.dim
    if d > max_dim:
        raise ResourceError(
            f"dense Liouvillian of a dim-{d} model has {d * d}x{d * d} entries (cap dim {max_dim}); "
            "use the matrix-free evolve() instead"
        )
    I = np.eye(d)
    H = model.hamiltonian(t)
    L = -1j * (np.kron(I, H) - np.kron(H.T, I))
    for diss in model.dissipators:
        C = diss.collapse
        CdC = dagger(C) @ C
        L += diss.rate * (np.kron(C.conj(), C) - 0.5 * np.kron(I, CdC) - 0.5 * np.kron(CdC.T, I))
    return L


def steady_state(model: LindbladModel, threshold: float = NULL_THRESHOLD) -> np.ndarray:
    """Unique fixed point of a time-independent generator via its null space."""
    if not model.is_time_independent:
        raise UnsupportedModelError("steady_state requires a time-independent model")
    L = liouvillian_matrix(model)
    _, s, Vh = np.linalg.svd(L)
    null_dim = int(np.sum(s < threshold * s[0])) if s[0] > 0 else L.shape[0]
    if null_dim != 1:
        raise NonUniqueSteadyStateError(null_dim)
    rho = unvec(Vh[-1].conj(), model.dim)
    rho = 0.5 * (rho + dagger(rho))
    rho = rho / np.trace(rho)
    pops = _classical_populations(L, model.dim)
    if pops is not None:
        rho[np.diag_indices(model.dim)] = pops
    return rho


def _classical_populations(L: np.ndarray, d: int) -> np.ndarray | None:
    """Populations from the GTH reduction when they form a closed rate equation.

    Applies when populations neither feed nor are fed by coherences. The
    elimination is subtraction-free, so tiny populations (thermal tails) keep
    full relative accuracy instead of the ~eps absolute accuracy of the SVD.
    """
    diag = np.arange(d) * (d + 1)
    off = np.setdiff1d(np.arange(d * d), diag)
    scale = np.abs(L).max()
    if np.abs(L[np.ix_(diag, off)]).max(initial=0.0) > 1e-14 * scale:
        return None
    if np.abs(L[np.ix_(off, diag)]).max(initial=0.0) > 1e-14 * scale:
        return None
    Q = L[np.ix_(diag, diag)]
    if np.abs(Q.imag).max() > 1e-14 * scale:
        return None
    # R[i, j]: rate i -> j
    R = np.clip(Q.real.T.copy(), 0.0, None)
    np.fill_diagonal(R, 0.0)
    for n in range(d - 1, 0, -1):
        out = R[n, :n].sum()
        if out <= 0.0:
            return None
        R[:n, n] /= out
        R[:n, :n] += np.outer(R[:n, n], R[n, :n])
    p = np.zeros(d)
    p[0] = 1.0
    for n in range(1, d):
        p[n] = p[:n] @ R[:n, n]
    return p / p.sum()


class FrameTransformedModel:
    """Generator seen in the frame ``rho_R = R^dag rho R``.

    Collapse operators map to ``R^dag C R`` and the Hamiltonian gains
    ``-i R^dag dR/dt``.
    """

    def __init__(self, model: LindbladModel, R: Callable, Rdot: Callable, unitarity_tol: float = 1e-10):
        self.model = model
        self.R = R
        self.Rdot = Rdot
        self.unitarity_tol = unitarity_tol

    @property
    def dim(self) -> int:
        return self.model.dim

    def _frame(self, t):
        R = np.asarray(self.R(t), dtype=complex)
        if R.shape != (self.dim, self.dim):
            raise DimensionError(f"R(t) has shape {R.shape}, model dim is {self.dim}")
        dev = np.max(np.abs(dagger(R) @ R - np.eye(self.dim)))
        if dev > self.unitarity_tol:
            raise ValueError(f"R(t) is not unitary at t={t}: |R^dag R - 1| = {dev:.3g}")
        return R, np.asarray(self.Rdot(t), dtype=complex)

    def hamiltonian(self, t: float) -> np.ndarray:
        R, Rd = self._frame(t)
        return dagger(R) @ self.model.hamiltonian(t) @ R - 1j * dagger(R) @ Rd

    def collapse_operators(self, t: float) -> list[tuple[np.ndarray, float]]:
        R, _ = self._frame(t)
        return [(dagger(R) @ d.collapse @ R, d.rate) for d in self.model.dissipators]

    def rhs(self, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
        R, Rd = self._frame(t)
        lab = lindblad_rhs(self.model, R @ rho @ dagger(R), t)
        K = -1j * dagger(R) @ Rd
        return dagger(R) @ lab @ R - 1j * (K @ rho - rho @ K)


def rotating_frame_transform(
    model: LindbladModel,
    R: Callable[[float], np.ndarray],
    Rdot: Callable[[float], np.ndarray],
    sample_times: Sequence[float] = (0.0,),
) -> FrameTransformedModel:
    frame = FrameTransformedModel(model, R, Rdot)
    for t in sample_times:
        frame._frame(t)
    return frame


@dataclass
class EvolveResult:
    times: np.ndarray
    states: np.ndarray
    trace_errors: np.ndarray
    nfev: int = 0
    steps: int = 0
    rejected: int = 0
    layout: HilbertLayout | None = field(default=None, repr=False)


def evolve(
    model: LindbladModel,
    rho0: np.ndarray,
    t_grid: Sequence[float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    trace_tol: float = TRACE_TOL,
    max_steps: int = 50_000_000,
) -> EvolveResult:
    """Adaptive Dormand-Prince 5(4) integration, sampled at ``t_grid``.

    The generator is applied matrix-free at the integrator's own stage times.
    The trace is never renormalized; drift beyond ``trace_tol`` raises.
    """
    rho0 = np.ascontiguousarray(rho0, dtype=np.complex128)
    _check_square(model.dim, rho0)
    if np.max(np.abs(rho0 - dagger(rho0))) > 1e-10:
        raise ValueError("initial state must be Hermitian")
    rho0 = 0.5 * (rho0 + dagger(rho0))
    t_grid = np.ascontiguousarray(t_grid, dtype=np.float64)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty strictly increasing 1-D sequence")

    Y, status, t_reached, nfev, n_acc, n_rej = _kernels.dopri5(
        rho0, t_grid, float(rtol), float(atol), int(max_steps), model.compiled
    )
    if status == _kernels.STATUS_UNDERFLOW:
        raise StiffnessError(f"step size underflow at t={t_reached:.6g}", time=t_reached)
    if status == _kernels.STATUS_MAX_STEPS:
        raise IntegrationError(f"step budget exhausted at t={t_reached:.6g}", time=t_reached)
    if status == _kernels.STATUS_NONFINITE:
        raise IntegrationError(f"non-finite state at t={t_reached:.6g}", time=t_reached)

    trace_errors = np.abs(np.trace(Y, axis1=1, axis2=2) - np.trace(rho0))
    bad = np.flatnonzero(trace_errors > trace_tol)
    if bad.size:
        t_bad = float(t_grid[bad[0]])
        raise IntegrationError(
            f"trace drift {trace_errors[bad[0]]:.3g} exceeds {trace_tol:g} at t={t_bad:.6g}", time=t_bad
        )
    log.debug("evolve: dim=%d nfev=%d accepted=%d rejected=%d", model.dim, nfev, n_acc, n_rej)
    return EvolveResult(t_grid, Y, trace_errors, int(nfev), int(n_acc), int(n_rej), model.layout)
