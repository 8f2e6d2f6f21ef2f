"""Operator algebra on a truncated cavity Fock space tensored with a two-level atom.

Composite basis ordering is fixed: ``index = fock_index * atom_dim + atom_index``
(atom fastest). Atomic index 0 is the ground state |g>, index 1 the excited
state |e>, so ``sigma_z = sigma_ee - sigma_gg = diag(-1, +1)``.

Operators and kets are plain complex numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

ATOM_LEVELS = {"g": 0, "e": 1}
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class HilbertLayout:
    """Cavity (Fock) factor first, small system (atom) factor second."""

    fock_dim: int
    atom_dim: int = 2

    def __post_init__(self):
        if int(self.fock_dim) != self.fock_dim or self.fock_dim < 2:
            raise DimensionError(f"fock_dim must be an integer >= 2, got {self.fock_dim}")
        if self.atom_dim < 1:
            raise DimensionError(f"atom_dim must be positive, got {self.atom_dim}")

    @property
    def total_dim(self) -> int:
        return self.fock_dim * self.atom_dim

    def compose(self, n: int, s: int) -> int:
        if not (0 <= n < self.fock_dim and 0 <= s < self.atom_dim):
            raise DimensionError(f"index ({n}, {s}) outside layout {self}")
        return n * self.atom_dim + s

    def decompose(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.total_dim:
            raise DimensionError(f"index {index} outside layout {self}")
        return divmod(index, self.atom_dim)


def annihilation(N: int) -> np.ndarray:
    """Truncated bosonic lowering operator, ``a[n-1, n] = sqrt(n)``."""
    if int(N) != N or N < 2:
        raise DimensionError(f"Fock dimension must be >= 2, got {N}")
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)


def number_operator(N: int) -> np.ndarray:
    return np.diag(np.arange(N, dtype=float)).astype(complex)


def basis_ket(dim: int, index: int) -> np.ndarray:
    ket = np.zeros(dim, dtype=complex)
    ket[index] = 1.0
    return ket


def atom_ket(label: str) -> np.ndarray:
    try:
        return basis_ket(2, ATOM_LEVELS[label])
    except KeyError:
        raise ValueError(f"atomic level must be 'g' or 'e', got {label!r}") from None


def atomic_projector(r: str, s: str) -> np.ndarray:
    """``|r><s|`` for r, s in {'g', 'e'}."""
    return np.outer(atom_ket(r), atom_ket(s).conj())


def sigma_z() -> np.ndarray:
    return atomic_projector("e", "e") - atomic_projector("g", "g")


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def tensor(A: np.ndarray, B: np.ndarray, layout: HilbertLayout | None = None) -> np.ndarray:
    """Kronecker product of a cavity operator ``A`` with a system operator ``B``.

    Without ``layout`` the system factor must be a two-level operator.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    atom_dim = layout.atom_dim if layout is not None else 2
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
        raise DimensionError(f"cavity factor must be square with dim >= 2, got {A.shape}")
    if layout is not None and A.shape[0] != layout.fock_dim:
        raise DimensionError(f"cavity factor has dim {A.shape[0]}, layout expects {layout.fock_dim}")
    if B.shape != (atom_dim, atom_dim):
        raise DimensionError(f"system factor must be {atom_dim}x{atom_dim}, got {B.shape}")
    return np.kron(A, B)


def tensor_ket(field: np.ndarray, atom: np.ndarray) -> np.ndarray:
    return np.kron(field, atom)


def partial_trace_field(rho: np.ndarray, layout: HilbertLayout) -> np.ndarray:
    """Trace out the cavity: ``rho_at[i, j] = sum_n <n, i| rho |n, j>``."""
    rho = np.asarray(rho)
    d = layout.total_dim
    if rho.shape != (d, d):
        raise DimensionError(f"rho has shape {rho.shape}, layout expects {(d, d)}")
    N, s = layout.fock_dim, layout.atom_dim
    return np.einsum("nink->ik", rho.reshape(N, s, N, s))


def partial_trace_atom(rho: np.ndarray, layout: HilbertLayout) -> np.ndarray:
    d = layout.total_dim
    if rho.shape != (d, d):
        raise DimensionError(f"rho has shape {rho.shape}, layout expects {(d, d)}")
    N, s = layout.fock_dim, layout.atom_dim
    return np.einsum("nimi->nm", rho.reshape(N, s, N, s))


def dressed_states(phi_c: float, chi: float) -> tuple[np.ndarray, np.ndarray]:
    """Dressed kets of the driven atom.

    |+> = (sqrt(2+chi)|e> + e^{-i phi_c} sqrt(2-chi)|g>) / 2
    |-> = (sqrt(2-chi)|e> - e^{-i phi_c} sqrt(2+chi)|g>) / 2
    """
    if not abs(chi) <= 2.0:
        raise DomainError(f"|chi| must not exceed 2, got {chi}")
    phase = np.exp(-1j * phi_c)
    plus = 0.5 * np.array([phase * np.sqrt(2.0 - chi), np.sqrt(2.0 + chi)], dtype=complex)
    minus = 0.5 * np.array([-phase * np.sqrt(2.0 + chi), np.sqrt(2.0 - chi)], dtype=complex)
    return plus, minus


def protected_state(t: float, params, basis) -> np.ndarray:
    """Target ket |+(t)> with relative phase e^{-i Phi(t)}, Phi(t) = phi_c - delta_c t."""
    Phi = params.phi_c - params.delta_c * t
    chi = basis.chi
    return 0.5 * np.array(
        [np.exp(-1j * Phi) * np.sqrt(2.0 - chi), np.sqrt(2.0 + chi)], dtype=complex
    )


def thermal_state(N: int, nbar: float) -> np.ndarray:
    """Bose-Einstein diagonal state truncated to N levels and renormalized."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    if nbar == 0:
        p = np.zeros(N)
        p[0] = 1.0
    else:
        p = (nbar / (1.0 + nbar)) ** np.arange(N)
        p /= p.sum()
    return np.diag(p).astype(complex)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.vdot(rho, rho)))


def hermiticity_residual(rho: np.ndarray) -> float:
    return float(np.max(np.abs(rho - rho.conj().T)))


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = rho - sigma
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def is_density_operator(
    rho: np.ndarray,
    trace_tol: float = 1e-9,
    herm_tol: float = 1e-10,
    positivity_tol: float = POSITIVITY_TOL,
) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    return (
        abs(np.trace(rho) - 1.0) < trace_tol
        and hermiticity_residual(rho) < herm_tol
        and min_eigenvalue(rho) >= -positivity_tol
    )
