import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from engineered_reservoir.errors import DimensionError, DomainError
from engineered_reservoir.ioncavity import IonCavityParams, derive_dressed
from engineered_reservoir.operators import (
    HilbertLayout,
    annihilation,
    atom_ket,
    atomic_projector,
    basis_ket,
    dagger,
    dressed_states,
    is_density_operator,
    min_eigenvalue,
    partial_trace_atom,
    partial_trace_field,
    protected_state,
    sigma_z,
    tensor,
    tensor_ket,
    thermal_state,
)

from _helpers import random_density, random_hermitian


def cplx(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


class TestLayout:
    @given(st.integers(2, 30), st.data())
    def test_compose_decompose_bijective(self, N, data):
        layout = HilbertLayout(N)
        assert layout.total_dim == 2 * N
        n = data.draw(st.integers(0, N - 1))
        s = data.draw(st.integers(0, 1))
        assert layout.decompose(layout.compose(n, s)) == (n, s)

    def test_atom_fastest(self):
        assert HilbertLayout(4).compose(1, 0) == 2
        assert HilbertLayout(4).compose(0, 1) == 1

    def test_rejects_small(self):
        with pytest.raises(DimensionError):
            HilbertLayout(1)


class TestAnnihilation:
    def test_lowers_one(self):
        a = annihilation(3)
        np.testing.assert_allclose(a @ basis_ket(3, 1), basis_ket(3, 0))

    def test_vacuum(self):
        assert not np.any(annihilation(3) @ basis_ket(3, 0))

    def test_number_spectrum(self):
        a = annihilation(4)
        np.testing.assert_allclose(np.diag(dagger(a) @ a).real, [0, 1, 2, 3])

    def test_too_small(self):
        with pytest.raises(DimensionError):
            annihilation(1)


class TestAtomic:
    def test_raising(self):
        np.testing.assert_allclose(atomic_projector("e", "g") @ atom_ket("g"), atom_ket("e"))

    def test_completeness(self):
        np.testing.assert_allclose(atomic_projector("e", "e") + atomic_projector("g", "g"), np.eye(2))

    def test_sigma_z(self):
        np.testing.assert_allclose(sigma_z(), atomic_projector("e", "e") - atomic_projector("g", "g"))
        assert sorted(np.linalg.eigvalsh(sigma_z())) == [-1.0, 1.0]

    def test_bad_label(self):
        with pytest.raises(ValueError):
            atomic_projector("x", "g")


class TestTensor:
    def test_identity_on_excited(self):
        psi = tensor_ket(basis_ket(3, 0), atom_ket("e"))
        np.testing.assert_allclose(tensor(np.eye(3), atomic_projector("e", "e")) @ psi, psi)

    def test_field_lowering(self):
        psi = tensor_ket(basis_ket(3, 1), atom_ket("g"))
        out = tensor(annihilation(3), np.eye(2)) @ psi
        np.testing.assert_allclose(out, tensor_ket(basis_ket(3, 0), atom_ket("g")))

    def test_trace_factorizes(self, rng):
        A, B = cplx(rng, 3, 3), cplx(rng, 2, 2)
        assert np.trace(tensor(A, B)) == pytest.approx(np.trace(A) * np.trace(B), abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_mixed_product(self, seed):
        r = np.random.default_rng(seed)
        A, C = cplx(r, 3, 3), cplx(r, 3, 3)
        B, D = cplx(r, 2, 2), cplx(r, 2, 2)
        lhs = tensor(A, B) @ tensor(C, D)
        np.testing.assert_allclose(lhs, tensor(A @ C, B @ D), atol=1e-12 * (1 + np.abs(lhs).max()))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            tensor(np.eye(3), np.eye(3))
        with pytest.raises(DimensionError):
            tensor(np.eye(3), np.eye(2), HilbertLayout(4))

    def test_dagger_involution(self, rng):
        A = cplx(rng, 4, 4)
        assert np.array_equal(dagger(dagger(A)), A)


class TestPartialTrace:
    def test_product_state(self):
        layout = HilbertLayout(3)
        rho = tensor(np.diag([1.0, 0, 0]), atomic_projector("e", "e"))
        np.testing.assert_allclose(partial_trace_field(rho, layout), atomic_projector("e", "e"))

    def test_mixed_field(self, rng):
        layout = HilbertLayout(4)
        atom = random_density(rng, 2)
        rho = tensor(np.diag([0.5, 0.5, 0, 0]), atom)
        np.testing.assert_allclose(partial_trace_field(rho, layout), atom, atol=1e-14)

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_trace_preserved(self, N, seed):
        r = np.random.default_rng(seed)
        rho = random_hermitian(r, 2 * N)
        red = partial_trace_field(rho, HilbertLayout(N))
        assert abs(np.trace(red) - np.trace(rho)) < 1e-12 * (1 + np.abs(rho).sum())

    @given(st.integers(0, 2**32 - 1))
    def test_factor_rule(self, seed):
        r = np.random.default_rng(seed)
        F, A = cplx(r, 5, 5), cplx(r, 2, 2)
        layout = HilbertLayout(5)
        np.testing.assert_allclose(partial_trace_field(tensor(F, A), layout), np.trace(F) * A, atol=1e-11)
        np.testing.assert_allclose(partial_trace_atom(tensor(F, A), layout), np.trace(A) * F, atol=1e-11)

    def test_wrong_shape(self):
        with pytest.raises(DimensionError):
            partial_trace_field(np.eye(5), HilbertLayout(3))


class TestDressedStates:
    def test_balanced(self):
        plus, minus = dressed_states(0.0, 0.0)
        np.testing.assert_allclose(plus, np.array([1, 1]) / math.sqrt(2), atol=1e-15)

    def test_known_amplitudes(self):
        plus, _ = dressed_states(0.0, 0.14958)
        # [g, e] ordering; sqrt(2.14958)/2 and sqrt(1.85042)/2
        assert abs(plus[1]) == pytest.approx(0.733072, abs=1e-6)
        assert abs(plus[0]) == pytest.approx(0.680150, abs=1e-6)

    @given(st.floats(-2, 2), st.floats(-10, 10))
    def test_orthonormal(self, chi, phi):
        plus, minus = dressed_states(phi, chi)
        assert abs(np.vdot(plus, minus)) < 1e-12
        assert abs(np.vdot(plus, plus) - 1) < 1e-12
        assert abs(np.vdot(minus, minus) - 1) < 1e-12

    @given(st.floats(-1.99, 1.99), st.floats(0, 2 * math.pi), st.floats(1e-3, 1e3))
    def test_eigenvectors_of_drive(self, chi, phi, xi):
        # spectrum +-xi since (chi/2)^2 + (1 - chi^2/4) = 1
        X = np.exp(1j * phi) * atomic_projector("e", "g")
        A = xi * (chi / 2 * sigma_z() + math.sqrt(1 - chi**2 / 4) * (X + dagger(X)))
        plus, minus = dressed_states(phi, chi)
        np.testing.assert_allclose(A @ plus, xi * plus, atol=1e-10 * xi)
        np.testing.assert_allclose(A @ minus, -xi * minus, atol=1e-10 * xi)

    def test_domain(self):
        with pytest.raises(DomainError):
            dressed_states(0.0, 2.1)

    def test_phase_periodicity(self):
        a, _ = dressed_states(0.3, 0.4)
        b, _ = dressed_states(0.3 + 2 * math.pi, 0.4)
        np.testing.assert_allclose(a, b, atol=1e-14)


class TestProtectedState:
    def test_initial(self):
        p = IonCavityParams(delta_c=0.0)
        np.testing.assert_allclose(protected_state(0.0, p, derive_dressed(p)), [2**-0.5, 2**-0.5], atol=1e-15)

    def test_static_when_resonant(self):
        p = IonCavityParams(delta_c=0.0)
        b = derive_dressed(p)
        np.testing.assert_allclose(protected_state(0.0, p, b), protected_state(3.7, p, b))

    def test_half_turn(self):
        # chi is tiny but nonzero at delta_c != 0; use a huge drive so chi -> 0
        p = IonCavityParams(delta_c=1.0, omega_c=1e9)
        k = protected_state(math.pi / p.delta_c, p, derive_dressed(p))
        np.testing.assert_allclose(k, [-(2**-0.5), 2**-0.5], atol=1e-9)

    @given(st.floats(0, 100), st.floats(-500, 500))
    def test_unit_norm(self, t, dc):
        p = IonCavityParams(delta_c=dc)
        assert abs(np.linalg.norm(protected_state(t, p, derive_dressed(p))) - 1) < 1e-12


class TestDensityChecks:
    @given(st.integers(2, 30), st.floats(0, 2))
    def test_thermal_state(self, N, nbar):
        rho = thermal_state(N, nbar)
        assert is_density_operator(rho)
        assert abs(np.trace(rho) - 1) < 1e-9
        assert min_eigenvalue(rho) >= -1e-8

    def test_rejects_non_hermitian(self):
        assert not is_density_operator(np.array([[1, 1], [0, 0]], dtype=complex))
