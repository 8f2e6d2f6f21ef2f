"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line (see ``conftest.pytest_terminal_summary``)
before asserting. Expensive full-model runs are cached and shared between
criteria; criterion 11 audits every trajectory produced here.
"""
import time
from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from engineered_reservoir.analysis import fidelity, required_span, run_scenario, steady_value
from engineered_reservoir.cli import trajectory_csv
from engineered_reservoir.ioncavity import (
    IonCavityParams,
    analytic_steady,
    build_effective_model,
    derive_dressed,
    generic_elimination_check,
)
from engineered_reservoir.lindblad import evolve, steady_state
from engineered_reservoir.operators import hermiticity_residual, min_eigenvalue, number_operator
from engineered_reservoir.validation import check_dressed_coefficients, check_frame_consistency, damped_mode_model

FOCK = 15
# the rotating protected state relaxes far slower than 1/Gamma_eng; these spans reach the plateau
T_RESONANT = 1.0
T_ROTATING = 4.0
T_WEAK_COUPLING = 13.0

TRAJECTORIES = []


def record(key, passed, detail):
    ACCEPTANCE_LINES[key] = (bool(passed), detail)
    print(f"{key} {'PASS' if passed else 'FAIL'}  {detail}")


def reference(**kw):
    base = dict(g=100.0, kappa=100.0, omega_c=2000.0, delta_c=0.0, gamma=1.0, fock_dim=FOCK)
    base.update(kw)
    return IonCavityParams(**base)


@lru_cache(maxsize=None)
def timed_run(params, kind="full", t_max=None):
    t_max = max(t_max or 0.0, required_span(params))
    t0 = time.perf_counter()
    traj = run_scenario(params, kind, "g", t_max)
    elapsed = time.perf_counter() - t0
    TRAJECTORIES.append((params, kind, t_max, traj))
    return traj, steady_value(traj, params), elapsed


def test_c1_thermal_fixed_point():
    N, nbar = 20, 0.1
    t0 = time.perf_counter()
    rho = steady_state(damped_mode_model(N, 1.0, nbar))
    elapsed = time.perf_counter() - t0
    mean_n = float(np.real(np.trace(number_operator(N) @ rho)))
    p = np.real(np.diag(rho))
    ratio_err = float(np.max(np.abs(p[1 : N - 1] / p[: N - 2] - nbar / (nbar + 1))))
    ok = abs(mean_n - nbar) < 1e-8 and ratio_err < 1e-8 and elapsed < 1.0
    record("C1", ok, f"<n> = {mean_n:.12f}, max ratio error {ratio_err:.1e}, {elapsed:.2f} s")
    assert ok


def test_c2_null_space_vs_integration():
    params = reference()
    basis = derive_dressed(params)
    t0 = time.perf_counter()
    model = build_effective_model(params, basis)
    rho_ss = steady_state(model)
    res = evolve(model, np.diag([1.0, 0.0]).astype(complex), np.linspace(0, 50 / basis.gamma_eng, 101))
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(res.states[-1] - rho_ss)))
    ok = err < 1e-6 and elapsed < 5.0
    record("C2", ok, f"max |rho(50/Gamma) - rho_ss| = {err:.1e}, {elapsed:.2f} s")
    assert ok


def test_c3_engineered_dark_state():
    params = reference(gamma=0.0)
    traj, sv, elapsed = timed_run(params, "effective", 30.0 / derive_dressed(params).gamma_eng)
    err = abs(1.0 - traj.fidelities[-1])
    ok = err < 1e-6 and abs(1 - sv.mean) < 1e-6 and elapsed < 5.0
    record("C3", ok, f"1 - F = {err:.1e}, {elapsed:.2f} s")
    assert ok


def test_c4_no_coupling_baseline():
    _, sv, elapsed = timed_run(reference(g=0.0))
    ok = abs(sv.mean - 0.5) <= 0.02 and elapsed < 60.0
    record("C4", ok, f"g = 0: steady F = {sv.mean:.4f} (target 0.50 +- 0.02), {elapsed:.1f} s")
    assert ok


def test_c5_resonant_protection():
    _, sv, elapsed = timed_run(reference(), "full", T_RESONANT)
    _, sv_eff, _ = timed_run(reference(), "effective", T_RESONANT)
    ok = sv.mean >= 0.95 and sv.mean >= sv_eff.mean - 0.05 and elapsed < 600
    record("C5", ok, f"steady F = {sv.mean:.4f} (effective {sv_eff.mean:.4f}), {elapsed:.1f} s")
    assert ok


def test_c6_rotating_plateau():
    _, sv, elapsed = timed_run(reference(delta_c=300.0), "full", T_ROTATING)
    ok = abs(sv.mean - 0.90) <= 0.05 and elapsed < 600
    record("C6", ok, f"delta_c = 300: steady F = {sv.mean:.4f} (drift {sv.drift:.1e}), {elapsed:.1f} s")
    assert ok


def test_c7_thermal_and_coupling_ordering():
    lines, ok = [], True
    for dc, span in ((0.0, T_RESONANT), (300.0, T_ROTATING)):
        F = [timed_run(reference(delta_c=dc).with_nbar(n), "full", span)[1].mean for n in (0.0, 0.01, 0.1)]
        ok &= F[0] > F[1] > F[2]
        lines.append(f"dc={dc:g}: " + " > ".join(f"{f:.4f}" for f in F))
    Fg = [
        timed_run(reference(g=g, delta_c=300.0, nbar_a=0.1), "full", T_WEAK_COUPLING)[1].mean
        for g in (10.0, 20.0, 50.0, 100.0)
    ]
    ok &= all(b >= a for a, b in zip(Fg, Fg[1:]))
    lines.append("nbar=0.1, g=10..100: " + " <= ".join(f"{f:.4f}" for f in Fg))
    record("C7", ok, "; ".join(lines))
    assert ok


def test_c8_analytic_vs_numeric():
    params = reference()
    basis = derive_dressed(params)
    F = fidelity(steady_state(build_effective_model(params, basis)), basis.plus)
    an = analytic_steady(params, basis)
    ok = abs(F - an.fidelity) <= 5 * an.eps_pp

    g = 7e8 / 2e7
    optical = reference(g=g, kappa=3 * g)
    ob = derive_dressed(optical)
    formula = analytic_steady(optical, ob).fidelity
    eff = fidelity(steady_state(build_effective_model(optical, ob)), ob.plus)
    _, full, _ = timed_run(optical, "full", 2.0)
    record(
        "C8",
        ok,
        f"C=100: |F_num - (1 - eps)| = {abs(F - an.fidelity):.2e} <= {5 * an.eps_pp:.2e}; "
        f"optical regime: formula {formula:.4f}, effective {eff:.4f}, full {full.mean:.4f}, quoted 0.96",
    )
    assert ok
    assert formula == pytest.approx(0.9946, abs=1e-4)


def test_c9_frame_consistency():
    frame = check_frame_consistency(n_params=5, n_times=10)
    coeffs = check_dressed_coefficients()
    ok = frame.passed and coeffs.passed
    record("C9", ok, f"max residual {frame.value:.1e} (tol 1e-8); closed forms max error {coeffs.value:.1e}")
    assert ok


def test_c10_elimination():
    basis = derive_dressed(reference())
    O, rho0 = basis.projector("+", "-"), basis.projector("-", "-")
    r25 = generic_elimination_check(1.0, 25.0, O, rho_sys0=rho0)
    r50 = generic_elimination_check(1.0, 50.0, O, rho_sys0=rho0)
    ok = r25.max_distance < 0.03 and r50.max_distance < r25.max_distance
    record(
        "C10",
        ok,
        f"kappa/lambda = 25: {r25.max_distance:.1e}, 50: {r50.max_distance:.1e} "
        f"(from t = 10/kappa: {r25.max_distance_all:.1e}, {r50.max_distance_all:.1e})",
    )
    assert ok


def test_c11_universal_invariants():
    if not any(kind == "full" for _, kind, _, _ in TRAJECTORIES):
        timed_run(reference(), "full", T_RESONANT)
    worst_trace = max(float(np.max(t.trace_errors)) for *_, t in TRAJECTORIES)
    worst_eig = min(float(np.min(t.min_eigenvalues)) for *_, t in TRAJECTORIES)
    worst_herm = max(float(np.max(t.hermiticity_residuals)) for *_, t in TRAJECTORIES)
    worst_atom_eig = min(min(min_eigenvalue(r) for r in t.states) for *_, t in TRAJECTORIES)
    worst_atom_herm = max(max(hermiticity_residual(r) for r in t.states) for *_, t in TRAJECTORIES)
    params, kind, t_max, traj = min((x for x in TRAJECTORIES if x[1] == "full"), key=lambda x: x[2])
    again = run_scenario(params, kind, "g", t_max)
    identical = trajectory_csv(again) == trajectory_csv(traj)
    ok = (
        worst_trace < 1e-6
        and min(worst_eig, worst_atom_eig) > -1e-7
        and max(worst_herm, worst_atom_herm) < 1e-9
        and identical
    )
    record(
        "C11",
        ok,
        f"{len(TRAJECTORIES)} runs: max |tr - 1| {worst_trace:.1e}, min eig {min(worst_eig, worst_atom_eig):.1e}, "
        f"max herm {max(worst_herm, worst_atom_herm):.1e}, byte-identical rerun {identical}",
    )
    assert ok
