"""Steady fidelity in the optical-cavity regime: first-order formula, effective and full model.

Rates are quoted in units of the atomic decay: g = 35, kappa = 3 g, Omega = 2000.

    python3 scripts/optical_regime.py --fock-dim 15 --t-max 2
"""
import argparse

from engineered_reservoir import (
    IonCavityParams,
    analytic_steady,
    build_effective_model,
    derive_dressed,
    fidelity,
    run_scenario,
    steady_state,
    steady_value,
)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=7e8 / 2e7)
    ap.add_argument("--kappa-over-g", type=float, default=3.0)
    ap.add_argument("--omega-c", type=float, default=2000.0)
    ap.add_argument("--fock-dim", type=int, default=15)
    ap.add_argument("--t-max", type=float, default=2.0)
    args = ap.parse_args(argv)

    params = IonCavityParams(
        g=args.g, kappa=args.kappa_over_g * args.g, omega_c=args.omega_c, fock_dim=args.fock_dim
    )
    basis = derive_dressed(params)
    an = analytic_steady(params, basis)
    eff = fidelity(steady_state(build_effective_model(params, basis)), basis.plus)
    traj = run_scenario(params, "full", "g", args.t_max)
    full = steady_value(traj, params)
    print(f"cooperativity    {params.g**2 / (params.kappa * params.gamma):.1f}")
    print(f"Gamma_eng        {basis.gamma_eng:.4f}")
    print(f"formula 1 - eps  {an.fidelity:.4f}")
    print(f"effective model  {eff:.4f}")
    print(f"full model       {full.mean:.4f} +- {full.std:.1e}")


if __name__ == "__main__":
    main()
