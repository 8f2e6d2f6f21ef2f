"""Reservoir-engineered protection of a driven trapped ion in a lossy cavity.

Layers, bottom-up: operator algebra (:mod:`.operators`), Lindblad generators
and integration (:mod:`.lindblad`), the ion-cavity model and its effective
reduction (:mod:`.ioncavity`), trajectory analysis (:mod:`.analysis`) and the
``engres`` command line (:mod:`.cli`).
"""
from .analysis import (
    Trajectory,
    compare_full_vs_effective,
    fidelity,
    run_fock_converged,
    run_scenario,
    scan,
    scan_nbar,
    steady_value,
)
from .config import RunConfig, load_config, load_preset
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    FockConvergenceError,
    IntegrationError,
    NonUniqueSteadyStateError,
    ResourceError,
    StiffnessError,
    TrajectoryTooShortError,
    UnsupportedModelError,
)
from .ioncavity import (
    DressedBasis,
    IonCavityParams,
    analytic_steady,
    build_effective_model,
    build_full_model,
    derive_dressed,
    generic_elimination_check,
    rwa_validity,
)
from .lindblad import (
    Dissipator,
    HamiltonianSpec,
    LindbladModel,
    RotatingTerm,
    evolve,
    lindblad_rhs,
    liouvillian_matrix,
    rotating_frame_transform,
    steady_state,
)

__version__ = "0.1.0"
