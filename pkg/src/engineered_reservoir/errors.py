"""Exception hierarchy shared by the simulation modules."""


class DimensionError(ValueError):
    """Operator or state shapes are incompatible with the Hilbert layout."""


class DomainError(ValueError):
    """A parameter lies outside the region where a closed form is defined."""


class IntegrationError(RuntimeError):
    """The master-equation integration failed.

    ``time`` carries the offending time when one is known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StiffnessError(IntegrationError):
    """Adaptive step size underflowed."""


class ResourceError(MemoryError):
    """A dense superoperator would exceed the configured size cap."""


class UnsupportedModelError(ValueError):
    """Operation requires a time-independent model."""


class NonUniqueSteadyStateError(RuntimeError):
    def __init__(self, null_dim):
        super().__init__(f"steady state is not unique: null space has dimension {null_dim}")
        self.null_dim = null_dim


class TrajectoryTooShortError(ValueError):
    def __init__(self, required, actual):
        super().__init__(
            f"trajectory spans t <= {actual:.6g}; steady-value extraction needs t >= {required:.6g}"
        )
        self.required = required
        self.actual = actual


class FockConvergenceError(RuntimeError):
    """Fidelity did not converge under Fock-space escalation."""


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
