"""Exception types shared across the package."""


class IqcError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(IqcError, ValueError):
    """Matrix dimensions are inconsistent."""


class DomainError(IqcError, ValueError):
    """A scalar argument is outside its admissible range."""


class SingularityError(IqcError, ArithmeticError):
    """Requested evaluation point is (numerically) a pole."""


class ArgumentError(IqcError, ValueError):
    """Unknown enum-like argument value."""


class PreconditionError(IqcError, ValueError):
    """A required hypothesis of the certification test is violated."""


class InfeasiblePrecondition(PreconditionError):
    """Nominal spectral-radius hypothesis fails; LMI cannot be feasible.

    Distinct from solver-reported infeasibility so callers can tell a
    structurally hopeless query from a numerically infeasible one.
    """


class UnsupportedError(IqcError, ValueError):
    """Requested configuration is outside the implemented scope."""


class StructureError(IqcError, ValueError):
    """Input lacks the required algebraic structure (e.g. Kronecker form)."""


class NotCertifiable(IqcError, RuntimeError):
    """No certificate exists within the searched range."""


class SolverError(IqcError, RuntimeError):
    """Conic solver failed or returned an unusable/unverifiable result."""


class DivergenceError(IqcError, RuntimeError):
    """Simulated trajectory diverged."""
