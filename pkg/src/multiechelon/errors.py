"""Exception hierarchy shared by the solvers and the CLI."""


class ConfigError(ValueError):
    """A configuration document is malformed or violates a parameter invariant."""


class SolverError(RuntimeError):
    """A numerical routine could not produce a result."""


class SingularMatrixError(SolverError):
    pass


class TridiagonalBreakdown(SingularMatrixError):
    """Zero pivot or zero continuant in a tridiagonal recurrence."""


class NotApplicableError(ValueError):
    """The requested quantity is undefined for this input (precondition fails)."""
