"""Exception and warning types shared across the package."""


class InvalidStateError(ValueError):
    """A state object violates its defining constraints (norm, Hermiticity, trace, positivity)."""


class InvalidModelError(ValueError):
    """A probability model is malformed (negative probabilities, unnormalized)."""


class InvalidDerivativeError(ValueError):
    """A supplied derivative matrix is not Hermitian/traceless as required."""


class InconsistentDerivativeError(InvalidDerivativeError):
    """A Bloch derivative changes the norm of a pure state to first order."""


class ShapeError(ValueError):
    """Operands have incompatible dimensions or grids."""


class ConfigError(ValueError):
    """A run configuration (integrator step, CLI key/value) is invalid."""


class StepSizeError(RuntimeError):
    """State-vector norm drifted more than allowed within a single step."""


class OptimizationError(RuntimeError):
    """A 1-D search failed (non-finite objective, no convergence)."""


class BracketError(OptimizationError):
    """The maximum of the objective sits on a bracket endpoint."""


class FitError(RuntimeError):
    """A least-squares fit did not converge or produced out-of-domain coefficients."""


class IndeterminateRatioError(RuntimeError):
    """A closed-form ratio was requested at a point where its denominator vanishes."""


class AnalyticLimitWarning(UserWarning):
    """A removable-singularity input was answered with its documented analytic limit."""


class TruncationWarning(UserWarning):
    """A Fock-space truncation discarded more probability mass than the quality target."""
