"""Exception types shared across the package."""


class SympropError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SympropError, ValueError):
    """Invalid input: bad probability vector, mismatched sizes, malformed profile."""


class BudgetExceededError(SympropError):
    """An enumeration or sampling cap was hit before the computation finished."""


class RejectionSamplingError(BudgetExceededError):
    """Rejection sampling exhausted its retry cap without producing a sample."""


class InfiniteDivergenceError(SympropError):
    """KL or chi-square divergence is +infinity (absolute continuity fails).

    Raised instead of returning inf so callers can tell a genuinely infinite
    divergence apart from a floating-point overflow.
    """


class EvaluationError(SympropError):
    """A property function returned a non-finite value."""


class EstimatorError(SympropError):
    """An estimator failed on a batch; carries the batch seed for replay."""

    def __init__(self, message: str, batch_seed: int | None = None):
        super().__init__(message)
        self.batch_seed = batch_seed


class CheckFailedError(SympropError):
    """A verification run found a violated invariant."""
