"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergenceError(RuntimeError):
    """A numerical integral did not reach its tolerance within the node budget.

    The best available estimate is kept on the exception so callers can
    decide whether it is still usable.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf"), evaluations=0):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.evaluations = evaluations


class TruncationError(RuntimeError):
    """A kernel series hit its term cap before the truncation bound was met."""

    def __init__(self, message, partial_sum=float("nan"), bound=float("inf"), terms=0):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.bound = bound
        self.terms = terms


class IllConditionedError(RuntimeError):
    """A covariance system is too ill-conditioned to solve reliably."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition
