"""Exception types shared across the library."""


class ContractViolation(ValueError):
    """An input violates a documented precondition (bad shape, non-Hermitian, ...)."""


class DegenerateGeometry(ValueError):
    """Target/clutter placement does not form a valid bistatic triangle."""


class InfeasibleEllipse(ValueError):
    """A bistatic range at or below the baseline length defines no ellipse."""


class SingularMatrix(ArithmeticError):
    """A (loaded) matrix is numerically singular."""


class EstimationFailure(RuntimeError):
    """The subspace estimator could not produce the requested estimates.

    Carries whatever partial results were available at the point of failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
