"""Exception types shared across the solvers and dual-certification routines."""


class ElastodualError(Exception):
    """Base class for all package-specific failures."""


class SizeMismatch(ElastodualError):
    """Field length inconsistent with the grid it is paired with."""


class NonConvergence(ElastodualError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class SingularHessian(ElastodualError):
    """Tridiagonal factorization met a pivot below the singularity threshold."""


class SingularKKTMatrix(ElastodualError):
    """The Newton matrix of the stationarity system is numerically singular."""


class SingularSystem(ElastodualError):
    """The 3D tangent stiffness could not be factorized."""


class SingularHooke(ElastodualError):
    """The 6x6 Mandel form of the stiffness tensor is not invertible."""


class PositivityViolated(ElastodualError):
    """The scalar/tensor denominator of the perturbed conjugate lost positivity.

    Carries the offending location and the (negative) margin.
    """

    def __init__(self, message, location=None, margin=None):
        super().__init__(message)
        self.location = location
        self.margin = margin


class NotPositiveDefinite(PositivityViolated):
    """3D variant: v2 + z + K*I is not positive definite at a point."""


class ConditionViolated(ElastodualError):
    """The displacement-gradient smallness hypothesis fails at the given state."""
