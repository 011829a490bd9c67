"""Exception types raised by the library."""


class BTwoGridError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(BTwoGridError, ValueError):
    pass


class NonFiniteEntries(BTwoGridError, ValueError):
    pass


class NotHpd(BTwoGridError, ValueError):
    pass


class Defective(BTwoGridError):
    """Eigenvector matrix too ill-conditioned to treat the matrix as diagonalizable."""

    def __init__(self, cond_w):
        self.cond_w = cond_w
        super().__init__(f"matrix is defective to working precision (cond(W) = {cond_w:.3e})")


class NotBNormal(BTwoGridError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"matrix is not B-normal (residual {residual:.3e})")


class SingularCoarseMatrix(BTwoGridError):
    pass


class RankDeficient(BTwoGridError):
    pass


class NearSingularA(BTwoGridError):
    pass


class TrivialProjection(BTwoGridError):
    pass


class SingularSmoother(BTwoGridError):
    pass


class SmoothingAssumptionViolated(BTwoGridError):
    def __init__(self, smoothing_norm):
        self.smoothing_norm = smoothing_norm
        super().__init__(f"||I - M^-1 A||_B = {smoothing_norm:.6g} >= 1")


class OrderingAmbiguous(BTwoGridError):
    pass


class ProjectionNotBOrthogonal(BTwoGridError):
    pass


class NumericalInconsistency(BTwoGridError):
    """An identity that must hold exactly was violated beyond tolerance."""


class ParseError(BTwoGridError, ValueError):
    pass
