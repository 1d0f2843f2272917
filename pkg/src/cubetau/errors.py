class TauSpanError(ValueError):
    """Tau polynomials fail to span the required quotient space."""


class SingularSystemError(ArithmeticError):
    """A discrete system is (numerically) singular.

    ``structural`` is set when the singularity is built into the problem
    (naive corner taus, pure Neumann data without a gauge) rather than
    coming from poor conditioning.
    """

    def __init__(self, message, rank=None, size=None, structural=False):
        super().__init__(message)
        self.rank = rank
        self.size = size
        self.structural = structural


class ResidualCheckError(ArithmeticError):
    """A solve produced a residual above the acceptance threshold."""
