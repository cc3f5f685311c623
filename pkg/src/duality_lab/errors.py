"""Exception hierarchy shared by every module."""


class DualityLabError(ValueError):
    """Base class for all input-validation and solver errors."""


class NotSquare(DualityLabError):
    pass


class NotHermitian(DualityLabError):
    pass


class NotPSD(DualityLabError):
    pass


class DimensionMismatch(DualityLabError):
    pass


class BadRank(DualityLabError):
    pass


class BadSize(DualityLabError):
    pass


class InvalidState(DualityLabError):
    """A density operator, pure state, POVM, channel or CQ state violates its invariants."""


class NotOrthonormal(DualityLabError):
    pass


class NotADistribution(DualityLabError):
    pass


class OutOfRange(DualityLabError):
    pass


class NotMUB(DualityLabError):
    pass


class NotSymmetricCoupler(DualityLabError):
    pass


class Degenerate(DualityLabError):
    """A ratio such as visibility is undefined because its denominator vanishes."""


class ZeroPostselectionProbability(DualityLabError):
    pass


class NoConvergence(DualityLabError):
    """An iterative solver exhausted its budget before meeting the requested gap."""

    def __init__(self, tol, iterations, gap=None):
        self.tol = tol
        self.iterations = iterations
        self.gap = gap
        msg = f"no convergence to tol={tol:g} after {iterations} iterations"
        if gap is not None:
            msg += f" (gap={gap:.3g})"
        super().__init__(msg)
