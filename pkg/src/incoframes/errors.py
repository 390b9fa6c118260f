"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Arguments violate a documented precondition (shape, norm, range)."""


class NumericsFailure(RuntimeError):
    """A dense linear-algebra kernel failed to converge or returned non-finite values."""


class RankDeficient(NumericsFailure):
    """A matrix required to have full rank is numerically rank deficient."""


class DegenerateVector(InvalidInput):
    """A frame vector duplicates another one (|correlation| = 1), no trust region exists."""


class SolverStall(RuntimeError):
    """Interior-point solve hit its iteration cap before certifying optimality.

    Carries the best iterate seen so far and its duality gap so callers can
    decide whether the partial answer is usable.
    """

    def __init__(self, message, solution=None, gap=None):
        super().__init__(message)
        self.solution = solution
        self.gap = gap


class FrameFormatError(IOError):
    """A frame file or manifest failed parsing or its integrity checks."""
