"""Exception hierarchy for the reduction toolkit.

Every error raised deliberately by this package derives from
:class:`ReductionError`, so callers can catch one base class at job
boundaries and still distinguish failure modes by subclass.
"""


class ReductionError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(ReductionError):
    """Matrix/vector shapes are inconsistent."""


class SingularMassMatrix(ReductionError):
    """The descriptor matrix E is numerically singular."""


class SingularShift(ReductionError):
    """A shifted pencil (s*E - A) is numerically singular (s hit a pole).

    Carries the offending shift in ``.shift`` so retry logic can perturb it.
    """

    def __init__(self, message, shift=None):
        super().__init__(message)
        self.shift = shift


class DimensionTooLarge(ReductionError):
    """A dense O(n^3) operation was requested above the dense-eig cap."""


class RankDeficient(ReductionError):
    """A projection basis lost numerical rank."""


class SingularReducedPencil(ReductionError):
    """The reduced descriptor matrix is numerically singular."""


class NotConjugateClosed(ReductionError):
    """A point set or model is not closed under complex conjugation."""


class RepeatedPoles(ReductionError):
    """Reduced-model poles are not numerically simple."""


class DuplicatePoints(ReductionError):
    """Interpolation or sample points coincide."""


class SingularSurrogatePencil(ReductionError):
    """The extracted surrogate descriptor matrix is singular."""


class FamilyPole(ReductionError):
    """The feed-through family denominator vanishes at the requested point."""


class DegenerateDenominator(ReductionError):
    """The closed-form feed-through solve has a vanishing denominator."""


class UnstableSystem(ReductionError):
    """A stable system was required."""


class NonProper(ReductionError):
    """A strictly proper transfer function was required (nonzero d)."""


class NoStableFeedthrough(ReductionError):
    """Every probed feed-through value destabilized the reduced pencil."""


class SurrogateUnusable(ReductionError):
    """The error surrogate cannot be evaluated along the frequency axis."""


class ParseError(ReductionError):
    """A file could not be parsed; message includes the line number."""
