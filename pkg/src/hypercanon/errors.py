"""Exception hierarchy shared by all modules."""


class HyperCanonError(Exception):
    """Base class for every error raised by this package."""


class InvalidBranchSet(HyperCanonError, ValueError):
    pass


class ChartViolation(HyperCanonError):
    """A point or stencil lies outside the validity disk of its chart."""


class ContinuationStall(HyperCanonError):
    """Step control could not track the square root along a contour."""


class CutCollision(HyperCanonError):
    """Cut segments intersect, or a cycle cannot clear foreign branch points."""


class DegenerateCrossing(HyperCanonError):
    """Two contour pieces overlap or touch non-transversally."""


class RankDeficient(HyperCanonError):
    pass


class QuadratureDivergence(HyperCanonError):
    pass


class SingularAperiod(HyperCanonError):
    pass


class RiemannRelationViolation(HyperCanonError):
    pass


class DegenerateDensity(HyperCanonError):
    pass


class OutOfCollar(HyperCanonError):
    pass
