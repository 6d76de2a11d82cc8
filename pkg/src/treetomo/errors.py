"""Exception hierarchy shared by all treetomo modules.

Every error raised by the library derives from :class:`TreetomoError` so
callers (and the CLI) can map failures to stable exit codes.
"""


class TreetomoError(Exception):
    """Base class for all treetomo errors."""


class NotATree(TreetomoError):
    """Edge list contains a cycle, a disconnection, or a duplicate edge."""


class UnknownVertex(TreetomoError):
    """A vertex id is not part of the tree."""


class InvalidParameter(TreetomoError):
    """An argument is outside its documented domain."""


class NotTerminal(TreetomoError):
    """Operation requires a terminal (degree-1, non-root) vertex."""


class MissingRow(TreetomoError):
    """A required transition row is absent from the kernel."""


class MissingKnownRow(MissingRow):
    """A row that the recovery step assumes known is absent."""


class DegreeMismatch(TreetomoError):
    """A vertex that must have exactly two neighbors does not."""


class InvalidKernel(TreetomoError):
    """Kernel fails validation (support, positivity, or row sums)."""


class InvalidQuery(TreetomoError):
    """Path-class query has inconsistent bounds or an empty target."""


class TooLarge(TreetomoError):
    """Instance exceeds the caps of the brute-force oracle."""


class NotInLambda(TreetomoError):
    """Vertex is not part of the embedded base tree."""


class NotAChild(TreetomoError):
    """Second vertex is not a child of the first."""


class ZeroDenominator(TreetomoError):
    """Recovery denominator vanished (possible only with empirical input)."""


class OutOfRange(TreetomoError):
    """Recovered probability fell outside [0, 1]."""


class RowSumViolation(TreetomoError):
    """Recovered row complement fell outside (0, 1)."""


class InsufficientData(TreetomoError):
    """An empirical cell required by the estimator is empty."""


class NonTermination(TreetomoError):
    """Simulated walk exceeded the step cap; kernel is likely invalid."""


class FormatError(TreetomoError):
    """A text artifact is malformed or covers an insufficient time range."""
