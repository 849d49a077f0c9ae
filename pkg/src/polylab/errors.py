"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation-type errors exit 1,
resource limits exit 2.
"""


class PolylabError(Exception):
    """Base class for all package errors."""

    kind = "error"


class InvalidArgument(PolylabError, ValueError):
    kind = "invalid-argument"


class OutOfRange(PolylabError, ValueError):
    kind = "out-of-range"


class Unsupported(PolylabError, ValueError):
    kind = "unsupported"


class ResourceLimit(PolylabError, RuntimeError):
    kind = "resource-limit"


class HypothesisViolation(PolylabError, ValueError):
    """An operation refused to run because its stated hypotheses fail."""

    kind = "refused"


class MonogenicityError(PolylabError, ValueError):
    """Prime splitting refused: the power-basis assumption may be wrong."""

    kind = "refused"
