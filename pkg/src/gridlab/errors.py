"""Exception taxonomy shared across the toolkit.

CLI exit codes and HTTP status codes are derived from these classes, so new
error conditions should subclass one of them rather than raising ValueError.
"""


class GridLabError(Exception):
    """Base class for all toolkit errors."""


class InputError(GridLabError):
    """A precondition on user-supplied input was violated (CLI exit 2 / HTTP 4xx)."""


class DataIntegrityError(GridLabError):
    """Stored or referenced data is inconsistent (unknown ids, schema breaches)."""


class MetricUndefinedError(GridLabError):
    """A similarity metric is mathematically undefined on the given inputs
    (e.g. Spearman on a constant map). Callers may skip-and-flag."""


class NotFoundError(GridLabError):
    """A referenced stimulus, session or annotation does not exist."""


class ConflictError(GridLabError):
    """The operation conflicts with current state (e.g. a closed session)."""


class NotEnoughAnnotationsError(GridLabError):
    """An aggregate was requested with fewer annotations than required."""

    def __init__(self, needed: int, present: int):
        self.needed = needed
        self.present = present
        super().__init__(f"not enough annotations: need >= {needed}, have {present}")
