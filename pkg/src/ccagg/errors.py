"""Exception types shared across the package."""


class EmptyWorld(Exception):
    """No occupied site: the world has zero clusters."""


class QueueEmpty(Exception):
    """All dynamics finished: no pending events to process."""


class NotAdjacent(Exception):
    """merge_clusters called on clusters that are not in contact (internal logic error)."""


class NotBlocked(Exception):
    """Candidate blocking edges requested for a move that is not blocked."""


class InvalidParams(ValueError):
    """Parameters outside their documented domain."""


class EmptySample(ValueError):
    """A statistic was requested on an empty sample."""


class DegenerateInput(ValueError):
    """Input admits no fit (e.g. all abscissae equal)."""


class NonMonotoneLog(ValueError):
    """Tagged-cluster log times are not strictly increasing."""


class SchemaMismatch(ValueError):
    """A CSV file does not carry the expected column schema."""
