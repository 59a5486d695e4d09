"""Exception types shared across the package."""


class GridswarmError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(GridswarmError):
    """Lattice or scenario description is structurally invalid."""


class EpsOutOfRangeError(GridswarmError):
    """Placement-error fraction too large: 3*eps^2 - 10*eps + 3 <= 0, so the
    geometric feasibility bound is void."""


class FullBlacklistError(GridswarmError):
    """All 256 identifiers are excluded; the swarm is too dense for the ID space."""


class OriginDegenerateError(GridswarmError):
    """The elected origin does not have exactly two edge neighbors; the lattice
    is smaller than 3x3 or the neighborhood data is corrupt."""


class CountInconsistentError(GridswarmError):
    """Border-count bookkeeping (my_count, c1, c2, c3, total) is self-contradictory."""


class PlanParseError(GridswarmError):
    """Role-plan text could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
