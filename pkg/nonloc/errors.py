"""
Error taxonomy for nonloc.

Every error carries the process exit code the CLI reports for it, the same way
HTTP handlers carry a status code.
"""
from typing import Optional, Tuple


class NonlocError(Exception):
    """Base class for all nonloc errors."""
    exit_code: int = 2

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigurationError(NonlocError):
    """Invalid run configuration, domain geometry or preset selection."""
    exit_code = 2


class DataError(NonlocError):
    """Unreadable or malformed input data (CSV files, kernel tables)."""
    exit_code = 2

    def __init__(self, detail: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + detail)
        self.path = path
        self.line = line


class ParameterError(NonlocError):
    """A numerical parameter outside its admissible range (e.g. p <= 1)."""
    exit_code = 2


class PreconditionError(NonlocError):
    """An operation was called with inputs violating its precondition."""
    exit_code = 2


class EvaluationError(NonlocError):
    """An integrand or energy evaluation produced a non-finite value."""
    exit_code = 1

    def __init__(self, detail: str, location: Optional[Tuple[int, int]] = None):
        if location is not None:
            detail = f"{detail} at node pair (i={location[0]}, j={location[1]})"
        super().__init__(detail)
        self.location = location


class InversionError(NonlocError):
    """The pointwise inverse of v -> m*v + f0(x, v)/2 could not be bracketed."""
    exit_code = 1

    def __init__(self, detail: str, node: Optional[int] = None, x: Optional[float] = None):
        if node is not None:
            detail = f"{detail} (node {node}, x={x!r})"
        super().__init__(detail)
        self.node = node
        self.x = x
