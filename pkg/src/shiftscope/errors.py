"""Exception types shared across the package.

Every error carries a stable ``code`` string that file loaders, the HTTP
service, and the CLI use to classify failures without parsing messages.
"""


class ShiftscopeError(Exception):
    """Base class for all package errors."""

    code = "error"


class EmptySampleError(ShiftscopeError):
    code = "empty-sample"


class SpaceMismatchError(ShiftscopeError):
    code = "space-mismatch"


class InvalidJointError(ShiftscopeError):
    code = "invalid-joint"


class UnknownDialogueError(ShiftscopeError):
    code = "unknown-dialogue"


class InvalidEmbeddingError(ShiftscopeError):
    code = "invalid-embedding"


class DimMismatchError(ShiftscopeError):
    code = "dim-mismatch"


class EmptyDialogueError(ShiftscopeError):
    code = "empty-dialogue"


class MissingReferenceError(ShiftscopeError):
    code = "missing-reference"


class NoValidPairsError(ShiftscopeError):
    code = "no-valid-pairs"


class TestMismatchError(ShiftscopeError):
    code = "test-mismatch"


class StateHoleError(ShiftscopeError):
    code = "state-hole"


class BoundViolatedError(ShiftscopeError):
    """The adaptation bound assertion failed; never expected on valid input."""

    code = "bound-violated"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InputFormatError(ShiftscopeError):
    """Malformed input file or request payload."""

    code = "bad-input"
