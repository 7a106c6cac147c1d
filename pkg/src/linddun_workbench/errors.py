"""Exception types shared across the workbench.

Every failure the workbench raises deliberately derives from WorkbenchError
and carries a short machine-readable code next to the human message. The
service layer maps classes to HTTP statuses and the CLI maps them to exit
codes, so new error conditions should reuse these classes rather than add
bare exceptions.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for failures raised by the workbench itself."""

    code = "workbench-error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ParseError(WorkbenchError):
    """Malformed catalog, script, or tree input, located when possible.

    ``line`` and ``column`` are 1-based. For delimited catalogs ``column``
    counts cells, for scripts it counts characters.
    """

    code = "parse-error"

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
        code: str | None = None,
    ):
        self.line = line
        self.column = column
        if line is not None and column is not None:
            message = f"line {line}, column {column}: {message}"
        elif line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, code)


class NotFoundError(WorkbenchError):
    code = "not-found"


class ConflictError(WorkbenchError):
    code = "conflict"


class PreconditionError(WorkbenchError):
    """An operation was structurally valid but not applicable to current state."""

    code = "precondition-failed"


class ReplayError(PreconditionError):
    """A persisted log entry failed to apply; carries the offending seq."""

    def __init__(self, message: str, seq: int | None = None, code: str = "replay-error"):
        self.seq = seq
        if seq is not None:
            message = f"log entry {seq}: {message}"
        super().__init__(message, code)
