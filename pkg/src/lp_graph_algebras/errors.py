"""Exception hierarchy shared by every module of the toolkit."""

from typing import Optional, Tuple


class LpGraphError(Exception):
    """Base exception for toolkit errors."""
    pass


class GraphError(LpGraphError):
    """Malformed graph input or an unknown vertex/edge name."""
    pass


class PreconditionError(LpGraphError):
    """An operation was called outside its documented preconditions."""
    pass


class SpatialError(PreconditionError):
    """Invalid spatial system or an operation that needs a spatial certificate."""
    pass


class RepresentationError(LpGraphError):
    """A representation fails a structural requirement (degenerate, non-idempotent, ...)."""
    pass


class ExperimentError(LpGraphError):
    """An experiment driver could not complete a construction that should exist."""
    pass


class ParseError(LpGraphError):
    """Error parsing an element expression or a numeric literal."""

    def __init__(
        self,
        message: str,
        position: int = 0,
        span: Optional[Tuple[int, int]] = None,
        text: str = "",
    ) -> None:
        """Initialize the parse error.

        Args:
            message: Human-readable description
            position: Offset of the offending character
            span: Optional (start, end) range of the offending token
            text: The source text being parsed
        """
        self.message = message
        self.position = position
        self.span = span or (position, position + 1)
        self.text = text
        super().__init__(f"{message} at position {position}")

    def render(self) -> str:
        """Render the error with a caret line under the offending span."""
        if not self.text:
            return str(self)
        start, end = self.span
        caret = " " * start + "^" * max(1, end - start)
        return f"{self}\n  {self.text}\n  {caret}"


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PRECONDITION = 2
EXIT_PARSE = 3


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(error, ParseError):
        return EXIT_PARSE
    if isinstance(error, (GraphError, PreconditionError, RepresentationError)):
        return EXIT_PRECONDITION
    return EXIT_FAILURE
