"""Exception hierarchy shared by every stage of the pipeline."""


class QsynthError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(QsynthError, ValueError):
    """Operand shapes do not agree, or a dimension is not allowed."""


class InvalidRequestError(QsynthError, ValueError):
    """A request names an unsupported combination of parameters."""


class GenerationError(QsynthError, RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class SingularSystemError(QsynthError, ArithmeticError):
    """A linear system that must be solved exactly is singular."""


class LinesearchError(QsynthError, RuntimeError):
    """A linesearch did not find an acceptable step within its cap."""


class NotUnitaryError(QsynthError, ValueError):
    """An operator expected to be unitary is too far from the unitary group."""


class ParseError(QsynthError, ValueError):
    """Malformed text input.  Carries the 1-based line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
