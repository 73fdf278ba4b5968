"""Exception types shared across the package."""


class FairflowError(Exception):
    """Base class for all fairflow errors."""


class DomainError(FairflowError):
    """A numeric argument is outside the domain of an operation."""


class StructureError(FairflowError):
    """A graph, path, or commodity reference is structurally invalid."""


class FeasibilityError(FairflowError):
    """A flow violates demand conservation or nonnegativity."""


class ParseError(FairflowError):
    """A TNTP or native-format file could not be parsed.

    ``line`` is the 1-based line number of the offending record when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
