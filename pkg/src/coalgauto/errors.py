"""Exceptions shared by every module."""


class ArtifactError(Exception):
    """Base class for all library errors."""


class NonFinitaryFunctor(ArtifactError):
    pass


class MalformedValue(ArtifactError):
    pass


class PartialMap(ArtifactError):
    pass


class UniverseMismatch(ArtifactError):
    pass


class BlowupGuard(ArtifactError):
    pass


class FunctorMismatch(ArtifactError):
    pass


class EmptyCycle(ArtifactError):
    pass


class UndefinedMove(ArtifactError):
    pass


class AlphabetMismatch(ArtifactError):
    pass


class NondeterministicInput(ArtifactError):
    pass


class ShapeMismatch(ArtifactError):
    pass


class AlternatingUnsupported(ArtifactError):
    pass


class ColorMismatch(ArtifactError):
    pass


class NotWinning(ArtifactError):
    pass


class NotAccepted(ArtifactError):
    pass


class NotStronglyAccepted(ArtifactError):
    pass


class ParseError(ArtifactError, SyntaxError):
    """Syntax error in an artifact file, with line and column."""

    def __init__(self, msg, line=None, col=None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col})" if col is not None else ")")
        ArtifactError.__init__(self, msg + where)
        self.msg = msg + where
        self.lineno = line
        self.offset = col

    def __str__(self):
        return self.msg


class ValidationError(ArtifactError):
    """A parsed document violates a domain invariant."""
