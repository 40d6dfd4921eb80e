"""Exception hierarchy shared by every layer of the package."""


class IsomonoError(Exception):
    """Base class for all errors raised by isomono."""


class DivisionByZero(IsomonoError, ZeroDivisionError):
    pass


class MixedDiscriminant(IsomonoError, ValueError):
    pass


class UnknownVariable(IsomonoError, ValueError):
    pass


class PoleHit(IsomonoError, ZeroDivisionError):
    pass


class ShapeMismatch(IsomonoError, ValueError):
    pass


class Singular(IsomonoError, ZeroDivisionError):
    pass


class NotFound(IsomonoError):
    """A semi-decision search gave up; this is not a proof of non-existence."""


class ParameterDependentSpectrum(IsomonoError, ValueError):
    pass


class DependentHint(IsomonoError, ValueError):
    pass


class ResonanceBoundViolated(IsomonoError, ValueError):
    pass


class NonPolarPart(IsomonoError, ValueError):
    pass


class NonFuchsian(IsomonoError, ValueError):
    pass


class CoalescingPoles(IsomonoError, ValueError):
    pass


class CoalescedSample(IsomonoError, ValueError):
    pass


class StepFailure(IsomonoError, RuntimeError):
    pass


class FsdError(IsomonoError, ValueError):
    """Base for FSD parse errors; carries an optional source position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class FsdSyntaxError(FsdError):
    pass


class DuplicatePole(FsdError):
    pass


class DimensionMismatch(FsdError):
    pass


class UnknownName(IsomonoError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown name"
