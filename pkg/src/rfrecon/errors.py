"""Exception hierarchy shared by every module.

The CLI maps each family onto a process exit code, so new errors should
subclass one of the four family bases rather than ``ReflectanceError``.
"""


class ReflectanceError(Exception):
    """Base class for all package errors."""


class InputError(ReflectanceError):
    """Malformed or out-of-range input (exit code 2)."""


class DimensionMismatch(ReflectanceError, ValueError):
    """Array or matrix shapes that do not agree (exit code 3)."""


class NumericalFailure(ReflectanceError):
    """A computation that is undefined for the given inputs (exit code 4)."""


class StorageError(ReflectanceError, OSError):
    """File read/write failures (exit code 5)."""


class ParseError(InputError):
    def __init__(self, line, column, message):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class ValidationError(InputError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


# geometry of points and directions
class CoincidentPoints(NumericalFailure):
    pass


class InvalidNeighborhood(NumericalFailure):
    pass


class BelowHorizon(NumericalFailure):
    pass


class BehindDevice(NumericalFailure):
    pass


class NonpositiveDepth(NumericalFailure):
    pass


class ParallelRays(NumericalFailure):
    pass


class ZeroBaseline(NumericalFailure):
    pass


# calibration
class InsufficientViews(InputError):
    pass


class DegenerateViews(NumericalFailure):
    pass


# reconstruction
class NoCorrespondence(NumericalFailure):
    pass


class SingularRay(NumericalFailure):
    pass


class VanishingTransport(NumericalFailure):
    pass


class InvalidSeed(NumericalFailure):
    pass


class EmptyRow(NumericalFailure):
    pass


class NoOverlap(NumericalFailure):
    pass
