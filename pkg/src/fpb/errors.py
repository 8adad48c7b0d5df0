"""Exception hierarchy shared across the toolkit."""


class FPBError(Exception):
    """Base class for all toolkit errors."""


class DegenerateGeometry(FPBError):
    pass


class ShapeMismatch(FPBError):
    pass


class EmptyComponent(FPBError):
    pass


class InvalidMaze(FPBError):
    pass


class InfeasibleRange(FPBError):
    pass


class ScheduleError(FPBError):
    pass


class InvalidLayout(FPBError):
    pass


class ParseError(FPBError):
    pass


class MissingFrame(FPBError):
    pass


class EmptySequence(FPBError):
    pass


class VersionError(FPBError):
    pass


class InvalidManifest(FPBError):
    pass


class TaskMismatch(FPBError):
    pass


class TrackingFailure(FPBError):
    pass


class PaletteError(FPBError):
    pass


class SilhouetteError(FPBError):
    pass


class CorrelationUndefined(FPBError):
    pass


class UsageError(FPBError):
    pass
