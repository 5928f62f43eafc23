"""Exception hierarchy shared by the simulator and the command-line front end."""


class TMQFCError(Exception):
    """Base class for every error raised by tmqfc."""


class GridMismatchError(TMQFCError, ValueError):
    """Two envelopes or operators live on different temporal grids."""


class GuardError(TMQFCError):
    """A numerical guard tripped (boundary leakage, wraparound, unreachable target)."""


class LeakageError(GuardError):
    pass


class CalibrationError(GuardError):
    pass


class ConfigError(TMQFCError):
    pass


class MatrixFormatError(TMQFCError):
    pass
