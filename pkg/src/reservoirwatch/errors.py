"""Exception hierarchy shared by every module."""


class ReservoirWatchError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ReservoirWatchError, ValueError):
    pass


class RasterIOError(ReservoirWatchError, OSError):
    pass


class UnsupportedGeometry(ReservoirWatchError, ValueError):
    pass


class SeriesOrderError(ReservoirWatchError, ValueError):
    """Dates in a series are duplicated or out of order.

    ``row`` is the zero-based index of the first offending entry.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DomainError(ReservoirWatchError, ValueError):
    pass


class UnitsError(ReservoirWatchError, ValueError):
    pass


class ParamError(ReservoirWatchError, ValueError):
    pass


class EmptyInput(ReservoirWatchError, ValueError):
    pass


class DegenerateDistribution(ReservoirWatchError, ValueError):
    """Input has no spread to work with.

    ``band`` names the polarization when raised from a per-band stage.
    """

    def __init__(self, message, band=None):
        if band is not None:
            message = f"{band}: {message}"
        super().__init__(message)
        self.band = band


class GridMismatch(ReservoirWatchError, ValueError):
    pass


class EmptyPeriod(ReservoirWatchError, ValueError):
    def __init__(self, message, month=None):
        super().__init__(message)
        self.month = month


class EmptyMask(ReservoirWatchError, ValueError):
    pass


class EmptyMaskWarning(UserWarning):
    pass


class CrsError(ReservoirWatchError, ValueError):
    pass


class ShapeError(ReservoirWatchError, ValueError):
    pass


class SceneError(ReservoirWatchError):
    """A pipeline stage failed for one scene; wraps the stage error."""

    def __init__(self, reservoir_id, date, cause):
        super().__init__(f"{reservoir_id} {date}: {type(cause).__name__}: {cause}")
        self.reservoir_id = reservoir_id
        self.date = date
        self.cause = cause
