"""Exception hierarchy shared by all evtkit modules."""


class EvtkitError(Exception):
    """Base class for all evtkit errors."""


class OutOfBounds(EvtkitError):
    """An event lies outside the sensor geometry or the stream's time range."""


class NegativeDuration(EvtkitError):
    """Stream end time precedes its start time."""


class InvalidRange(EvtkitError):
    """A requested time window is inverted or exceeds the stream bounds."""


class ParseError(EvtkitError):
    """A file record could not be parsed; carries the offending line/row number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class HeaderMismatch(EvtkitError):
    """File magic or header fields do not match the expected format."""


class GeometryMismatch(EvtkitError):
    """Two inputs disagree on sensor width/height."""


class DegenerateFps(EvtkitError):
    """Frame rate is zero or negative."""


class ZeroWindow(EvtkitError):
    """A binning window of zero microseconds was requested."""


class DegenerateBox(EvtkitError):
    """A bounding box has non-positive width or height."""


class NonPositiveBox(ParseError):
    """An annotation row describes a box with non-positive width or height."""


class FpsMismatch(EvtkitError):
    """Frame timestamps extend past the event stream by more than one bin."""
