"""Exception types shared across the matting pipeline."""


class MattingError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(MattingError):
    """An input image file could not be decoded."""


class ChannelCountError(DecodeError):
    """An input image does not carry three color channels (alpha is tolerated)."""


class TrimapFormatError(DecodeError):
    """A trimap raster is not single-channel and cannot be collapsed to one."""


class DimensionMismatchError(MattingError):
    """Rasters that must share dimensions do not."""


class UnusableTrimapError(MattingError):
    """The trimap lacks foreground or background pixels entirely."""


class DegenerateSampleSetError(MattingError):
    """Too few boundary samples per class for cross-validation."""


class DegeneratePairError(MattingError):
    """The sampled foreground and background colors coincide."""


class ConvergenceError(MattingError):
    """The linear solver missed its residual target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
