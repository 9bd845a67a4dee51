"""Exception hierarchy shared by every backbay module."""


class BackbayError(Exception):
    """Base class for all toolkit errors."""


class WavFormatError(BackbayError):
    """A file could not be decoded as 16-bit PCM mono WAV."""


class CorruptHeaderError(WavFormatError):
    pass


class NotPcmError(WavFormatError):
    pass


class MultiChannelError(WavFormatError):
    pass


class SampleRateError(BackbayError):
    pass


class SignalTooShortError(BackbayError):
    pass


class FilterbankError(BackbayError):
    pass


class SilentTriggerError(BackbayError):
    pass


class StabilityError(BackbayError):
    """Explicit finite-difference step would not keep the density nonnegative."""


class SamplerError(BackbayError):
    pass


class DatasetError(BackbayError):
    pass


class EmptyCorpusError(DatasetError):
    pass


class ShapeError(BackbayError):
    pass


class CheckpointError(BackbayError):
    pass


class NoToneError(BackbayError):
    """THD requested on a clip with no measurable fundamental."""


class ConfigError(BackbayError):
    pass
