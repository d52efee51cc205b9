"""Exception hierarchy shared across the package.

Every error raised on a bad input or bad file derives from TinyTtsError so
callers (and the CLI) can distinguish validation failures from genuine bugs.
"""


class TinyTtsError(Exception):
    """Base class for all package errors."""


# --- audio ---

class MalformedWav(TinyTtsError):
    """RIFF/WAVE container is structurally broken (bad magic, truncated chunk)."""


class UnsupportedFormat(TinyTtsError):
    """WAV file is valid but not mono 16-bit integer PCM."""


class MalformedMelb(TinyTtsError):
    """MELB file header/payload mismatch."""


class SignalTooShort(TinyTtsError):
    """Clip shorter than the minimum duration the operation needs."""


class SilentSignal(TinyTtsError):
    """Signal has no measurable speech activity; active level is undefined."""


class ClipTooShort(TinyTtsError):
    """Fewer samples than one analysis window."""


class BadConfig(TinyTtsError):
    """Configuration values violate a documented constraint."""


# --- noisegen ---

class BadSpectrum(TinyTtsError):
    """Spectrum definition is unusable (bad PSD table, frequency out of range)."""


class TooShort(TinyTtsError):
    """Requested noise length below the minimum for spectral shaping."""


# --- curation ---

class MissingMetadata(TinyTtsError):
    """Corpus root does not contain metadata.csv."""


class MalformedRow(TinyTtsError):
    """metadata.csv row with the wrong field count; message carries the line number."""


class EmptySelection(TinyTtsError):
    """Duration budget below the shortest available sample."""


class UnknownId(TinyTtsError):
    """Batch plan references an entry id that is not in the corpus."""


class EmptySubset(TinyTtsError):
    """Operation needs at least one entry."""


class MeasurementError(TinyTtsError):
    """One or more audio files could not be measured; message lists the ids."""


# --- augment ---

class ConfigError(TinyTtsError):
    """Noise spec configuration invalid (duplicate or reserved aug ids)."""


class BuildError(TinyTtsError):
    """Dataset build failed for one or more utterances; message lists the ids."""


class MissingFile(TinyTtsError):
    """A manifest entry points at a file that does not exist."""


# --- evalkit ---

class NotRowStochastic(TinyTtsError):
    """Attention matrix row does not sum to one (or has weights outside [0, 1])."""


class NoValidFrames(TinyTtsError):
    """Frame mask excludes every decoder frame."""


class EmptyLabel(TinyTtsError):
    """Report label with no attention matrices."""


class MalformedAttnFile(TinyTtsError):
    """ATTN1 file header/payload mismatch."""


class EmptyReference(TinyTtsError):
    """WER reference has no words."""


# --- toytrain ---

class BadRange(TinyTtsError):
    """Synthetic corpus length range outside the supported interval."""


class ShapeMismatch(TinyTtsError):
    """Batch tensors disagree with the model configuration."""


class AugIdOutOfRange(TinyTtsError):
    """Augmentation id not below the configured table size."""


class GraphConsistency(TinyTtsError):
    """Backward invoked on a tape that does not match the forward graph."""


class MalformedCheckpoint(TinyTtsError):
    """TOYM checkpoint bytes do not parse."""


# --- cli / config ---

class ConfigFileError(TinyTtsError):
    """Run-config file has unknown keys or unparseable values."""
