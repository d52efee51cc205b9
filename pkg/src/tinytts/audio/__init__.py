"""Audio I/O, active speech level measurement, mel features."""

from .clip import AudioClip
from .mel import (
    MelConfig,
    MelSpectrogram,
    frame_count,
    mel_band_centers,
    mel_filterbank,
    mel_spectrogram,
    read_melb,
    write_melb,
)
from .p56 import ActiveLevelResult, active_speech_level_p56
from .wav import read_wav, read_wav_info, write_wav

__all__ = [
    "AudioClip",
    "ActiveLevelResult",
    "MelConfig",
    "MelSpectrogram",
    "active_speech_level_p56",
    "frame_count",
    "mel_band_centers",
    "mel_filterbank",
    "mel_spectrogram",
    "read_melb",
    "read_wav",
    "read_wav_info",
    "write_melb",
    "write_wav",
]
