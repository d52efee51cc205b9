"""Stationary augmentation noises and exact active-speech-SNR mixing.

Noise is generated from a Philox counter-based PRNG (keyed by the seed, one
stream per call) with Gaussian draws via numpy's ziggurat, so datasets are
bit-reproducible across platforms and build orders. Spectrum shaping happens
in the frequency domain: the white sequence's real FFT is multiplied by the
target magnitude response and inverted, then normalized to unit RMS.

SNR is defined against the ITU-T P.56 active speech power of the clean
utterance, per utterance: (active speech power) / (noise mean power)
= 10**(snr_db/10).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, active_speech_level_p56
from .errors import BadSpectrum, TooShort

USASI_HIGHPASS_HZ = 100.0
USASI_LOWPASS_HZ = 320.0

WHITE = "white"
USASI = "usasi"
PSD_TABLE = "psd_table"

# Electret capsule noise floor approximation: ~10 dB/decade rise below 1 kHz,
# flat above. An approximation for a sensor-noise-like spectrum, not a
# datasheet reconstruction; the augmentation result is insensitive to the
# exact curve.
SENSOR_PSD_POINTS: tuple[tuple[float, float], ...] = (
    (20.0, 17.0),
    (40.0, 14.0),
    (80.0, 11.0),
    (160.0, 8.0),
    (315.0, 5.0),
    (500.0, 3.0),
    (800.0, 1.0),
    (1000.0, 0.0),
    (2000.0, 0.0),
    (4000.0, 0.0),
    (8000.0, 0.0),
    (11000.0, 0.0),
)


@dataclass(frozen=True)
class SpectrumSpec:
    """Target long-term spectrum: white, USASI program noise, or a PSD table."""

    kind: str
    psd_points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (WHITE, USASI, PSD_TABLE):
            raise BadSpectrum(f"unknown spectrum kind {self.kind!r}")
        if self.kind == PSD_TABLE:
            pts = self.psd_points
            if pts is None or len(pts) < 2:
                raise BadSpectrum("PSD table needs at least 2 points")
            freqs = [f for f, _ in pts]
            if any(f <= 0 for f in freqs):
                raise BadSpectrum("PSD table frequencies must be positive")
            if any(b <= a for a, b in zip(freqs, freqs[1:])):
                raise BadSpectrum("PSD table frequencies must strictly increase")
            if not all(np.isfinite(db) for _, db in pts):
                raise BadSpectrum("PSD table powers must be finite")
        elif self.psd_points is not None:
            raise BadSpectrum("psd_points only valid for kind=psd_table")


@dataclass(frozen=True)
class NoiseSpec:
    """One augmentation: a named noise spectrum at a target active-speech SNR."""

    name: str
    spectrum: SpectrumSpec
    snr_db: float
    aug_id: int

    def __post_init__(self) -> None:
        if self.aug_id < 1:
            raise BadSpectrum("aug_id 0 is reserved for clean; noise specs need >= 1")


def default_noise_specs() -> list[NoiseSpec]:
    """White/25 dB, USASI/15 dB, sensor-table/20 dB."""
    return [
        NoiseSpec("white", SpectrumSpec(WHITE), 25.0, 1),
        NoiseSpec("usasi", SpectrumSpec(USASI), 15.0, 2),
        NoiseSpec("sensor", SpectrumSpec(PSD_TABLE, SENSOR_PSD_POINTS), 20.0, 3),
    ]


def white_gaussian(n: int, seed: int) -> np.ndarray:
    """n i.i.d. standard-normal samples; bit-reproducible in seed."""
    if n < 1:
        raise ValueError("need n >= 1")
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.standard_normal(n)


def usasi_magnitude(freqs_hz: np.ndarray) -> np.ndarray:
    """|H(f)| for the USASI program-noise spectrum (corners 100 Hz / 320 Hz)."""
    f2 = np.asarray(freqs_hz, dtype=np.float64) ** 2
    return np.sqrt(f2 / ((f2 + USASI_HIGHPASS_HZ**2) * (f2 + USASI_LOWPASS_HZ**2)))


def _table_magnitude(
    pts: tuple[tuple[float, float], ...], freqs_hz: np.ndarray
) -> np.ndarray:
    """Interpolate relative power linearly over log-frequency, flat beyond ends."""
    logf_pts = np.log10([f for f, _ in pts])
    db_pts = np.array([db for _, db in pts])
    out = np.empty_like(freqs_hz)
    positive = freqs_hz > 0
    out[positive] = np.interp(np.log10(freqs_hz[positive]), logf_pts, db_pts)
    out[~positive] = db_pts[0]  # DC follows the flat low end
    return 10.0 ** (out / 20.0)


def shaped_noise(
    n: int, spectrum: SpectrumSpec, sample_rate_hz: int, seed: int
) -> np.ndarray:
    """Unit-RMS Gaussian noise with the spectrum's long-term magnitude shape."""
    if n < sample_rate_hz:
        raise TooShort(f"need at least 1 s ({sample_rate_hz} samples), got {n}")
    white = white_gaussian(n, seed)
    if spectrum.kind == WHITE:
        return white / np.sqrt(np.mean(white**2))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate_hz)
    if spectrum.kind == USASI:
        mag = usasi_magnitude(freqs)
    else:
        nyquist = sample_rate_hz / 2.0
        if any(f > nyquist for f, _ in spectrum.psd_points):
            raise BadSpectrum("PSD table frequency above Nyquist")
        mag = _table_magnitude(spectrum.psd_points, freqs)
    shaped = np.fft.irfft(np.fft.rfft(white) * mag, n=n)
    return shaped / np.sqrt(np.mean(shaped**2))


@dataclass(frozen=True)
class MixResult:
    """Noisy clip plus the gains the mix applied."""

    clip: AudioClip
    noise_gain: float  # scale applied to the unit-RMS noise
    mixture_gain: float  # 1.0 unless overflow rescue rescaled the whole mix


def mix_at_snr(
    speech: AudioClip, spectrum: SpectrumSpec, snr_db: float, seed: int
) -> MixResult:
    """Add spectrum-shaped noise at an exact P.56 active-speech SNR.

    If the mix would clip, the whole mixture is rescaled to peak 0.99 (the SNR
    is unaffected) and the rescale reported as mixture_gain.
    """
    level = active_speech_level_p56(speech)
    n = len(speech.samples)
    # shaping needs >= 1 s for spectral validity; overdraw and truncate
    gen_n = max(n, speech.sample_rate_hz)
    noise = shaped_noise(gen_n, spectrum, speech.sample_rate_hz, seed)[:n]
    active_power = 10.0 ** (level.active_level_db / 10.0)
    noise_power = float(np.mean(noise**2))
    gain = float(np.sqrt(active_power / (noise_power * 10.0 ** (snr_db / 10.0))))
    mix = speech.samples + gain * noise
    peak = float(np.max(np.abs(mix)))
    mixture_gain = 1.0 if peak <= 1.0 else 0.99 / peak
    return MixResult(
        AudioClip(mix * mixture_gain, speech.sample_rate_hz), gain, mixture_gain
    )


def read_psd_table_csv(path) -> SpectrumSpec:
    """Load `freq_hz,power_db` CSV rows into a PSD-table spectrum."""
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "freq_hz,power_db":
            raise BadSpectrum(f"bad PSD CSV header: {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise BadSpectrum(f"line {line_no}: expected 2 fields")
            try:
                pts.append((float(fields[0]), float(fields[1])))
            except ValueError as exc:
                raise BadSpectrum(f"line {line_no}: {exc}") from exc
    return SpectrumSpec(PSD_TABLE, tuple(pts))
