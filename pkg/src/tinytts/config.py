"""Run configuration: key=value text files with defaults and strict keys.

Precedence: command-line flags override the config file, which overrides the
defaults below. Unknown keys are errors so typos cannot silently fall back to
a default. Every command with an output directory echoes the fully-resolved
configuration there (minus execution details like job counts, which must not
change the output bytes).
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigFileError

# every known key with its default and parser
DEFAULTS: dict[str, tuple[object, type]] = {
    "corpus_root": ("", str),
    "budget_s": (7200.0, float),
    "selection_mode": ("informed", str),
    "seed": (0, int),
    "master_seed": (0, int),
    "jobs": (1, int),
    "noise_specs": ("white:25:1,usasi:15:2,sensor:20:3", str),
    "mel.n_fft": (1024, int),
    "mel.hop_length": (256, int),
    "mel.win_length": (1024, int),
    "mel.n_mels": (80, int),
    "mel.fmin_hz": (0.0, float),
    "mel.fmax_hz": (8000.0, float),
    "mel.log_floor": (1e-5, float),
    "toy.vocab_size": (12, int),
    "toy.feat_dim": (16, int),
    "toy.embed_dim": (16, int),
    "toy.enc_hidden": (32, int),
    "toy.aug_embed_dim": (4, int),
    "toy.dec_hidden": (32, int),
    "toy.attn_dim": (16, int),
    "toy.n_aug_ids": (4, int),
    "toy.max_decode_frames": (200, int),
    "toy.gate_loss_weight": (1.0, float),
    "toy.learning_rate": (1e-3, float),
    "toy.grad_clip_norm": (1.0, float),
    "toy.batch_size": (16, int),
    "toy.steps": (2000, int),
    "toy.seed": (0, int),
    "toy.n_utts": (200, int),
    "toy.len_min": (3, int),
    "toy.len_max": (8, int),
    "toy.aug_profiles": ("0:0.1,0.2:0.05,-0.15:0.08", str),
}

# execution details excluded from resolved-config snapshots
_VOLATILE_KEYS = {"jobs"}


class RunConfig:
    def __init__(self, values: dict[str, object] | None = None):
        self.values = {k: v for k, (v, _) in DEFAULTS.items()}
        if values:
            self.values.update(values)

    def get(self, key: str):
        if key not in DEFAULTS:
            raise ConfigFileError(f"unknown config key {key!r}")
        return self.values[key]

    def set(self, key: str, raw: str | object) -> None:
        if key not in DEFAULTS:
            raise ConfigFileError(f"unknown config key {key!r}")
        _, parser = DEFAULTS[key]
        if isinstance(raw, str) and parser is not str:
            try:
                raw = parser(raw)
            except ValueError as exc:
                raise ConfigFileError(f"{key}: cannot parse {raw!r}") from exc
        self.values[key] = raw

    def snapshot(self) -> str:
        lines = [
            f"{k} = {self.values[k]}"
            for k in sorted(DEFAULTS)
            if k not in _VOLATILE_KEYS
        ]
        return "\n".join(lines) + "\n"

    def write_snapshot(self, out_dir: str | Path) -> None:
        Path(out_dir, "resolved_config.txt").write_text(
            self.snapshot(), encoding="utf-8"
        )


def load_config_file(path: str | Path) -> RunConfig:
    cfg = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigFileError(f"line {line_no}: expected key = value")
            key, _, raw = stripped.partition("=")
            try:
                cfg.set(key.strip(), raw.strip())
            except ConfigFileError as exc:
                raise ConfigFileError(f"line {line_no}: {exc}") from exc
    return cfg


def parse_spectrum(name: str):
    """white/usasi/sensor, or a path to a freq_hz,power_db CSV table."""
    from .noisegen import (
        PSD_TABLE,
        SENSOR_PSD_POINTS,
        USASI,
        WHITE,
        SpectrumSpec,
        read_psd_table_csv,
    )

    if name == "white":
        return SpectrumSpec(WHITE)
    if name == "usasi":
        return SpectrumSpec(USASI)
    if name == "sensor":
        return SpectrumSpec(PSD_TABLE, SENSOR_PSD_POINTS)
    if name.endswith(".csv"):
        return read_psd_table_csv(name)
    raise ConfigFileError(f"unknown spectrum {name!r}")


def parse_noise_specs(raw: str):
    """Decode `name:snr:aug_id` triples; name is white/usasi/sensor or a CSV path."""
    from .noisegen import NoiseSpec

    if not raw.strip():
        return []
    specs = []
    for item in raw.split(","):
        fields = item.strip().rsplit(":", 2)
        if len(fields) != 3:
            raise ConfigFileError(
                f"noise spec {item!r}: expected name:snr_db:aug_id"
            )
        name, snr_raw, aug_raw = fields
        try:
            snr = float(snr_raw)
            aug_id = int(aug_raw)
        except ValueError as exc:
            raise ConfigFileError(f"noise spec {item!r}: {exc}") from exc
        spectrum = parse_spectrum(name)
        if name.endswith(".csv"):
            name = Path(name).stem
        specs.append(NoiseSpec(name, spectrum, snr, aug_id))
    return specs


def parse_aug_profiles(raw: str) -> list[tuple[float, float]]:
    """Decode `shift:std` pairs for the synthetic corpus generator."""
    if not raw.strip():
        return []
    profiles = []
    for item in raw.split(","):
        fields = item.strip().split(":")
        if len(fields) != 2:
            raise ConfigFileError(f"aug profile {item!r}: expected shift:std")
        try:
            profiles.append((float(fields[0]), float(fields[1])))
        except ValueError as exc:
            raise ConfigFileError(f"aug profile {item!r}: {exc}") from exc
    return profiles
