"""Noise-augmented training-set builder.

Each clean utterance yields one copy per noise spec plus the clean original,
every copy tagged with its augmentation id (0 = clean, used at inference).
Per-file seeds are a keyed BLAKE2b hash of (master_seed, source_id, aug_id),
so serial and parallel builds produce byte-identical trees.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, active_speech_level_p56, read_wav, write_wav
from .curation import Subset
from .errors import BuildError, ConfigError, MissingFile, TinyTtsError
from .noisegen import NoiseSpec, mix_at_snr

CLEAN_NAME = "clean"
CLEAN_AUG_ID = 0


@dataclass
class AugManifestEntry:
    id: str
    source_id: str
    audio_path: str
    text: str
    duration_s: float
    aug_id: int
    noise_name: str
    snr_db: float | None
    mixture_gain: float
    seed: int


def derive_seed(master_seed: int, source_id: str, aug_id: int) -> int:
    """Stable 64-bit per-(utterance, spec) seed, independent of build order."""
    h = hashlib.blake2b(digest_size=8)
    h.update(master_seed.to_bytes(8, "little", signed=False))
    h.update(source_id.encode("utf-8"))
    h.update(b"\x00")
    h.update(aug_id.to_bytes(4, "little", signed=False))
    return int.from_bytes(h.digest(), "little")


def _check_specs(specs: list[NoiseSpec]) -> None:
    ids = [s.aug_id for s in specs]
    if any(i < 1 for i in ids):
        raise ConfigError("noise specs must use aug_id >= 1 (0 is clean)")
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate aug_ids in {ids}")


def _render_one(task) -> tuple[np.ndarray, int, float]:
    """Render one output: (samples, sample_rate, mixture_gain)."""
    audio_path, spec, seed = task
    clip = read_wav(audio_path)
    if spec is None:
        return clip.samples, clip.sample_rate_hz, 1.0
    res = mix_at_snr(clip, spec.spectrum, spec.snr_db, seed)
    return res.clip.samples, res.clip.sample_rate_hz, res.mixture_gain


def build_augmented_dataset(
    subset: Subset,
    specs: list[NoiseSpec],
    out_dir: str | Path,
    master_seed: int,
    jobs: int = 1,
) -> list[AugManifestEntry]:
    """Write |subset| * (len(specs) + 1) WAVs plus a JSON-lines manifest."""
    _check_specs(specs)
    out = Path(out_dir)
    wav_dir = out / "wavs"
    wav_dir.mkdir(parents=True, exist_ok=True)

    spec_by_id: dict[int, NoiseSpec | None] = {s.aug_id: s for s in specs}
    spec_by_id[CLEAN_AUG_ID] = None
    keys = [
        (entry, aug_id)
        for entry in subset.entries
        for aug_id in [CLEAN_AUG_ID] + [s.aug_id for s in specs]
    ]

    def task_of(entry, aug_id):
        return (
            str(entry.audio_path),
            spec_by_id[aug_id],
            derive_seed(master_seed, entry.id, aug_id),
        )

    rendered: dict[tuple[str, int], tuple[np.ndarray, int, float]] = {}
    failures: list[str] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                (entry.id, aug_id): pool.submit(_render_one, task_of(entry, aug_id))
                for entry, aug_id in keys
            }
            for (sid, aug_id), fut in futures.items():
                try:
                    rendered[(sid, aug_id)] = fut.result()
                except TinyTtsError as exc:
                    failures.append(f"{sid}/aug{aug_id}: {exc}")
    else:
        for entry, aug_id in keys:
            try:
                rendered[(entry.id, aug_id)] = _render_one(task_of(entry, aug_id))
            except TinyTtsError as exc:
                failures.append(f"{entry.id}/aug{aug_id}: {exc}")
    if failures:
        raise BuildError(
            f"{len(failures)} render failure(s): " + "; ".join(failures[:20])
        )

    manifest: list[AugManifestEntry] = []
    for entry, aug_id in keys:
        samples, rate, mixture_gain = rendered[(entry.id, aug_id)]
        out_id = f"{entry.id}__aug{aug_id}"
        wav_path = wav_dir / f"{out_id}.wav"
        write_wav(AudioClip(samples, rate), wav_path)
        spec = spec_by_id[aug_id]
        manifest.append(
            AugManifestEntry(
                id=out_id,
                source_id=entry.id,
                audio_path=str(wav_path),
                text=entry.text,
                duration_s=entry.duration_s,
                aug_id=aug_id,
                noise_name=spec.name if spec else CLEAN_NAME,
                snr_db=spec.snr_db if spec else None,
                mixture_gain=mixture_gain,
                seed=derive_seed(master_seed, entry.id, aug_id),
            )
        )
    write_aug_manifest(manifest, out / "manifest.jsonl")
    summary = {
        "master_seed": master_seed,
        "n_sources": len(subset.entries),
        "n_outputs": len(manifest),
        "specs": [
            {
                "name": s.name,
                "kind": s.spectrum.kind,
                "snr_db": s.snr_db,
                "aug_id": s.aug_id,
            }
            for s in specs
        ],
    }
    (out / "build_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def write_aug_manifest(manifest: list[AugManifestEntry], path: str | Path) -> None:
    """Audio paths under the manifest's directory are stored relative, so a
    rebuilt dataset is byte-identical regardless of where it lives."""
    base = Path(path).resolve().parent
    with open(path, "w", encoding="utf-8") as fh:
        for m in manifest:
            row = asdict(m)
            audio = Path(row["audio_path"]).resolve()
            if audio.is_relative_to(base):
                row["audio_path"] = audio.relative_to(base).as_posix()
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_aug_manifest(path: str | Path) -> list[AugManifestEntry]:
    base = Path(path).resolve().parent
    manifest = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if not Path(row["audio_path"]).is_absolute():
                row["audio_path"] = str(base / row["audio_path"])
            manifest.append(AugManifestEntry(**row))
    return manifest


@dataclass
class VerifyReport:
    n_noisy: int
    n_clean: int
    max_deviation_db: float
    n_exceeding_half_db: int
    flagged_ids: list[str]


def _verify_one(args) -> float:
    """Deviation in dB between the achieved active-speech SNR and the target."""
    noisy_path, clean_path, mixture_gain, snr_db = args
    noisy = read_wav(noisy_path)
    clean = read_wav(clean_path)
    scaled_clean = clean.samples * mixture_gain
    noise = noisy.samples - scaled_clean
    active_db = active_speech_level_p56(
        AudioClip(scaled_clean, clean.sample_rate_hz)
    ).active_level_db
    achieved = active_db - 10.0 * np.log10(np.mean(noise**2))
    return abs(achieved - snr_db)


def verify_augmented_dataset(
    manifest: list[AugManifestEntry], tolerance_db: float = 0.5, jobs: int = 1
) -> VerifyReport:
    """Re-measure the achieved active-speech SNR of every noisy file."""
    clean_paths = {
        m.source_id: m.audio_path for m in manifest if m.aug_id == CLEAN_AUG_ID
    }
    n_clean = sum(1 for m in manifest if m.aug_id == CLEAN_AUG_ID)
    noisy = [m for m in manifest if m.aug_id != CLEAN_AUG_ID]
    tasks = []
    for m in noisy:
        if not Path(m.audio_path).exists():
            raise MissingFile(f"{m.id}: {m.audio_path}")
        clean_path = clean_paths.get(m.source_id)
        if clean_path is None or not Path(clean_path).exists():
            raise MissingFile(f"{m.id}: clean source for {m.source_id}")
        tasks.append((m.audio_path, clean_path, m.mixture_gain, m.snr_db))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            deviations = list(pool.map(_verify_one, tasks, chunksize=4))
    else:
        deviations = [_verify_one(t) for t in tasks]
    flagged = [m.id for m, dev in zip(noisy, deviations) if dev > tolerance_db]
    max_dev = max(deviations, default=0.0)
    return VerifyReport(len(noisy), n_clean, max_dev, len(flagged), flagged)
