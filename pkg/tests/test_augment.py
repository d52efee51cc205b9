import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from tinytts.audio import write_wav
from tinytts.augment import (
    build_augmented_dataset,
    derive_seed,
    read_aug_manifest,
    verify_augmented_dataset,
)
from tinytts.curation import INFORMED, CorpusEntry, Subset
from tinytts.errors import BuildError, ConfigError, MissingFile
from tinytts.noisegen import WHITE, NoiseSpec, SpectrumSpec, default_noise_specs

from conftest import speech_like


def make_speech_subset(root: Path, n: int, duration_s: float = 1.2) -> Subset:
    (root / "clean").mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n):
        clip = speech_like(100 + i, duration_s=duration_s)
        path = root / "clean" / f"utt{i:03d}.wav"
        write_wav(clip, path)
        entries.append(
            CorpusEntry(f"utt{i:03d}", path, f"text {i}", clip.duration_s)
        )
    total = sum(e.duration_s for e in entries)
    return Subset(entries, total, INFORMED, total)


def tree_checksum(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


def test_cardinality_and_aug_id_partition(tmp_path):
    subset = make_speech_subset(tmp_path, 4)
    manifest = build_augmented_dataset(subset, default_noise_specs(), tmp_path / "out", 7)
    assert len(manifest) == 4 * 4
    by_aug = {}
    for m in manifest:
        by_aug.setdefault(m.aug_id, []).append(m.source_id)
    assert set(by_aug) == {0, 1, 2, 3}
    sources = sorted(e.id for e in subset.entries)
    for aug_id, ids in by_aug.items():
        assert sorted(ids) == sources
    # files on disk match the manifest
    for m in manifest:
        assert Path(m.audio_path).exists()


def test_clean_copies_identical_and_labeled(tmp_path):
    subset = make_speech_subset(tmp_path, 2)
    manifest = build_augmented_dataset(subset, [], tmp_path / "out", 3)
    assert len(manifest) == 2
    for m in manifest:
        assert m.aug_id == 0
        assert m.noise_name == "clean"
        assert m.snr_db is None
        src = dict((e.id, e.audio_path) for e in subset.entries)[m.source_id]
        assert Path(m.audio_path).read_bytes() == Path(src).read_bytes()


def test_duplicate_aug_id_rejected_before_writing(tmp_path):
    subset = make_speech_subset(tmp_path, 1)
    specs = [
        NoiseSpec("a", SpectrumSpec(WHITE), 20.0, 1),
        NoiseSpec("b", SpectrumSpec(WHITE), 10.0, 1),
    ]
    with pytest.raises(ConfigError):
        build_augmented_dataset(subset, specs, tmp_path / "out", 0)
    assert not (tmp_path / "out" / "wavs").exists()


def test_rebuild_is_byte_identical(tmp_path):
    subset = make_speech_subset(tmp_path, 3)
    specs = default_noise_specs()
    build_augmented_dataset(subset, specs, tmp_path / "a", 42)
    build_augmented_dataset(subset, specs, tmp_path / "b", 42)
    assert tree_checksum(tmp_path / "a") == tree_checksum(tmp_path / "b")
    # a different master seed must change the noise bytes
    build_augmented_dataset(subset, specs, tmp_path / "c", 43)
    assert tree_checksum(tmp_path / "a") != tree_checksum(tmp_path / "c")


def test_parallel_build_matches_serial(tmp_path):
    subset = make_speech_subset(tmp_path, 3)
    specs = default_noise_specs()
    build_augmented_dataset(subset, specs, tmp_path / "serial", 9, jobs=1)
    build_augmented_dataset(subset, specs, tmp_path / "par", 9, jobs=3)
    assert tree_checksum(tmp_path / "serial") == tree_checksum(tmp_path / "par")


def test_derive_seed_stability():
    # frozen values: changing the hash recipe would orphan existing datasets
    assert derive_seed(0, "utt000", 1) == derive_seed(0, "utt000", 1)
    assert derive_seed(0, "utt000", 1) != derive_seed(0, "utt000", 2)
    assert derive_seed(0, "utt000", 1) != derive_seed(1, "utt000", 1)
    assert derive_seed(0, "a", 258) != derive_seed(0, "a\x01", 2)


def test_silent_source_collected_as_failure(tmp_path):
    subset = make_speech_subset(tmp_path, 2)
    silent = tmp_path / "clean" / "silent.wav"
    from tinytts.audio import AudioClip

    write_wav(AudioClip(np.zeros(22050), 22050), silent)
    subset.entries.append(CorpusEntry("silent", silent, "quiet", 1.0))
    with pytest.raises(BuildError, match="silent"):
        build_augmented_dataset(subset, default_noise_specs(), tmp_path / "out", 1)


def test_verify_fresh_dataset(tmp_path):
    subset = make_speech_subset(tmp_path, 3)
    manifest = build_augmented_dataset(subset, default_noise_specs(), tmp_path / "out", 5)
    report = verify_augmented_dataset(manifest)
    assert report.n_noisy == 9
    assert report.n_clean == 3
    assert report.max_deviation_db <= 0.5
    assert report.n_exceeding_half_db == 0
    parallel = verify_augmented_dataset(manifest, jobs=2)
    assert parallel == report


def test_verify_flags_edited_snr(tmp_path):
    subset = make_speech_subset(tmp_path, 2)
    manifest = build_augmented_dataset(subset, default_noise_specs(), tmp_path / "out", 5)
    victim = next(m for m in manifest if m.aug_id == 1)
    victim.snr_db += 3.0
    report = verify_augmented_dataset(manifest)
    assert victim.id in report.flagged_ids
    assert report.n_exceeding_half_db == 1


def test_verify_missing_file(tmp_path):
    subset = make_speech_subset(tmp_path, 1)
    manifest = build_augmented_dataset(subset, default_noise_specs(), tmp_path / "out", 5)
    Path(manifest[1].audio_path).unlink()
    with pytest.raises(MissingFile, match=manifest[1].id):
        verify_augmented_dataset(manifest)


def test_manifest_round_trip(tmp_path):
    subset = make_speech_subset(tmp_path, 2)
    manifest = build_augmented_dataset(subset, default_noise_specs(), tmp_path / "out", 5)
    back = read_aug_manifest(tmp_path / "out" / "manifest.jsonl")
    assert back == manifest
    summary = json.loads((tmp_path / "out" / "build_summary.json").read_text())
    assert summary["n_outputs"] == len(manifest)
    assert [s["aug_id"] for s in summary["specs"]] == [1, 2, 3]
