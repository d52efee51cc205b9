"""Fast study-machinery tests on scaled-down parameters.

The full-size studies (the ones the acceptance criteria assert on) live in
test_acceptance.py behind the `study` marker; here we only verify plumbing:
CSV shape, summary math, determinism, ATTN1 dumps.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from tinytts.curation import BUCKETED, RANDOM_SHUFFLE
from tinytts.errors import BadRange
from tinytts.evalkit import read_attention
from tinytts.toytrain import ToyConfig, run_study
from tinytts.toytrain.study import (
    AUG_EMBEDDING,
    BATCHING,
    StudyParams,
    heldout_metrics,
    rmse_to_templates,
)

MINI_BATCHING = StudyParams(
    config=ToyConfig(
        vocab_size=5,
        feat_dim=4,
        embed_dim=5,
        enc_hidden=6,
        aug_embed_dim=0,
        dec_hidden=6,
        attn_dim=5,
        n_aug_ids=1,
        max_decode_frames=30,
        batch_size=4,
        steps=20,
    ),
    n_utts=12,
    n_heldout_utts=3,
    len_range=(2, 5),
)

MINI_AUGEMB = StudyParams(
    config=ToyConfig(
        vocab_size=5,
        feat_dim=4,
        embed_dim=5,
        enc_hidden=6,
        aug_embed_dim=3,
        dec_hidden=6,
        attn_dim=5,
        n_aug_ids=4,
        max_decode_frames=30,
        batch_size=4,
        steps=20,
    ),
    n_utts=8,
    n_heldout_utts=2,
    len_range=(2, 4),
    aug_profiles=((0.0, 0.1), (0.2, 0.05), (-0.15, 0.08)),
)


def test_batching_study_outputs(tmp_path):
    summary = run_study(BATCHING, [1, 2, 3], tmp_path, params=MINI_BATCHING)
    csv_lines = (tmp_path / "study.csv").read_text().strip().split("\n")
    assert csv_lines[0] == "study,arm,seed,metric,value"
    # 2 arms x 3 seeds x 2 metrics
    assert len(csv_lines) == 1 + 12
    for line in csv_lines[1:]:
        study, arm, seed, metric, value = line.split(",")
        assert study == BATCHING
        assert arm in (BUCKETED, RANDOM_SHUFFLE)
        assert metric in ("median_sharpness", "mean_sharpness")
        assert 0.0 < float(value) <= 1.0
    assert "bucketed_sharper" in summary
    # attention dumps readable by the evalkit loader
    attn_files = sorted(tmp_path.glob("attn/*/*.attn"))
    assert attn_files
    mat = read_attention(attn_files[0])
    assert np.allclose(mat.weights.sum(axis=1), 1.0, atol=1e-4)


def test_augemb_study_outputs(tmp_path):
    summary = run_study(AUG_EMBEDDING, [1, 2, 3], tmp_path, params=MINI_AUGEMB)
    assert set(summary["medians"]) == {"embed", "noembed"}
    assert set(summary["medians"]["embed"]) == {
        "rmse_aug0",
        "rmse_aug1",
        "rmse_aug2",
        "rmse_aug3",
    }
    assert "clean_id_beats_noisy_ids" in summary
    assert "embedding_beats_no_embedding" in summary
    payload = json.loads((tmp_path / "summary.json").read_text())
    assert payload["medians"] == summary["medians"]


def test_study_rejects_too_few_seeds(tmp_path):
    with pytest.raises(BadRange):
        run_study(BATCHING, [1, 2], tmp_path, params=MINI_BATCHING)


def test_study_rerun_byte_identical(tmp_path):
    import hashlib

    def checksum(root: Path) -> str:
        h = hashlib.sha256()
        for p in sorted(root.rglob("*")):
            if p.is_file():
                h.update(str(p.relative_to(root)).encode())
                h.update(p.read_bytes())
        return h.hexdigest()

    run_study(BATCHING, [1, 2, 3], tmp_path / "a", params=MINI_BATCHING)
    run_study(BATCHING, [1, 2, 3], tmp_path / "b", params=MINI_BATCHING)
    assert checksum(tmp_path / "a") == checksum(tmp_path / "b")


def test_heldout_metrics_and_rmse(tmp_path):
    from tinytts.toytrain import ToyModel, gen_synthetic_corpus

    corpus = gen_synthetic_corpus(5, 4, 6, (2, 4), [(0.1, 0.05)], seed=3)
    model = ToyModel(MINI_AUGEMB.config)
    clean = [e for e in corpus.examples if e.aug_id == 0][:3]
    stats, rmse = heldout_metrics(model, corpus, clean)
    assert stats is None or 0.0 < stats["median"] <= 1.0
    assert set(rmse) == {0, 1, 2, 3}
    assert all(v >= 0 for v in rmse.values())
    one = rmse_to_templates(model, corpus, clean[0].tokens, 0)
    assert one >= 0.0
