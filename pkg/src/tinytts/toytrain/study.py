"""Controlled toy studies: batching policy and augmentation embeddings.

Batching study: same model/init/corpus, one arm trained with duration-bucketed
batches, the other with fully shuffled batches; compares held-out alignment
sharpness. AugEmbedding study: a mixed clean+noisy corpus trained with and
without the augmentation embedding table; compares held-out reconstruction
against the clean templates, per inference augmentation id.

Every run is a pure function of (study parameters, seed); parallel execution
only distributes (arm, seed) pairs and writes results in a canonical order,
so output bytes never depend on scheduling.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..curation import BUCKETED, RANDOM_SHUFFLE
from ..errors import BadRange
from ..evalkit import AttentionMatrix, sharpness_score, sharpness_stats, write_attention
from .data import SyntheticCorpus, ToyExample, gen_synthetic_corpus
from .model import ToyConfig, ToyModel, infer
from .train import train

BATCHING = "batching"
AUG_EMBEDDING = "augembedding"

DEFAULT_AUG_PROFILES = ((0.0, 0.1), (0.2, 0.05), (-0.15, 0.08))


@dataclass(frozen=True)
class StudyParams:
    """Corpus geometry and model configuration for one study."""

    config: ToyConfig
    n_utts: int
    n_heldout_utts: int
    len_range: tuple[int, int]
    aug_profiles: tuple[tuple[float, float], ...] = ()

    @property
    def copies_per_utt(self) -> int:
        return len(self.aug_profiles) + 1


BATCHING_PARAMS = StudyParams(
    config=ToyConfig(
        vocab_size=12,
        feat_dim=10,
        embed_dim=12,
        enc_hidden=24,
        aug_embed_dim=0,
        dec_hidden=24,
        attn_dim=12,
        n_aug_ids=1,
        max_decode_frames=150,
        learning_rate=3e-3,
        batch_size=16,
        steps=800,
    ),
    n_utts=120,
    n_heldout_utts=24,
    len_range=(3, 40),
)

AUGEMB_PARAMS = StudyParams(
    config=ToyConfig(
        vocab_size=10,
        feat_dim=12,
        embed_dim=12,
        enc_hidden=24,
        aug_embed_dim=4,
        dec_hidden=24,
        attn_dim=12,
        n_aug_ids=4,
        max_decode_frames=40,
        gate_loss_weight=2.0,
        learning_rate=3e-3,
        batch_size=16,
        steps=2500,
    ),
    n_utts=72,
    n_heldout_utts=16,
    len_range=(3, 6),
    aug_profiles=DEFAULT_AUG_PROFILES,
)


def rmse_to_templates(
    model: ToyModel, corpus: SyntheticCorpus, tokens: list[int], aug_id: int
) -> float:
    """Inference RMSE against the clean template frames (overlapping prefix)."""
    frames, _gates, _attn = infer(model, tokens, aug_id)
    truth = corpus.clean_frames_for(tokens)
    t = min(frames.shape[0], truth.shape[0])
    if t == 0:
        return float(np.sqrt(np.mean(truth**2)))
    return float(np.sqrt(np.mean((frames[:t] - truth[:t]) ** 2)))


def heldout_metrics(
    model: ToyModel, corpus: SyntheticCorpus, heldout: list[ToyExample]
):
    """(sharpness stats over clean-ID inference, RMSE-to-template per aug id)."""
    scores = []
    rmse_by_aug: dict[int, list[float]] = {
        a: [] for a in range(model.config.n_aug_ids)
    }
    for example in heldout:
        frames, _gates, attn = infer(model, example.tokens, 0)
        if frames.shape[0] > 0:
            scores.append(sharpness_score(AttentionMatrix(attn)))
        for aug_id in range(model.config.n_aug_ids):
            rmse_by_aug[aug_id].append(
                rmse_to_templates(model, corpus, example.tokens, aug_id)
            )
    stats = sharpness_stats(scores) if scores else None
    return stats, {a: float(np.median(v)) for a, v in rmse_by_aug.items()}


def _split(corpus: SyntheticCorpus, n_heldout_utts: int, copies_per_utt: int):
    """Withhold the last utterances (all their copies) from training."""
    cut = len(corpus.examples) - n_heldout_utts * copies_per_utt
    train_part = SyntheticCorpus(
        corpus.examples[:cut],
        corpus.templates,
        corpus.emission_counts,
        corpus.aug_profiles,
        corpus.seed,
    )
    heldout_clean = [e for e in corpus.examples[cut:] if e.aug_id == 0]
    return train_part, heldout_clean


def _make_corpus(params: StudyParams, seed: int, salt: int) -> SyntheticCorpus:
    return gen_synthetic_corpus(
        params.config.vocab_size,
        params.config.feat_dim,
        params.n_utts,
        params.len_range,
        list(params.aug_profiles),
        seed=seed * 1000 + salt,
    )


def _run_batching_arm(args):
    seed, mode, params = args
    corpus = _make_corpus(params, seed, salt=17)
    train_part, heldout = _split(corpus, params.n_heldout_utts, params.copies_per_utt)
    model = ToyModel(replace(params.config, seed=seed))
    train(model, train_part, batch_plan_mode=mode)
    scores = []
    attn_mats = []
    for example in heldout:
        frames, _gates, attn = infer(model, example.tokens, 0)
        if frames.shape[0] == 0:
            continue
        scores.append(sharpness_score(AttentionMatrix(attn)))
        attn_mats.append(attn)
    return {
        "median_sharpness": float(np.median(scores)),
        "mean_sharpness": float(np.mean(scores)),
    }, attn_mats


def _run_augemb_arm(args):
    seed, arm, params = args
    corpus = _make_corpus(params, seed, salt=29)
    train_part, heldout = _split(corpus, params.n_heldout_utts, params.copies_per_utt)
    cfg = replace(
        params.config,
        seed=seed,
        aug_embed_dim=params.config.aug_embed_dim if arm == "embed" else 0,
    )
    model = ToyModel(cfg)
    train(model, train_part, batch_plan_mode=BUCKETED)
    rmse = {
        aug_id: float(
            np.median(
                [rmse_to_templates(model, corpus, e.tokens, aug_id) for e in heldout]
            )
        )
        for aug_id in range(cfg.n_aug_ids)
    }
    return {f"rmse_aug{a}": v for a, v in rmse.items()}, []


def run_study(
    study: str,
    seeds: list[int],
    out_dir: str | Path,
    jobs: int = 1,
    params: StudyParams | None = None,
) -> dict:
    """Execute one study over the seeds; writes CSV (+ ATTN1 dumps) to out_dir."""
    if len(seeds) < 3:
        raise BadRange("need at least 3 seeds")
    if study == BATCHING:
        arms = [BUCKETED, RANDOM_SHUFFLE]
        runner = _run_batching_arm
        params = params or BATCHING_PARAMS
    elif study == AUG_EMBEDDING:
        arms = ["embed", "noembed"]
        runner = _run_augemb_arm
        params = params or AUGEMB_PARAMS
    else:
        raise ValueError(f"unknown study {study!r}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(seed, arm, params) for arm in arms for seed in seeds]
    outcomes = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (seed, arm, _), result in zip(tasks, pool.map(runner, tasks)):
                outcomes[(seed, arm)] = result
    else:
        for task in tasks:
            outcomes[(task[0], task[1])] = runner(task)

    rows = []
    for arm in arms:
        for seed in seeds:
            metrics, attn_mats = outcomes[(seed, arm)]
            for metric in sorted(metrics):
                rows.append((study, arm, seed, metric, metrics[metric]))
            for i, attn in enumerate(attn_mats):
                attn_dir = out / "attn" / f"{arm}_seed{seed}"
                attn_dir.mkdir(parents=True, exist_ok=True)
                write_attention(AttentionMatrix(attn), attn_dir / f"{i:03d}.attn")

    csv_lines = ["study,arm,seed,metric,value"]
    csv_lines += [f"{s},{a},{sd},{m},{v:.8g}" for s, a, sd, m, v in rows]
    (out / "study.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")

    summary = _summarize(study, arms, seeds, outcomes)
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary


def _summarize(study, arms, seeds, outcomes) -> dict:
    summary: dict = {"study": study, "seeds": list(seeds), "medians": {}}
    for arm in arms:
        per_metric: dict[str, list[float]] = {}
        for seed in seeds:
            metrics, _ = outcomes[(seed, arm)]
            for name, value in metrics.items():
                per_metric.setdefault(name, []).append(value)
        summary["medians"][arm] = {
            name: float(np.median(vals)) for name, vals in per_metric.items()
        }
    if study == BATCHING:
        b = summary["medians"][BUCKETED]["median_sharpness"]
        r = summary["medians"][RANDOM_SHUFFLE]["median_sharpness"]
        summary["bucketed_sharper"] = bool(b > r)
    else:
        embed = summary["medians"]["embed"]
        noisy_keys = sorted(k for k in embed if k != "rmse_aug0")
        clean = embed["rmse_aug0"]
        summary["clean_id_beats_noisy_ids"] = bool(
            all(clean < embed[k] for k in noisy_keys)
        )
        summary["embedding_beats_no_embedding"] = bool(
            clean < summary["medians"]["noembed"]["rmse_aug0"]
        )
    return summary
