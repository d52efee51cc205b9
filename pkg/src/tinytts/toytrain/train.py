"""Training loop: Adam, global-norm clipping, bucketed or shuffled batches.

Batches are planned on frame counts with the same semantics the corpus
curation module uses for durations, re-planned each epoch with an
epoch-derived seed, so a run is a pure function of (config, corpus).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..curation import BUCKETED, RANDOM_SHUFFLE, CorpusEntry, Subset, plan_batches
from .autodiff import backward
from .data import SyntheticCorpus, ToyExample, frame_count_of
from .model import ToyModel, forward, make_batch

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainReport:
    initial_loss: float
    final_loss: float
    loss_curve: list[float]
    heldout_sharpness: dict | None
    heldout_rmse_by_aug: dict | None
    wall_clock_s: float
    seed: int


class Adam:
    def __init__(self, model: ToyModel, lr: float):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in model.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in model.params.items()}

    def step(self, model: ToyModel) -> None:
        self.t += 1
        bias1 = 1.0 - ADAM_BETA1**self.t
        bias2 = 1.0 - ADAM_BETA2**self.t
        for name, p in model.params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)


def clip_global_norm(model: ToyModel, max_norm: float) -> float:
    total = 0.0
    for p in model.params.values():
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm > 0:
        factor = max_norm / norm
        for p in model.params.values():
            if p.grad is not None:
                p.grad *= factor
    return norm


def _plan_epoch(
    examples: list[ToyExample], batch_size: int, mode: str, seed: int
) -> list[list[int]]:
    """Index batches via the curation planner, durations = frame counts."""
    entries = [
        CorpusEntry(f"{i:06d}", "", "", float(frame_count_of(e)))
        for i, e in enumerate(examples)
    ]
    subset = Subset(entries, 0.0, "toy", 0.0)
    plan = plan_batches(subset, batch_size, mode, seed)
    return [[int(i) for i in batch] for batch in plan.batches]


def mean_corpus_loss(model: ToyModel, examples: list[ToyExample]) -> float:
    """Teacher-forced loss over the whole corpus in deterministic batches."""
    cfg = model.config
    total = 0.0
    n = 0
    for start in range(0, len(examples), cfg.batch_size):
        chunk = examples[start : start + cfg.batch_size]
        res = forward(model, make_batch(chunk, cfg))
        total += float(res.loss.data) * len(chunk)
        n += len(chunk)
    return total / n


def train(
    model: ToyModel,
    corpus: SyntheticCorpus,
    batch_plan_mode: str = BUCKETED,
    heldout: list[ToyExample] | None = None,
) -> TrainReport:
    """Run config.steps Adam updates with teacher forcing throughout."""
    cfg = model.config
    if not corpus.examples:
        raise ValueError("corpus is empty")
    if batch_plan_mode not in (BUCKETED, RANDOM_SHUFFLE):
        raise ValueError(f"unknown batch plan mode {batch_plan_mode!r}")
    started = time.perf_counter()
    initial = mean_corpus_loss(model, corpus.examples)
    curve: list[float] = []
    optimizer = Adam(model, cfg.learning_rate)
    step = 0
    epoch = 0
    while step < cfg.steps:
        batches = _plan_epoch(
            corpus.examples, cfg.batch_size, batch_plan_mode, cfg.seed + epoch
        )
        epoch += 1
        for batch_idx in batches:
            if step >= cfg.steps:
                break
            batch = make_batch([corpus.examples[i] for i in batch_idx], cfg)
            model.zero_grads()
            result = forward(model, batch)
            backward(result.loss)
            clip_global_norm(model, cfg.grad_clip_norm)
            optimizer.step(model)
            curve.append(float(result.loss.data))
            step += 1
    final = mean_corpus_loss(model, corpus.examples) if cfg.steps > 0 else initial

    heldout_sharpness = None
    heldout_rmse = None
    if heldout:
        from .study import heldout_metrics  # cycle-free: study imports lazily too

        heldout_sharpness, heldout_rmse = heldout_metrics(model, corpus, heldout)
    return TrainReport(
        initial_loss=initial,
        final_loss=final,
        loss_curve=curve,
        heldout_sharpness=heldout_sharpness,
        heldout_rmse_by_aug=heldout_rmse,
        wall_clock_s=time.perf_counter() - started,
        seed=cfg.seed,
    )


def grad_check(model: ToyModel, examples: list[ToyExample], eps: float = 1e-5) -> float:
    """Max relative error of analytic vs central-finite-difference gradients."""
    batch = make_batch(examples, model.config)
    model.zero_grads()
    result = forward(model, batch)
    backward(result.loss)
    analytic = {k: np.array(p.grad) if p.grad is not None else np.zeros_like(p.data)
                for k, p in model.params.items()}

    def loss_at() -> float:
        return float(forward(model, batch).loss.data)

    worst = 0.0
    for name, p in model.params.items():
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            up = loss_at()
            flat[i] = keep - eps
            down = loss_at()
            flat[i] = keep
            numeric = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst
