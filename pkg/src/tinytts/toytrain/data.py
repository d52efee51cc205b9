"""Synthetic text/feature corpus for the toy trainer.

Each symbol owns a fixed feature template and an emission count of 2-4
frames; an utterance's target is the concatenation of its symbols' repeated
templates. Augmented copies perturb the frames with a per-profile mean shift
plus Gaussian noise, mirroring a stationary acoustic corruption, and carry
the matching augmentation id. Clean copies (aug id 0) are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BadRange

MIN_EMIT = 2
MAX_EMIT = 4
MAX_LEN = 64


@dataclass
class ToyExample:
    tokens: list[int]  # values in [1, K]; 0 is reserved for padding
    aug_id: int
    target_frames: np.ndarray  # (T, M)
    gate_targets: np.ndarray  # (T,) bool, True only at the final frame


@dataclass
class SyntheticCorpus:
    examples: list[ToyExample]
    templates: np.ndarray  # (K+1, M); row 0 unused
    emission_counts: np.ndarray  # (K+1,); row 0 unused
    aug_profiles: list[tuple[float, float]]
    seed: int

    def clean_frames_for(self, tokens: list[int]) -> np.ndarray:
        """Ground-truth frames for a token sequence (the clean templates)."""
        rows = [
            np.repeat(
                self.templates[tok][None, :], self.emission_counts[tok], axis=0
            )
            for tok in tokens
        ]
        return np.concatenate(rows, axis=0)


def gen_synthetic_corpus(
    vocab_size: int,
    feat_dim: int,
    n_utts: int,
    len_range: tuple[int, int],
    aug_profiles: list[tuple[float, float]],
    seed: int,
) -> SyntheticCorpus:
    """Token sequences with template-concatenation targets plus noisy copies."""
    lo, hi = len_range
    if not (1 <= lo <= hi <= MAX_LEN):
        raise BadRange(f"len_range {len_range} outside [1, {MAX_LEN}]")
    if vocab_size < 2:
        raise BadRange("need vocab_size >= 2")
    gen = np.random.Generator(np.random.Philox(key=seed))
    templates = gen.uniform(-1.0, 1.0, size=(vocab_size + 1, feat_dim))
    templates[0] = 0.0
    counts = gen.integers(MIN_EMIT, MAX_EMIT + 1, size=vocab_size + 1)
    counts[0] = 0

    corpus = SyntheticCorpus([], templates, counts, list(aug_profiles), seed)
    for _ in range(n_utts):
        length = int(gen.integers(lo, hi + 1))
        tokens = [int(t) for t in gen.integers(1, vocab_size + 1, size=length)]
        clean = corpus.clean_frames_for(tokens)
        t = clean.shape[0]
        gates = np.zeros(t, dtype=bool)
        gates[-1] = True
        corpus.examples.append(ToyExample(tokens, 0, clean, gates))
        for aug_id, (shift, std) in enumerate(aug_profiles, start=1):
            noisy = clean + shift + std * gen.standard_normal(clean.shape)
            corpus.examples.append(ToyExample(tokens, aug_id, noisy, gates.copy()))
    return corpus


def frame_count_of(example: ToyExample) -> int:
    return example.target_frames.shape[0]


def save_corpus(corpus: SyntheticCorpus, path: str | Path) -> None:
    """JSON-lines: one header object, then one object per example."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "templates": corpus.templates.tolist(),
            "emission_counts": corpus.emission_counts.tolist(),
            "aug_profiles": corpus.aug_profiles,
            "seed": corpus.seed,
        }
        fh.write(json.dumps(header) + "\n")
        for e in corpus.examples:
            fh.write(
                json.dumps(
                    {
                        "tokens": e.tokens,
                        "aug_id": e.aug_id,
                        "frames": e.target_frames.tolist(),
                        "gates": e.gate_targets.astype(int).tolist(),
                    }
                )
                + "\n"
            )


def load_corpus(path: str | Path) -> SyntheticCorpus:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        corpus = SyntheticCorpus(
            [],
            np.asarray(header["templates"]),
            np.asarray(header["emission_counts"]),
            [tuple(p) for p in header["aug_profiles"]],
            header["seed"],
        )
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            corpus.examples.append(
                ToyExample(
                    row["tokens"],
                    row["aug_id"],
                    np.asarray(row["frames"]),
                    np.asarray(row["gates"], dtype=bool),
                )
            )
    return corpus
