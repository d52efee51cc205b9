"""Attention-alignment sharpness diagnostics and the ATTN1 file format.

The sharpness score is the mean over (valid) decoder frames of each frame's
maximum attention weight: 1.0 means a perfectly peaked alignment, 1/N means
uniform attention over the N encoder tokens.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    EmptyLabel,
    MalformedAttnFile,
    NotRowStochastic,
    NoValidFrames,
)

ROW_SUM_TOL = 1e-4


@dataclass
class AttentionMatrix:
    """T x N row-stochastic weights; frame_mask marks the valid decoder frames."""

    weights: np.ndarray
    frame_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.size == 0:
            raise MalformedAttnFile("weights must be a non-empty T x N matrix")
        _check_rows(self.weights)
        if self.frame_mask is not None:
            self.frame_mask = np.asarray(self.frame_mask, dtype=bool)
            if self.frame_mask.shape != (self.weights.shape[0],):
                raise MalformedAttnFile("frame_mask length must equal T")


def _check_rows(weights: np.ndarray) -> None:
    if np.any(weights < -1e-12) or np.any(weights > 1.0 + 1e-12):
        bad = int(np.argwhere((weights < -1e-12) | (weights > 1 + 1e-12))[0][0])
        raise NotRowStochastic(f"row {bad}: weight outside [0, 1]")
    sums = weights.sum(axis=1)
    off = np.abs(sums - 1.0) > ROW_SUM_TOL
    if off.any():
        bad = int(np.argmax(off))
        raise NotRowStochastic(f"row {bad} sums to {sums[bad]:.6f}")


def sharpness_score(a: AttentionMatrix) -> float:
    """Mean of the per-frame maximum attention weights over valid frames."""
    if a.frame_mask is not None:
        rows = a.weights[a.frame_mask]
        if rows.shape[0] == 0:
            raise NoValidFrames("frame_mask excludes every frame")
    else:
        rows = a.weights
    return float(rows.max(axis=1).mean())


def sharpness_stats(scores: list[float]) -> dict[str, float]:
    """Boxplot-ready summary; quartiles by linear interpolation (type 7)."""
    arr = np.asarray(scores, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "min": float(arr.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(arr.max()),
        "mean": float(arr.mean()),
        "n": int(arr.size),
    }


def sharpness_report(matrices_by_label: dict[str, list[AttentionMatrix]]) -> str:
    """CSV with one row of boxplot statistics per configuration label."""
    out = io.StringIO()
    out.write("label,min,q1,median,q3,max,mean,n\n")
    for label in sorted(matrices_by_label):
        mats = matrices_by_label[label]
        if not mats:
            raise EmptyLabel(f"label {label!r} has no matrices")
        s = sharpness_stats([sharpness_score(m) for m in mats])
        out.write(
            f"{label},{s['min']:.6f},{s['q1']:.6f},{s['median']:.6f},"
            f"{s['q3']:.6f},{s['max']:.6f},{s['mean']:.6f},{s['n']}\n"
        )
    return out.getvalue()


# --- ATTN1 format: header line `ATTN1 <T> <N>`, then T rows of N floats ---

def write_attention(a: AttentionMatrix, path: str | Path) -> None:
    t, n = a.weights.shape
    lines = [f"ATTN1 {t} {n}"]
    for row in a.weights:
        lines.append(" ".join(f"{w:.8g}" for w in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_attention(path: str | Path) -> AttentionMatrix:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MalformedAttnFile("empty file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "ATTN1":
        raise MalformedAttnFile(f"bad header: {lines[0]!r}")
    try:
        t, n = int(header[1]), int(header[2])
    except ValueError as exc:
        raise MalformedAttnFile(f"bad header dimensions: {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != t:
        raise MalformedAttnFile(f"header says {t} rows, file has {len(body)}")
    rows = []
    for i, line in enumerate(body):
        vals = line.split()
        if len(vals) != n:
            raise MalformedAttnFile(f"row {i}: expected {n} values, got {len(vals)}")
        try:
            rows.append([float(v) for v in vals])
        except ValueError as exc:
            raise MalformedAttnFile(f"row {i}: {exc}") from exc
    return AttentionMatrix(np.array(rows))
