"""Corpus ingest, duration-informed subset selection, batch planning.

Informed selection sorts the corpus ascending by duration (ties broken by id)
and takes the longest prefix whose total stays inside the duration budget, so
every selected sample is at most as long as every excluded one. Bucketed
batch planning chunks the duration-sorted subset into consecutive batches and
only shuffles the batch order, keeping within-batch durations close and the
zero padding small.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import read_wav_info
from .errors import (
    EmptySelection,
    EmptySubset,
    MalformedRow,
    MeasurementError,
    MissingMetadata,
    TinyTtsError,
    UnknownId,
)

INFORMED = "informed"
RANDOM = "random"
BUCKETED = "bucketed"
RANDOM_SHUFFLE = "random_shuffle"


@dataclass
class CorpusEntry:
    id: str
    audio_path: Path
    text: str
    duration_s: float = 0.0


@dataclass
class Subset:
    entries: list[CorpusEntry]
    total_duration_s: float
    selection_mode: str
    budget_s: float
    seed: int | None = None


@dataclass
class BatchPlan:
    batches: list[list[str]]
    batch_size: int
    mode: str
    seed: int


@dataclass
class PaddingReport:
    per_batch: list[tuple[float, float]]  # (duration range, padding ratio)
    mean_padding_ratio: float


def load_ljspeech_manifest(root_dir: str | Path) -> list[CorpusEntry]:
    """Parse LJSpeech metadata.csv; the normalized-text column is authoritative."""
    root = Path(root_dir)
    meta = root / "metadata.csv"
    if not meta.exists():
        raise MissingMetadata(f"no metadata.csv under {root}")
    entries = []
    with open(meta, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("|")
            if len(fields) != 3:
                raise MalformedRow(
                    f"line {line_no}: expected 3 pipe-separated fields, got {len(fields)}"
                )
            utt_id, _raw, normalized = fields
            entries.append(
                CorpusEntry(utt_id, root / "wavs" / f"{utt_id}.wav", normalized)
            )
    return entries


def measure_durations(
    entries: list[CorpusEntry], audio_root: str | Path | None = None
) -> list[CorpusEntry]:
    """Fill duration_s from WAV headers; failures are collected, not skipped."""
    failures = []
    for entry in entries:
        path = entry.audio_path
        if audio_root is not None and not Path(path).is_absolute():
            path = Path(audio_root) / path
        try:
            n, rate = read_wav_info(path)
            entry.duration_s = n / rate
        except (TinyTtsError, OSError) as exc:
            failures.append(f"{entry.id}: {exc}")
    if failures:
        raise MeasurementError(
            f"{len(failures)} file(s) unreadable: " + "; ".join(failures[:20])
        )
    return entries


def _sorted_by_duration(entries: list[CorpusEntry]) -> list[CorpusEntry]:
    return sorted(entries, key=lambda e: (e.duration_s, e.id))


def select_informed_subset(entries: list[CorpusEntry], budget_s: float) -> Subset:
    """Shortest-first prefix within the duration budget."""
    ordered = _sorted_by_duration(entries)
    picked: list[CorpusEntry] = []
    total = 0.0
    for entry in ordered:
        if total + entry.duration_s > budget_s:
            break
        picked.append(entry)
        total += entry.duration_s
    if not picked:
        raise EmptySelection(f"budget {budget_s} s below the shortest sample")
    return Subset(picked, total, INFORMED, budget_s)


def select_random_subset(
    entries: list[CorpusEntry], budget_s: float, seed: int
) -> Subset:
    """Uniform shuffle by seed, then the prefix that stays within budget."""
    gen = np.random.Generator(np.random.Philox(key=seed))
    order = gen.permutation(len(entries))
    picked: list[CorpusEntry] = []
    total = 0.0
    for idx in order:
        entry = entries[int(idx)]
        if total + entry.duration_s > budget_s:
            break
        picked.append(entry)
        total += entry.duration_s
    if not picked:
        raise EmptySelection(f"budget {budget_s} s below the first drawn sample")
    return Subset(picked, total, RANDOM, budget_s, seed)


def plan_batches(subset: Subset, batch_size: int, mode: str, seed: int) -> BatchPlan:
    """Chunk the subset into batches, bucketed by duration or fully shuffled."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    gen = np.random.Generator(np.random.Philox(key=seed))
    if mode == BUCKETED:
        ordered = _sorted_by_duration(subset.entries)
        batches = [
            [e.id for e in ordered[i : i + batch_size]]
            for i in range(0, len(ordered), batch_size)
        ]
        batches = [batches[int(i)] for i in gen.permutation(len(batches))]
        # keep the one ragged batch (if any) at the end
        batches.sort(key=lambda b: len(b) < batch_size)
    elif mode == RANDOM_SHUFFLE:
        order = gen.permutation(len(subset.entries))
        shuffled = [subset.entries[int(i)].id for i in order]
        batches = [
            shuffled[i : i + batch_size] for i in range(0, len(shuffled), batch_size)
        ]
    else:
        raise ValueError(f"unknown batch mode {mode!r}")
    return BatchPlan(batches, batch_size, mode, seed)


def padding_stats(plan: BatchPlan, entries: list[CorpusEntry]) -> PaddingReport:
    """Per-batch zero-padding ratio once every item is padded to the batch max."""
    durations = {e.id: e.duration_s for e in entries}
    per_batch = []
    for batch in plan.batches:
        try:
            d = [durations[i] for i in batch]
        except KeyError as exc:
            raise UnknownId(f"batch references unknown id {exc.args[0]!r}") from exc
        ratio = 1.0 - sum(d) / (len(d) * max(d)) if max(d) > 0 else 0.0
        per_batch.append((max(d) - min(d), ratio))
    mean = sum(r for _, r in per_batch) / len(per_batch) if per_batch else 0.0
    return PaddingReport(per_batch, mean)


def symbol_histogram(
    subset: Subset,
    full_entries: list[CorpusEntry] | None = None,
    lexicon: dict[str, list[str]] | None = None,
) -> dict:
    """Case-folded symbol counts plus coverage of the full-corpus inventory.

    Character-level by default; with a lexicon, phoneme-level (words missing
    from the lexicon are tallied under '<oov>').
    """
    if not subset.entries:
        raise EmptySubset("no entries to count")

    def symbols_of(text: str):
        if lexicon is None:
            return [ch for ch in text.casefold() if not ch.isspace()]
        out = []
        for word in text.casefold().split():
            out.extend(lexicon.get(word, ["<oov>"]))
        return out

    counts: dict[str, int] = {}
    for entry in subset.entries:
        for sym in symbols_of(entry.text):
            counts[sym] = counts.get(sym, 0) + 1
    total = sum(counts.values())
    histogram = {s: (c, c / total) for s, c in sorted(counts.items())}

    reference = full_entries if full_entries is not None else subset.entries
    inventory = set()
    for entry in reference:
        inventory.update(symbols_of(entry.text))
    coverage = len(set(counts) & inventory) / len(inventory) if inventory else 1.0
    return {"symbols": histogram, "coverage": coverage}


# --- manifest serialization: JSON-lines entries plus a sidecar summary ---

def write_subset_manifest(subset: Subset, manifest_path: str | Path) -> None:
    path = Path(manifest_path)
    base = path.resolve().parent
    with open(path, "w", encoding="utf-8") as fh:
        for e in subset.entries:
            audio = Path(e.audio_path).resolve()
            fh.write(
                json.dumps(
                    {
                        "id": e.id,
                        "audio": audio.relative_to(base).as_posix()
                        if audio.is_relative_to(base)
                        else str(audio),
                        "text": e.text,
                        "duration_s": e.duration_s,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    summary = {
        "mode": subset.selection_mode,
        "budget_s": subset.budget_s,
        "seed": subset.seed,
        "total_s": subset.total_duration_s,
        "n": len(subset.entries),
    }
    path.with_suffix(path.suffix + ".summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )


def read_subset_manifest(manifest_path: str | Path) -> Subset:
    path = Path(manifest_path)
    base = path.resolve().parent
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            audio = Path(row["audio"])
            if not audio.is_absolute():
                audio = base / audio
            entries.append(
                CorpusEntry(row["id"], audio, row["text"], row["duration_s"])
            )
    summary_path = path.with_suffix(path.suffix + ".summary.json")
    if summary_path.exists():
        s = json.loads(summary_path.read_text(encoding="utf-8"))
        return Subset(entries, s["total_s"], s["mode"], s["budget_s"], s["seed"])
    total = sum(e.duration_s for e in entries)
    return Subset(entries, total, INFORMED, total)
