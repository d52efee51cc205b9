"""Word error rate with a full substitution/deletion/insertion breakdown.

Alignment is minimal-edit dynamic programming with unit costs; on ties a
substitution is preferred over an insertion+deletion pair. Corpus-level WER
pools error and reference-word counts over all pairs (not a mean of
per-sentence rates), so values above 100% are possible and meaningful.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from ..errors import EmptyReference


@dataclass(frozen=True)
class WERBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    n_ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer_percent(self) -> float:
        return 100.0 * self.errors / self.n_ref_words


def normalize_text(s: str) -> list[str]:
    """Casefold, strip punctuation except intra-word apostrophes, split.

    The typographic apostrophe U+2019 is treated as '. Anything that is not
    a letter, digit, or kept apostrophe becomes whitespace.
    """
    folded = s.casefold().replace("’", "'")
    chars = []
    for i, ch in enumerate(folded):
        if ch.isalnum():
            chars.append(ch)
        elif ch == "'" and 0 < i < len(folded) - 1:
            prev_ok = folded[i - 1].isalnum()
            next_ok = folded[i + 1].isalnum()
            chars.append("'" if prev_ok and next_ok else " ")
        else:
            chars.append(" ")
    return "".join(chars).split()


def wer(ref: list[str], hyp: list[str]) -> WERBreakdown:
    """Minimal-edit S/D/I counts between reference and hypothesis words."""
    if not ref:
        raise EmptyReference("reference has no words")
    n, m = len(ref), len(hyp)
    # cost[i][j] = edits aligning ref[:i] with hyp[:j]
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    for j in range(1, m + 1):
        cost[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        for j in range(1, m + 1):
            sub = cost[i - 1][j - 1] + (ri != hyp[j - 1])
            dele = cost[i - 1][j] + 1
            ins = cost[i][j - 1] + 1
            cost[i][j] = min(sub, dele, ins)
    # backtrace, preferring the diagonal on ties (substitution over D+I)
    s = d = ins_count = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i][j] == cost[i - 1][j - 1] + (
            ref[i - 1] != hyp[j - 1]
        ):
            s += ref[i - 1] != hyp[j - 1]
            i -= 1
            j -= 1
        elif i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            d += 1
            i -= 1
        else:
            ins_count += 1
            j -= 1
    return WERBreakdown(s, d, ins_count, n)


@dataclass(frozen=True)
class SusAggregate:
    pooled_wer_percent: float
    total_errors: int
    total_ref_words: int
    per_sentence: tuple[WERBreakdown, ...]


def sus_report(pairs: list[tuple[str, str]]) -> SusAggregate:
    """Pooled corpus WER over (reference text, hypothesis text) pairs."""
    if not pairs:
        raise EmptyReference("no sentence pairs")
    breakdowns = []
    for idx, (ref_text, hyp_text) in enumerate(pairs):
        try:
            breakdowns.append(wer(normalize_text(ref_text), normalize_text(hyp_text)))
        except EmptyReference as exc:
            raise EmptyReference(f"pair {idx}: {exc}") from exc
    errors = sum(b.errors for b in breakdowns)
    ref_words = sum(b.n_ref_words for b in breakdowns)
    return SusAggregate(
        100.0 * errors / ref_words, errors, ref_words, tuple(breakdowns)
    )


def sus_csv(agg: SusAggregate) -> str:
    out = io.StringIO()
    out.write("index,substitutions,deletions,insertions,n_ref_words,wer_percent\n")
    for idx, b in enumerate(agg.per_sentence):
        out.write(
            f"{idx},{b.substitutions},{b.deletions},{b.insertions},"
            f"{b.n_ref_words},{b.wer_percent:.4f}\n"
        )
    return out.getvalue()
