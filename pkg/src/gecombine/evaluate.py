"""Evaluation: F0.5, rank correlation, significance tests, fluency.

Edit matching is exact on (start, end, replacement). With multiple
annotators, each sentence is credited against the annotator that maximizes
the running cumulative F0.5 (ties going to the lower annotator id), the
selection order used by the standard M2 scorer.
"""

from __future__ import annotations

import dataclasses
import math
import random
import statistics
from typing import Mapping, Sequence

from scipy import stats as _scipy_stats

from gecombine.edits import Edit
from gecombine.errors import (
    DegenerateInput,
    DomainError,
    LengthMismatch,
    ModelNotLoaded,
)
from gecombine.ngram import NGramModel

__all__ = [
    "CorpusScore",
    "WilliamsResult",
    "bootstrap_significance",
    "corpus_f05",
    "fluency_report",
    "sentence_f05",
    "spearman",
    "williams_test",
]


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 1.0
    r = tp / (tp + fn) if tp + fn else 1.0
    denom = 0.25 * p + r
    f05 = 1.25 * p * r / denom if denom else 0.0
    return p, r, f05


@dataclasses.dataclass(frozen=True)
class CorpusScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return _prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return _prf(self.tp, self.fp, self.fn)[1]

    @property
    def f05(self) -> float:
        return _prf(self.tp, self.fp, self.fn)[2]

    def as_dict(self) -> dict[str, float]:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f05": self.f05,
        }


def _sentence_counts(hyp_edits: Sequence[Edit], gold_edits: Sequence[Edit]) -> tuple[int, int, int]:
    hyp = {e.key() for e in hyp_edits}
    gold = {e.key() for e in gold_edits}
    tp = len(hyp & gold)
    return tp, len(hyp) - tp, len(gold) - tp


def sentence_f05(hyp_edits: Sequence[Edit], gold_edits: Sequence[Edit]) -> float:
    """F0.5 of one sentence's edits against one gold edit set.

    The degenerate conventions fall out of the zero-denominator rules: both
    sides empty scores 1.0, and pure false positives against an empty gold
    score 0.0.
    """
    tp, fp, fn = _sentence_counts(hyp_edits, gold_edits)
    return _prf(tp, fp, fn)[2]


def _choose_counts(
    per_sentence_hyp: Sequence[Sequence[Edit]],
    per_sentence_gold: Sequence[Mapping[int, Sequence[Edit]]],
) -> list[tuple[int, int, int]]:
    """Per-sentence (tp, fp, fn) under greedy best-annotator selection."""
    if len(per_sentence_hyp) != len(per_sentence_gold):
        raise LengthMismatch(
            f"{len(per_sentence_hyp)} hypothesis sentences vs {len(per_sentence_gold)} gold"
        )
    chosen: list[tuple[int, int, int]] = []
    tp = fp = fn = 0
    for hyp_edits, annotations in zip(per_sentence_hyp, per_sentence_gold):
        if not annotations:
            annotations = {0: []}
        best = None
        for ann_id in sorted(annotations):
            cand = _sentence_counts(hyp_edits, annotations[ann_id])
            f = _prf(tp + cand[0], fp + cand[1], fn + cand[2])[2]
            if best is None or f > best[0]:
                best = (f, cand)
        assert best is not None
        tp += best[1][0]
        fp += best[1][1]
        fn += best[1][2]
        chosen.append(best[1])
    return chosen


def corpus_f05(
    per_sentence_hyp: Sequence[Sequence[Edit]],
    per_sentence_gold: Sequence[Mapping[int, Sequence[Edit]]],
) -> CorpusScore:
    """Aggregate F0.5 over a corpus with per-sentence annotator choice."""
    counts = _choose_counts(per_sentence_hyp, per_sentence_gold)
    return CorpusScore(
        tp=sum(c[0] for c in counts),
        fp=sum(c[1] for c in counts),
        fn=sum(c[2] for c in counts),
    )


def _mean_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1  # mean of 1-based positions i..j
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of mean-ranked values."""
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} values")
    if len(x) < 2:
        raise DegenerateInput("need at least two points")
    if min(x) == max(x) or min(y) == max(y):
        raise DegenerateInput("rank correlation undefined for a constant vector")
    rx, ry = _mean_ranks(x), _mean_ranks(y)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def bootstrap_significance(
    a_hyp: Sequence[Sequence[Edit]],
    b_hyp: Sequence[Sequence[Edit]],
    gold: Sequence[Mapping[int, Sequence[Edit]]],
    samples: int = 100,
    seed: int = 0,
) -> float:
    """Bootstrap p-value for the claim that system A beats system B.

    Sentence indices are resampled with replacement; each resample is
    scored at the corpus level using the annotator choices fixed by the
    full-corpus pass, and p is the fraction of resamples where B's F0.5 is
    at least A's. Ties count against the claim.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    a_counts = _choose_counts(a_hyp, gold)
    b_counts = _choose_counts(b_hyp, gold)
    n = len(a_counts)
    rng = random.Random(seed)
    hits = 0
    for _ in range(samples):
        idx = [rng.randrange(n) for _ in range(n)]
        fa = _prf(
            sum(a_counts[i][0] for i in idx),
            sum(a_counts[i][1] for i in idx),
            sum(a_counts[i][2] for i in idx),
        )[2]
        fb = _prf(
            sum(b_counts[i][0] for i in idx),
            sum(b_counts[i][1] for i in idx),
            sum(b_counts[i][2] for i in idx),
        )[2]
        if fb >= fa:
            hits += 1
    return hits / samples


@dataclasses.dataclass(frozen=True)
class WilliamsResult:
    t: float
    dof: int
    p_value: float


def williams_test(r12: float, r13: float, r23: float, n: int) -> WilliamsResult:
    """Williams' t for comparing dependent correlations r12 vs r13.

    Both correlations share variable 1 and were measured on the same n
    observations; the one-sided p-value comes from the t distribution with
    n-3 degrees of freedom.
    """
    for r in (r12, r13, r23):
        if abs(r) > 1.0:
            raise DomainError(f"correlation {r} outside [-1, 1]")
    if n < 4:
        raise DomainError(f"need n >= 4 observations, got {n}")
    det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23
    if det <= 0.0:
        raise DomainError(f"correlation matrix determinant {det} is not positive")
    r_bar = (r12 + r13) / 2.0
    denom = 2.0 * det * (n - 1) / (n - 3) + r_bar * r_bar * (1.0 - r23) ** 3
    t = (r12 - r13) * math.sqrt((n - 1) * (1.0 + r23) / denom)
    dof = n - 3
    p = float(_scipy_stats.t.sf(t, dof))
    return WilliamsResult(t=t, dof=dof, p_value=p)


def fluency_report(sentences: Sequence[Sequence[str]], lm: NGramModel | None) -> float:
    """Median per-sentence perplexity under the language model."""
    if lm is None:
        raise ModelNotLoaded("fluency report needs a trained language model")
    if not sentences:
        raise DegenerateInput("no sentences to score")
    return statistics.median(lm.perplexity(s) for s in sentences)
