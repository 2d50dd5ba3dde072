"""Combination search: beam, exhaustive baseline, re-ranking, oracle.

The beam starts from the bare source and walks the union's edits left to
right, extending every candidate that the current edit does not conflict
with, scoring extensions as full (source, hypothesis) pairs, and keeping
the top-b by biased score. Ties break toward fewer applied edits and then
lexicographically smaller provenance so results are reproducible.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

from gecombine.edits import Edit, EditUnion, apply_edits, conflicts
from gecombine.errors import TooManyEdits
from gecombine.scoring import (
    CombinerConfig,
    ScoreBreakdown,
    Scorer,
    biased_score,
    edit_score,
    voting_score,
)

__all__ = [
    "BRUTE_FORCE_CAP",
    "Candidate",
    "beam_combine",
    "brute_force_combine",
    "oracle_combine",
    "rerank",
]

BRUTE_FORCE_CAP = 20


@dataclasses.dataclass(frozen=True)
class Candidate:
    applied: tuple[Edit, ...]
    realized: tuple[str, ...]
    breakdown: ScoreBreakdown | None
    provenance: tuple[int, ...]


def _make_breakdown(
    q: float, applied: Sequence[Edit], union: EditUnion, config: CombinerConfig
) -> ScoreBreakdown:
    v = voting_score(applied, union)
    if union.p_es is None and union.edits and config.beta == 0.0:
        es = 1.0
    else:
        es = edit_score(applied, union, config.prob_floor)
    return ScoreBreakdown(q=q, v=v, es=es, q_prime=biased_score(q, v, es, config))


def _sort_key(cand: Candidate):
    assert cand.breakdown is not None
    return (-cand.breakdown.q_prime, len(cand.applied), cand.provenance)


def beam_combine(
    source: Sequence[str], union: EditUnion, scorer: Scorer, config: CombinerConfig
) -> Candidate:
    """Best candidate of the final beam; scorer calls stay within b*|E| + 1."""
    src = tuple(source)
    q0 = scorer.score_batch([(src, src)])[0]
    beam = [Candidate((), src, _make_breakdown(q0, (), union, config), ())]
    for idx, edit in enumerate(union.edits):
        fresh = []
        for cand in beam:
            if any(conflicts(edit, a) for a in cand.applied):
                continue
            applied = cand.applied + (edit,)
            fresh.append(
                Candidate(
                    applied=applied,
                    realized=tuple(apply_edits(src, applied)),
                    breakdown=None,
                    provenance=cand.provenance + (idx,),
                )
            )
        if fresh:
            qs = scorer.score_batch([(src, c.realized) for c in fresh])
            fresh = [
                dataclasses.replace(c, breakdown=_make_breakdown(q, c.applied, union, config))
                for c, q in zip(fresh, qs)
            ]
        beam = sorted(beam + fresh, key=_sort_key)[: config.beam_size]
    return beam[0]


def _conflict_free_subsets(edits: Sequence[Edit]) -> list[list[int]]:
    subsets: list[list[int]] = [[]]
    for i, edit in enumerate(edits):
        extended = []
        for subset in subsets:
            if all(not conflicts(edit, edits[j]) for j in subset):
                extended.append(subset + [i])
        subsets.extend(extended)
    return subsets


def brute_force_combine(
    source: Sequence[str], union: EditUnion, scorer: Scorer, config: CombinerConfig
) -> Candidate:
    """Exhaustive argmax over every conflict-free edit subset."""
    if len(union.edits) > BRUTE_FORCE_CAP:
        raise TooManyEdits(
            f"{len(union.edits)} edits exceed the exhaustive cap of {BRUTE_FORCE_CAP}"
        )
    src = tuple(source)
    candidates = []
    for subset in _conflict_free_subsets(union.edits):
        applied = tuple(union.edits[i] for i in subset)
        candidates.append(
            Candidate(
                applied=applied,
                realized=tuple(apply_edits(src, applied)),
                breakdown=None,
                provenance=tuple(subset),
            )
        )
    qs = scorer.score_batch([(src, c.realized) for c in candidates])
    scored = [
        dataclasses.replace(c, breakdown=_make_breakdown(q, c.applied, union, config))
        for c, q in zip(candidates, qs)
    ]
    return min(scored, key=_sort_key)


def rerank(
    source: Sequence[str], hypotheses: Sequence[Sequence[str]], scorer: Scorer
) -> tuple[str, ...]:
    """Highest-Q hypothesis, with the bare source always in the running.

    No biases apply here: there is no edit union, just whole candidate
    sentences. On a tie the source wins, then the earlier hypothesis.
    """
    pool = [tuple(h) for h in hypotheses] + [tuple(source)]
    src_index = len(pool) - 1
    qs = scorer.score_batch([(tuple(source), h) for h in pool])
    best = min(
        range(len(pool)),
        key=lambda i: (-qs[i], i != src_index, i),
    )
    return pool[best]


def oracle_combine(union: EditUnion, gold_edits: Iterable[Edit]) -> Candidate:
    """Apply exactly the union edits that appear in the gold set.

    Every applied edit is correct by construction, which pins corpus
    precision at 1. Gold sets from a single annotator are internally
    conflict-free, but any conflicting picks are dropped left to right as
    a guard.
    """
    gold = {e.key() for e in gold_edits}
    applied: list[Edit] = []
    provenance: list[int] = []
    for idx, edit in enumerate(union.edits):
        if edit.key() not in gold:
            continue
        if any(conflicts(edit, a) for a in applied):
            continue
        applied.append(edit)
        provenance.append(idx)
    return Candidate(
        applied=tuple(applied),
        realized=tuple(apply_edits(union.source, applied)),
        breakdown=None,
        provenance=tuple(provenance),
    )
