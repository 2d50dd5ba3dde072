"""Quality-score algebra and the scorer contract.

The quality score Q of a hypothesis is the geometric mean of its word and
gap probabilities. Two biases can be mixed in: a voting score V (how many
base systems proposed each applied edit) and an edit score ES (per-edit
apply/skip probabilities over the whole union), combined as

    Q' = Q^(1-beta) * V^alpha * ES^beta

with alpha in [0,1] and beta in [0,1).
"""

from __future__ import annotations

import dataclasses
import math
from abc import ABC
from typing import Iterable, Sequence

from gecombine.edits import Edit, EditUnion, LabelVector
from gecombine.errors import MissingProbability

__all__ = [
    "EPS",
    "CombinerConfig",
    "ScoreBreakdown",
    "Scorer",
    "aggregate_q",
    "biased_score",
    "edit_score",
    "voting_score",
]

EPS = 1e-9


@dataclasses.dataclass(frozen=True)
class ScoreBreakdown:
    q: float
    v: float
    es: float
    q_prime: float


@dataclasses.dataclass(frozen=True)
class CombinerConfig:
    """Knobs of the combination search and bias mix."""

    alpha: float = 0.4
    beta: float = 0.0
    beam_size: int = 16
    prob_floor: float = EPS

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.beam_size < 1:
            raise ValueError(f"beam_size must be >= 1, got {self.beam_size}")
        if not (0.0 < self.prob_floor < 1.0):
            raise ValueError(f"prob_floor must be in (0, 1), got {self.prob_floor}")


def aggregate_q(labels: LabelVector, eps: float = EPS) -> float:
    """Geometric mean of all 2m+1 label probabilities, floored at eps.

    For an m-word hypothesis there are m word labels and m+1 gap labels;
    the exponent is 1/(2m+1). An empty hypothesis degenerates to its single
    gap label. The log-space product keeps long sentences from underflowing.
    """
    total = 0.0
    for p in labels.w:
        total += math.log(max(p, eps))
    for p in labels.g:
        total += math.log(max(p, eps))
    n = len(labels.w) + len(labels.g)
    return math.exp(total / n)


def voting_score(applied: Iterable[Edit], union: EditUnion) -> float:
    """Mean fraction of base systems proposing each applied edit.

    The bare source (nothing applied) carries no voting evidence, so it
    scores a neutral 1.
    """
    counts = {e.key(): e.count for e in union.edits}
    total = 0.0
    n = 0
    for e in applied:
        total += counts[e.key()] / union.c
        n += 1
    if n == 0:
        return 1.0
    return total / n


def edit_score(applied: Iterable[Edit], union: EditUnion, eps: float = EPS) -> float:
    """Geometric mean over the whole union of per-edit apply/skip probability.

    Every union edit contributes: p_es(e) when e was applied, 1 - p_es(e)
    when it was skipped. Scoring the full union rather than only the applied
    subset keeps hypotheses with more (confident) edits from being punished
    for their length. An empty union scores 1.
    """
    if not union.edits:
        return 1.0
    if union.p_es is None:
        raise MissingProbability("edit union has no p_es probabilities")
    applied_keys = {e.key() for e in applied}
    total = 0.0
    for e in union.edits:
        key = e.key()
        try:
            p = union.p_es[key]
        except KeyError:
            raise MissingProbability(f"no p_es for edit {key}") from None
        p_edit = p if key in applied_keys else 1.0 - p
        total += math.log(min(max(p_edit, eps), 1.0))
    return math.exp(total / len(union.edits))


def biased_score(q: float, v: float, es: float, config: CombinerConfig) -> float:
    """Mix the quality score with the voting and edit-score biases.

    beta = 0 reduces to q * v**alpha; alpha = beta = 0 returns q unchanged.
    """
    return q ** (1.0 - config.beta) * v**config.alpha * es**config.beta


class Scorer(ABC):
    """Quality-estimation scorer contract.

    Implementations are deterministic for fixed inputs and state. Token
    level scorers produce per-word and per-gap probabilities and get their
    sentence score via aggregate_q, so both capabilities always agree;
    sentence-level scorers override score() directly.
    """

    token_level: bool = False

    def label_probs(self, source: Sequence[str], hypothesis: Sequence[str]) -> LabelVector:
        raise NotImplementedError(f"{type(self).__name__} is not a token-level scorer")

    def score(self, source: Sequence[str], hypothesis: Sequence[str]) -> float:
        if self.token_level:
            return aggregate_q(self.label_probs(source, hypothesis))
        raise NotImplementedError

    def score_batch(
        self, pairs: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> list[float]:
        """Score many (source, hypothesis) pairs; overridable to amortize."""
        return [self.score(s, h) for s, h in pairs]

    def close(self) -> None:
        """Release any held resources; default scorers hold none."""
