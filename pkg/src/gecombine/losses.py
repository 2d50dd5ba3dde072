"""Training losses: weighted BCE over labels plus a pairwise rank loss.

The rank loss is RankNet's pairwise logistic loss with a constant scale
sigma and a margin multiplier mu: within a group, every ordered pair whose
rank targets differ contributes log(1 + exp(-sigma * (Q_v - Q_u) * mu))
where v is the better-ranked member. Analytic gradients are provided for
everything so training can be checked against finite differences.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

from gecombine.edits import LabelVector
from gecombine.errors import ShapeMismatch
from gecombine.scoring import EPS, aggregate_q

__all__ = [
    "LossExample",
    "aggregate_q_grad",
    "bce_loss",
    "bce_loss_grad",
    "gap_loss",
    "rank_loss",
    "rank_loss_grad",
    "total_loss",
    "total_loss_grad",
    "word_loss",
]


def _clamp(p: float, eps: float) -> float:
    return min(max(p, eps), 1.0 - eps)


def bce_loss(
    pred: Sequence[float],
    gold: Sequence[float],
    weights: Sequence[float] | None = None,
    eps: float = EPS,
) -> float:
    """Weighted mean binary cross-entropy, weights normalized by their sum."""
    if weights is None:
        weights = [1.0] * len(pred)
    if not (len(pred) == len(gold) == len(weights)):
        raise ShapeMismatch(
            f"pred/gold/weights lengths {len(pred)}/{len(gold)}/{len(weights)} differ"
        )
    if not pred:
        return 0.0
    wsum = sum(weights)
    total = 0.0
    for p, y, w in zip(pred, gold, weights):
        p = _clamp(p, eps)
        total += w * -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p))
    return total / wsum


def bce_loss_grad(
    pred: Sequence[float],
    gold: Sequence[float],
    weights: Sequence[float] | None = None,
    eps: float = EPS,
) -> list[float]:
    """d(bce_loss)/d(pred_i); zero where the prediction sits at a clamp."""
    if weights is None:
        weights = [1.0] * len(pred)
    if not (len(pred) == len(gold) == len(weights)):
        raise ShapeMismatch(
            f"pred/gold/weights lengths {len(pred)}/{len(gold)}/{len(weights)} differ"
        )
    wsum = sum(weights) if pred else 1.0
    out = []
    for p, y, w in zip(pred, gold, weights):
        if p < eps or p > 1.0 - eps:
            out.append(0.0)
            continue
        out.append(w * (-y / p + (1.0 - y) / (1.0 - p)) / wsum)
    return out


def word_loss(
    pred: LabelVector,
    gold: LabelVector,
    weights: Sequence[float] | None = None,
    eps: float = EPS,
) -> float:
    """BCE over the word labels."""
    return bce_loss(pred.w, gold.w, weights, eps)


def gap_loss(
    pred: LabelVector,
    gold: LabelVector,
    weights: Sequence[float] | None = None,
    eps: float = EPS,
) -> float:
    """BCE over the m+1 gap labels."""
    return bce_loss(pred.g, gold.g, weights, eps)


def _softplus(x: float) -> float:
    if x > 35.0:
        return x
    return math.log1p(math.exp(x))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def rank_loss(
    group: Sequence[tuple[float, float]], sigma: float = 1.0, mu: float = 5.0
) -> float:
    """Pairwise rank loss over (Q, y) members; equal-y pairs contribute 0."""
    total = 0.0
    for qv, yv in group:
        for qu, yu in group:
            if yv > yu:
                total += _softplus(-sigma * (qv - qu) * mu)
    return total


def rank_loss_grad(
    group: Sequence[tuple[float, float]], sigma: float = 1.0, mu: float = 5.0
) -> list[float]:
    """d(rank_loss)/d(Q_i) for each group member."""
    grads = [0.0] * len(group)
    for i, (qv, yv) in enumerate(group):
        for j, (qu, yu) in enumerate(group):
            if yv > yu:
                s = _sigmoid(-sigma * (qv - qu) * mu)
                grads[i] += -sigma * mu * s
                grads[j] += sigma * mu * s
    return grads


def aggregate_q_grad(labels: LabelVector, eps: float = EPS) -> tuple[list[float], list[float]]:
    """dQ/d(entry) for every word and gap probability.

    Q is the geometric mean, so dQ/dp = Q / (N * p) away from the eps
    floor and 0 at or below it.
    """
    q = aggregate_q(labels, eps)
    n = len(labels.w) + len(labels.g)
    dw = [q / (n * p) if p > eps else 0.0 for p in labels.w]
    dg = [q / (n * p) if p > eps else 0.0 for p in labels.g]
    return dw, dg


class LossExample(NamedTuple):
    """One training instance inside a ranked group."""

    pred: LabelVector
    gold: LabelVector
    w_weights: tuple[float, ...] | None
    g_weights: tuple[float, ...] | None
    y: float


def total_loss(
    groups: Sequence[Sequence[LossExample]],
    gamma: float = 0.2,
    sigma: float = 1.0,
    mu: float = 5.0,
    eps: float = EPS,
) -> float:
    """Mean word loss + mean gap loss over all instances + gamma * rank loss.

    The rank loss is summed over groups; each member's Q is the aggregate
    of its predicted labels, so the rank term backpropagates into the same
    probabilities as the BCE terms.
    """
    examples = [ex for g in groups for ex in g]
    if not examples:
        return 0.0
    lw = sum(word_loss(ex.pred, ex.gold, ex.w_weights, eps) for ex in examples)
    lg = sum(gap_loss(ex.pred, ex.gold, ex.g_weights, eps) for ex in examples)
    lr = sum(
        rank_loss([(aggregate_q(ex.pred, eps), ex.y) for ex in g], sigma, mu) for g in groups
    )
    n = len(examples)
    return lw / n + lg / n + gamma * lr


def total_loss_grad(
    groups: Sequence[Sequence[LossExample]],
    gamma: float = 0.2,
    sigma: float = 1.0,
    mu: float = 5.0,
    eps: float = EPS,
) -> list[list[tuple[list[float], list[float]]]]:
    """Gradient of total_loss w.r.t. every predicted probability.

    Mirrors the group structure: result[gi][i] is (d/dw, d/dg) for
    instance i of group gi.
    """
    examples = [ex for g in groups for ex in g]
    n = len(examples)
    out: list[list[tuple[list[float], list[float]]]] = []
    for g in groups:
        qs = [(aggregate_q(ex.pred, eps), ex.y) for ex in g]
        dq = rank_loss_grad(qs, sigma, mu)
        group_out = []
        for i, ex in enumerate(g):
            dw = bce_loss_grad(ex.pred.w, ex.gold.w, ex.w_weights, eps)
            dg = bce_loss_grad(ex.pred.g, ex.gold.g, ex.g_weights, eps)
            dw = [x / n for x in dw]
            dg = [x / n for x in dg]
            qw, qg = aggregate_q_grad(ex.pred, eps)
            coef = gamma * dq[i]
            dw = [a + coef * b for a, b in zip(dw, qw)]
            dg = [a + coef * b for a, b in zip(dg, qg)]
            group_out.append((dw, dg))
        out.append(group_out)
    return out
