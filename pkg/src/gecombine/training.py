"""Training the feature-based token labeler.

The labeler is a pair of logistic models, one over word positions and one
over gap positions, fed by small hand-built feature vectors. It is a
desk-scale stand-in for a neural token classifier, but it is trained with
the real objective: weighted BCE on word and gap labels plus the pairwise
rank loss over groups of hypotheses that mostly share a source sentence.
"""

from __future__ import annotations

import dataclasses
import json
import math
import random
import string
from collections import Counter
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from gecombine import evaluate
from gecombine.edits import LabelVector, derive_labels, extract_edits
from gecombine.errors import EmptyCorpus, ModelNotLoaded
from gecombine.losses import LossExample, total_loss, total_loss_grad
from gecombine.ngram import NGramModel
from gecombine.scoring import Scorer

__all__ = [
    "FeatureExtractor",
    "GroupMember",
    "RankedGroup",
    "TokenLabeler",
    "TrainConfig",
    "build_groups",
    "changed_positions",
    "loss_weights",
    "train_token_labeler",
]


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.2
    mu: float = 5.0
    sigma_scale: float = 1.0
    z: float = 2.0
    group_size: int = 4
    learning_rate: float = 1.0
    epochs: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.sigma_scale <= 0:
            raise ValueError(f"sigma_scale must be > 0, got {self.sigma_scale}")
        if self.z < 0:
            raise ValueError(f"z must be >= 0, got {self.z}")
        if self.group_size < 1:
            raise ValueError(f"group_size must be >= 1, got {self.group_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")


class GroupMember(NamedTuple):
    source: tuple[str, ...]
    hypothesis: tuple[str, ...]
    gold: LabelVector
    y: float


class RankedGroup(NamedTuple):
    """A rank-loss group; at least half its members share the seed source."""

    source: tuple[str, ...]
    members: list[GroupMember]


def build_groups(
    members: Sequence[GroupMember], group_size: int = 4, seed: int = 0
) -> list[RankedGroup]:
    """Partition hypotheses into rank groups of up to group_size.

    Hypotheses with no edits and perfect hypotheses are dropped first.
    Each source's survivors are chunked into full groups; a remainder of at
    least ceil(n/2) seeds a group topped up with hypotheses from other
    sources, while smaller remainders become the fillers. Fillers left over
    at the end form per-source partial groups so that every group, full or
    partial, has at least half its members on one source.
    """
    n = group_size
    filtered = [m for m in members if m.hypothesis != m.source and m.y < 1.0]
    buckets: dict[str, list[GroupMember]] = {}
    for m in filtered:
        buckets.setdefault(" ".join(m.source), []).append(m)
    rng = random.Random(seed)
    keys = sorted(buckets)
    rng.shuffle(keys)
    half = (n + 1) // 2
    groups: list[RankedGroup] = []
    part_groups: list[list[GroupMember]] = []
    fillers: list[GroupMember] = []
    for k in keys:
        bucket = buckets[k]
        rng.shuffle(bucket)
        whole = len(bucket) - len(bucket) % n
        for i in range(0, whole, n):
            groups.append(RankedGroup(bucket[0].source, bucket[i : i + n]))
        rest = bucket[whole:]
        if len(rest) >= half:
            part_groups.append(rest)
        elif rest:
            fillers.extend(rest)
    for rest in part_groups:
        need = n - len(rest)
        rest = rest + fillers[:need]
        fillers = fillers[need:]
        groups.append(RankedGroup(rest[0].source, rest))
    leftover: dict[str, list[GroupMember]] = {}
    for m in fillers:
        leftover.setdefault(" ".join(m.source), []).append(m)
    for k in sorted(leftover):
        groups.append(RankedGroup(leftover[k][0].source, leftover[k]))
    return groups


def changed_positions(
    source: Sequence[str], hypothesis: Sequence[str]
) -> tuple[set[int], set[int]]:
    """Hypothesis positions touched by the source-to-hypothesis edits.

    Returns (word positions whose token is not present in the source at
    that place, gap positions where source tokens were dropped).
    """
    words: set[int] = set()
    gaps: set[int] = set()
    offset = 0
    for e in extract_edits(source, hypothesis):
        pos = e.start + offset
        if e.replacement:
            words.update(range(pos, pos + len(e.replacement)))
        else:
            gaps.add(pos)
        offset += len(e.replacement) - (e.end - e.start)
    return words, gaps


def loss_weights(
    source: Sequence[str], hypothesis: Sequence[str], z: float
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-label loss weights: z on positions an edit touched, 1 elsewhere."""
    words, gaps = changed_positions(source, hypothesis)
    m = len(hypothesis)
    w = tuple(z if i in words else 1.0 for i in range(m))
    g = tuple(z if j in gaps else 1.0 for j in range(m + 1))
    return w, g


_PUNCT = set(string.punctuation)


def _is_punct(token: str) -> bool:
    return all(ch in _PUNCT for ch in token)


class FeatureExtractor:
    """Turns (source, hypothesis) pairs into per-word and per-gap features."""

    WORD_FEATURES = ("bias", "changed", "lm_logprob", "freq", "all_caps", "capitalized", "punct")
    GAP_FEATURES = ("bias", "deletion_scar", "sentence_start", "sentence_end", "before_punct")

    def __init__(self, lm: NGramModel, counts: Counter[str]):
        self.lm = lm
        self.counts = counts
        self._max_count = max(counts.values(), default=1)

    @classmethod
    def fit(cls, sentences: Sequence[Sequence[str]]) -> "FeatureExtractor":
        lm = NGramModel(order=2).fit(sentences)
        counts: Counter[str] = Counter()
        for sent in sentences:
            counts.update(sent)
        return cls(lm, counts)

    def word_features(self, source: Sequence[str], hypothesis: Sequence[str]) -> np.ndarray:
        changed, _ = changed_positions(source, hypothesis)
        logprobs = self.lm.token_logprobs(hypothesis)
        rows = np.zeros((len(hypothesis), len(self.WORD_FEATURES)))
        for i, tok in enumerate(hypothesis):
            rows[i, 0] = 1.0
            rows[i, 1] = 1.0 if i in changed else 0.0
            rows[i, 2] = max(logprobs[i], -10.0) / 10.0
            rows[i, 3] = math.log1p(self.counts[tok]) / math.log1p(self._max_count)
            rows[i, 4] = 1.0 if tok.isupper() and len(tok) > 1 else 0.0
            rows[i, 5] = 1.0 if tok[:1].isupper() else 0.0
            rows[i, 6] = 1.0 if _is_punct(tok) else 0.0
        return rows

    def gap_features(self, source: Sequence[str], hypothesis: Sequence[str]) -> np.ndarray:
        _, scars = changed_positions(source, hypothesis)
        m = len(hypothesis)
        rows = np.zeros((m + 1, len(self.GAP_FEATURES)))
        for j in range(m + 1):
            rows[j, 0] = 1.0
            rows[j, 1] = 1.0 if j in scars else 0.0
            rows[j, 2] = 1.0 if j == 0 else 0.0
            rows[j, 3] = 1.0 if j == m else 0.0
            rows[j, 4] = 1.0 if j < m and _is_punct(hypothesis[j]) else 0.0
        return rows

    def to_dict(self) -> dict:
        return {
            "word_features": list(self.WORD_FEATURES),
            "gap_features": list(self.GAP_FEATURES),
            "counts": dict(sorted(self.counts.items())),
            "lm": {
                "order": self.lm.order,
                "k": self.lm.k,
                "vocab": sorted(self.lm.vocab),
                "ngram_counts": {" ".join(g): c for g, c in sorted(self.lm.ngram_counts.items())},
                "context_counts": {
                    " ".join(g): c for g, c in sorted(self.lm.context_counts.items())
                },
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureExtractor":
        if tuple(doc.get("word_features", ())) != cls.WORD_FEATURES or tuple(
            doc.get("gap_features", ())
        ) != cls.GAP_FEATURES:
            raise ModelNotLoaded("feature schema does not match this build")
        lm_doc = doc["lm"]
        lm = NGramModel(order=lm_doc["order"], k=lm_doc["k"], vocab=lm_doc["vocab"])
        lm.ngram_counts = Counter(
            {tuple(g.split(" ")): c for g, c in lm_doc["ngram_counts"].items()}
        )
        lm.context_counts = Counter(
            {tuple(g.split(" ")) if g else (): c for g, c in lm_doc["context_counts"].items()}
        )
        return cls(lm, Counter(doc["counts"]))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


_LABELER_FORMAT = "gecombine-token-labeler"
_LABELER_VERSION = 1


class TokenLabeler(Scorer):
    """Logistic word/gap probability model over hand-built features."""

    token_level = True

    def __init__(self, extractor: FeatureExtractor, theta_w: np.ndarray, theta_g: np.ndarray):
        self.extractor = extractor
        self.theta_w = np.asarray(theta_w, dtype=float)
        self.theta_g = np.asarray(theta_g, dtype=float)
        self.history: list[float] = []

    def label_probs(self, source: Sequence[str], hypothesis: Sequence[str]) -> LabelVector:
        xw = self.extractor.word_features(source, hypothesis)
        xg = self.extractor.gap_features(source, hypothesis)
        w = _sigmoid(xw @ self.theta_w) if len(hypothesis) else np.zeros(0)
        g = _sigmoid(xg @ self.theta_g)
        return LabelVector(tuple(float(p) for p in w), tuple(float(p) for p in g))

    def save(self, path: str | Path) -> None:
        doc = {
            "format": _LABELER_FORMAT,
            "version": _LABELER_VERSION,
            "theta_w": self.theta_w.tolist(),
            "theta_g": self.theta_g.tolist(),
            "extractor": self.extractor.to_dict(),
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TokenLabeler":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelNotLoaded(f"cannot read token labeler from {path}: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != _LABELER_FORMAT:
            raise ModelNotLoaded(f"{path} is not a {_LABELER_FORMAT} artifact")
        if doc.get("version") != _LABELER_VERSION:
            raise ModelNotLoaded(f"unsupported labeler version {doc.get('version')}")
        return cls(
            FeatureExtractor.from_dict(doc["extractor"]),
            np.array(doc["theta_w"], dtype=float),
            np.array(doc["theta_g"], dtype=float),
        )


def make_members(
    corpus: Sequence[tuple[Sequence[str], Sequence[str], Sequence[str]]],
) -> list[GroupMember]:
    """Label a (source, hypothesis, reference) corpus for training."""
    members = []
    for source, hypothesis, reference in corpus:
        src, hyp, ref = tuple(source), tuple(hypothesis), tuple(reference)
        gold = derive_labels(hyp, ref)
        y = evaluate.sentence_f05(extract_edits(src, hyp), extract_edits(src, ref))
        members.append(GroupMember(src, hyp, gold, y))
    return members


def train_token_labeler(
    corpus: Sequence[tuple[Sequence[str], Sequence[str], Sequence[str]]],
    config: TrainConfig = TrainConfig(),
) -> TokenLabeler:
    """Fit the token labeler by full-batch gradient descent.

    The corpus holds (source, hypothesis, reference) triples. Gold labels
    come from aligning each hypothesis to its reference, rank targets are
    sentence F0.5, and grouping/filtering happens before any gradients.
    The returned scorer carries its per-epoch training losses in .history.
    """
    if not corpus:
        raise EmptyCorpus("no training records")
    members = make_members(corpus)
    groups = build_groups(members, config.group_size, config.seed)
    if not groups:
        raise EmptyCorpus("every hypothesis was filtered out (no-edit or perfect)")

    sentences = [m.source for g in groups for m in g.members]
    sentences += [tuple(r[2]) for r in corpus]
    extractor = FeatureExtractor.fit(sentences)

    feats = [
        [
            (
                extractor.word_features(m.source, m.hypothesis),
                extractor.gap_features(m.source, m.hypothesis),
                loss_weights(m.source, m.hypothesis, config.z),
            )
            for m in g.members
        ]
        for g in groups
    ]

    theta_w = np.zeros(len(FeatureExtractor.WORD_FEATURES))
    theta_g = np.zeros(len(FeatureExtractor.GAP_FEATURES))
    labeler = TokenLabeler(extractor, theta_w, theta_g)

    def batch() -> list[list[LossExample]]:
        out = []
        for g, gf in zip(groups, feats):
            exs = []
            for m, (xw, xg, (ww, wg)) in zip(g.members, gf):
                w = _sigmoid(xw @ labeler.theta_w) if len(m.hypothesis) else np.zeros(0)
                gp = _sigmoid(xg @ labeler.theta_g)
                pred = LabelVector(tuple(float(p) for p in w), tuple(float(p) for p in gp))
                exs.append(LossExample(pred, m.gold, ww, wg, m.y))
            out.append(exs)
        return out

    def loss_of(b: list[list[LossExample]]) -> float:
        return total_loss(b, config.gamma, config.sigma_scale, config.mu)

    labeler.history.append(loss_of(batch()))
    for _ in range(config.epochs):
        b = batch()
        grads = total_loss_grad(b, config.gamma, config.sigma_scale, config.mu)
        gw = np.zeros_like(labeler.theta_w)
        gg = np.zeros_like(labeler.theta_g)
        for exs, gf, grad_g in zip(b, feats, grads):
            for ex, (xw, xg, _w), (dw, dg) in zip(exs, gf, grad_g):
                pw = np.array(ex.pred.w)
                pg = np.array(ex.pred.g)
                if len(pw):
                    gw += ((np.array(dw) * pw * (1.0 - pw)) @ xw)
                gg += ((np.array(dg) * pg * (1.0 - pg)) @ xg)
        labeler.theta_w = labeler.theta_w - config.learning_rate * gw
        labeler.theta_g = labeler.theta_g - config.learning_rate * gg
        labeler.history.append(loss_of(batch()))
    return labeler
