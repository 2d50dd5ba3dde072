"""Logistic classifier scoring union edits by type and proposing systems.

Each edit is featurized as a one-hot over the coarse type labels, one
inclusion bit per base system in the training roster, and a bias. The
probability it emits is the p_ES consumed by the edit score. Prediction
refuses edits proposed by systems outside the training roster, since the
inclusion bits would silently read as zeros.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from gecombine.edits import Edit, EditUnion
from gecombine.errors import EmptyCorpus, ModelNotLoaded, RosterMismatch
from gecombine.scoring import EPS

__all__ = ["EditClassifier", "TYPE_LABELS", "logistic_loss_and_grad", "train_edit_classifier"]

TYPE_LABELS = tuple(
    f"{op}:{kind}" for op in ("INS", "DEL", "SUB") for kind in ("PUNCT", "CASE", "OTHER")
)

_FORMAT = "gecombine-edit-classifier"
_VERSION = 1


def logistic_loss_and_grad(
    x: np.ndarray, y: np.ndarray, weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean BCE of sigmoid(x @ weights) against y, with its gradient."""
    z = x @ weights
    # log(1 + exp(-|z|)) is the stable core of both log p and log (1-p)
    log1pexp = np.log1p(np.exp(-np.abs(z)))
    loss = float(np.mean(log1pexp + np.maximum(z, 0.0) - y * z))
    ez = np.exp(-np.abs(z))
    p = np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))
    grad = x.T @ (p - y) / len(y)
    return loss, grad


class EditClassifier:
    def __init__(self, roster: Sequence[str], weights: np.ndarray | None = None):
        self.roster = tuple(roster)
        width = len(TYPE_LABELS) + len(self.roster) + 1
        if weights is None:
            weights = np.zeros(width)
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (width,):
            raise ValueError(f"weights shape {self.weights.shape} does not fit roster")

    def features(self, edit: Edit) -> np.ndarray:
        unknown = edit.proposers - frozenset(self.roster)
        if unknown:
            raise RosterMismatch(f"edit proposed by unknown systems {sorted(unknown)}")
        row = np.zeros(len(TYPE_LABELS) + len(self.roster) + 1)
        if edit.type_label in TYPE_LABELS:
            row[TYPE_LABELS.index(edit.type_label)] = 1.0
        for i, system in enumerate(self.roster):
            if system in edit.proposers:
                row[len(TYPE_LABELS) + i] = 1.0
        row[-1] = 1.0
        return row

    def predict_p_es(self, edit: Edit) -> float:
        z = float(self.features(edit) @ self.weights)
        p = 1.0 / (1.0 + np.exp(-z)) if z >= 0 else np.exp(z) / (1.0 + np.exp(z))
        return min(max(float(p), EPS), 1.0 - EPS)

    def annotate(self, union: EditUnion) -> EditUnion:
        """Return a copy of the union with p_es filled in for every edit."""
        p_es = {e.key(): self.predict_p_es(e) for e in union.edits}
        return EditUnion(source=union.source, edits=union.edits, c=union.c, p_es=p_es)

    def save(self, path: str | Path) -> None:
        doc = {
            "format": _FORMAT,
            "version": _VERSION,
            "type_labels": list(TYPE_LABELS),
            "roster": list(self.roster),
            "weights": self.weights.tolist(),
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EditClassifier":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelNotLoaded(f"cannot read edit classifier from {path}: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != _FORMAT:
            raise ModelNotLoaded(f"{path} is not a {_FORMAT} artifact")
        if doc.get("version") != _VERSION:
            raise ModelNotLoaded(f"unsupported classifier version {doc.get('version')}")
        if tuple(doc.get("type_labels", ())) != TYPE_LABELS:
            raise ModelNotLoaded("type-label schema does not match this build")
        return cls(doc["roster"], np.array(doc["weights"], dtype=float))


def train_edit_classifier(
    corpora: Iterable[tuple[EditUnion, Iterable[Edit]]],
    roster: Sequence[str],
    learning_rate: float = 2.0,
    epochs: int = 300,
    seed: int = 0,
) -> EditClassifier:
    """Fit the classifier on unions labeled by reference edit sets.

    A union edit is a positive example when it appears in the sentence's
    gold edits. Training is deterministic full-batch gradient descent (the
    seed is accepted for interface uniformity; nothing here is stochastic).
    """
    del seed
    clf = EditClassifier(roster)
    rows = []
    labels = []
    for union, gold_edits in corpora:
        gold = {e.key() for e in gold_edits}
        for e in union.edits:
            rows.append(clf.features(e))
            labels.append(1.0 if e.key() in gold else 0.0)
    if not rows:
        raise EmptyCorpus("no union edits to train the edit classifier on")
    x = np.vstack(rows)
    y = np.array(labels)
    for _ in range(epochs):
        _, grad = logistic_loss_and_grad(x, y, clf.weights)
        clf.weights = clf.weights - learning_rate * grad
    return clf
