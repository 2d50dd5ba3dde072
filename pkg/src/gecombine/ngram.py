"""Count-based n-gram language model with add-k smoothing.

Probabilities follow p(w | ctx) = (C(ctx w) + k) / (C(ctx) + k * |V|) where
V is the training vocabulary plus an <unk> type. Sentences are padded on
the left with <s>, which lives in contexts only, never in V. A model with a
vocabulary but no counts is uniform: every token scores 1/|V|.

The artifact is a small versioned JSON file; n-grams are stored space
joined, which is unambiguous because tokens never contain whitespace.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from gecombine.errors import ModelNotLoaded

__all__ = ["NGramModel", "train_ngram"]

UNK = "<unk>"
BOS = "<s>"

_FORMAT = "gecombine-ngram"
_VERSION = 1


class NGramModel:
    def __init__(self, order: int = 3, k: float = 1.0, vocab: Iterable[str] = ()):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if k <= 0:
            raise ValueError(f"add-k smoothing needs k > 0, got {k}")
        self.order = order
        self.k = k
        self.vocab = set(vocab)
        self.vocab.add(UNK)
        self.ngram_counts: Counter[tuple[str, ...]] = Counter()
        self.context_counts: Counter[tuple[str, ...]] = Counter()

    def _lookup(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def _padded(self, tokens: Sequence[str]) -> list[str]:
        return [BOS] * (self.order - 1) + [self._lookup(t) for t in tokens]

    def fit(self, sentences: Iterable[Sequence[str]]) -> "NGramModel":
        """Count n-grams; extends the vocabulary with every token seen."""
        cached = [list(s) for s in sentences]
        for sent in cached:
            self.vocab.update(sent)
        for sent in cached:
            padded = self._padded(sent)
            for i in range(self.order - 1, len(padded)):
                gram = tuple(padded[i - self.order + 1 : i + 1])
                self.ngram_counts[gram] += 1
                self.context_counts[gram[:-1]] += 1
        return self

    def prob(self, context: Sequence[str], token: str) -> float:
        tail = list(context)[-(self.order - 1) :] if self.order > 1 else []
        ctx = tuple(BOS if t == BOS else self._lookup(t) for t in tail)
        w = self._lookup(token)
        num = self.ngram_counts[ctx + (w,)] + self.k
        den = self.context_counts[ctx] + self.k * len(self.vocab)
        return num / den

    def token_logprobs(self, tokens: Sequence[str]) -> list[float]:
        padded = self._padded(tokens)
        out = []
        for i in range(self.order - 1, len(padded)):
            gram = tuple(padded[i - self.order + 1 : i + 1])
            num = self.ngram_counts[gram] + self.k
            den = self.context_counts[gram[:-1]] + self.k * len(self.vocab)
            out.append(math.log(num / den))
        return out

    def token_probs(self, tokens: Sequence[str]) -> list[float]:
        return [math.exp(lp) for lp in self.token_logprobs(tokens)]

    def perplexity(self, tokens: Sequence[str]) -> float:
        """exp of the negative mean token log-probability; 1.0 if empty."""
        lps = self.token_logprobs(tokens)
        if not lps:
            return 1.0
        return math.exp(-sum(lps) / len(lps))

    def save(self, path: str | Path) -> None:
        doc = {
            "format": _FORMAT,
            "version": _VERSION,
            "order": self.order,
            "k": self.k,
            "vocab": sorted(self.vocab),
            "ngram_counts": {" ".join(g): c for g, c in sorted(self.ngram_counts.items())},
            "context_counts": {" ".join(g): c for g, c in sorted(self.context_counts.items())},
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelNotLoaded(f"cannot read n-gram model from {path}: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != _FORMAT:
            raise ModelNotLoaded(f"{path} is not a {_FORMAT} artifact")
        if doc.get("version") != _VERSION:
            raise ModelNotLoaded(f"unsupported n-gram artifact version {doc.get('version')}")
        model = cls(order=doc["order"], k=doc["k"], vocab=doc["vocab"])
        model.ngram_counts = Counter({tuple(g.split(" ")): c for g, c in doc["ngram_counts"].items()})
        model.context_counts = Counter(
            {tuple(g.split(" ")) if g else (): c for g, c in doc["context_counts"].items()}
        )
        return model


def train_ngram(
    sentences: Iterable[Sequence[str]], order: int = 3, k: float = 1.0
) -> NGramModel:
    return NGramModel(order=order, k=k).fit(sentences)
