"""Built-in scorers: uniform, n-gram LM, and the reference oracle.

These are desk-scale stand-ins for a neural quality-estimation model. The
uniform scorer is a do-nothing baseline, the n-gram scorer rates fluency
from a trained language model, and the oracle scorer peeks at hidden
references (test-only: it realizes the ideal-scorer premise that applying a
correct edit must raise the score and applying a wrong one must lower it).
"""

from __future__ import annotations

from typing import Mapping, Sequence

from gecombine import evaluate
from gecombine.edits import LabelVector, extract_edits
from gecombine.errors import ModelNotLoaded
from gecombine.ngram import NGramModel
from gecombine.scoring import EPS, Scorer

__all__ = ["NGramScorer", "ReferenceOracleScorer", "UniformScorer", "build_scorer"]


class UniformScorer(Scorer):
    """Every word and gap probability is a constant (default 0.5)."""

    token_level = True

    def __init__(self, value: float = 0.5):
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"constant probability {value} outside [0, 1]")
        self.value = value

    def label_probs(self, source: Sequence[str], hypothesis: Sequence[str]) -> LabelVector:
        m = len(hypothesis)
        return LabelVector((self.value,) * m, (self.value,) * (m + 1))


class NGramScorer(Scorer):
    """Word probabilities from a language model; gaps are neutral.

    The LM knows nothing about insertions, so every gap probability is 1
    and Q reduces to a length-normalized fluency score. An empty hypothesis
    is scored as (almost) certainly wrong rather than perfect, otherwise
    deleting a whole sentence would look ideal.
    """

    token_level = True

    def __init__(self, model: NGramModel | None):
        self.model = model

    def label_probs(self, source: Sequence[str], hypothesis: Sequence[str]) -> LabelVector:
        if self.model is None:
            raise ModelNotLoaded("n-gram scorer has no model; train or load one first")
        m = len(hypothesis)
        if m == 0:
            return LabelVector((), (EPS,))
        w = tuple(min(1.0, p) for p in self.model.token_probs(hypothesis))
        return LabelVector(w, (1.0,) * (m + 1))


class ReferenceOracleScorer(Scorer):
    """Sentence F0.5 of the hypothesis against a hidden reference.

    References are keyed by the space-joined source sentence. The score is
    floored at EPS so it stays a valid quality score even at F0.5 = 0.
    """

    token_level = False

    def __init__(self, references: Mapping[str, Sequence[str]]):
        self._refs = {src: tuple(ref) for src, ref in references.items()}

    @classmethod
    def from_pairs(
        cls, pairs: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> "ReferenceOracleScorer":
        return cls({" ".join(src): ref for src, ref in pairs})

    def score(self, source: Sequence[str], hypothesis: Sequence[str]) -> float:
        key = " ".join(source)
        try:
            reference = self._refs[key]
        except KeyError:
            raise ModelNotLoaded(f"oracle scorer has no reference for source {key!r}") from None
        hyp_edits = extract_edits(source, hypothesis)
        gold_edits = extract_edits(source, reference)
        return max(evaluate.sentence_f05(hyp_edits, gold_edits), EPS)


def build_scorer(name: str, *, lm_path: str | None = None, references=None) -> Scorer:
    """Instantiate a built-in scorer by name."""
    if name == "uniform":
        return UniformScorer()
    if name == "ngram":
        if lm_path is None:
            raise ModelNotLoaded("scorer 'ngram' needs a language-model artifact path")
        return NGramScorer(NGramModel.load(lm_path))
    if name == "oracle":
        if references is None:
            raise ModelNotLoaded("scorer 'oracle' needs reference sentences")
        return ReferenceOracleScorer(references)
    raise ValueError(f"unknown scorer {name!r}")
