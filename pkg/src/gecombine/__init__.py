"""System combination for grammatical error correction.

Extracts edits from base systems' corrections, searches conflict-free edit
subsets with a scorer-guided beam, and ships the evaluation tooling (F0.5,
rank correlation, significance tests) to measure the result.
"""

__version__ = "0.1.0"

from gecombine.combine import beam_combine, brute_force_combine, oracle_combine, rerank
from gecombine.edits import (
    Edit,
    EditUnion,
    LabelVector,
    apply_edit,
    apply_edits,
    conflicts,
    derive_labels,
    edit_union,
    extract_edits,
    tokenize,
)
from gecombine.evaluate import corpus_f05, sentence_f05, spearman, williams_test
from gecombine.scoring import (
    CombinerConfig,
    ScoreBreakdown,
    Scorer,
    aggregate_q,
    biased_score,
    edit_score,
    voting_score,
)

__all__ = [
    "CombinerConfig",
    "Edit",
    "EditUnion",
    "LabelVector",
    "ScoreBreakdown",
    "Scorer",
    "aggregate_q",
    "apply_edit",
    "apply_edits",
    "beam_combine",
    "biased_score",
    "brute_force_combine",
    "conflicts",
    "corpus_f05",
    "derive_labels",
    "edit_score",
    "edit_union",
    "extract_edits",
    "oracle_combine",
    "rerank",
    "sentence_f05",
    "spearman",
    "tokenize",
    "voting_score",
    "williams_test",
]
