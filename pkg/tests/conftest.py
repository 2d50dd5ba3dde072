"""Shared fixtures: a hand-checked sentence pair and deterministic scorers."""

import hashlib
import random

import pytest

from gecombine.edits import Edit, LabelVector, conflicts, edit_union
from gecombine.scoring import Scorer

SOURCE_TEXT = (
    "To sum it up I still consider having their own car is way more safe "
    "and convinient ."
)
CORRECTION_TEXT = (
    "To sum up , I still consider having your own car way more safe and "
    "convenient ."
)

# The five edits that turn SOURCE_TEXT into CORRECTION_TEXT, in span order.
PUBLISHED_EDITS = [
    (2, 3, ""),
    (4, 4, ","),
    (8, 9, "your"),
    (11, 12, ""),
    (16, 17, "convenient"),
]


@pytest.fixture
def published_pair():
    return SOURCE_TEXT.split(), CORRECTION_TEXT.split()


def _hash_unit(seed, key, lo=0.05, hi=0.95):
    """Deterministic pseudo-random float in [lo, hi) keyed by (seed, key)."""
    digest = hashlib.md5(f"{seed}|{key}".encode()).digest()
    frac = int.from_bytes(digest[:8], "big") / 2.0**64
    return lo + (hi - lo) * frac


class HashScorer(Scorer):
    """Sentence-level scorer: a stable hash of the hypothesis string.

    Every (source, hypothesis) pair gets an arbitrary but reproducible
    quality in [0.05, 0.95), so tests can exercise search behaviour
    without a trained model.
    """

    token_level = False

    def __init__(self, seed=0):
        self.seed = seed

    def score(self, source, hypothesis):
        return _hash_unit(self.seed, f"{' '.join(source)}|{' '.join(hypothesis)}")


class HashTokenScorer(Scorer):
    """Token-level scorer with hash-random per-token and per-gap probs.

    Word probabilities depend only on the token and gap probabilities only
    on the adjacent token pair, so the induced sentence score has the same
    product structure the search exploits.  That makes it a fair random
    scorer for checking beam behaviour: scores are arbitrary, but not
    adversarially non-local.
    """

    token_level = True

    def __init__(self, seed=0):
        self.seed = seed

    def label_probs(self, source, hypothesis):
        m = len(hypothesis)
        words = tuple(
            _hash_unit(self.seed, f"w|{tok}") for tok in hypothesis
        )
        gaps = tuple(
            _hash_unit(
                self.seed,
                "g|{}|{}".format(
                    hypothesis[j - 1] if j else "^",
                    hypothesis[j] if j < m else "$",
                ),
            )
            for j in range(m + 1)
        )
        return LabelVector(words, gaps)


class TableScorer(Scorer):
    """Scores looked up from an explicit table keyed by the realized text."""

    token_level = False

    def __init__(self, table, default=0.5):
        self.table = dict(table)
        self.default = default

    def score(self, source, hypothesis):
        return self.table.get(" ".join(hypothesis), self.default)


class CountingScorer(Scorer):
    """Wraps another scorer and counts how many pairs it was asked about."""

    def __init__(self, inner):
        self.inner = inner
        self.token_level = inner.token_level
        self.pairs_scored = 0

    def label_probs(self, source, hypothesis):
        self.pairs_scored += 1
        return self.inner.label_probs(source, hypothesis)

    def score(self, source, hypothesis):
        if self.token_level:
            return super().score(source, hypothesis)
        self.pairs_scored += 1
        return self.inner.score(source, hypothesis)


def random_instance(rng, max_edits=12, systems=3, with_p_es=False):
    """A random source sentence plus an edit union over it.

    Spans, replacements, and per-system proposals are all drawn from
    ``rng``; each system keeps a conflict-free subset so the union looks
    like real extractor output.
    """
    length = rng.randint(3, 9)
    source = [f"w{i}" for i in range(length)]
    target = rng.randint(1, max_edits)
    pool = {}
    tries = 0
    while len(pool) < target and tries < 200:
        tries += 1
        start = rng.randint(0, length)
        width = rng.choice((0, 0, 1, 1, 1, 2))
        end = min(start + width, length)
        repl_len = rng.choice((0, 1, 1, 2))
        if start == end and repl_len == 0:
            continue
        replacement = tuple(f"r{rng.randint(0, 5)}" for _ in range(repl_len))
        edit = Edit(start, end, replacement)
        pool.setdefault(edit.key(), edit)
    edits = list(pool.values())
    per_system = []
    for s in range(systems):
        rng.shuffle(edits)
        mine = []
        for edit in edits:
            if rng.random() < 0.6 and not any(
                conflicts(edit, other) or edit.key() == other.key()
                for other in mine
            ):
                mine.append(edit)
        per_system.append((f"sys{s}", mine))
    union = edit_union(per_system, source)
    if with_p_es and union.edits:
        union.p_es = {
            edit.key(): rng.uniform(0.05, 0.95) for edit in union.edits
        }
    return source, union
