"""Edits over token sequences: extraction, application, conflicts, unions.

An edit replaces the half-open source span [start, end) with a replacement
token sequence. start == end with a non-empty replacement is an insertion;
a non-empty span with an empty replacement is a deletion. Identity edits
(replacement equal to the spanned tokens) are rejected at construction,
so "no change" is always represented by the absence of an edit.
"""

from __future__ import annotations

import dataclasses
import string
from typing import Iterable, Sequence

from gecombine import alignment
from gecombine.alignment import OP_DEL, OP_INS, OP_MATCH, OP_SUB
from gecombine.errors import ConflictError

__all__ = [
    "Edit",
    "EditUnion",
    "LabelVector",
    "apply_edit",
    "apply_edits",
    "classify_edit",
    "conflicts",
    "derive_labels",
    "edit_union",
    "extract_edits",
    "make_edit",
    "tokenize",
]


def tokenize(text: str) -> list[str]:
    """Split on runs of whitespace. Empty or blank input gives []."""
    return text.split()


@dataclasses.dataclass(frozen=True, order=True)
class Edit:
    """One atomic correction on the source token frame.

    Ordering and equality consider only (start, end, replacement);
    type_label, proposers, and count are bookkeeping carried alongside.
    """

    start: int
    end: int
    replacement: tuple[str, ...]
    type_label: str = dataclasses.field(default="", compare=False)
    proposers: frozenset[str] = dataclasses.field(default=frozenset(), compare=False)
    count: int = dataclasses.field(default=1, compare=False)

    def __post_init__(self) -> None:
        if not (0 <= self.start <= self.end):
            raise ValueError(f"bad edit span [{self.start}, {self.end})")
        if self.start == self.end and not self.replacement:
            raise ValueError("empty edit: zero-width span with empty replacement")
        for tok in self.replacement:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"replacement token {tok!r} is empty or has whitespace")

    @property
    def is_insertion(self) -> bool:
        return self.start == self.end

    @property
    def is_deletion(self) -> bool:
        return not self.replacement

    def key(self) -> tuple[int, int, tuple[str, ...]]:
        return (self.start, self.end, self.replacement)

    def replacement_text(self) -> str:
        return " ".join(self.replacement)


def make_edit(
    start: int,
    end: int,
    replacement: str | Sequence[str],
    *,
    type_label: str = "",
    proposers: Iterable[str] = (),
    count: int = 1,
) -> Edit:
    """Convenience constructor accepting the replacement as a string."""
    toks = tuple(tokenize(replacement)) if isinstance(replacement, str) else tuple(replacement)
    return Edit(start, end, toks, type_label=type_label, proposers=frozenset(proposers), count=count)


def conflicts(e1: Edit, e2: Edit) -> bool:
    """True when the two edits cannot both be applied deterministically.

    Spans conflict when they overlap as open intervals. Insertions are
    zero-width points: two insertions at the same position conflict, and an
    insertion conflicts with any edit whose open span strictly contains its
    position. An insertion at a span boundary does not conflict.
    """
    if e1.is_insertion and e2.is_insertion:
        return e1.start == e2.start
    if e1.is_insertion:
        return e2.start < e1.start < e2.end
    if e2.is_insertion:
        return e1.start < e2.start < e1.end
    return e1.start < e2.end and e2.start < e1.end


def apply_edit(sentence: Sequence[str], edit: Edit) -> list[str]:
    """Replace sentence[start:end] with the edit's replacement tokens."""
    if edit.end > len(sentence):
        raise IndexError(
            f"edit span [{edit.start}, {edit.end}) exceeds sentence length {len(sentence)}"
        )
    out = list(sentence[: edit.start])
    out.extend(edit.replacement)
    out.extend(sentence[edit.end :])
    return out


def apply_edits(source: Sequence[str], edits: Iterable[Edit]) -> list[str]:
    """Apply a conflict-free edit set to the source.

    Edits are sorted internally, so the result does not depend on input
    order. Raises ConflictError when any pair conflicts.
    """
    ordered = sorted(edits)
    for prev, cur in zip(ordered, ordered[1:]):
        if conflicts(prev, cur) or prev.key() == cur.key():
            raise ConflictError(f"edits {prev.key()} and {cur.key()} conflict")
    out: list[str] = []
    cursor = 0
    for e in ordered:
        if e.end > len(source):
            raise IndexError(
                f"edit span [{e.start}, {e.end}) exceeds sentence length {len(source)}"
            )
        out.extend(source[cursor : e.start])
        out.extend(e.replacement)
        cursor = max(cursor, e.end)
    out.extend(source[cursor:])
    return out


def extract_edits(source: Sequence[str], hypothesis: Sequence[str]) -> list[Edit]:
    """Extract the edits that turn source into hypothesis.

    Runs the token aligner, then merges each maximal run of adjacent
    non-match ops into a single edit, so e.g. a deletion next to a
    substitution becomes one span replacement. The result is sorted,
    pairwise conflict-free, and applying it reproduces the hypothesis.
    """
    ops = alignment.align(source, hypothesis)
    edits: list[Edit] = []
    i = j = 0  # cursors into source / hypothesis
    run_start = run_end = 0  # source span of the current non-match run
    run_repl: list[str] = []
    in_run = False

    def flush() -> None:
        nonlocal in_run
        if in_run:
            edits.append(Edit(run_start, run_end, tuple(run_repl)))
            in_run = False

    for op in ops:
        if op == OP_MATCH:
            flush()
            i += 1
            j += 1
            continue
        if not in_run:
            run_start = i
            run_repl = []
            in_run = True
        if op == OP_SUB:
            run_repl.append(hypothesis[j])
            i += 1
            j += 1
        elif op == OP_DEL:
            i += 1
        else:  # OP_INS
            run_repl.append(hypothesis[j])
            j += 1
        run_end = i
    flush()
    return edits


@dataclasses.dataclass
class EditUnion:
    """Deduplicated union of all base systems' edits for one source.

    edits are sorted by (start, end, replacement) with counts aggregated;
    c is the number of base systems; p_es optionally maps each edit key to
    its classifier probability.
    """

    source: tuple[str, ...]
    edits: list[Edit]
    c: int
    p_es: dict[tuple[int, int, tuple[str, ...]], float] | None = None


def edit_union(
    per_system: Sequence[tuple[str, Sequence[Edit]]], source: Sequence[str]
) -> EditUnion:
    """Merge per-system edit lists into a deduplicated, counted union.

    Identity edits (replacement equal to the spanned source tokens) are
    dropped: a system proposing no change contributes nothing.
    """
    proposers: dict[tuple[int, int, tuple[str, ...]], set[str]] = {}
    for system_id, edits in per_system:
        for e in edits:
            if e.replacement == tuple(source[e.start : e.end]):
                continue
            proposers.setdefault(e.key(), set()).add(system_id)
    merged = [
        Edit(
            start,
            end,
            repl,
            type_label=classify_edit(Edit(start, end, repl), source),
            proposers=frozenset(who),
            count=len(who),
        )
        for (start, end, repl), who in sorted(proposers.items())
    ]
    return EditUnion(source=tuple(source), edits=merged, c=len(per_system))


_PUNCT = set(string.punctuation)


def _all_punct(tokens: Sequence[str]) -> bool:
    return bool(tokens) and all(all(ch in _PUNCT for ch in t) for t in tokens)


def classify_edit(edit: Edit, source: Sequence[str]) -> str:
    """Coarse type label: {INS, DEL, SUB} x {PUNCT, CASE, OTHER}.

    Surface heuristics only; M2 files may carry richer labels but those are
    treated as opaque strings elsewhere.
    """
    span = list(source[edit.start : edit.end])
    if edit.is_insertion:
        op = "INS"
    elif edit.is_deletion:
        op = "DEL"
    else:
        op = "SUB"
    if _all_punct(edit.replacement) or (not edit.replacement and _all_punct(span)):
        kind = "PUNCT"
    elif (
        op == "SUB"
        and len(span) == len(edit.replacement)
        and all(a.lower() == b.lower() for a, b in zip(span, edit.replacement))
    ):
        kind = "CASE"
    else:
        kind = "OTHER"
    return f"{op}:{kind}"


@dataclasses.dataclass(frozen=True)
class LabelVector:
    """Per-word and per-gap values in [0,1]; len(g) == len(w) + 1.

    g[0] sits before the first word and g[j] after word j. Gold vectors are
    hard 0/1; scorer outputs are probabilities.
    """

    w: tuple[float, ...]
    g: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.g) != len(self.w) + 1:
            raise ValueError(f"|g| must be |w|+1, got {len(self.w)} and {len(self.g)}")
        for v in self.w + self.g:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"label {v!r} outside [0, 1]")


def derive_labels(hypothesis: Sequence[str], reference: Sequence[str]) -> LabelVector:
    """Gold word/gap labels for a hypothesis against a reference.

    Words inside a substitution or deletion span of
    extract_edits(hypothesis, reference) get w=0; a pure insertion at
    position p sets g[p]=0. Everything else is 1.
    """
    m = len(hypothesis)
    w = [1.0] * m
    g = [1.0] * (m + 1)
    for e in extract_edits(hypothesis, reference):
        if e.is_insertion:
            g[e.start] = 0.0
        else:
            for i in range(e.start, e.end):
                w[i] = 0.0
    return LabelVector(tuple(w), tuple(g))
