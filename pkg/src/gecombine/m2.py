"""M2-format reading and writing.

A block is one "S <tokens>" line followed by zero or more annotation lines

    A <start> <end>|||<type>|||<correction>|||REQUIRED|||-NONE-|||<annotator>

and blocks are separated by blank lines. A "noop" annotation records that an
annotator saw nothing to change; it yields an empty gold edit set rather
than no entry at all. Deletions carry an empty correction field, and
"-NONE-" in the correction field is read as empty too.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Mapping, Sequence

from gecombine.edits import Edit, tokenize
from gecombine.errors import FormatError

__all__ = ["M2Sentence", "parse_m2", "emit_m2", "emit_m2_sentence"]

NOOP_TYPE = "noop"
_NONE = "-NONE-"


@dataclasses.dataclass
class M2Sentence:
    source: tuple[str, ...]
    annotations: dict[int, list[Edit]]


def _parse_a_line(line: str, line_no: int, source_len: int) -> tuple[int, Edit | None]:
    body = line[2:]
    fields = body.split("|||")
    if len(fields) != 6:
        raise FormatError(line_no, f"expected 6 '|||' fields, got {len(fields)}")
    span, type_label, correction, _required, _none, annotator = fields
    parts = span.split()
    if len(parts) != 2:
        raise FormatError(line_no, f"bad span field {span!r}")
    try:
        start, end = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError(line_no, f"non-integer span {span!r}") from None
    try:
        ann_id = int(annotator)
    except ValueError:
        raise FormatError(line_no, f"non-integer annotator id {annotator!r}") from None

    if type_label == NOOP_TYPE:
        if (start, end) != (-1, -1):
            raise FormatError(line_no, "noop annotation must have span -1 -1")
        return ann_id, None
    if not (0 <= start <= end <= source_len):
        raise FormatError(line_no, f"span [{start}, {end}) outside source of length {source_len}")
    replacement = () if correction == _NONE else tuple(tokenize(correction))
    if start == end and not replacement:
        raise FormatError(line_no, "zero-width span with empty correction")
    try:
        edit = Edit(start, end, replacement, type_label=type_label)
    except ValueError as exc:
        raise FormatError(line_no, str(exc)) from None
    return ann_id, edit


def parse_m2(text: str | Iterable[str]) -> list[M2Sentence]:
    """Parse an M2 stream into sentences with per-annotator gold edits."""
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]
    sentences: list[M2Sentence] = []
    current: M2Sentence | None = None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip()
        if not line:
            current = None
            continue
        if line.startswith("S ") or line == "S":
            if current is not None:
                raise FormatError(line_no, "S line inside an open block (missing blank line?)")
            current = M2Sentence(source=tuple(tokenize(line[2:])), annotations={})
            sentences.append(current)
        elif line.startswith("A "):
            if current is None:
                raise FormatError(line_no, "A line before any S line")
            ann_id, edit = _parse_a_line(line, line_no, len(current.source))
            bucket = current.annotations.setdefault(ann_id, [])
            if edit is not None:
                bucket.append(edit)
        else:
            raise FormatError(line_no, f"unrecognized line {line!r}")
    for sent in sentences:
        for edits in sent.annotations.values():
            edits.sort()
    return sentences


def emit_m2_sentence(source: Sequence[str], annotations: Mapping[int, Sequence[Edit]]) -> str:
    """Emit one M2 block (without the trailing blank separator)."""
    out = ["S " + " ".join(source)]
    for ann_id in sorted(annotations):
        edits = sorted(annotations[ann_id])
        if not edits:
            out.append(f"A -1 -1|||{NOOP_TYPE}|||{_NONE}|||REQUIRED|||{_NONE}|||{ann_id}")
            continue
        for e in edits:
            label = e.type_label or "UNK"
            out.append(
                f"A {e.start} {e.end}|||{label}|||{e.replacement_text()}"
                f"|||REQUIRED|||{_NONE}|||{ann_id}"
            )
    return "\n".join(out)


def emit_m2(sentences: Iterable[M2Sentence]) -> str:
    """Emit a full M2 stream, blocks separated by blank lines."""
    blocks = [emit_m2_sentence(s.source, s.annotations) for s in sentences]
    return "\n\n".join(blocks) + "\n" if blocks else ""
