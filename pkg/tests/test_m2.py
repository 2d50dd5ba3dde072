"""M2 parsing and emission."""

import pytest

from gecombine.edits import make_edit
from gecombine.errors import FormatError
from gecombine.m2 import M2Sentence, emit_m2, emit_m2_sentence, parse_m2

SAMPLE = """\
S This are a sentence .
A 1 2|||SUB:OTHER|||is|||REQUIRED|||-NONE-|||0
A 1 2|||SUB:OTHER|||were|||REQUIRED|||-NONE-|||1

S Nothing wrong here .
A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0
"""


def test_parse_two_blocks():
    sents = parse_m2(SAMPLE)
    assert len(sents) == 2
    first = sents[0]
    assert first.source == ("This", "are", "a", "sentence", ".")
    assert set(first.annotations) == {0, 1}
    assert first.annotations[0][0].replacement == ("is",)
    assert first.annotations[0][0].type_label == "SUB:OTHER"


def test_noop_yields_empty_edit_list():
    sents = parse_m2(SAMPLE)
    assert sents[1].annotations == {0: []}


def test_parse_accepts_iterable_of_lines():
    sents = parse_m2(SAMPLE.splitlines(keepends=True))
    assert len(sents) == 2


def test_deletion_and_none_correction_read_as_empty():
    text = (
        "S a b c\n"
        "A 1 2|||DEL:OTHER||||||REQUIRED|||-NONE-|||0\n"
        "A 2 3|||DEL:OTHER|||-NONE-|||REQUIRED|||-NONE-|||1\n"
    )
    sents = parse_m2(text)
    assert sents[0].annotations[0][0].replacement == ()
    assert sents[0].annotations[1][0].replacement == ()


def test_insertion_span():
    text = "S a b\nA 1 1|||INS:OTHER|||x y|||REQUIRED|||-NONE-|||0\n"
    edit = parse_m2(text)[0].annotations[0][0]
    assert (edit.start, edit.end, edit.replacement) == (1, 1, ("x", "y"))


def test_edits_sorted_within_annotator():
    text = (
        "S a b c d\n"
        "A 2 3|||X|||z|||REQUIRED|||-NONE-|||0\n"
        "A 0 1|||X|||y|||REQUIRED|||-NONE-|||0\n"
    )
    edits = parse_m2(text)[0].annotations[0]
    assert [e.start for e in edits] == [0, 2]


class TestFormatErrors:
    def test_a_before_s(self):
        with pytest.raises(FormatError) as exc:
            parse_m2("A 0 1|||X|||y|||REQUIRED|||-NONE-|||0\n")
        assert "line 1" in str(exc.value)

    def test_wrong_field_count(self):
        with pytest.raises(FormatError) as exc:
            parse_m2("S a\nA 0 1|||X|||y|||0\n")
        assert "line 2" in str(exc.value)
        assert exc.value.line_no == 2

    def test_span_out_of_range(self):
        with pytest.raises(FormatError) as exc:
            parse_m2("S a\nA 0 5|||X|||y|||REQUIRED|||-NONE-|||0\n")
        assert exc.value.line_no == 2

    def test_non_integer_span(self):
        with pytest.raises(FormatError):
            parse_m2("S a\nA x 1|||X|||y|||REQUIRED|||-NONE-|||0\n")

    def test_non_integer_annotator(self):
        with pytest.raises(FormatError):
            parse_m2("S a\nA 0 1|||X|||y|||REQUIRED|||-NONE-|||zero\n")

    def test_noop_with_real_span(self):
        with pytest.raises(FormatError):
            parse_m2("S a\nA 0 1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n")

    def test_zero_width_empty_correction(self):
        with pytest.raises(FormatError):
            parse_m2("S a\nA 1 1|||X|||-NONE-|||REQUIRED|||-NONE-|||0\n")

    def test_unrecognized_line(self):
        with pytest.raises(FormatError) as exc:
            parse_m2("S a\n\ngarbage\n")
        assert exc.value.line_no == 3

    def test_s_inside_open_block(self):
        with pytest.raises(FormatError) as exc:
            parse_m2("S a\nS b\n")
        assert exc.value.line_no == 2

    def test_error_message_carries_line_prefix(self):
        err = FormatError(7, "boom")
        assert str(err) == "line 7: boom"


class TestEmit:
    def test_noop_emitted_for_empty_list(self):
        block = emit_m2_sentence(("a", "b"), {0: []})
        assert block.splitlines()[1] == "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0"

    def test_annotators_and_edits_sorted(self):
        block = emit_m2_sentence(
            ("a", "b", "c"),
            {1: [make_edit(0, 1, "x", type_label="T")], 0: [make_edit(2, 3, "", type_label="T")]},
        )
        lines = block.splitlines()
        assert lines[1].endswith("|||0")
        assert lines[2].endswith("|||1")

    def test_missing_label_becomes_unk(self):
        block = emit_m2_sentence(("a",), {0: [make_edit(0, 1, "x")]})
        assert "|||UNK|||" in block

    def test_empty_stream(self):
        assert emit_m2([]) == ""

    def test_round_trip(self):
        sents = parse_m2(SAMPLE)
        assert emit_m2(parse_m2(emit_m2(sents))) == emit_m2(sents)
        again = parse_m2(emit_m2(sents))
        assert [s.source for s in again] == [s.source for s in sents]
        assert [s.annotations for s in again] == [s.annotations for s in sents]

    def test_stream_ends_with_single_newline(self):
        text = emit_m2([M2Sentence(("a",), {0: []})])
        assert text.endswith("|||0\n")
        assert not text.endswith("\n\n")
