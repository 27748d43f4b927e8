import ast
import random
import sys

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import fixture_sources
from smellcc.pysource import (
    BOM,
    EncodingError,
    Edit,
    LineIndex,
    RenderError,
    Span,
    apply_edits,
    delete_statements,
    full_lines,
    map_offset,
    parse,
    parse_file,
    render,
)

SOURCES = fixture_sources()
PARSEABLE = [p for p in SOURCES if "broken" not in p.name]


@pytest.mark.parametrize("path", SOURCES, ids=lambda p: str(p.relative_to(p.parents[2])))
def test_fixture_round_trip(path):
    assert render(parse_file(path)) == path.read_text(encoding="utf-8")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "x = 1",
        "x = 1\r\ny = 2\r\n",
        BOM + "print('hi')\n",
        "def f():\n\treturn 1\n",
        "s = '''\n  keep   \n'''\n",
        "# only a comment\n",
        "x = 'é'  # ünïcode\n",
        "if x:\n    pass\n\n\n\n",
    ],
)
def test_round_trip_edge_cases(text):
    assert render(parse(text)) == text


def test_bytes_are_decoded_as_utf8():
    assert parse("x = 'ü'\n".encode()).text == "x = 'ü'\n"
    with pytest.raises(EncodingError):
        parse(b"x = '\xff'\n")


@pytest.mark.parametrize(
    "text",
    [
        "def f(:\n    pass\n",
        "print 'py2'\n",
        "if x:\n        a = 1\n\tb = 2\n",
    ],
)
def test_unparseable_input_raises_syntax_error(text):
    with pytest.raises(SyntaxError) as info:
        parse(text)
    assert info.value.lineno is not None


def test_spans_cover_source_segments():
    unit = parse("def f(a, b):\n    return a  +  b\n")
    ret = unit.tree.body[0].body[0]
    assert unit.segment(ret) == "return a  +  b"
    assert unit.segment(ret.value) == "a  +  b"


def test_character_offsets_with_multibyte_text():
    unit = parse("s = 'ééé'; t = s\n")
    second = unit.tree.body[1]
    assert unit.segment(second) == "t = s"
    assert unit.span(second).start == "s = 'ééé'; ".__len__()


def test_decorators_belong_to_function_span():
    unit = parse("@wrap\n@other(1)\ndef f():\n    pass\n")
    assert unit.span(unit.functions()[0]).start == 0


def test_line_index_positions():
    index = LineIndex("ab\ncd\n\nef")
    assert index.position(0) == (1, 0)
    assert index.position(4) == (2, 1)
    assert index.offset(4, 1) == 8
    assert index.line_text(2) == "cd"
    assert len(index) == 4


def test_apply_edits_right_to_left():
    text = "alpha beta gamma"
    edits = [Edit(0, 5, "A"), Edit(11, 16, "G")]
    assert apply_edits(text, edits) == "A beta G"


def test_overlapping_edits_rejected():
    with pytest.raises(RenderError):
        apply_edits("abcdef", [Edit(0, 3, "x"), Edit(2, 4, "y")])


def test_unit_apply_rejects_broken_result():
    unit = parse("if x:\n    y = 1\n")
    with pytest.raises(RenderError):
        unit.apply([Edit(6, 15, "")])


def test_map_offset():
    edits = [Edit(2, 4, "xyz")]
    assert map_offset(1, edits) == 1
    assert map_offset(2, edits) == 2
    assert map_offset(3, edits) is None
    assert map_offset(5, edits) == 6


def test_full_lines_includes_newline():
    unit = parse("a = 1\nb = 2\nc = 3\n")
    span = full_lines(unit, 7, 8)
    assert unit.text[span.start : span.end] == "b = 2\n"


def test_comments_are_collected_with_offsets():
    unit = parse("x = 1  # trailing\n# own line\n")
    assert [(c.text, c.trailing) for c in unit.comments] == [(" trailing", True), (" own line", False)]
    for c in unit.comments:
        assert unit.text[c.span.start] == "#"


# -- properties ----------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet="abc \n#'=()", max_size=40))
def test_round_trip_on_arbitrary_parseable_text(text):
    try:
        unit = parse(text)
    except (SyntaxError, ValueError):
        return
    assert render(unit) == text


def _all_spans(unit):
    for node in ast.walk(unit.tree):
        span = unit.span(node)
        if span is not None:
            yield node, span


@pytest.mark.parametrize("path", PARSEABLE[::3], ids=lambda p: p.name)
def test_child_spans_nest_inside_parents(path):
    unit = parse_file(path)
    for node, span in _all_spans(unit):
        assert 0 <= span.start <= span.end <= len(unit.text)
        for child in ast.iter_child_nodes(node):
            child_span = unit.span(child)
            if child_span is not None and not isinstance(node, (ast.arguments,)):
                assert child_span in span, (ast.dump(child)[:60], ast.dump(node)[:60])


def _statement_lists(tree):
    for node in ast.walk(tree):
        for name in ("body", "orelse", "finalbody"):
            seq = getattr(node, name, None)
            if isinstance(seq, list) and seq and isinstance(seq[0], ast.stmt):
                yield seq
        for handler in getattr(node, "handlers", []):
            yield handler.body


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(PARSEABLE), st.randoms(use_true_random=False))
def test_random_statement_deletion_reparses(path, rnd: random.Random):
    unit = parse_file(path)
    lists = list(_statement_lists(unit.tree))
    if not lists:
        return
    body = rnd.choice(lists)
    i = rnd.randrange(len(body))
    j = rnd.randrange(i, len(body)) + 1
    new = unit.apply([delete_statements(unit, body[i:j])])
    assert render(new) == new.text
    compile(new.text.lstrip(BOM), str(path), "exec")


def test_span_helpers():
    assert Span(2, 4) in Span(0, 10)
    assert Span(0, 10) not in Span(2, 4)
    assert Span(0, 3).overlaps(Span(2, 5))
    assert not Span(0, 2).overlaps(Span(2, 5))
    assert len(Span(3, 7)) == 4


def test_python_version_supported():
    assert sys.version_info >= (3, 10)
