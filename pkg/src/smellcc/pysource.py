"""Span-preserving Python source units.

Parsing is delegated to :mod:`ast` and :mod:`tokenize`; this module adds
character-offset spans for every node, comment retention with block
grouping, and text-patch editing so untouched regions render byte-for-byte.

Offsets are indices into the decoded source text (``str``), not UTF-8 byte
offsets; for ASCII sources the two coincide.
"""

from __future__ import annotations

import ast
import io
import os
import tokenize
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

FunctionNode = Union[ast.FunctionDef, ast.AsyncFunctionDef]
FUNCTION_TYPES = (ast.FunctionDef, ast.AsyncFunctionDef)
BODY_FIELDS = ("body", "orelse", "finalbody")

BOM = "﻿"


class EncodingError(ValueError):
    """Source bytes are not valid UTF-8."""


class RenderError(ValueError):
    """An edit produced text that no longer parses."""


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __contains__(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def __len__(self) -> int:
        return self.end - self.start


class LineIndex:
    """Maps character offsets to (1-based line, 0-based column) and back."""

    def __init__(self, text: str):
        self._text = text
        starts = [0]
        find = text.find
        pos = find("\n")
        while pos != -1:
            starts.append(pos + 1)
            pos = find("\n", pos + 1)
        self._starts = starts

    def __len__(self) -> int:
        return len(self._starts)

    def position(self, offset: int) -> tuple[int, int]:
        if not 0 <= offset <= len(self._text):
            raise IndexError(offset)
        line = bisect_right(self._starts, offset)
        return line, offset - self._starts[line - 1]

    def offset(self, line: int, col: int) -> int:
        return self._starts[line - 1] + col

    def line_start(self, line: int) -> int:
        return self._starts[line - 1]

    def line_end(self, line: int, *, newline: bool = True) -> int:
        """Offset just past the line's newline (or before it, if ``newline`` is false)."""
        if line < len(self._starts):
            nxt = self._starts[line]
            return nxt if newline else nxt - 1
        return len(self._text)

    def line_text(self, line: int) -> str:
        return self._text[self.line_start(line) : self.line_end(line, newline=False)]


@dataclass(frozen=True)
class Comment:
    span: Span
    text: str  # without the leading '#'
    block: int
    line: int
    col: int
    trailing: bool  # shares its line with code


@dataclass(frozen=True)
class Edit:
    """Replace ``text[start:end]`` with ``replacement``."""

    start: int
    end: int
    replacement: str = ""

    @property
    def delta(self) -> int:
        return len(self.replacement) - (self.end - self.start)


@dataclass(frozen=True, eq=False)
class SourceUnit:
    """One parsed source file. Immutable; edits produce new units."""

    path: str | None
    text: str
    lines: LineIndex = field(repr=False)
    tree: ast.Module = field(repr=False)
    comments: tuple[Comment, ...] = field(repr=False)
    tokens: tuple[tokenize.TokenInfo, ...] = field(repr=False)

    # -- spans -----------------------------------------------------------

    def _char_col(self, lineno: int, byte_col: int) -> int:
        line = self.lines.line_text(lineno)
        if lineno == 1 and line.startswith(BOM):
            line = line[1:]
            shift = 1
        else:
            shift = 0
        if line.isascii():
            return byte_col + shift
        return len(line.encode("utf-8")[:byte_col].decode("utf-8", errors="ignore")) + shift

    def offset_of(self, lineno: int, byte_col: int) -> int:
        return self.lines.offset(lineno, self._char_col(lineno, byte_col))

    def span(self, node: ast.AST) -> Span | None:
        """Span of ``node``; decorated definitions start at their first ``@``."""
        cached = self._spans.get(id(node))
        if cached is not None:
            return cached
        span = self._compute_span(node)
        if span is not None:
            self._spans[id(node)] = span
        return span

    @cached_property
    def _spans(self) -> dict[int, Span]:
        return {}

    def _compute_span(self, node: ast.AST) -> Span | None:
        if isinstance(node, ast.Module):
            return Span(0, len(self.text))
        if getattr(node, "end_lineno", None) is None:
            child_spans = [self.span(c) for c in ast.iter_child_nodes(node)]
            child_spans = [s for s in child_spans if s is not None]
            if not child_spans:
                return None
            return Span(min(s.start for s in child_spans), max(s.end for s in child_spans))
        start = self.offset_of(node.lineno, node.col_offset)
        end = self.offset_of(node.end_lineno, node.end_col_offset)
        decorators = getattr(node, "decorator_list", None)
        if decorators:
            first = decorators[0]
            at = self.offset_of(first.lineno, first.col_offset) - 1
            while at > 0 and self.text[at] != "@":
                at -= 1
            start = min(start, at)
        return Span(start, end)

    def segment(self, node_or_span: ast.AST | Span) -> str:
        span = node_or_span if isinstance(node_or_span, Span) else self.span(node_or_span)
        if span is None:
            return ""
        return self.text[span.start : span.end]

    def position(self, offset: int) -> tuple[int, int]:
        return self.lines.position(offset)

    # -- structure -------------------------------------------------------

    @cached_property
    def parents(self) -> dict[int, ast.AST]:
        parents: dict[int, ast.AST] = {}
        for node in ast.walk(self.tree):
            for child in ast.iter_child_nodes(node):
                parents[id(child)] = node
        return parents

    def parent(self, node: ast.AST) -> ast.AST | None:
        return self.parents.get(id(node))

    def ancestors(self, node: ast.AST) -> Iterator[ast.AST]:
        cur = self.parent(node)
        while cur is not None:
            yield cur
            cur = self.parent(cur)

    def container(self, stmt: ast.stmt) -> tuple[ast.AST, str, list[ast.stmt]]:
        """The (owner, field name, statement list) holding ``stmt``."""
        owner = self.parent(stmt)
        if owner is None:
            raise ValueError("node is not part of this unit")
        for name in BODY_FIELDS:
            seq = getattr(owner, name, None)
            if isinstance(seq, list) and any(s is stmt for s in seq):
                return owner, name, seq
        raise ValueError("node is not a statement in a body")

    def functions(self) -> list[FunctionNode]:
        found = [n for n in ast.walk(self.tree) if isinstance(n, FUNCTION_TYPES)]
        return sorted(found, key=lambda n: self.span(n).start)

    def tokens_in(self, start: int, end: int) -> Iterator[tokenize.TokenInfo]:
        for tok, off in zip(self.tokens, self._token_offsets):
            if off < start:
                continue
            if off >= end:
                break
            yield tok

    @cached_property
    def _token_offsets(self) -> list[int]:
        return [self.lines.offset(*t.start) for t in self.tokens]

    def token_offset(self, tok: tokenize.TokenInfo) -> int:
        return self.lines.offset(*tok.start)

    def find_name_token(self, name: str, start: int, end: int | None = None) -> Span | None:
        """Span of the first NAME token spelling ``name`` in ``[start, end)``."""
        stop = len(self.text) if end is None else end
        for tok in self.tokens_in(start, stop):
            if tok.type == tokenize.NAME and tok.string == name:
                off = self.token_offset(tok)
                return Span(off, off + len(name))
        return None

    def name_span(self, node: ast.AST) -> Span | None:
        """Span of the identifier a def/class statement binds."""
        if isinstance(node, (*FUNCTION_TYPES, ast.ClassDef)):
            kw_line = node.lineno
            kw_start = self.offset_of(kw_line, node.col_offset)
            return self.find_name_token(node.name, kw_start + 1)
        return None

    @cached_property
    def multiline_string_lines(self) -> frozenset[int]:
        """Lines that begin inside a string token started on an earlier line."""
        inside: set[int] = set()
        for tok in self.tokens:
            if tok.type == tokenize.STRING and tok.end[0] > tok.start[0]:
                inside.update(range(tok.start[0] + 1, tok.end[0] + 1))
        return frozenset(inside)

    def indent_of(self, line: int) -> str:
        text = self.lines.line_text(line)
        return text[: len(text) - len(text.lstrip(" \t"))]

    # -- editing -----------------------------------------------------------

    def apply(self, edits: Iterable[Edit]) -> "SourceUnit":
        """Apply non-overlapping edits right-to-left and re-parse."""
        text = apply_edits(self.text, edits)
        try:
            return parse(text, path=self.path)
        except SyntaxError as exc:
            raise RenderError(f"edit produced unparseable source: {exc}") from exc


def apply_edits(text: str, edits: Iterable[Edit]) -> str:
    ordered = sorted(edits, key=lambda e: (e.start, e.end), reverse=True)
    prev_start = len(text) + 1
    for e in ordered:
        if not 0 <= e.start <= e.end <= len(text):
            raise RenderError(f"edit {e} out of range")
        if e.end > prev_start:
            raise RenderError("overlapping edits")
        text = text[: e.start] + e.replacement + text[e.end :]
        prev_start = e.start
    return text


def map_offset(offset: int, edits: Sequence[Edit]) -> int | None:
    """Follow ``offset`` through ``edits`` (all against the same text).

    Returns ``None`` when the offset falls strictly inside a replaced region.
    """
    shift = 0
    for e in edits:
        if offset <= e.start:
            continue
        if offset >= e.end:
            shift += e.delta
        else:
            return None
    return offset + shift


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"source is not valid UTF-8: {exc}") from exc


def parse(source: str | bytes | os.PathLike, path: str | None = None) -> SourceUnit:
    """Parse text, raw bytes or a file path into a :class:`SourceUnit`.

    Raises :class:`SyntaxError` (with ``lineno``/``offset``) for unparseable
    input, including inconsistent tab/space indentation, and
    :class:`EncodingError` for undecodable bytes.
    """
    if isinstance(source, os.PathLike):
        path = str(source) if path is None else path
        source = Path(source).read_bytes()
    text = _decode(source) if isinstance(source, bytes) else source

    body = text[1:] if text.startswith(BOM) else text
    tree = ast.parse(body, filename=path or "<unknown>", type_comments=False)
    tokens = tuple(_tokenize(text, body))
    lines = LineIndex(text)
    comments = tuple(_collect_comments(tokens, lines))
    return SourceUnit(path, text, lines, tree, comments, tokens)


def parse_file(path: str | os.PathLike) -> SourceUnit:
    return parse(Path(path))


def render(unit: SourceUnit) -> str:
    return unit.text


def _tokenize(text: str, body: str) -> Iterator[tokenize.TokenInfo]:
    shift_first = len(text) - len(body)
    try:
        for tok in tokenize.generate_tokens(io.StringIO(body).readline):
            if shift_first and (tok.start[0] == 1 or tok.end[0] == 1):
                sr, sc = tok.start
                er, ec = tok.end
                tok = tok._replace(
                    start=(sr, sc + shift_first if sr == 1 else sc),
                    end=(er, ec + shift_first if er == 1 else ec),
                )
            yield tok
    except (tokenize.TokenError, IndentationError) as exc:  # pragma: no cover - ast.parse rejects first
        raise SyntaxError(str(exc)) from exc


def _collect_comments(tokens: Sequence[tokenize.TokenInfo], lines: LineIndex) -> Iterator[Comment]:
    code_lines: set[int] = set()
    skip = {tokenize.COMMENT, tokenize.NL, tokenize.NEWLINE, tokenize.INDENT,
            tokenize.DEDENT, tokenize.ENDMARKER}
    for tok in tokens:
        if tok.type not in skip:
            code_lines.update(range(tok.start[0], tok.end[0] + 1))

    block = -1
    prev: tuple[int, int] | None = None  # (line, col) of the previous full-line comment
    for tok in tokens:
        if tok.type != tokenize.COMMENT:
            continue
        line, col = tok.start
        trailing = line in code_lines
        if trailing or prev is None or prev != (line - 1, col):
            block += 1
        prev = None if trailing else (line, col)
        start = lines.offset(line, col)
        yield Comment(
            span=Span(start, start + len(tok.string)),
            text=tok.string[1:],
            block=block,
            line=line,
            col=col,
            trailing=trailing,
        )


def comment_blocks(unit: SourceUnit) -> list[list[Comment]]:
    blocks: dict[int, list[Comment]] = {}
    for c in unit.comments:
        blocks.setdefault(c.block, []).append(c)
    return [blocks[k] for k in sorted(blocks)]


def enclosing_function(unit: SourceUnit, span: Span) -> FunctionNode | None:
    """Innermost function whose span contains ``span``, or ``None`` at module level."""
    best: FunctionNode | None = None
    for fn in unit.functions():
        fs = unit.span(fn)
        if span in fs and (best is None or fs in unit.span(best)):
            best = fn
    return best


def is_method(unit: SourceUnit, fn: FunctionNode) -> bool:
    return isinstance(unit.parent(fn), ast.ClassDef)


# -- statement-level edit helpers ----------------------------------------------


def _line_is_blank_before(unit: SourceUnit, offset: int) -> bool:
    line, _ = unit.position(offset)
    return unit.text[unit.lines.line_start(line) : offset].strip() == ""


def _rest_of_line(unit: SourceUnit, offset: int) -> str:
    line, _ = unit.position(offset)
    return unit.text[offset : unit.lines.line_end(line, newline=False)]


def full_lines(unit: SourceUnit, start: int, end: int) -> Span:
    """Widen ``[start, end)`` to whole lines, including the final newline."""
    first, _ = unit.position(start)
    last, _ = unit.position(end)
    return Span(unit.lines.line_start(first), unit.lines.line_end(last))


def delete_statements(unit: SourceUnit, stmts: Sequence[ast.stmt]) -> Edit:
    """Edit removing consecutive sibling statements.

    If they make up their entire body the body is replaced by ``pass`` so the
    result stays well-formed.
    """
    _, _, body = unit.container(stmts[0])
    start = unit.span(stmts[0]).start
    end = unit.span(stmts[-1]).end
    if len(stmts) == len(body):
        return Edit(start, end, "pass")

    rest = _rest_of_line(unit, end)
    stripped = rest.lstrip(" \t")
    if _line_is_blank_before(unit, start) and (not stripped or stripped.startswith("#")):
        region = full_lines(unit, start, end)
        return Edit(region.start, region.end)
    if stripped.startswith(";"):
        after = end + (len(rest) - len(stripped)) + 1
        while after < len(unit.text) and unit.text[after] in " \t":
            after += 1
        return Edit(start, after)
    line, _ = unit.position(start)
    before = unit.text[unit.lines.line_start(line) : start].rstrip(" \t")
    if before.endswith(";"):
        return Edit(unit.lines.line_start(line) + len(before) - 1, end)
    raise RenderError("cannot isolate statement for deletion")


def clause_keyword(unit: SourceUnit, owner: ast.AST, field_name: str) -> Span | None:
    """Span of the ``else``/``finally`` keyword introducing ``owner.<field_name>``."""
    keyword = "finally" if field_name == "finalbody" else "else"
    seq = getattr(owner, field_name)
    if not seq:
        return None
    first = unit.span(seq[0]).start
    previous = [unit.span(s).end for s in owner.body]
    for name in ("handlers", "orelse"):
        if name != field_name and getattr(owner, name, None):
            sib = getattr(owner, name)
            if unit.span(sib[-1]).end <= first:
                previous.append(unit.span(sib[-1]).end)
    lo = max(previous)
    found: Span | None = None
    for tok in unit.tokens_in(lo, first):
        if tok.type == tokenize.NAME and tok.string == keyword:
            off = unit.token_offset(tok)
            found = Span(off, off + len(keyword))
    return found


def is_elif(unit: SourceUnit, node: ast.If) -> bool:
    return unit.text.startswith("elif", unit.span(node).start)


def delete_clause(unit: SourceUnit, owner: ast.AST, field_name: str) -> Edit:
    """Edit removing an ``else:``/``finally:`` clause together with its body."""
    kw = clause_keyword(unit, owner, field_name)
    if kw is None:
        raise RenderError(f"no {field_name} clause to delete")
    end = unit.span(getattr(owner, field_name)[-1]).end
    if _line_is_blank_before(unit, kw.start):
        region = full_lines(unit, kw.start, end)
        return Edit(region.start, region.end)
    raise RenderError("clause keyword does not start its line")


def reindent(text: str, old: str, new: str, protected: Iterable[int] = (), first_line: int = 1) -> str:
    """Swap indentation prefix ``old`` for ``new`` on each line.

    Lines numbered (from ``first_line``) in ``protected`` are left alone; they
    continue a multi-line string.
    """
    protected = set(protected)
    out = []
    for i, line in enumerate(text.splitlines(keepends=True), start=first_line):
        if i in protected or not line.strip():
            out.append(line)
        elif line.startswith(old):
            out.append(new + line[len(old) :])
        else:
            # continuation line indented less than the block; strip what we can
            lead = len(line) - len(line.lstrip(" \t"))
            out.append(line[min(lead, max(len(old) - len(new), 0)) :])
    return "".join(out)


def walk_shallow(node: ast.AST) -> Iterator[ast.AST]:
    """Walk ``node``'s subtree without entering nested functions, lambdas or classes."""
    stack = list(ast.iter_child_nodes(node))
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, (*FUNCTION_TYPES, ast.Lambda, ast.ClassDef)):
            continue
        stack.extend(ast.iter_child_nodes(cur))
