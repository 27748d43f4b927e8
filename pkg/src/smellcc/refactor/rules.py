"""Deterministic fixes for the mechanically repairable smells."""

from __future__ import annotations

import ast
import re
import tokenize

from smellcc.detectors import (
    DetectorConfig,
    Finding,
    SmellKind,
    is_collapsible,
    self_assignment,
    unreachable_tail,
)
from smellcc.pysource import (
    BODY_FIELDS,
    Edit,
    RenderError,
    SourceUnit,
    Span,
    comment_blocks,
    delete_clause,
    delete_statements,
    enclosing_function,
    full_lines,
    is_elif,
    reindent,
)
from smellcc.scope import RenameError, rename_edits


class RuleUnsupported(Exception):
    """The rules backend has no fix for this finding."""


def to_snake_case(name: str) -> str:
    lead = name[: len(name) - len(name.lstrip("_"))]
    core = name[len(lead) :]
    core = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", core)
    core = re.sub(r"(?<=[a-z0-9])([A-Z])", r"_\1", core)
    return lead + core.lower()


# -- commented code ------------------------------------------------------------


def _fix_commented_code(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool) -> list[Edit]:
    for block in comment_blocks(unit):
        if Span(block[0].span.start, block[-1].span.end) != finding.span:
            continue
        first = block[0]
        if first.trailing:
            line_start = unit.lines.line_start(first.line)
            code = unit.text[line_start : first.span.start].rstrip(" \t")
            return [Edit(line_start + len(code), first.span.end)]
        region = full_lines(unit, first.span.start, block[-1].span.end)
        start = region.start
        if not unit.text[region.end :].strip():
            # a block at the end of the file takes the blank lines above it along
            while start and not unit.text[unit.text.rfind("\n", 0, start - 1) + 1 : start].strip():
                start = unit.text.rfind("\n", 0, start - 1) + 1
        return [Edit(start, region.end)]
    raise RuleUnsupported("commented-out code block not found")


# -- dead code -----------------------------------------------------------------


def _statement_bodies(tree: ast.AST):
    for node in ast.walk(tree):
        for name in BODY_FIELDS:
            seq = getattr(node, name, None)
            if isinstance(seq, list) and seq and isinstance(seq[0], ast.stmt):
                yield seq


def _fix_dead_code(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool) -> list[Edit]:
    for body in _statement_bodies(unit.tree):
        tail = unreachable_tail(body)
        if tail and unit.span(tail[0]).start == finding.span.start:
            return [delete_statements(unit, tail)]
    raise RuleUnsupported("unreachable statements not found")


# -- self assignment -----------------------------------------------------------


def _fix_self_assigned(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool) -> list[Edit]:
    for node in ast.walk(unit.tree):
        if isinstance(node, ast.stmt) and unit.span(node) == finding.span and self_assignment(node):
            owner, field_name, body = unit.container(node)
            if len(body) == 1 and field_name == "orelse" and not _is_elif_body(unit, owner):
                try:
                    return [delete_clause(unit, owner, field_name)]
                except RenderError:
                    pass
            return [delete_statements(unit, [node])]
    raise RuleUnsupported("self-assignment not found")


def _is_elif_body(unit: SourceUnit, owner: ast.AST) -> bool:
    # the orelse of an If whose sole statement is an elif is not an `else:` clause
    return (
        isinstance(owner, ast.If)
        and len(owner.orelse) == 1
        and isinstance(owner.orelse[0], ast.If)
        and is_elif(unit, owner.orelse[0])
    )


# -- empty nested block --------------------------------------------------------


def _fix_empty_nested(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool) -> list[Edit]:
    for node in ast.walk(unit.tree):
        if not isinstance(node, (ast.If, ast.For, ast.AsyncFor, ast.While, ast.Try)):
            continue
        orelse = node.orelse
        if not orelse or Span(unit.span(orelse[0]).start, unit.span(orelse[-1]).end) != finding.span:
            continue
        if all(isinstance(s, ast.Pass) for s in orelse):
            return [delete_clause(unit, node, "orelse")]
    raise RuleUnsupported("only an empty `else` branch can be removed mechanically")


# -- collapsible if ------------------------------------------------------------

_NEEDS_PARENS = (ast.BoolOp, ast.IfExp, ast.Lambda, ast.NamedExpr, ast.Yield, ast.YieldFrom)


def _condition_text(unit: SourceUnit, test: ast.expr) -> str:
    text = unit.segment(test)
    wrap = "\n" in text or (
        isinstance(test, _NEEDS_PARENS) and not (isinstance(test, ast.BoolOp) and isinstance(test.op, ast.And))
    )
    return f"({text})" if wrap else text


def _header_colon(unit: SourceUnit, node: ast.If) -> int:
    test_end = unit.span(node.test).end
    body_start = unit.span(node.body[0]).start
    for tok in unit.tokens_in(test_end, body_start):
        if tok.type == tokenize.OP and tok.string == ":":
            return unit.token_offset(tok)
    raise RenderError("header colon not found")


def _fix_collapsible_if(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool) -> list[Edit]:
    outer = next(
        (n for n in ast.walk(unit.tree) if is_collapsible(n) and unit.span(n) == finding.span),
        None,
    )
    if outer is None:
        raise RuleUnsupported("collapsible if not found")
    chain = [outer]
    while is_collapsible(chain[-1]):
        chain.append(chain[-1].body[0])
    inner = chain[-1]

    keyword = "elif" if is_elif(unit, outer) else "if"
    header = f"{keyword} " + " and ".join(_condition_text(unit, n.test) for n in chain) + ":"

    colon = _header_colon(unit, outer)
    inner_colon = _header_colon(unit, inner)
    first = inner.body[0]
    first_start = unit.span(first).start
    end = unit.span(inner).end
    between = [c for c in unit.comments if colon < c.span.start < first_start]

    first_line, _ = unit.position(first_start)
    inner_header_line, _ = unit.position(inner_colon)
    if first_line == inner_header_line:
        if between:
            raise RuleUnsupported("comments between merged single-line ifs")
        return [Edit(unit.span(outer).start, end, header + unit.text[inner_colon + 1 : end])]

    new_indent = unit.indent_of(unit.position(unit.span(chain[1]).start)[0])
    old_indent = unit.indent_of(first_line)
    body = unit.text[unit.lines.line_start(first_line) : end]
    body = reindent(body, old_indent, new_indent, unit.multiline_string_lines, first_line)
    comment_lines = "".join(f"{new_indent}#{c.text}\n" for c in between)
    return [Edit(unit.span(outer).start, end, header + "\n" + comment_lines + body)]


# -- naming --------------------------------------------------------------------


def _fix_naming(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool) -> list[Edit]:
    old = unit.text[finding.span.start : finding.span.end]
    target_fn = None
    for fn in unit.functions():
        if unit.name_span(fn) == finding.span:
            target_fn = fn
            break
    if target_fn is not None:
        pattern = config.naming_regex_function
    else:
        pattern = config.naming_regex_variable
        target_fn = enclosing_function(unit, finding.span)
    new = to_snake_case(old)
    if new == old or not re.search(pattern, new):
        raise RuleUnsupported(f"no compliant name can be derived from {old!r}")
    try:
        return rename_edits(unit, target_fn, old, new, rename_exports=rename_exports, pattern=pattern)
    except RenameError as exc:
        raise RuleUnsupported(str(exc)) from exc


RULE_FIXES = {
    SmellKind.CommentedCode: _fix_commented_code,
    SmellKind.DeadCode: _fix_dead_code,
    SmellKind.SelfAssignedVariables: _fix_self_assigned,
    SmellKind.EmptyNestedCodeBlocks: _fix_empty_nested,
    SmellKind.CollapsibleIfStatements: _fix_collapsible_if,
    SmellKind.NamingConvention: _fix_naming,
}


def rule_edits(unit: SourceUnit, finding: Finding, config: DetectorConfig, rename_exports: bool = False) -> list[Edit]:
    fix = RULE_FIXES.get(finding.kind)
    if fix is None:
        raise RuleUnsupported(f"rules backend does not support {finding.kind.value}")
    return fix(unit, finding, config, rename_exports)
