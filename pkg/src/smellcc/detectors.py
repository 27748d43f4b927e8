"""Rules for the ten smell kinds, producing span-sorted findings."""

from __future__ import annotations

import ast
import enum
import io
import json
import keyword
import re
import textwrap
import tokenize
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from smellcc.complexity import cognitive_complexity, is_nested_function
from smellcc.pysource import (
    BODY_FIELDS,
    Comment,
    FunctionNode,
    SourceUnit,
    Span,
    comment_blocks,
    enclosing_function,
    walk_shallow,
)


class SmellKind(str, enum.Enum):
    CommentedCode = "CommentedCode"
    NamingConvention = "NamingConvention"
    EmptyNestedCodeBlocks = "EmptyNestedCodeBlocks"
    CollapsibleIfStatements = "CollapsibleIfStatements"
    LongParameterList = "LongParameterList"
    HighCognitiveComplexity = "HighCognitiveComplexity"
    DeadCode = "DeadCode"
    SelfAssignedVariables = "SelfAssignedVariables"
    IdenticalExpressions = "IdenticalExpressions"
    ReturnAndYield = "ReturnAndYield"

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def parse(cls, value: str) -> "SmellKind":
        key = re.sub(r"[^a-z]", "", value.lower())
        for kind in cls:
            if kind.value.lower() == key or re.sub(r"[^a-z]", "", kind.title.lower()) == key:
                return kind
        raise ValueError(f"unknown smell kind: {value!r}")


_TITLES = {
    SmellKind.CommentedCode: "Commented Code",
    SmellKind.NamingConvention: "Naming Convention",
    SmellKind.EmptyNestedCodeBlocks: "Empty Nested Code Blocks",
    SmellKind.CollapsibleIfStatements: "Collapsible if Statements",
    SmellKind.LongParameterList: "Long Parameter List",
    SmellKind.HighCognitiveComplexity: "High Cognitive Complexity",
    SmellKind.DeadCode: "Dead Code",
    SmellKind.SelfAssignedVariables: "Self-assigned Variables",
    SmellKind.IdenticalExpressions: "Identical Expressions",
    SmellKind.ReturnAndYield: "Return and Yield",
}

KIND_ORDER = {kind: i for i, kind in enumerate(SmellKind)}
METRIC_KINDS = frozenset({SmellKind.HighCognitiveComplexity, SmellKind.LongParameterList})

RETURN_YIELD_MESSAGE = "Use only return or only yield, not both"


@dataclass(frozen=True)
class Finding:
    kind: SmellKind
    span: Span
    message: str
    function: str | None = None
    metric: int | None = None
    path: str = ""
    start_line: int = 0
    start_col: int = 0
    end_line: int = 0
    end_col: int = 0

    def __post_init__(self):
        if (self.metric is not None) != (self.kind in METRIC_KINDS):
            raise ValueError(f"metric must be set exactly for metric kinds, got {self.kind}")
        if not self.message:
            raise ValueError("empty finding message")

    @property
    def sort_key(self) -> tuple:
        return (self.span.start, self.span.end, KIND_ORDER[self.kind])

    @property
    def id(self) -> str:
        return f"{self.path}:{self.start_line}:{self.start_col}:{self.kind.value}"

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "path": self.path,
            "start_line": self.start_line,
            "start_col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
            "function": self.function,
            "message": self.message,
            "metric": self.metric,
            "start": self.span.start,
            "end": self.span.end,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Finding":
        return cls(
            kind=SmellKind(data["kind"]),
            span=Span(data.get("start", 0), data.get("end", 0)),
            message=data["message"],
            function=data.get("function"),
            metric=data.get("metric"),
            path=data.get("path", ""),
            start_line=data["start_line"],
            start_col=data["start_col"],
            end_line=data["end_line"],
            end_col=data["end_col"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class DetectorConfig:
    cc_threshold: int = 15
    max_params: int = 13
    naming_regex_function: str = r"^[a-z_][a-z0-9_]{2,}$"
    naming_regex_variable: str = r"^[_a-z][a-z0-9_]*$"
    identical_expr_excluded_operators: frozenset[str] = frozenset({"+", "*", "<<"})
    commented_code_min_score: int = 2
    enabled_kinds: frozenset[SmellKind] = field(default_factory=lambda: frozenset(SmellKind))

    def __post_init__(self):
        if self.cc_threshold < 1:
            raise ValueError("cc_threshold must be >= 1")
        if self.max_params < 1:
            raise ValueError("max_params must be >= 1")
        re.compile(self.naming_regex_function)
        re.compile(self.naming_regex_variable)
        object.__setattr__(self, "enabled_kinds", frozenset(SmellKind(k) for k in self.enabled_kinds))
        object.__setattr__(
            self, "identical_expr_excluded_operators", frozenset(self.identical_expr_excluded_operators)
        )

    def only(self, *kinds: SmellKind) -> "DetectorConfig":
        return replace(self, enabled_kinds=frozenset(kinds))

    def snapshot(self) -> dict:
        return {
            "cc_threshold": self.cc_threshold,
            "max_params": self.max_params,
            "naming_regex_function": self.naming_regex_function,
            "naming_regex_variable": self.naming_regex_variable,
            "identical_expr_excluded_operators": sorted(self.identical_expr_excluded_operators),
            "commented_code_min_score": self.commented_code_min_score,
            "enabled_kinds": sorted(k.value for k in self.enabled_kinds),
        }


DEFAULT_CONFIG = DetectorConfig()


def make_finding(
    unit: SourceUnit,
    kind: SmellKind,
    span: Span,
    message: str,
    *,
    metric: int | None = None,
    function: str | None = None,
) -> Finding:
    if function is None:
        fn = enclosing_function(unit, span)
        function = fn.name if fn is not None else None
    start_line, start_col = unit.position(span.start)
    end_line, end_col = unit.position(span.end)
    return Finding(
        kind=kind,
        span=span,
        message=message,
        function=function,
        metric=metric,
        path=unit.path or "",
        start_line=start_line,
        start_col=start_col,
        end_line=end_line,
        end_col=end_col,
    )


def scan(unit: SourceUnit, config: DetectorConfig = DEFAULT_CONFIG) -> list[Finding]:
    """All findings of the enabled kinds, sorted by span, without duplicates."""
    seen: set[tuple[SmellKind, Span]] = set()
    findings: list[Finding] = []
    for kind in SmellKind:
        if kind not in config.enabled_kinds:
            continue
        for finding in _RULES[kind](unit, config):
            key = (finding.kind, finding.span)
            if key not in seen:
                seen.add(key)
                findings.append(finding)
    findings.sort(key=lambda f: f.sort_key)
    return findings


# -- parameters ----------------------------------------------------------------


def parameters(fn: FunctionNode | ast.Lambda) -> list[ast.arg]:
    a = fn.args
    params = list(a.posonlyargs) + list(a.args)
    if a.vararg:
        params.append(a.vararg)
    params.extend(a.kwonlyargs)
    if a.kwarg:
        params.append(a.kwarg)
    return params


def parameter_count(fn: FunctionNode, *, is_method: bool = False) -> int:
    """Declared parameters, not counting a leading self/cls of a method."""
    params = parameters(fn)
    positional = fn.args.posonlyargs + fn.args.args
    if is_method and positional and positional[0].arg in ("self", "cls"):
        params = params[1:]
    return len(params)


# -- individual rules ----------------------------------------------------------

_PRAGMA = re.compile(r"^\s*(type:|noqa|pylint:|fmt:|pragma|mypy:|isort:|pyright:|-\*-|coding[:=]|!)")
_ASSIGN_OPS = frozenset(
    {"=", ":=", "+=", "-=", "*=", "/=", "//=", "%=", "**=", "@=", "&=", "|=", "^=", ">>=", "<<="}
)


def commented_code_text(block: list[Comment]) -> str:
    lines = [c.text[1:] if c.text.startswith(" ") else c.text for c in block]
    return textwrap.dedent("\n".join(lines)) + "\n"


def code_score(text: str) -> int | None:
    """Code-indicative token count of ``text``, or ``None`` if it is not code."""
    try:
        tree = ast.parse(text)
    except (SyntaxError, ValueError):
        return None
    if not tree.body:
        return None
    score = 2 * sum(isinstance(n, ast.Call) for n in ast.walk(tree))
    try:
        for tok in tokenize.generate_tokens(io.StringIO(text).readline):
            if tok.type == tokenize.OP and tok.string in _ASSIGN_OPS:
                score += 1
            elif tok.type == tokenize.NAME and keyword.iskeyword(tok.string):
                score += 1
    except (tokenize.TokenError, IndentationError):
        return None
    return score


def _commented_code(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for block in comment_blocks(unit):
        if any(_PRAGMA.match(c.text) for c in block):
            continue
        score = code_score(commented_code_text(block))
        if score is None or score < config.commented_code_min_score:
            continue
        span = Span(block[0].span.start, block[-1].span.end)
        yield make_finding(unit, SmellKind.CommentedCode, span, "Remove this commented out code.")


def _identifier_span(unit: SourceUnit, node: ast.AST, name: str) -> Span:
    start = unit.span(node).start
    return Span(start, start + len(name))


def _local_bindings(fn: FunctionNode) -> dict[str, ast.AST]:
    """First binding node of each local (non-parameter) name of ``fn``."""
    declared: set[str] = set()
    first: dict[str, ast.AST] = {}
    params = {a.arg for a in parameters(fn)}
    for node in walk_shallow(fn):
        if isinstance(node, (ast.Global, ast.Nonlocal)):
            declared.update(node.names)
        elif isinstance(node, ast.Name) and isinstance(node.ctx, (ast.Store, ast.Del)):
            cur = first.get(node.id)
            if cur is None or (node.lineno, node.col_offset) < (cur.lineno, cur.col_offset):
                first[node.id] = node
        elif isinstance(node, ast.ExceptHandler) and node.name:
            first.setdefault(node.name, node)
    for node in fn.decorator_list + fn.args.defaults + [d for d in fn.args.kw_defaults if d]:
        for sub in ast.walk(node):
            if isinstance(sub, ast.Name) and isinstance(sub.ctx, ast.Store):
                first.pop(sub.id, None)  # walrus in a default binds in the enclosing scope
    return {k: v for k, v in first.items() if k not in declared and k not in params}


def _naming(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    fn_re = re.compile(config.naming_regex_function)
    var_re = re.compile(config.naming_regex_variable)
    for fn in unit.functions():
        if not fn_re.search(fn.name):
            yield make_finding(
                unit,
                SmellKind.NamingConvention,
                unit.name_span(fn),
                f'Rename function "{fn.name}" to match the regular expression {config.naming_regex_function}.',
                function=fn.name,
            )
        for arg in parameters(fn):
            if not var_re.search(arg.arg):
                yield make_finding(
                    unit,
                    SmellKind.NamingConvention,
                    _identifier_span(unit, arg, arg.arg),
                    f'Rename parameter "{arg.arg}" to match the regular expression {config.naming_regex_variable}.',
                    function=fn.name,
                )
        for name, node in _local_bindings(fn).items():
            if var_re.search(name):
                continue
            if isinstance(node, ast.ExceptHandler):
                span = unit.find_name_token(name, unit.span(node).start)
            else:
                span = _identifier_span(unit, node, name)
            yield make_finding(
                unit,
                SmellKind.NamingConvention,
                span,
                f'Rename this local variable "{name}" to match the regular expression {config.naming_regex_variable}.',
                function=fn.name,
            )


def _compound_bodies(node: ast.AST) -> Iterator[list[ast.stmt]]:
    if isinstance(node, ast.If):
        yield node.body
        if node.orelse and not (len(node.orelse) == 1 and isinstance(node.orelse[0], ast.If)):
            yield node.orelse
        elif node.orelse and node.orelse[0].col_offset != node.col_offset:
            yield node.orelse  # `else:` followed by an indented if
    elif isinstance(node, (ast.For, ast.AsyncFor, ast.While)):
        yield node.body
        yield node.orelse
    elif isinstance(node, (ast.With, ast.AsyncWith)):
        yield node.body
    elif isinstance(node, ast.Try):
        yield node.body
        yield node.orelse
        yield node.finalbody


def _empty_nested(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for node in ast.walk(unit.tree):
        for body in _compound_bodies(node):
            if body and all(isinstance(s, ast.Pass) for s in body):
                span = Span(unit.span(body[0]).start, unit.span(body[-1]).end)
                yield make_finding(
                    unit, SmellKind.EmptyNestedCodeBlocks, span, "Either remove or fill this block of code."
                )


def is_collapsible(node: ast.AST) -> bool:
    return (
        isinstance(node, ast.If)
        and not node.orelse
        and len(node.body) == 1
        and isinstance(node.body[0], ast.If)
        and not node.body[0].orelse
    )


def _collapsible_if(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for node in ast.walk(unit.tree):
        if is_collapsible(node):
            yield make_finding(
                unit,
                SmellKind.CollapsibleIfStatements,
                unit.span(node),
                "Merge this if statement with the enclosing one.",
            )


def _long_parameter_list(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for fn in unit.functions():
        count = parameter_count(fn, is_method=isinstance(unit.parent(fn), ast.ClassDef))
        if count > config.max_params:
            yield make_finding(
                unit,
                SmellKind.LongParameterList,
                unit.span(fn),
                f'Function "{fn.name}" has {count} parameters, which is greater than the {config.max_params} authorized.',
                metric=count,
                function=fn.name,
            )


def _high_cognitive_complexity(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for fn in unit.functions():
        if is_nested_function(unit.parents, fn):
            continue  # counted as part of the enclosing function
        score = cognitive_complexity(fn)
        if score > config.cc_threshold:
            yield make_finding(
                unit,
                SmellKind.HighCognitiveComplexity,
                unit.span(fn),
                f"Refactor this function to reduce its Cognitive Complexity from {score} to the {config.cc_threshold} allowed.",
                metric=score,
                function=fn.name,
            )


_TERMINATORS = (ast.Return, ast.Raise, ast.Break, ast.Continue)


def _statement_lists(tree: ast.AST) -> Iterator[list[ast.stmt]]:
    for node in ast.walk(tree):
        for name in BODY_FIELDS:
            seq = getattr(node, name, None)
            if isinstance(seq, list) and seq and isinstance(seq[0], ast.stmt):
                yield seq


def unreachable_tail(body: list[ast.stmt]) -> list[ast.stmt]:
    for i, stmt in enumerate(body):
        if isinstance(stmt, _TERMINATORS):
            return body[i + 1 :]
    return []


def _dead_code(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for body in _statement_lists(unit.tree):
        tail = unreachable_tail(body)
        if tail:
            span = Span(unit.span(tail[0]).start, unit.span(tail[-1]).end)
            yield make_finding(unit, SmellKind.DeadCode, span, "Remove this unreachable code.")


def dotted_name(node: ast.AST) -> str | None:
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        base = dotted_name(node.value)
        return None if base is None else f"{base}.{node.attr}"
    return None


def self_assignment(node: ast.AST) -> str | None:
    """The name assigned to itself by ``node``, if it is a self-assignment."""
    if isinstance(node, ast.Assign) and len(node.targets) == 1:
        target, value = node.targets[0], node.value
    elif isinstance(node, ast.AnnAssign) and node.value is not None:
        target, value = node.target, node.value
    else:
        return None
    name = dotted_name(target)
    return name if name is not None and name == dotted_name(value) else None


def _self_assigned(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for node in ast.walk(unit.tree):
        name = self_assignment(node)
        if name is not None:
            yield make_finding(
                unit,
                SmellKind.SelfAssignedVariables,
                unit.span(node),
                f'Remove or correct this useless self-assignment of "{name}".',
            )


_BINOPS = {ast.Sub: "-", ast.Div: "/", ast.Mod: "%", ast.Add: "+", ast.Mult: "*", ast.LShift: "<<"}
_CMPOPS = {ast.Eq: "==", ast.NotEq: "!=", ast.Lt: "<", ast.LtE: "<=", ast.Gt: ">", ast.GtE: ">="}
_BOOLOPS = {ast.And: "and", ast.Or: "or"}


def _same(a: ast.AST, b: ast.AST) -> bool:
    if any(isinstance(n, (ast.Call, ast.Await, ast.Yield, ast.YieldFrom)) for n in ast.walk(a)):
        return False  # calls may differ between evaluations
    return ast.dump(a) == ast.dump(b)


def _identical_expressions(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    excluded = config.identical_expr_excluded_operators

    def report(node: ast.AST, symbol: str) -> Finding:
        return make_finding(
            unit,
            SmellKind.IdenticalExpressions,
            unit.span(node),
            f'Correct one of the identical sub-expressions on both sides of operator "{symbol}".',
        )

    for node in ast.walk(unit.tree):
        if isinstance(node, ast.BinOp):
            symbol = _BINOPS.get(type(node.op))
            if symbol and symbol not in excluded and _same(node.left, node.right):
                yield report(node, symbol)
        elif isinstance(node, ast.Compare):
            operands = [node.left, *node.comparators]
            for op, left, right in zip(node.ops, operands, operands[1:]):
                symbol = _CMPOPS.get(type(op))
                if symbol and symbol not in excluded and _same(left, right):
                    yield report(node, symbol)
                    break
        elif isinstance(node, ast.BoolOp):
            symbol = _BOOLOPS[type(node.op)]
            if symbol in excluded:
                continue
            values = node.values
            if any(_same(a, b) for i, a in enumerate(values) for b in values[i + 1 :]):
                yield report(node, symbol)


def returns_and_yields(fn: FunctionNode) -> tuple[list[ast.Return], list[ast.expr]]:
    returns, yields = [], []
    for node in walk_shallow(fn):
        if isinstance(node, ast.Return) and node.value is not None:
            returns.append(node)
        elif isinstance(node, (ast.Yield, ast.YieldFrom)):
            yields.append(node)
    return returns, yields


def _return_and_yield(unit: SourceUnit, config: DetectorConfig) -> Iterator[Finding]:
    for fn in unit.functions():
        returns, yields = returns_and_yields(fn)
        if returns and yields:
            yield make_finding(
                unit, SmellKind.ReturnAndYield, unit.span(fn), RETURN_YIELD_MESSAGE, function=fn.name
            )


_RULES = {
    SmellKind.CommentedCode: _commented_code,
    SmellKind.NamingConvention: _naming,
    SmellKind.EmptyNestedCodeBlocks: _empty_nested,
    SmellKind.CollapsibleIfStatements: _collapsible_if,
    SmellKind.LongParameterList: _long_parameter_list,
    SmellKind.HighCognitiveComplexity: _high_cognitive_complexity,
    SmellKind.DeadCode: _dead_code,
    SmellKind.SelfAssignedVariables: _self_assigned,
    SmellKind.IdenticalExpressions: _identical_expressions,
    SmellKind.ReturnAndYield: _return_and_yield,
}


def findings_by_kind(findings: Iterable[Finding]) -> dict[SmellKind, list[Finding]]:
    out: dict[SmellKind, list[Finding]] = {k: [] for k in SmellKind}
    for f in findings:
        out[f.kind].append(f)
    return out
