"""Refactoring of single findings, by deterministic rules or by an LLM."""

from __future__ import annotations

import ast
import enum
from dataclasses import dataclass, field
from typing import Protocol

from smellcc.detectors import (
    DEFAULT_CONFIG,
    METRIC_KINDS,
    DetectorConfig,
    Finding,
    SmellKind,
    returns_and_yields,
    scan,
)
from smellcc.llmclient import CompletionRequest, LlmError
from smellcc.pysource import (
    Edit,
    LineIndex,
    RenderError,
    SourceUnit,
    Span,
    enclosing_function,
    full_lines,
    map_offset,
    parse,
    reindent,
)
from smellcc.refactor.prompts import (
    MissingTemplate,
    PromptConfig,
    PromptSpec,
    TemplateSet,
    UnusableResponse,
    build_prompt,
    default_templates,
    sanitize_response,
)
from smellcc.refactor.rules import RuleUnsupported, rule_edits, to_snake_case
from smellcc.scope import rename_symbol

__all__ = [
    "Backend",
    "MissingTemplate",
    "PromptConfig",
    "PromptSpec",
    "RefactorOptions",
    "RefactorOutcome",
    "Status",
    "TemplateSet",
    "UnusableResponse",
    "apply_rule_fix",
    "build_prompt",
    "clean_finding",
    "default_templates",
    "finding_persists",
    "finding_signature",
    "llm_region",
    "rename_symbol",
    "sanitize_response",
    "to_snake_case",
]


class Status(str, enum.Enum):
    Refactored = "Refactored"
    SkippedFalsePositive = "SkippedFalsePositive"
    Failed = "Failed"


class Backend(str, enum.Enum):
    Rules = "rules"
    Llm = "llm"


class Completer(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


@dataclass(frozen=True)
class RefactorOutcome:
    """Result of one refactoring attempt.

    ``new_text`` is the whole updated source when the status is Refactored;
    ``edits`` are the replacements against the original text that produce it.
    """

    status: Status
    backend: Backend
    diagnostics: str = ""
    new_text: str | None = None
    edits: tuple[Edit, ...] = ()
    finding: Finding | None = None

    def __post_init__(self):
        if (self.status is Status.Refactored) != (self.new_text is not None):
            raise ValueError("new_text is set exactly when the finding was refactored")


@dataclass(frozen=True)
class RefactorOptions:
    detector: DetectorConfig = DEFAULT_CONFIG
    prompt_config: PromptConfig = PromptConfig.Full
    rename_exports: bool = False
    model: str | None = None
    templates: TemplateSet | None = field(default=None, compare=False)


DEFAULT_OPTIONS = RefactorOptions()


# -- validation ----------------------------------------------------------------


def finding_signature(unit: SourceUnit, finding: Finding) -> tuple:
    if finding.kind in METRIC_KINDS or finding.kind is SmellKind.ReturnAndYield:
        return (finding.kind, finding.function)
    text = unit.text[finding.span.start : finding.span.end]
    return (finding.kind, " ".join(text.split()))


def _new_spans(edits: list[Edit]) -> list[tuple[Edit, Span]]:
    out, shift = [], 0
    for e in sorted(edits, key=lambda e: e.start):
        start = e.start + shift
        out.append((e, Span(start, start + len(e.replacement))))
        shift += e.delta
    return out


def finding_persists(
    unit: SourceUnit, finding: Finding, new_unit: SourceUnit, edits: list[Edit], config: DetectorConfig
) -> bool:
    """Whether ``finding`` is still present after ``edits`` turned ``unit`` into ``new_unit``.

    A finding whose start lies within an edit is looked for anywhere in the
    replacement text; otherwise only at its mapped position.
    """
    sig = finding_signature(unit, finding)
    fresh = [f for f in scan(new_unit, config.only(finding.kind)) if finding_signature(new_unit, f) == sig]
    regions = [new for e, new in _new_spans(edits) if e.start <= finding.span.start <= e.end]
    if regions:
        return any(f.span.overlaps(r) or f.span.start == r.start for f in fresh for r in regions)
    mapped = map_offset(finding.span.start, edits)
    return any(f.span.start == mapped for f in fresh)


def is_yield_from_false_positive(unit: SourceUnit, finding: Finding) -> bool:
    if finding.kind is not SmellKind.ReturnAndYield:
        return False
    for fn in unit.functions():
        if unit.span(fn) == finding.span:
            _, yields = returns_and_yields(fn)
            return bool(yields) and all(isinstance(y, ast.YieldFrom) for y in yields)
    return False


# -- backends ------------------------------------------------------------------


def apply_rule_fix(
    kind: SmellKind, unit: SourceUnit, finding: Finding, options: RefactorOptions = DEFAULT_OPTIONS
) -> RefactorOutcome:
    if finding.kind is not kind:
        raise ValueError(f"finding is {finding.kind.value}, not {kind.value}")
    backend = Backend.Rules
    if is_yield_from_false_positive(unit, finding):
        return RefactorOutcome(Status.SkippedFalsePositive, backend, "all yields delegate with yield from", finding=finding)
    try:
        edits = rule_edits(unit, finding, options.detector, options.rename_exports)
        new_unit = unit.apply(edits)
    except (RuleUnsupported, RenderError) as exc:
        return RefactorOutcome(Status.Failed, backend, str(exc), finding=finding)
    if finding_persists(unit, finding, new_unit, edits, options.detector):
        return RefactorOutcome(Status.Failed, backend, "fix did not remove the finding", finding=finding)
    return RefactorOutcome(Status.Refactored, backend, new_text=new_unit.text, edits=tuple(edits), finding=finding)


def llm_region(unit: SourceUnit, finding: Finding) -> Span:
    """Whole lines sent to the model: the enclosing function, else the enclosing
    top-level statement, else the finding's own lines."""
    fn = enclosing_function(unit, finding.span)
    if fn is not None:
        span = unit.span(fn)
        return full_lines(unit, span.start, span.end)
    for stmt in unit.tree.body:
        span = unit.span(stmt)
        if finding.span in span:
            return full_lines(unit, span.start, span.end)
    return full_lines(unit, finding.span.start, finding.span.end)


def _relative_finding(unit: SourceUnit, finding: Finding, region: Span, indent: str, code: str) -> Finding:
    first_line, _ = unit.position(region.start)
    index = LineIndex(code)

    def relocate(offset: int) -> int:
        line, col = unit.position(offset)
        rel_line = line - first_line + 1
        if rel_line > len(index):
            return len(code)
        col = max(0, col - len(indent))
        return min(index.offset(rel_line, min(col, len(index.line_text(rel_line)))), len(code))

    start = relocate(finding.span.start)
    end = max(start, relocate(finding.span.end))
    return Finding(
        kind=finding.kind,
        span=Span(start, end),
        message=finding.message,
        function=finding.function,
        metric=finding.metric,
        path=finding.path,
        start_line=finding.start_line - first_line + 1,
        start_col=max(0, finding.start_col - len(indent)),
        end_line=finding.end_line - first_line + 1,
        end_col=max(0, finding.end_col - len(indent)),
    )


def _required_function(unit: SourceUnit, finding: Finding) -> str | None:
    """Name the model's answer must still define, so callers keep working."""
    fn = enclosing_function(unit, finding.span)
    if fn is None:
        return None
    if finding.kind is SmellKind.NamingConvention and unit.name_span(fn) == finding.span:
        return None
    return fn.name


def max_tokens_for(kind: SmellKind) -> int:
    return 8192 if kind is SmellKind.LongParameterList else 2048


def _llm_fix(unit: SourceUnit, finding: Finding, options: RefactorOptions, client: Completer | None) -> RefactorOutcome:
    backend = Backend.Llm
    if client is None:
        raise ValueError("the llm backend needs a client")
    region = llm_region(unit, finding)
    first_line, _ = unit.position(region.start)
    indent = unit.indent_of(first_line)
    region_text = unit.text[region.start : region.end]
    code = reindent(region_text, indent, "", unit.multiline_string_lines, first_line)
    local = _relative_finding(unit, finding, region, indent, code)
    prompt = build_prompt(finding.kind, code, local, options.prompt_config, options.detector, options.templates)

    request = CompletionRequest(
        prompt=prompt, model=options.model, temperature=0.0, max_tokens=max_tokens_for(finding.kind)
    )
    try:
        raw = client.complete(request)
        answer = sanitize_response(raw)
    except (LlmError, UnusableResponse) as exc:
        return RefactorOutcome(Status.Failed, backend, f"{type(exc).__name__}: {exc}", finding=finding)

    protected = parse(answer).multiline_string_lines
    replacement = reindent(answer, "", indent, protected)
    if region_text.endswith("\n"):
        replacement += "\n"
    edits = [Edit(region.start, region.end, replacement)]
    try:
        new_unit = unit.apply(edits)
    except RenderError as exc:
        return RefactorOutcome(Status.Failed, backend, str(exc), finding=finding)

    if finding_persists(unit, finding, new_unit, edits, options.detector):
        return RefactorOutcome(Status.Failed, backend, "the finding is still present", finding=finding)
    keep = _required_function(unit, finding)
    if keep is not None:
        new_region = Span(region.start, region.start + len(replacement))
        if not any(fn.name == keep and new_unit.span(fn) in new_region for fn in new_unit.functions()):
            return RefactorOutcome(Status.Failed, backend, f"function {keep!r} is no longer defined", finding=finding)
    return RefactorOutcome(Status.Refactored, backend, new_text=new_unit.text, edits=tuple(edits), finding=finding)


def clean_finding(
    unit: SourceUnit,
    finding: Finding,
    backend: Backend = Backend.Rules,
    options: RefactorOptions = DEFAULT_OPTIONS,
    client: Completer | None = None,
) -> RefactorOutcome:
    backend = Backend(backend)
    if is_yield_from_false_positive(unit, finding):
        return RefactorOutcome(
            Status.SkippedFalsePositive, backend, "all yields delegate with yield from", finding=finding
        )
    if backend is Backend.Rules:
        return apply_rule_fix(finding.kind, unit, finding, options)
    return _llm_fix(unit, finding, options, client)
