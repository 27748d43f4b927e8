"""Prompt templates and prompt assembly for the LLM backend."""

from __future__ import annotations

import ast
import enum
import keyword
import re
import string
import sys
import textwrap
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from smellcc.detectors import DEFAULT_CONFIG, DetectorConfig, Finding, SmellKind
from smellcc.pysource import LineIndex

_TEMPLATE_FILES = {
    SmellKind.CommentedCode: "commented_code.toml",
    SmellKind.NamingConvention: "naming_convention.toml",
    SmellKind.EmptyNestedCodeBlocks: "empty_nested_code_blocks.toml",
    SmellKind.CollapsibleIfStatements: "collapsible_if_statements.toml",
    SmellKind.LongParameterList: "long_parameter_list.toml",
    SmellKind.HighCognitiveComplexity: "high_cognitive_complexity.toml",
    SmellKind.DeadCode: "dead_code.toml",
    SmellKind.SelfAssignedVariables: "self_assigned_variables.toml",
    SmellKind.IdenticalExpressions: "identical_expressions.toml",
    SmellKind.ReturnAndYield: "return_and_yield.toml",
}


class MissingTemplate(LookupError):
    pass


class UnusableResponse(ValueError):
    pass


class PromptConfig(str, enum.Enum):
    RoleOnly = "role"
    RoleFewShot = "role-fewshot"
    RoleCoT = "role-cot"
    Full = "full"

    @property
    def cot(self) -> bool:
        return self in (PromptConfig.RoleCoT, PromptConfig.Full)

    @property
    def few_shot(self) -> bool:
        return self in (PromptConfig.RoleFewShot, PromptConfig.Full)

    @classmethod
    def parse(cls, value: str) -> "PromptConfig":
        key = value.lower().replace("_", "-").replace("+", "-")
        aliases = {
            "role": cls.RoleOnly, "roleonly": cls.RoleOnly, "role-only": cls.RoleOnly,
            "role-fewshot": cls.RoleFewShot, "role-few-shot": cls.RoleFewShot, "rolefewshot": cls.RoleFewShot,
            "role-cot": cls.RoleCoT, "rolecot": cls.RoleCoT,
            "full": cls.Full, "role-cot-fewshot": cls.Full, "role-cot-few-shot": cls.Full,
        }
        if key not in aliases:
            raise ValueError(f"unknown prompt config: {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class PromptSpec:
    kind: SmellKind
    role_text: str
    output_restriction: str
    task: str
    cot_steps: tuple[str, ...]
    few_shot: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.role_text.strip():
            raise ValueError(f"{self.kind.value}: empty role text")
        if not self.cot_steps:
            raise ValueError(f"{self.kind.value}: no chain-of-thought steps")
        for smelly, refactored in self.few_shot:
            for snippet in (smelly, refactored):
                try:
                    ast.parse(snippet)
                except SyntaxError as exc:
                    raise ValueError(f"{self.kind.value}: few-shot snippet does not parse: {exc}") from exc

    @classmethod
    def from_toml(cls, kind: SmellKind, data: dict) -> "PromptSpec":
        return cls(
            kind=kind,
            role_text=data["role"].strip(),
            output_restriction=data["restriction"].strip(),
            task=data["task"].strip(),
            cot_steps=tuple(s.strip() for s in data["steps"]),
            few_shot=tuple(
                (textwrap.dedent(e["smelly"]).strip("\n"), textwrap.dedent(e["refactored"]).strip("\n"))
                for e in data.get("examples", [])
            ),
        )


class TemplateSet:
    """One :class:`PromptSpec` per smell kind, loaded from a directory of TOML files."""

    def __init__(self, specs: dict[SmellKind, PromptSpec]):
        self.specs = dict(specs)

    def __getitem__(self, kind: SmellKind) -> PromptSpec:
        try:
            return self.specs[kind]
        except KeyError:
            raise MissingTemplate(f"no prompt template for {kind.value}") from None

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "TemplateSet":
        if directory is None:
            root = resources.files("smellcc") / "templates"
        else:
            root = Path(directory)
        missing = [k.value for k, name in _TEMPLATE_FILES.items() if not (root / name).is_file()]
        if missing:
            raise MissingTemplate(f"missing prompt templates for: {', '.join(missing)}")
        specs = {}
        for kind, name in _TEMPLATE_FILES.items():
            data = tomllib.loads((root / name).read_text(encoding="utf-8"))
            specs[kind] = PromptSpec.from_toml(kind, data)
        return cls(specs)


_DEFAULT_TEMPLATES: TemplateSet | None = None


def default_templates() -> TemplateSet:
    global _DEFAULT_TEMPLATES
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = TemplateSet.load()
    return _DEFAULT_TEMPLATES


def _expand(text: str, detector: DetectorConfig) -> str:
    return string.Template(text).safe_substitute(
        function_regex=detector.naming_regex_function,
        variable_regex=detector.naming_regex_variable,
        max_params=detector.max_params,
        cc_threshold=detector.cc_threshold,
    )


def build_prompt(
    kind: SmellKind,
    code: str,
    finding: Finding,
    config: PromptConfig = PromptConfig.Full,
    detector: DetectorConfig = DEFAULT_CONFIG,
    templates: TemplateSet | None = None,
) -> str:
    """Assemble the prompt for one finding; ``finding.span`` indexes into ``code``."""
    template = (templates or default_templates())[kind]
    if not 0 <= finding.span.start <= finding.span.end <= len(code):
        raise ValueError("finding span lies outside the code")

    parts = [f"Role: {_expand(template.role_text, detector)}\nOutput Restriction: {_expand(template.output_restriction, detector)}"]
    if config.cot:
        steps = "\n".join(f"Step {i}: {_expand(step, detector)}" for i, step in enumerate(template.cot_steps, 1))
        parts.append(f"Task: {_expand(template.task, detector)}\n{steps}")
    if config.few_shot and template.few_shot:
        shots = "\n\n".join(
            f"Given smell code:\n{smelly}\nResult Refactor Code:\n{refactored}" for smelly, refactored in template.few_shot
        )
        parts.append(shots)
    line, col = LineIndex(code).position(finding.span.start)
    parts.append(
        f"Code smell: {kind.title} at line {line}, column {col}: {finding.message}\n"
        f"Code:\n{code.rstrip()}"
    )
    return "\n\n".join(parts) + "\n"


# -- response sanitizing -------------------------------------------------------

_FENCE = re.compile(r"^[ \t]*```[^\n]*\n(.*?)^[ \t]*```[ \t]*$", re.S | re.M)
_MAX_PROSE_LINES = 20


def _is_code(text: str) -> bool:
    try:
        tree = ast.parse(text)
    except (SyntaxError, ValueError):
        return False
    if not tree.body:
        return False
    return not all(
        isinstance(s, ast.Expr) and isinstance(s.value, (ast.Name, ast.Constant)) for s in tree.body
    )


def _droppable(line: str) -> bool:
    """Whether a line outside the code may be discarded as chatter."""
    if not line.strip():
        return True
    if line[0] in " \t@#":
        return False
    first = re.split(r"[^A-Za-z_]", line, maxsplit=1)[0]
    return not keyword.iskeyword(first)


def sanitize_response(raw: str) -> str:
    """Extract the code from a model completion.

    Takes the first fenced block if there is one, otherwise drops the fewest
    leading/trailing prose lines needed for the rest to parse. Raises
    :class:`UnusableResponse` when nothing parseable remains.
    """
    match = _FENCE.search(raw)
    text = match.group(1) if match else raw
    lines = text.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    n = len(lines)
    for dropped in range(min(n, _MAX_PROSE_LINES + 1)):
        for front in range(dropped + 1):
            kept = lines[front : n - (dropped - front)]
            if not kept:
                continue
            if not all(_droppable(line) for line in lines[:front] + lines[n - (dropped - front) :]):
                continue
            candidate = textwrap.dedent("\n".join(kept)).rstrip()
            if _is_code(candidate):
                return candidate
    raise UnusableResponse("no parseable code in the model response")
