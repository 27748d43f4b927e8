import pytest

from smellcc.detectors import DEFAULT_CONFIG, DetectorConfig, SmellKind, scan
from smellcc.pysource import parse
from smellcc.refactor import (
    MissingTemplate,
    PromptConfig,
    PromptSpec,
    TemplateSet,
    UnusableResponse,
    build_prompt,
    default_templates,
    sanitize_response,
)

TABLE_FIXTURE = "if condition1:\n    if condition2:\n        # code\n        do_something()\n"
STEP_AND_EXAMPLE_FRAGMENTS = ("Determine the conjunction", "if condition1 and condition2", "Step 1:", "Given smell code")


def _prompt(config, text=TABLE_FIXTURE, detector=DEFAULT_CONFIG):
    unit = parse(text)
    (finding,) = [f for f in scan(unit, detector) if f.kind is SmellKind.CollapsibleIfStatements]
    return build_prompt(finding.kind, text, finding, config, detector)


def test_full_prompt_contains_template_fragments():
    prompt = _prompt(PromptConfig.Full)
    for fragment in (
        "expert software engineer",
        "Do not generate any explanation text",
        "Determine the conjunction",
        "if condition1 and condition2",
    ):
        assert fragment in prompt


def test_full_prompt_section_order():
    prompt = _prompt(PromptConfig.Full)
    marks = ["Role:", "Output Restriction:", "Task:", "Step 1:", "Given smell code:", "Result Refactor Code:", "Code smell:", "\nCode:\n"]
    positions = [prompt.index(m) for m in marks]
    assert positions == sorted(positions)
    assert prompt.rstrip().endswith(TABLE_FIXTURE.rstrip())


def test_role_only_prompt_is_gated():
    prompt = _prompt(PromptConfig.RoleOnly)
    assert "expert software engineer" in prompt
    for fragment in STEP_AND_EXAMPLE_FRAGMENTS:
        assert fragment not in prompt


@pytest.mark.parametrize(
    "config,has_steps,has_examples",
    [
        (PromptConfig.RoleOnly, False, False),
        (PromptConfig.RoleFewShot, False, True),
        (PromptConfig.RoleCoT, True, False),
        (PromptConfig.Full, True, True),
    ],
)
def test_ablation_configs(config, has_steps, has_examples):
    prompt = _prompt(config)
    assert ("Step 1:" in prompt) is has_steps
    assert ("Given smell code:" in prompt) is has_examples


def test_finding_location_and_message_in_prompt():
    prompt = _prompt(PromptConfig.RoleOnly)
    assert "line 1, column 0" in prompt
    assert "Collapsible if Statements" in prompt


def test_every_kind_has_a_template():
    templates = default_templates()
    for kind in SmellKind:
        template = templates[kind]
        assert template.role_text and template.cot_steps and template.few_shot


def test_thresholds_are_substituted():
    detector = DetectorConfig(max_params=3)
    params = "a1, a2, a3, a4"
    text = f"def wide({params}):\n    return a1\n"
    (finding,) = scan(parse(text), detector)
    prompt = build_prompt(finding.kind, text, finding, PromptConfig.Full, detector)
    assert "$" not in prompt.split("Code smell:")[0]
    assert " 3 " in prompt or " 3." in prompt or "3 parameters" in prompt


def test_prompt_config_parse():
    assert PromptConfig.parse("role_cot") is PromptConfig.RoleCoT
    assert PromptConfig.parse("ROLE-ONLY") is PromptConfig.RoleOnly
    with pytest.raises(ValueError):
        PromptConfig.parse("everything")


def test_missing_template_directory(tmp_path):
    with pytest.raises(MissingTemplate):
        TemplateSet.load(tmp_path)


def test_custom_template_directory(tmp_path):
    from importlib import resources

    source = resources.files("smellcc") / "templates"
    for entry in source.iterdir():
        if entry.name.endswith(".toml"):
            (tmp_path / entry.name).write_text(entry.read_text(encoding="utf-8"), encoding="utf-8")
    custom = tmp_path / "dead_code.toml"
    custom.write_text(custom.read_text().replace("role = \"", "role = \"CUSTOM ", 1))
    templates = TemplateSet.load(tmp_path)
    assert templates[SmellKind.DeadCode].role_text.startswith("CUSTOM")


def test_prompt_spec_validation():
    with pytest.raises(ValueError):
        PromptSpec(SmellKind.DeadCode, "", "", "task", ("step",), ())
    with pytest.raises(ValueError):
        PromptSpec(SmellKind.DeadCode, "role", "", "task", ("step",), (("def (:", "x = 1"),))


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("```python\nx = 1\n```", "x = 1"),
        ("Here you go:\n```\nif a and b:\n    go()\n```\nDone.", "if a and b:\n    go()"),
        ("if a and b:\n    go()\n", "if a and b:\n    go()"),
        ("Sure! The refactored code:\nif a and b:\n    go()\nHope this helps.", "if a and b:\n    go()"),
        ("    def f1():\n        return 1\n", "def f1():\n    return 1"),
    ],
)
def test_sanitize_response(raw, expected):
    assert sanitize_response(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "I cannot help with that.", "```\ndef broken(:\n```", "ok"])
def test_sanitize_rejects_unusable_text(raw):
    with pytest.raises(UnusableResponse):
        sanitize_response(raw)


def test_sanitize_never_drops_code_lines():
    with pytest.raises(UnusableResponse):
        sanitize_response("def broken(:\n    pass\n")
