import ast
import hashlib
import sys

import pytest

from conftest import FIXTURES
from smellcc.detectors import SmellKind
from smellcc.llmclient import record_replay
from smellcc.refactor import Backend
from smellcc.verify import (
    BaselineFailing,
    IsolationMode,
    NoTests,
    adapter_check,
    is_test_file,
    probe_testability,
    project_findings,
    resolve_command,
    run_tests,
    signature_compatible,
    verify_refactoring,
    write_records,
)

BAD_FIX = FIXTURES / "llm" / "verify_bad_fix.jsonl"


def _tree_digest(root):
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        digest.update(str(path.relative_to(root)).encode())
        if path.is_file():
            digest.update(path.read_bytes())
    return digest.hexdigest()


def _only(findings, kind):
    return {path: [f for f in items if f.kind is kind] for path, items in findings.items()}


def test_probe_reports_passing_baseline(verify_project):
    report = probe_testability(verify_project)
    assert report.has_test_files and report.baseline_pass
    assert report.test_count == 3


def test_correct_fix_passes_and_tree_reverts(verify_project):
    before = _tree_digest(verify_project)
    findings = _only(project_findings(verify_project), SmellKind.DeadCode)
    result = verify_refactoring(verify_project, findings, Backend.Rules)
    (record,) = result.records
    assert record.applied and record.tests_passed_after
    assert _tree_digest(verify_project) == before


def test_planted_bad_fix_fails_and_tree_reverts(verify_project):
    before = _tree_digest(verify_project)
    findings = _only(project_findings(verify_project), SmellKind.CollapsibleIfStatements)
    client = record_replay(None, BAD_FIX, "replay")
    result = verify_refactoring(verify_project, findings, Backend.Llm, client=client)
    (record,) = result.records
    assert record.applied and record.status == "Refactored"
    assert not record.tests_passed_after
    assert "TypeError" in record.diagnostics
    assert _tree_digest(verify_project) == before


def test_batch_mode_runs_suite_once(verify_project):
    before = _tree_digest(verify_project)
    result = verify_refactoring(verify_project, mode=IsolationMode.Batch, probe=False)
    assert {r.kind for r in result.records} == {SmellKind.DeadCode, SmellKind.CollapsibleIfStatements}
    assert all(r.tests_passed_after and r.applied for r in result.records)
    assert _tree_digest(verify_project) == before
    stats = result.stats()
    assert stats.totals().tests_total == 2 and stats.config["isolation_mode"] == "batch"


def test_files_created_by_tests_are_removed(verify_project):
    (verify_project / "test_side_effect.py").write_text(
        "def test_writes():\n    open('artifact.txt', 'w').write('x')\n"
    )
    before = _tree_digest(verify_project)
    verify_refactoring(verify_project, _only(project_findings(verify_project), SmellKind.DeadCode), probe=False)
    assert not (verify_project / "artifact.txt").exists()
    assert _tree_digest(verify_project) == before


def test_unapplied_findings_are_marked(verify_project):
    (verify_project / "helpers.py").write_text("def scale(values, Factor):\n    return values * Factor\n")
    findings = _only(project_findings(verify_project), SmellKind.NamingConvention)
    result = verify_refactoring(verify_project, findings, probe=False)
    (record,) = result.records
    assert not record.applied and record.status == "Failed"
    summary = result.summary()["NamingConvention"]
    assert summary["accuracy"] == 1.0 and summary["accuracy_applied"] is None


def test_no_tests_and_failing_baseline(tmp_path):
    (tmp_path / "lib.py").write_text("x = 1\n")
    with pytest.raises(NoTests):
        probe_testability(tmp_path)
    (tmp_path / "test_lib.py").write_text("def test_fail():\n    assert False\n")
    with pytest.raises(BaselineFailing):
        probe_testability(tmp_path)


def test_timeout_is_reported(tmp_path):
    (tmp_path / "test_slow.py").write_text("import time\n\ndef test_slow():\n    time.sleep(5)\n")
    run = run_tests(tmp_path, timeout=0.5)
    assert run.timed_out and not run.passed


def test_custom_command_and_unittest(verify_project):
    run = run_tests(verify_project, "{python} -m unittest discover -q")
    assert run.passed and run.test_count == 3
    assert resolve_command("{python} -m pytest")[0] == sys.executable


def test_test_file_detection():
    from pathlib import Path

    assert is_test_file(Path("test_x.py"))
    assert is_test_file(Path("pkg/x_test.py"))
    assert is_test_file(Path("tests/helpers.py"))
    assert not is_test_file(Path("pkg/contest.py"))


def test_records_written_as_json_lines(verify_project, tmp_path):
    result = verify_refactoring(verify_project, _only(project_findings(verify_project), SmellKind.DeadCode), probe=False)
    out = tmp_path / "records.jsonl"
    write_records(result.records, out)
    line = out.read_text().splitlines()[0]
    assert '"isolation_mode": "per-finding"' in line and '"kind": "DeadCode"' in line


# -- adapter check ---------------------------------------------------------------

LEGACY = (
    "class Account:\n"
    "    def __init__(self, owner, number, kind, currency, balance, limit, rate, branch, opened, status, notes):\n"
    "        self.owner = owner\n"
)


def _original():
    return next(n for n in ast.walk(ast.parse(LEGACY)) if isinstance(n, ast.FunctionDef))


def test_adapter_check_accepts_kept_signature():
    refactored = (
        "from dataclasses import dataclass\n\n\n"
        "@dataclass\nclass AccountParams:\n    owner: str\n    number: str\n\n\n"
        "class Account:\n"
        "    def __init__(self, owner, number, kind, currency, balance, limit, rate, branch, opened, status, notes):\n"
        "        self._setup(AccountParams(owner, number))\n\n"
        "    @classmethod\n"
        "    def from_legacy_params(cls, params):\n"
        "        return cls(params.owner, params.number, *[None] * 9)\n"
    )
    assert adapter_check(_original(), refactored)


def test_adapter_check_rejects_deleted_name():
    refactored = "class Account:\n    def build(self, params):\n        self.owner = params.owner\n"
    assert not adapter_check(_original(), refactored)


def test_adapter_check_rejects_narrowed_signature():
    refactored = "class Account:\n    def __init__(self, params):\n        self.owner = params.owner\n"
    assert not adapter_check(_original(), refactored)


@pytest.mark.parametrize(
    "old,new,ok",
    [
        ("a, b", "a, b, c=1", True),
        ("a, b", "a, b, c", False),
        ("a, b", "*args, **kwargs", True),
        ("a, b", "b, a", False),
        ("a, /, b", "x, /, b", True),
        ("a, *, key", "a, key=None", True),
        ("a, *, key=1", "a, *, key", False),
        ("a, **kw", "a", False),
    ],
)
def test_signature_compatibility(old, new, ok):
    o = ast.parse(f"def f({old}): pass").body[0].args
    n = ast.parse(f"def f({new}): pass").body[0].args
    assert signature_compatible(o, n) is ok
