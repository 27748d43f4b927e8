"""Run a project's tests around refactorings and attribute the outcome to findings."""

from __future__ import annotations

import ast
import enum
import importlib.util
import json
import os
import re
import shlex
import shutil
import subprocess
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from smellcc.corpus import FindingStatus, clean_unit, python_files
from smellcc.detectors import DEFAULT_CONFIG, DetectorConfig, Finding, SmellKind, scan
from smellcc.pysource import FUNCTION_TYPES, FunctionNode, parse
from smellcc.refactor import DEFAULT_OPTIONS, Backend, Completer, RefactorOptions, Status, clean_finding
from smellcc.report import CleaningStats

DEFAULT_TIMEOUT = 300.0
_PYTEST_MARKERS = ("pytest.ini", "conftest.py")


class NoTests(Exception):
    pass


class BaselineFailing(Exception):
    pass


class IsolationMode(str, enum.Enum):
    PerFinding = "per-finding"
    Batch = "batch"


@dataclass(frozen=True)
class SuiteRun:
    passed: bool
    returncode: int | None
    output: str
    test_count: int = 0
    timed_out: bool = False


@dataclass(frozen=True)
class TestabilityReport:
    __test__ = False  # not a pytest test class

    project: str
    has_test_files: bool
    test_command: str
    baseline_pass: bool
    test_count: int


@dataclass(frozen=True)
class AccuracyRecord:
    finding_id: str
    kind: SmellKind
    tests_passed_after: bool
    isolation_mode: IsolationMode
    applied: bool = True
    status: str = Status.Refactored.value
    diagnostics: str = ""

    def to_json(self) -> dict:
        data = asdict(self)
        data["kind"] = self.kind.value
        data["isolation_mode"] = self.isolation_mode.value
        return data


@dataclass
class VerifyResult:
    report: TestabilityReport | None
    mode: IsolationMode
    records: list[AccuracyRecord] = field(default_factory=list)

    def summary(self) -> dict[str, dict]:
        """Per-kind accuracy under both conventions.

        ``accuracy`` counts findings that were never changed as passing (their
        code still passes); ``accuracy_applied`` only looks at applied fixes.
        Either is ``None`` when it has no denominator.
        """
        out: dict[str, dict] = {}
        for kind in SmellKind:
            recs = [r for r in self.records if r.kind is kind]
            if not recs:
                continue
            applied = [r for r in recs if r.applied]
            passed = sum(r.tests_passed_after for r in recs)
            applied_passed = sum(r.tests_passed_after for r in applied)
            out[kind.value] = {
                "total": len(recs),
                "passed": passed,
                "applied": len(applied),
                "applied_passed": applied_passed,
                "accuracy": passed / len(recs),
                "accuracy_applied": applied_passed / len(applied) if applied else None,
            }
        return out

    def stats(self, config: dict | None = None) -> CleaningStats:
        stats = CleaningStats(config={**(config or {}), "isolation_mode": self.mode.value})
        for r in self.records:
            row = stats.row(r.kind)
            row.tests_total += 1
            row.tests_passed += int(r.tests_passed_after)
        return stats


# -- probing -------------------------------------------------------------------


def is_test_file(path: Path) -> bool:
    name = path.name
    return (
        name.startswith("test") and name.endswith(".py")
        or name.endswith("_test.py")
        or name == "conftest.py"
        or any(part in ("tests", "test") for part in path.parts[:-1])
    )


def _has_pytest_config(project: Path) -> bool:
    if any((project / m).exists() for m in _PYTEST_MARKERS):
        return True
    for name, marker in (("pyproject.toml", "[tool.pytest"), ("setup.cfg", "[tool:pytest]"), ("tox.ini", "[pytest]")):
        f = project / name
        if f.is_file() and marker in f.read_text(encoding="utf-8", errors="replace"):
            return True
    return False


def default_test_command() -> list[str]:
    if importlib.util.find_spec("pytest") is not None:
        return [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider"]
    return [sys.executable, "-m", "unittest", "discover", "-q"]


def resolve_command(command: str | list[str] | None) -> list[str]:
    if command is None:
        return default_test_command()
    if isinstance(command, str):
        return [sys.executable if part == "{python}" else part for part in shlex.split(command)]
    return list(command)


def _clean_env(project: Path) -> dict[str, str]:
    env = {k: os.environ[k] for k in ("PATH", "HOME", "LANG", "SYSTEMROOT", "TMPDIR") if k in os.environ}
    paths = [str(project)]
    if (project / "src").is_dir():
        paths.append(str(project / "src"))
    env["PYTHONPATH"] = os.pathsep.join(paths)
    env["PYTHONDONTWRITEBYTECODE"] = "1"
    return env


def _count_tests(output: str) -> int:
    counts = re.findall(r"(\d+) (?:passed|failed|error|errors)\b", output)
    if counts:
        return sum(int(c) for c in counts)
    ran = re.search(r"Ran (\d+) tests?", output)
    return int(ran.group(1)) if ran else 0


def run_tests(project: str | os.PathLike, command: str | list[str] | None = None, timeout: float = DEFAULT_TIMEOUT) -> SuiteRun:
    project = Path(project)
    argv = resolve_command(command)
    try:
        proc = subprocess.run(
            argv,
            cwd=project,
            env=_clean_env(project),
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        out = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
        return SuiteRun(False, None, out + f"\ntimed out after {timeout}s", timed_out=True)
    output = proc.stdout + proc.stderr
    return SuiteRun(proc.returncode == 0, proc.returncode, output, _count_tests(output))


def probe_testability(
    project_dir: str | os.PathLike, command: str | list[str] | None = None, timeout: float = DEFAULT_TIMEOUT
) -> TestabilityReport:
    project = Path(project_dir)
    if not project.is_dir():
        raise NotADirectoryError(str(project))
    files = [p.relative_to(project) for p in python_files(project)]
    has_tests = any(is_test_file(p) for p in files) or (project / "tests").is_dir()
    if not has_tests and not _has_pytest_config(project):
        raise NoTests(f"no test files found in {project}")
    argv = resolve_command(command)
    run = run_tests(project, argv, timeout)
    if not run.passed:
        raise BaselineFailing(f"baseline test run failed in {project}:\n{run.output[-2000:]}")
    return TestabilityReport(str(project), True, shlex.join(argv), True, run.test_count)


# -- verification --------------------------------------------------------------


def source_files(project: Path) -> list[Path]:
    return [p for p in python_files(project) if not is_test_file(p.relative_to(project))]


def project_findings(project: str | os.PathLike, config: DetectorConfig = DEFAULT_CONFIG) -> dict[Path, list[Finding]]:
    project = Path(project)
    out = {}
    for file in source_files(project):
        rel = file.relative_to(project).as_posix()
        try:
            unit = parse(file.read_bytes(), path=rel)
        except (SyntaxError, ValueError):
            continue
        findings = scan(unit, config)
        if findings:
            out[file] = findings
    return out


def verify_refactoring(
    project_dir: str | os.PathLike,
    findings: dict[Path, list[Finding]] | None = None,
    backend: Backend = Backend.Rules,
    mode: IsolationMode = IsolationMode.PerFinding,
    *,
    options: RefactorOptions = DEFAULT_OPTIONS,
    client: Completer | None = None,
    command: str | list[str] | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    probe: bool = True,
) -> VerifyResult:
    """Apply fixes inside ``project_dir``, run its tests, and put every file back.

    In per-finding mode each fix is applied alone; in batch mode every file is
    cleaned and the tests run once. Findings that were not changed are
    recorded with ``applied=False``.
    """
    project = Path(project_dir)
    mode = IsolationMode(mode)
    report = probe_testability(project, command, timeout) if probe else None
    if findings is None:
        findings = project_findings(project, options.detector)
    result = VerifyResult(report, mode)
    if mode is IsolationMode.PerFinding:
        _per_finding(project, findings, backend, options, client, command, timeout, result)
    else:
        _batch(project, findings, backend, options, client, command, timeout, result)
    return result


def _snapshot(files: Iterable[Path]) -> dict[Path, bytes]:
    return {f: f.read_bytes() for f in files}


def _restore(snapshot: dict[Path, bytes]) -> None:
    for f, data in snapshot.items():
        if f.read_bytes() != data:
            f.write_bytes(data)


def _listing(project: Path) -> set[Path]:
    return set(project.rglob("*"))


def _remove_new(project: Path, listing: set[Path]) -> None:
    """Delete whatever appeared under ``project`` since ``listing`` was taken."""
    for path in sorted(_listing(project) - listing, key=lambda p: len(p.parts), reverse=True):
        if path.is_dir() and not path.is_symlink():
            shutil.rmtree(path, ignore_errors=True)
        else:
            path.unlink(missing_ok=True)


def _per_finding(project, findings, backend, options, client, command, timeout, result: VerifyResult) -> None:
    for file, file_findings in findings.items():
        rel = file.relative_to(project).as_posix()
        for finding in file_findings:
            snap = _snapshot([file])
            listing = _listing(project)
            try:
                unit = parse(snap[file], path=rel)
                outcome = clean_finding(unit, finding, backend, options, client)
                if outcome.status is not Status.Refactored:
                    result.records.append(
                        AccuracyRecord(finding.id, finding.kind, True, result.mode, False, outcome.status.value, outcome.diagnostics)
                    )
                    continue
                file.write_text(outcome.new_text, encoding="utf-8", newline="")
                run = run_tests(project, command, timeout)
                diag = "" if run.passed else run.output[-2000:]
                result.records.append(AccuracyRecord(finding.id, finding.kind, run.passed, result.mode, True, outcome.status.value, diag))
            finally:
                _restore(snap)
                _remove_new(project, listing)


def _batch(project, findings, backend, options, client, command, timeout, result: VerifyResult) -> None:
    snap = _snapshot(findings)
    listing = _listing(project)
    pending = []
    try:
        for file in findings:
            rel = file.relative_to(project).as_posix()
            unit = parse(snap[file], path=rel)
            res = clean_unit(unit, options.detector, backend, options, client, rel)
            if res.cleaned_code != unit.text:
                file.write_text(res.cleaned_code, encoding="utf-8", newline="")
            pending.extend(zip(res.findings_before, res.statuses))
        run = run_tests(project, command, timeout)
        diag = "" if run.passed else run.output[-2000:]
        for finding, status in pending:
            applied = status is FindingStatus.Refactored
            result.records.append(
                AccuracyRecord(
                    finding.id, finding.kind, run.passed if applied else True, result.mode, applied, status.value,
                    diag if applied else "",
                )
            )
    finally:
        _restore(snap)
        _remove_new(project, listing)


def write_records(records: Iterable[AccuracyRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


# -- adapter check ---------------------------------------------------------------


def _find_function(tree: ast.AST, name: str) -> FunctionNode | None:
    for node in ast.walk(tree):
        if isinstance(node, FUNCTION_TYPES) and node.name == name:
            return node
    return None


def signature_compatible(original: ast.arguments, new: ast.arguments) -> bool:
    """Whether every call valid against ``original`` is also valid against ``new``."""
    o_posonly = [a.arg for a in original.posonlyargs]
    o_pos = o_posonly + [a.arg for a in original.args]
    n_posonly = [a.arg for a in new.posonlyargs]
    n_pos = n_posonly + [a.arg for a in new.args]

    if len(n_pos) < len(o_pos) and new.vararg is None:
        return False
    for i, name in enumerate(o_pos):
        if i >= len(n_pos):
            # only reachable through *args; keyword use needs **kwargs
            if name not in o_posonly and new.kwarg is None:
                return False
        elif name not in o_posonly and (n_pos[i] != name or name in n_posonly):
            return False
    o_required = len(o_pos) - len(original.defaults)
    n_required = len(n_pos) - len(new.defaults)
    if n_required > o_required:
        return False
    if original.vararg is not None and new.vararg is None:
        return False
    if original.kwarg is not None and new.kwarg is None:
        return False
    n_kw_names = {a.arg for a in new.kwonlyargs} | set(n_pos) - set(n_posonly)
    for a in original.kwonlyargs:
        if a.arg not in n_kw_names and new.kwarg is None:
            return False
    o_kw_required = {a.arg for a, d in zip(original.kwonlyargs, original.kw_defaults) if d is None}
    n_kw_required = {a.arg for a, d in zip(new.kwonlyargs, new.kw_defaults) if d is None}
    return n_kw_required <= o_kw_required


def adapter_check(original_fn: FunctionNode, refactored_text: str) -> bool:
    """True if ``refactored_text`` still defines ``original_fn``'s name with a call-compatible signature."""
    try:
        tree = ast.parse(refactored_text)
    except SyntaxError:
        return False
    new = _find_function(tree, original_fn.name)
    return new is not None and signature_compatible(original_fn.args, new.args)
