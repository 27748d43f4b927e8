"""Detect, clean and re-detect over corpora of code records and over project trees."""

from __future__ import annotations

import enum
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator

from smellcc.detectors import DEFAULT_CONFIG, KIND_ORDER, METRIC_KINDS, DetectorConfig, Finding, scan
from smellcc.pysource import Edit, EncodingError, SourceUnit, Span, map_offset, parse
from smellcc.refactor import (
    DEFAULT_OPTIONS,
    Backend,
    Completer,
    RefactorOptions,
    RefactorOutcome,
    Status,
    clean_finding,
    finding_signature,
)
from smellcc.report import CleaningStats

log = logging.getLogger(__name__)

CODE_FIELDS = ("code", "original_string")


class FindingStatus(str, enum.Enum):
    Refactored = "refactored"
    Skipped = "skipped"
    Failed = "failed"


@dataclass(frozen=True)
class CorpusRecord:
    repo: str
    path: str
    func_name: str
    code: str
    docstring: str = ""
    partition: str | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    code_field: str = "code"
    uid: str = ""
    line: str = field(default="", compare=False, repr=False)

    @property
    def id(self) -> str:
        return self.uid or f"{self.repo}:{self.path}:{self.func_name}"

    @classmethod
    def from_json(cls, data: dict) -> "CorpusRecord":
        code_field = next((k for k in CODE_FIELDS if isinstance(data.get(k), str)), None)
        if code_field is None or not data[code_field]:
            raise ValueError("record has no code")
        return cls(
            repo=str(data.get("repo", "")),
            path=str(data.get("path", "")),
            func_name=str(data.get("func_name", "")),
            code=data[code_field],
            docstring=str(data.get("docstring") or ""),
            partition=data.get("partition"),
            raw=data,
            code_field=code_field,
        )

    def output_line(self, code: str) -> str:
        """The record as a JSON line with ``code``; the input line itself if nothing changed."""
        if code == self.code and self.line:
            return self.line
        return json.dumps(self.with_code(code), ensure_ascii=False)

    def with_code(self, code: str) -> dict:
        """The original JSON object with only the code field replaced."""
        out = dict(self.raw)
        out[self.code_field] = code
        return out


class CorpusReader:
    """Lazily yields records from a JSON-lines file, skipping malformed lines."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.skipped = 0
        if not self.path.is_file():
            raise FileNotFoundError(f"corpus not found: {self.path}")

    def __iter__(self) -> Iterator[CorpusRecord]:
        seen: dict[str, int] = {}
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                    if not isinstance(data, dict):
                        raise ValueError("not a JSON object")
                    rec = CorpusRecord.from_json(data)
                except ValueError as exc:
                    self.skipped += 1
                    log.warning("%s:%d: skipping malformed record: %s", self.path, lineno, exc)
                    continue
                base = rec.id
                n = seen.get(base, 0)
                seen[base] = n + 1
                uid = base if n == 0 else f"{base}#{n}"
                yield CorpusRecord(**{**rec.__dict__, "uid": uid, "line": line.rstrip("\r\n")})


def load_corpus(path: str | os.PathLike) -> CorpusReader:
    return CorpusReader(path)


# -- per-unit pipeline ---------------------------------------------------------


@dataclass
class PipelineResult:
    record_id: str
    findings_before: list[Finding] = field(default_factory=list)
    statuses: list[FindingStatus] = field(default_factory=list)
    outcomes: list[RefactorOutcome] = field(default_factory=list)
    findings_after: list[Finding] = field(default_factory=list)
    introduced: list[Finding] = field(default_factory=list)
    cleaned_code: str = ""
    error: str | None = None

    @property
    def unprocessable(self) -> bool:
        return self.error is not None

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "error": self.error,
            "findings_before": [f.to_json() for f in self.findings_before],
            "statuses": [s.value for s in self.statuses],
            "outcomes": [
                {
                    "finding": o.finding.to_json() if o.finding else None,
                    "status": o.status.value,
                    "backend": o.backend.value,
                    "diagnostics": o.diagnostics,
                }
                for o in self.outcomes
            ],
            "findings_after": [f.to_json() for f in self.findings_after],
            "introduced": [f.to_json() for f in self.introduced],
            "cleaned_code": self.cleaned_code,
        }


# A tracked location: an exact offset, or (once an edit swallowed it) a region.
_Loc = tuple[int, int, bool]


def _edit_regions(edits: list[Edit]) -> list[tuple[Edit, Span]]:
    out, shift = [], 0
    for e in sorted(edits, key=lambda e: e.start):
        out.append((e, Span(e.start + shift, e.start + shift + len(e.replacement))))
        shift += e.delta
    return out


def _map_loose(offset: int, edits: list[Edit], side: str) -> int:
    for e, region in _edit_regions(edits):
        if e.start < offset < e.end:
            return region.start if side == "start" else region.end
    mapped = map_offset(offset, edits)
    assert mapped is not None
    return mapped


def _follow(loc: _Loc, edits: list[Edit]) -> _Loc:
    """Carry a location through one fix.

    An exact location stays exact unless the fix replaced the text starting
    there; then it widens to the replacement, where only a finding with the
    same signature can claim it.
    """
    lo, hi, exact = loc
    if exact:
        for e, region in _edit_regions(edits):
            if e.start <= lo < e.end:
                return (region.start, region.end, False)
        mapped = map_offset(lo, edits)
        assert mapped is not None
        return (mapped, mapped, True)
    return (_map_loose(lo, edits, "start"), _map_loose(hi, edits, "end"), False)


def _locate(
    loc: _Loc, sig: tuple, unit: SourceUnit, findings: list[Finding], taken: set[int] = frozenset()
) -> int | None:
    lo, hi, exact = loc
    for i, f in enumerate(findings):
        if i in taken or f.kind is not sig[0]:
            continue
        if exact:
            if f.span.start == lo:
                return i
        elif lo <= f.span.start <= hi and finding_signature(unit, f) == sig:
            return i
    return None


def clean_unit(
    unit: SourceUnit,
    detector: DetectorConfig = DEFAULT_CONFIG,
    backend: Backend = Backend.Rules,
    options: RefactorOptions = DEFAULT_OPTIONS,
    client: Completer | None = None,
    record_id: str = "",
) -> PipelineResult:
    """Clean every finding of ``unit`` one at a time.

    Later spans go first and metric findings (which may be resolved by the
    smaller fixes inside them) go last. After each successful fix the file is
    re-parsed and re-scanned, and the remaining findings are followed to
    their new positions.
    """
    if options.detector is not detector:
        options = RefactorOptions(**{**options.__dict__, "detector": detector})
    before = scan(unit, detector)
    sigs = [finding_signature(unit, f) for f in before]
    locs: list[_Loc] = [(f.span.start, f.span.start, True) for f in before]
    order = sorted(
        range(len(before)),
        key=lambda i: (before[i].kind in METRIC_KINDS, -before[i].span.start, before[i].span.end, KIND_ORDER[before[i].kind]),
    )

    current, current_findings = unit, before
    attempted: dict[int, RefactorOutcome] = {}
    outcomes: list[RefactorOutcome] = []
    for i in order:
        j = _locate(locs[i], sigs[i], current, current_findings)
        if j is None:
            continue  # an earlier fix already took care of it
        live = current_findings[j]
        outcome = clean_finding(current, live, backend, options, client)
        attempted[i] = outcome
        outcomes.append(outcome)
        if outcome.status is Status.Refactored:
            edits = list(outcome.edits)
            locs = [_follow(loc, edits) for loc in locs]
            current = parse(outcome.new_text, path=unit.path)
            current_findings = scan(current, detector)

    taken: set[int] = set()
    statuses = []
    for i in range(len(before)):
        j = _locate(locs[i], sigs[i], current, current_findings, taken)
        if j is None:
            statuses.append(FindingStatus.Refactored)
            continue
        taken.add(j)
        skipped = i in attempted and attempted[i].status is Status.SkippedFalsePositive
        statuses.append(FindingStatus.Skipped if skipped else FindingStatus.Failed)
    introduced = [f for j, f in enumerate(current_findings) if j not in taken]
    return PipelineResult(
        record_id=record_id or (unit.path or ""),
        findings_before=before,
        statuses=statuses,
        outcomes=outcomes,
        findings_after=current_findings,
        introduced=introduced,
        cleaned_code=current.text,
    )


def process_source(
    text: str,
    record_id: str,
    detector: DetectorConfig = DEFAULT_CONFIG,
    backend: Backend = Backend.Rules,
    options: RefactorOptions = DEFAULT_OPTIONS,
    client: Completer | None = None,
    path: str | None = None,
) -> PipelineResult:
    try:
        unit = parse(text, path=path)
    except (SyntaxError, EncodingError, ValueError) as exc:
        return PipelineResult(record_id=record_id, cleaned_code=text, error=f"unprocessable: {exc}")
    return clean_unit(unit, detector, backend, options, client, record_id)


def process_record(
    rec: CorpusRecord,
    detector_config: DetectorConfig = DEFAULT_CONFIG,
    backend: Backend = Backend.Rules,
    prompt_config=None,
    client: Completer | None = None,
    options: RefactorOptions = DEFAULT_OPTIONS,
) -> PipelineResult:
    if prompt_config is not None:
        options = RefactorOptions(**{**options.__dict__, "prompt_config": prompt_config})
    return process_source(rec.code, rec.id, detector_config, backend, options, client)


def python_files(root: str | os.PathLike) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    skip = {".git", ".hg", "__pycache__", ".venv", "venv", ".tox", "node_modules", "build", "dist"}
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in skip and not d.endswith(".egg-info"))
        out.extend(Path(dirpath, f) for f in sorted(filenames) if f.endswith(".py"))
    return out


def process_tree(
    root: str | os.PathLike,
    detector: DetectorConfig = DEFAULT_CONFIG,
    backend: Backend = Backend.Rules,
    options: RefactorOptions = DEFAULT_OPTIONS,
    client: Completer | None = None,
) -> list[PipelineResult]:
    """Run the pipeline over every ``.py`` file under ``root``; ids are relative paths."""
    root = Path(root)
    base = root if root.is_dir() else root.parent
    results = []
    for file in python_files(root):
        rel = file.relative_to(base).as_posix()
        try:
            unit = parse(file.read_bytes(), path=rel)
        except (SyntaxError, EncodingError) as exc:
            text = file.read_bytes().decode("utf-8", "replace")
            results.append(PipelineResult(record_id=rel, cleaned_code=text, error=f"unprocessable: {exc}"))
            continue
        results.append(clean_unit(unit, detector, backend, options, client, rel))
    return results


# -- statistics ----------------------------------------------------------------


def add_result(stats: CleaningStats, data: dict) -> None:
    """Fold one serialized PipelineResult into ``stats``."""
    stats.records += 1
    if data.get("error"):
        stats.unprocessable += 1
        return
    for f, status in zip(data["findings_before"], data["statuses"]):
        row = stats.row(f["kind"])
        row.before += 1
        setattr(row, status, getattr(row, status) + 1)
    for f in data["findings_after"]:
        stats.row(f["kind"]).after += 1
    for f in data["introduced"]:
        stats.row(f["kind"]).introduced += 1


def stats_from_results(results: Iterable[PipelineResult | dict], config: dict | None = None) -> CleaningStats:
    stats = CleaningStats(config=dict(config or {}))
    for res in results:
        add_result(stats, res.to_json() if isinstance(res, PipelineResult) else res)
    return stats


# -- corpus runs ---------------------------------------------------------------


@dataclass(frozen=True)
class CorpusOptions:
    detector: DetectorConfig = DEFAULT_CONFIG
    backend: Backend = Backend.Rules
    refactor: RefactorOptions = DEFAULT_OPTIONS
    jobs: int = 1
    resume: bool = True
    limit: int | None = None

    def snapshot(self) -> dict:
        return {
            **self.detector.snapshot(),
            "backend": Backend(self.backend).value,
            "prompt_config": self.refactor.prompt_config.value,
            "rename_exports": self.refactor.rename_exports,
        }


def sidecar_paths(out_path: str | os.PathLike) -> tuple[Path, Path]:
    out = Path(out_path)
    return out.with_name(out.name + ".results.jsonl"), out.with_name(out.name + ".journal")


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        return []
    return path.read_text(encoding="utf-8").splitlines(keepends=True)


def _truncate_lines(path: Path, keep: int) -> None:
    lines = [ln for ln in _read_lines(path) if ln.endswith("\n")][:keep]
    path.write_text("".join(lines), encoding="utf-8")


def run_corpus(
    in_path: str | os.PathLike,
    out_path: str | os.PathLike,
    options: CorpusOptions = CorpusOptions(),
    client: Completer | None = None,
) -> CleaningStats:
    """Clean a JSON-lines corpus into ``out_path``.

    Writes ``<out>.results.jsonl`` (one PipelineResult per record) and
    ``<out>.journal`` (ids of finished records). With ``resume`` a rerun
    skips the records already in the journal. ``limit`` stops after that many
    newly processed records, which is how an interruption is simulated.
    """
    out_path = Path(out_path)
    results_path, journal_path = sidecar_paths(out_path)
    reader = load_corpus(in_path)

    done: list[str] = []
    if options.resume:
        done = [ln.rstrip("\n") for ln in _read_lines(journal_path) if ln.endswith("\n")]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if done:
        _truncate_lines(out_path, len(done))
        _truncate_lines(results_path, len(done))
        _truncate_lines(journal_path, len(done))
        mode = "a"
    else:
        mode = "w"
    done_set = set(done)

    refactor = RefactorOptions(**{**options.refactor.__dict__, "detector": options.detector})

    def work(rec: CorpusRecord) -> tuple[CorpusRecord, PipelineResult]:
        return rec, process_record(rec, options.detector, options.backend, client=client, options=refactor)

    journal_hits = 0

    def pending() -> Iterator[CorpusRecord]:
        nonlocal journal_hits
        for rec in reader:
            if rec.id in done_set:
                journal_hits += 1
                continue
            yield rec

    todo: Iterable[CorpusRecord] = pending()
    if options.limit is not None:
        todo = islice(todo, options.limit)

    with open(out_path, mode, encoding="utf-8") as out, open(results_path, mode, encoding="utf-8") as res, open(
        journal_path, mode, encoding="utf-8"
    ) as journal:
        with ThreadPoolExecutor(max_workers=max(1, options.jobs)) as pool:
            batch_size = max(1, options.jobs) * 8
            it = iter(todo)
            while batch := list(islice(it, batch_size)):
                for rec, result in pool.map(work, batch):
                    out.write(rec.output_line(result.cleaned_code) + "\n")
                    res.write(json.dumps(result.to_json(), ensure_ascii=False) + "\n")
                    out.flush()
                    res.flush()
                    journal.write(rec.id + "\n")
                    journal.flush()

    stats = stats_from_results((json.loads(ln) for ln in _read_lines(results_path)), options.snapshot())
    stats.skipped_lines = reader.skipped
    stats.journal_hits = journal_hits
    return stats
