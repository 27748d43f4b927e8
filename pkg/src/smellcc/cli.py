"""Command-line entry point: detect, clean, corpus, verify and report.

Settings are merged in this order, later winning: built-in defaults, the
TOML config file (``--config``), ``SMELLCC_*`` environment variables, then
command-line flags. Every command prints the effective configuration to
stderr (``--quiet`` suppresses it).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from smellcc.corpus import CorpusOptions, FindingStatus, clean_unit, python_files, run_corpus, stats_from_results
from smellcc.detectors import DEFAULT_CONFIG, DetectorConfig, Finding, SmellKind, scan
from smellcc.llmclient import ClientConfig, LlmClient, record_replay
from smellcc.pysource import EncodingError, parse
from smellcc.refactor import Backend, PromptConfig, RefactorOptions, TemplateSet
from smellcc.report import CleaningStats, check_accounting, render, stats_from_findings
from smellcc.verify import BaselineFailing, IsolationMode, NoTests, verify_refactoring, write_records

log = logging.getLogger("smellcc")

EXIT_OK, EXIT_FOUND, EXIT_ERROR = 0, 1, 2

_DETECTOR_KEYS = {
    "cc_threshold": int,
    "max_params": int,
    "naming_regex_function": str,
    "naming_regex_variable": str,
    "commented_code_min_score": int,
}
_ENV_KEYS = {
    "SMELLCC_BACKEND": "backend",
    "SMELLCC_PROMPT_CONFIG": "prompt_config",
    "SMELLCC_CC_THRESHOLD": "cc_threshold",
    "SMELLCC_MAX_PARAMS": "max_params",
    "SMELLCC_API_BASE": "base_url",
    "SMELLCC_API_KEY": "api_key",
    "SMELLCC_MODEL": "model",
}


@dataclass
class CliConfig:
    """Flat merged settings; ``sources`` records where each value came from."""

    values: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)

    def set(self, key: str, value, source: str) -> None:
        if value is None:
            return
        self.values[key] = value
        self.sources[key] = source

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def detector(self) -> DetectorConfig:
        kwargs = {k: conv(self.values[k]) for k, conv in _DETECTOR_KEYS.items() if k in self.values}
        if self.values.get("kinds"):
            kwargs["enabled_kinds"] = frozenset(SmellKind.parse(k) for k in self.values["kinds"])
        return DetectorConfig(**kwargs) if kwargs else DEFAULT_CONFIG

    def refactor_options(self) -> RefactorOptions:
        templates = self.values.get("templates")
        return RefactorOptions(
            detector=self.detector(),
            prompt_config=PromptConfig.parse(self.get("prompt_config", "full")),
            rename_exports=bool(self.get("rename_exports", False)),
            model=self.get("model"),
            templates=TemplateSet.load(templates) if templates else None,
        )

    def client_config(self) -> ClientConfig:
        return ClientConfig.from_env(
            {},
            base_url=self.get("base_url"),
            api_key=self.get("api_key"),
            model=self.get("model"),
            max_concurrency=self.get("max_concurrency"),
            max_retries=self.get("max_retries"),
            split_system=self.get("split_system"),
        )

    def echo(self) -> dict:
        shown = {k: v for k, v in self.values.items() if k != "api_key"}
        if "api_key" in self.values:
            shown["api_key"] = "***"
        return dict(sorted(shown.items()))


def _split_kinds(value) -> list[str] | None:
    if value is None:
        return None
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return list(value)


def load_config(args: argparse.Namespace, env: dict | None = None) -> CliConfig:
    env = os.environ if env is None else env
    cfg = CliConfig()
    for k, v in DEFAULT_CONFIG.snapshot().items():
        if k in _DETECTOR_KEYS:
            cfg.set(k, v, "default")
    cfg.set("backend", "rules", "default")
    cfg.set("prompt_config", "full", "default")

    if getattr(args, "config", None):
        data = tomllib.loads(Path(args.config).read_text(encoding="utf-8"))
        data = data.get("smellcc", data)
        for k, v in data.items():
            cfg.set(k.replace("-", "_"), _split_kinds(v) if k == "kinds" else v, f"file:{args.config}")

    for var, key in _ENV_KEYS.items():
        if env.get(var):
            cfg.set(key, env[var], f"env:{var}")

    flags = {
        "cc_threshold": getattr(args, "cc_threshold", None),
        "max_params": getattr(args, "max_params", None),
        "backend": getattr(args, "backend", None),
        "prompt_config": getattr(args, "prompt_config", None),
        "kinds": _split_kinds(getattr(args, "kinds", None)),
        "model": getattr(args, "model", None),
        "base_url": getattr(args, "api_base", None),
        "rename_exports": True if getattr(args, "rename_exports", False) else None,
        "templates": getattr(args, "templates", None),
        "max_concurrency": getattr(args, "max_concurrency", None),
        "split_system": True if getattr(args, "split_system", False) else None,
        "seed": getattr(args, "seed", None),
    }
    for k, v in flags.items():
        cfg.set(k, v, "flag")
    return cfg


def _echo_config(cfg: CliConfig, args: argparse.Namespace) -> None:
    if not getattr(args, "quiet", False):
        print("# effective config: " + json.dumps(cfg.echo(), sort_keys=True), file=sys.stderr)


def _make_client(cfg: CliConfig, args: argparse.Namespace):
    """The completion client for the llm backend: live, behind a cassette, or both."""
    mode = getattr(args, "cassette_mode", None) or ("replay" if getattr(args, "cassette", None) else None)
    if mode == "replay":
        return record_replay(None, args.cassette, "replay")
    if cfg.get("base_url") is None:
        raise SystemExit("the llm backend needs SMELLCC_API_BASE (or --api-base) or --cassette in replay mode")
    live = LlmClient(cfg.client_config())
    if args.cassette:
        return record_replay(live, args.cassette, mode or "record")
    return live


# -- commands ------------------------------------------------------------------


def _format_table(findings: list[Finding]) -> str:
    return "\n".join(f"{f.path}:{f.start_line}:{f.start_col}: {f.kind.value}: {f.message}" for f in findings)


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _echo_config(cfg, args)
    detector = cfg.detector()
    status = EXIT_OK
    errors = False
    for target in args.paths:
        p = Path(target)
        if not p.exists():
            print(f"error: {target}: no such file or directory", file=sys.stderr)
            errors = True
            continue
        for file in python_files(p):
            try:
                unit = parse(file.read_bytes(), path=str(file))
            except (OSError, SyntaxError, EncodingError) as exc:
                print(f"error: {file}: {exc}", file=sys.stderr)
                errors = True
                continue
            findings = scan(unit, detector)
            if findings:
                status = EXIT_FOUND
            if args.format == "jsonl":
                for f in findings:
                    print(f.dumps())
            elif findings:
                print(_format_table(findings))
    return EXIT_ERROR if errors else status


def cmd_clean(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _echo_config(cfg, args)
    backend = Backend(cfg.get("backend"))
    options = cfg.refactor_options()
    client = _make_client(cfg, args) if backend is Backend.Llm else None
    if args.in_place and args.out:
        print("error: --in-place and --out are mutually exclusive", file=sys.stderr)
        return EXIT_ERROR
    out_dir = Path(args.out) if args.out else None

    totals: Counter = Counter()
    any_failed = False
    errors = False
    results = []
    for target in args.paths:
        root = Path(target)
        if not root.exists():
            print(f"error: {target}: no such file or directory", file=sys.stderr)
            errors = True
            continue
        base = root if root.is_dir() else root.parent
        for file in python_files(root):
            rel = file.relative_to(base)
            original = file.read_bytes()
            try:
                unit = parse(original, path=str(file))
            except (SyntaxError, EncodingError) as exc:
                print(f"error: {file}: {exc}", file=sys.stderr)
                errors = True
                continue
            result = clean_unit(unit, options.detector, backend, options, client, str(file))
            results.append(result)
            for f, st in zip(result.findings_before, result.statuses):
                totals[(f.kind, st)] += 1
            file_failed = any(st is FindingStatus.Failed for st in result.statuses)
            any_failed |= file_failed
            for o in result.outcomes:
                if o.status.value == "Failed":
                    print(f"{file}:{o.finding.start_line}: {o.finding.kind.value}: failed: {o.diagnostics}", file=sys.stderr)
            changed = result.cleaned_code != unit.text
            if args.in_place:
                if changed:
                    file.write_text(result.cleaned_code, encoding="utf-8", newline="")
            elif out_dir is not None:
                dest = out_dir / rel
                dest.parent.mkdir(parents=True, exist_ok=True)
                if changed:
                    dest.write_text(result.cleaned_code, encoding="utf-8", newline="")
                else:
                    dest.write_bytes(original)
            else:
                sys.stdout.write(result.cleaned_code)

    out = sys.stdout if (args.in_place or out_dir) else sys.stderr
    print(f"{'kind':<28}{'refactored':>11}{'skipped':>9}{'failed':>8}", file=out)
    for kind in SmellKind:
        counts = [totals[(kind, st)] for st in FindingStatus]
        if any(counts):
            print(f"{kind.value:<28}{counts[0]:>11}{counts[1]:>9}{counts[2]:>8}", file=out)
    if args.stats:
        stats = stats_from_results(results, {**cfg.echo(), "backend": backend.value})
        Path(args.stats).write_text(render(stats, "json"), encoding="utf-8")
    if errors:
        return EXIT_ERROR
    return EXIT_FOUND if any_failed else EXIT_OK


def cmd_corpus(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _echo_config(cfg, args)
    backend = Backend(cfg.get("backend"))
    refactor = cfg.refactor_options()
    client = _make_client(cfg, args) if backend is Backend.Llm else None
    jobs = args.jobs or os.cpu_count() or 1
    options = CorpusOptions(
        detector=refactor.detector, backend=backend, refactor=refactor, jobs=jobs, resume=not args.restart, limit=args.limit
    )
    try:
        stats = run_corpus(args.input, args.output, options, client)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    stats.config.update(cfg.echo())
    print(render(stats, args.format), end="")
    if args.stats:
        Path(args.stats).write_text(render(stats, "json"), encoding="utf-8")
    problems = check_accounting(stats)
    for p in problems:
        print(f"accounting: {p}", file=sys.stderr)
    return EXIT_ERROR if problems else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _echo_config(cfg, args)
    backend = Backend(cfg.get("backend"))
    options = cfg.refactor_options()
    client = _make_client(cfg, args) if backend is Backend.Llm else None
    try:
        result = verify_refactoring(
            args.project,
            backend=backend,
            mode=IsolationMode(args.mode),
            options=options,
            client=client,
            command=args.test_command,
            timeout=args.timeout,
        )
    except (NoTests, BaselineFailing, NotADirectoryError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.records:
        write_records(result.records, args.records)
    summary = result.summary()
    print(json.dumps({"mode": result.mode.value, "config": cfg.echo(), "summary": summary}, indent=2, sort_keys=True))
    failed = any(s["passed"] < s["total"] for s in summary.values())
    return EXIT_FOUND if failed else EXIT_OK


def _read_findings(path: str) -> list[Finding]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(Finding.from_json(json.loads(line)))
    return out


def cmd_report(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _echo_config(cfg, args)
    if args.results:
        lines = Path(args.results).read_text(encoding="utf-8").splitlines()
        stats = stats_from_results((json.loads(ln) for ln in lines if ln.strip()), cfg.echo())
        cleaned = True
    elif args.stats_json:
        stats = CleaningStats.from_json(json.loads(Path(args.stats_json).read_text(encoding="utf-8")))
        cleaned = True
    elif args.before and args.after:
        stats = stats_from_findings(_read_findings(args.before), _read_findings(args.after), cfg.echo())
        cleaned = False
    else:
        print("error: give BEFORE AFTER findings files, --results or --stats-json", file=sys.stderr)
        return EXIT_ERROR
    text = render(stats, args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    problems = check_accounting(stats, cleaned=cleaned)
    for p in problems:
        print(f"accounting: {p}", file=sys.stderr)
    return EXIT_ERROR if problems else EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    """Draw a reproducible random subset of a JSON-lines corpus."""
    lines = [ln for ln in Path(args.input).read_text(encoding="utf-8").splitlines() if ln.strip()]
    rng = random.Random(args.seed)
    picked = sorted(rng.sample(range(len(lines)), min(args.n, len(lines))))
    Path(args.output).write_text("".join(lines[i] + "\n" for i in picked), encoding="utf-8")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--cc-threshold", type=int)
    p.add_argument("--max-params", type=int)
    p.add_argument("--kinds", help="comma-separated smell kinds to handle")
    p.add_argument("--quiet", action="store_true", help="do not echo the effective config")
    p.add_argument("--seed", type=int, help="seed for sampling utilities")


def _llm(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=[b.value for b in Backend])
    p.add_argument("--prompt-config", help="role, role-fewshot, role-cot or full")
    p.add_argument("--model")
    p.add_argument("--api-base")
    p.add_argument("--templates", help="directory of prompt template files")
    p.add_argument("--cassette", help="JSON-lines cassette of recorded completions")
    p.add_argument("--cassette-mode", choices=["record", "replay", "passthrough"])
    p.add_argument("--max-concurrency", type=int)
    p.add_argument("--split-system", action="store_true", help="send the role paragraph as a system message")
    p.add_argument("--rename-exports", action="store_true", help="allow renaming public module-level names")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smellcc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="report code smells")
    _common(p)
    p.add_argument("paths", nargs="+")
    p.add_argument("--format", choices=["table", "jsonl"], default="table")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("clean", help="refactor code smells in files")
    _common(p)
    _llm(p)
    p.add_argument("paths", nargs="+")
    p.add_argument("--in-place", action="store_true")
    p.add_argument("--out", help="write cleaned files under this directory")
    p.add_argument("--stats", help="write cleaning stats JSON here")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("corpus", help="clean a JSON-lines corpus")
    _common(p)
    _llm(p)
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--jobs", type=int, help="worker threads (default: CPU count)")
    p.add_argument("--restart", action="store_true", help="ignore the progress journal")
    p.add_argument("--limit", type=int, help="stop after this many new records")
    p.add_argument("--format", choices=["markdown", "json", "csv"], default="markdown")
    p.add_argument("--stats", help="also write stats JSON here")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("verify", help="run a project's tests around each fix")
    _common(p)
    _llm(p)
    p.add_argument("project")
    p.add_argument("--mode", choices=[m.value for m in IsolationMode], default=IsolationMode.PerFinding.value)
    p.add_argument("--test-command", help="test command; {python} expands to this interpreter")
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--records", help="write AccuracyRecords as JSON lines here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="render cleaning statistics")
    _common(p)
    p.add_argument("before", nargs="?", help="findings (JSON lines) before cleaning")
    p.add_argument("after", nargs="?", help="findings (JSON lines) after cleaning")
    p.add_argument("--results", help="results sidecar written by the corpus command")
    p.add_argument("--stats-json", help="stats JSON written by --stats")
    p.add_argument("--format", choices=["markdown", "json", "csv"], default="markdown")
    p.add_argument("--output")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sample", help="draw a random subset of a corpus")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(f"error: {exc.code}", file=sys.stderr)
            return EXIT_ERROR
        return exc.code or EXIT_OK
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
