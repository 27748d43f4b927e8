"""Cleaning statistics, table rendering and the arithmetic behind them."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from smellcc.detectors import Finding, SmellKind


class DegenerateInput(ValueError):
    pass


def _round(value: Decimal, places: int) -> float:
    return float(value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def cleaning_ratio(before: int, after: int) -> float | None:
    """Percent of findings removed, one decimal. ``None`` when there was nothing to clean."""
    if before < 0 or after < 0:
        raise ValueError("counts must be non-negative")
    if before == 0:
        return None
    return _round(Decimal(100) * (before - after) / Decimal(before), 1)


def contribution(kind_count: int, total_count: int) -> float | None:
    """A kind's share of all refactored instances, two decimals."""
    if not 0 <= kind_count <= total_count:
        raise ValueError("need 0 <= kind_count <= total_count")
    if total_count == 0:
        return None
    return _round(Decimal(100) * kind_count / Decimal(total_count), 2)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise DegenerateInput("sequences differ in length")
    n = len(xs)
    if n < 2:
        raise DegenerateInput("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# -- statistics ----------------------------------------------------------------


@dataclass
class KindRow:
    kind: str
    before: int = 0
    after: int = 0
    refactored: int = 0
    skipped: int = 0
    failed: int = 0
    introduced: int = 0
    tests_total: int = 0
    tests_passed: int = 0

    @property
    def ratio(self) -> float | None:
        return cleaning_ratio(self.before, self.after)

    @property
    def residual(self) -> int:
        return self.skipped + self.failed

    @property
    def accuracy(self) -> float | None:
        return None if self.tests_total == 0 else self.tests_passed / self.tests_total


_COUNT_FIELDS = [f.name for f in fields(KindRow) if f.name != "kind"]


@dataclass
class CleaningStats:
    rows: dict[str, KindRow] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    records: int = 0
    skipped_lines: int = 0
    journal_hits: int = 0
    unprocessable: int = 0

    def __post_init__(self):
        for kind in SmellKind:
            self.rows.setdefault(kind.value, KindRow(kind.value))

    def row(self, kind: SmellKind | str) -> KindRow:
        key = kind.value if isinstance(kind, SmellKind) else kind
        return self.rows[key]

    def ordered_rows(self) -> list[KindRow]:
        order = {k.value: i for i, k in enumerate(SmellKind)}
        return sorted(self.rows.values(), key=lambda r: order.get(r.kind, len(order)))

    def totals(self) -> KindRow:
        total = KindRow("All")
        for row in self.rows.values():
            for name in _COUNT_FIELDS:
                setattr(total, name, getattr(total, name) + getattr(row, name))
        return total

    @property
    def has_tests(self) -> bool:
        return any(r.tests_total for r in self.rows.values())

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "records": self.records,
            "skipped_lines": self.skipped_lines,
            "journal_hits": self.journal_hits,
            "unprocessable": self.unprocessable,
            "rows": [asdict(r) for r in self.ordered_rows()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CleaningStats":
        rows = {r["kind"]: KindRow(**r) for r in data.get("rows", [])}
        return cls(
            rows=rows,
            config=data.get("config", {}),
            records=data.get("records", 0),
            skipped_lines=data.get("skipped_lines", 0),
            journal_hits=data.get("journal_hits", 0),
            unprocessable=data.get("unprocessable", 0),
        )


def stats_from_findings(before: Iterable[Finding], after: Iterable[Finding], config: dict | None = None) -> CleaningStats:
    stats = CleaningStats(config=dict(config or {}))
    for f in before:
        stats.row(f.kind).before += 1
    for f in after:
        stats.row(f.kind).after += 1
    return stats


def check_accounting(stats: CleaningStats, *, cleaned: bool = True) -> list[str]:
    """Violations of the before/after bookkeeping; empty when consistent.

    Every finding present before cleaning ends up refactored, skipped or
    failed; the findings left afterwards are the skipped and failed ones plus
    any the fixes introduced.
    """
    errors = []
    for row in stats.ordered_rows():
        if any(getattr(row, name) < 0 for name in _COUNT_FIELDS):
            errors.append(f"{row.kind}: negative count")
        if row.tests_passed > row.tests_total:
            errors.append(f"{row.kind}: more tests passed than run")
        if not cleaned:
            continue
        if row.before != row.refactored + row.residual:
            errors.append(
                f"{row.kind}: before={row.before} != refactored={row.refactored} + skipped={row.skipped} + failed={row.failed}"
            )
        if row.after != row.residual + row.introduced:
            errors.append(
                f"{row.kind}: after={row.after} != skipped={row.skipped} + failed={row.failed} + introduced={row.introduced}"
            )
    return errors


# -- rendering -----------------------------------------------------------------

CONTRIBUTION_NOTE = (
    "Contribution rates are recomputed from raw counts as 100 * kind / total. "
    "Published figures for this protocol list Naming Convention at 74.37% although "
    "11579 / 15994 gives 72.40%; the denominator behind the printed value is unknown, "
    "so the computed value is reported."
)

_CSV_HEADER = ["kind", *_COUNT_FIELDS]


def _fmt_ratio(row: KindRow) -> str:
    ratio = row.ratio
    if ratio is None:
        return "n/a"
    return f"{ratio:.1f}" + (" (introduced)" if ratio < 0 else "")


def _fmt_pct(value: float | None, places: int) -> str:
    return "n/a" if value is None else f"{value:.{places}f}"


def _config_lines(stats: CleaningStats) -> list[str]:
    return [f"{k} = {json.dumps(v, sort_keys=True)}" for k, v in sorted(stats.config.items())]


def render_markdown(stats: CleaningStats) -> str:
    out = ["<!--", "effective configuration", *_config_lines(stats), "-->", ""]
    testing = stats.has_tests
    header = ["Type", "#Before", "#After", "Cleaning(%)", "#Refactored", "#Skipped", "#Failed", "#Introduced"]
    if testing:
        header += ["Contribution(%)", "#Tests", "#Passed", "Accuracy(%)"]
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "|".join("---" for _ in header) + "|")
    total = stats.totals()
    for row in [*stats.ordered_rows(), total]:
        name = "All" if row is total else SmellKind(row.kind).title
        cells = [
            name,
            str(row.before),
            str(row.after),
            _fmt_ratio(row),
            str(row.refactored),
            str(row.skipped),
            str(row.failed),
            str(row.introduced),
        ]
        if testing:
            acc = None if row.accuracy is None else _round(Decimal(100) * row.tests_passed / Decimal(row.tests_total), 2)
            cells += [
                _fmt_pct(contribution(row.refactored, total.refactored) if total.refactored else None, 2),
                str(row.tests_total),
                str(row.tests_passed),
                _fmt_pct(acc, 2),
            ]
        out.append("| " + " | ".join(cells) + " |")
    out += ["", f"Records: {stats.records}, skipped lines: {stats.skipped_lines}, "
            f"unprocessable: {stats.unprocessable}, journal hits: {stats.journal_hits}", ""]
    out += [f"Note: {CONTRIBUTION_NOTE}", ""]
    return "\n".join(out)


def render_csv(stats: CleaningStats) -> str:
    buf = io.StringIO()
    for line in _config_lines(stats):
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADER)
    for row in stats.ordered_rows():
        writer.writerow([getattr(row, name) for name in _CSV_HEADER])
    return buf.getvalue()


def parse_csv(text: str) -> CleaningStats:
    config = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            config[key] = json.loads(value)
        elif line.strip():
            body.append(line)
    rows = {}
    for rec in csv.DictReader(body):
        rows[rec["kind"]] = KindRow(rec["kind"], **{name: int(rec[name]) for name in _COUNT_FIELDS})
    return CleaningStats(rows=rows, config=config)


def render(stats: CleaningStats, fmt: str = "markdown") -> str:
    if fmt == "json":
        return json.dumps(stats.to_json(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return render_csv(stats)
    if fmt == "markdown":
        return render_markdown(stats)
    raise ValueError(f"unknown format {fmt!r}")
