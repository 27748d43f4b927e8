import json
import statistics
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from smellcc.detectors import SmellKind
from smellcc.report import (
    CONTRIBUTION_NOTE,
    CleaningStats,
    DegenerateInput,
    KindRow,
    check_accounting,
    cleaning_ratio,
    contribution,
    parse_csv,
    pearson,
    render,
)


def test_published_cleaning_ratios():
    assert cleaning_ratio(10509, 735) == 93.0
    assert cleaning_ratio(203180, 17075) == 91.6


def test_cleaning_ratio_edges():
    assert cleaning_ratio(0, 0) is None
    assert cleaning_ratio(0, 5) is None
    assert cleaning_ratio(4, 6) == -50.0
    assert cleaning_ratio(8, 1) == 87.5
    with pytest.raises(ValueError):
        cleaning_ratio(-1, 0)


def test_half_up_rounding():
    # 100 * 1 / 8 = 12.5 exactly; banker's rounding would keep 12 at zero places
    assert cleaning_ratio(1000, 875) == 12.5
    assert cleaning_ratio(2000, 1999) == 0.1  # 0.05 rounds up
    assert contribution(1, 8) == 12.5
    assert contribution(1, 16) == 6.25
    assert contribution(1, 32) == 3.13  # 3.125 rounds up


def test_naming_contribution_is_computed_not_copied():
    assert contribution(11579, 15994) == 72.40
    assert "74.37" in CONTRIBUTION_NOTE and "72.40" in CONTRIBUTION_NOTE


def test_contribution_edges():
    assert contribution(0, 0) is None
    with pytest.raises(ValueError):
        contribution(5, 3)


@settings(max_examples=100)
@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=10))
def test_contributions_sum_to_one_hundred(counts):
    total = sum(counts)
    assume(total > 0)
    parts = [contribution(c, total) for c in counts]
    assert abs(sum(parts) - 100.0) <= 0.005 * len(counts) + 1e-9
    exact = [Fraction(100 * c, total) for c in counts]
    assert all(abs(Fraction(p).limit_denominator(100) - e) <= Fraction(1, 200) for p, e in zip(parts, exact))


def test_contributions_of_published_style_counts_sum_within_tolerance():
    counts = [11579, 1603, 1015, 720, 488, 294, 174, 87, 30, 4]
    total = sum(counts)
    assert abs(sum(contribution(c, total) for c in counts) - 100.0) <= 0.05


def test_pearson_identical_vectors():
    assert pearson([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0


@settings(max_examples=100)
@given(
    st.lists(
        st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)),
        min_size=3,
        max_size=20,
    )
)
def test_pearson_matches_statistics_module(pairs):
    xs = [float(x) for x, _ in pairs]
    ys = [float(y) for _, y in pairs]
    assume(len(set(xs)) > 1 and len(set(ys)) > 1)
    assert pearson(xs, ys) == pytest.approx(statistics.correlation(xs, ys), abs=1e-9)


def test_pearson_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        pearson([1.0], [2.0])
    with pytest.raises(DegenerateInput):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        pearson([1, 1, 1], [1, 2, 3])


def _stats():
    stats = CleaningStats(config={"backend": "rules", "cc_threshold": 15})
    stats.rows["DeadCode"] = KindRow("DeadCode", before=10, after=1, refactored=9, failed=1)
    stats.rows["NamingConvention"] = KindRow("NamingConvention", before=4, after=6, refactored=2, failed=2, introduced=4)
    stats.records = 3
    return stats


def test_markdown_table():
    text = render(_stats(), "markdown")
    assert "cc_threshold = 15" in text.split("-->")[0]
    assert "| Dead Code | 10 | 1 | 90.0 | 9 | 0 | 1 | 0 |" in text
    assert "-50.0 (introduced)" in text
    assert "| Long Parameter List | 0 | 0 | n/a |" in text
    assert "| All | 14 | 7 | 50.0 |" in text
    assert CONTRIBUTION_NOTE in text


def test_markdown_testing_columns():
    stats = _stats()
    stats.row(SmellKind.DeadCode).tests_total = 9
    stats.row(SmellKind.DeadCode).tests_passed = 8
    text = render(stats, "markdown")
    assert "Accuracy(%)" in text
    assert "| Dead Code | 10 | 1 | 90.0 | 9 | 0 | 1 | 0 | 81.82 | 9 | 8 | 88.89 |" in text


def test_json_round_trip():
    stats = _stats()
    back = CleaningStats.from_json(json.loads(render(stats, "json")))
    assert back.to_json() == stats.to_json()


def test_csv_round_trip():
    stats = _stats()
    back = parse_csv(render(stats, "csv"))
    assert back.config == stats.config
    assert [r for r in back.ordered_rows()] == [r for r in stats.ordered_rows()]


def test_unknown_format():
    with pytest.raises(ValueError):
        render(_stats(), "html")


def test_accounting_checks():
    assert check_accounting(_stats()) == []
    broken = _stats()
    broken.row(SmellKind.DeadCode).after = 3
    errors = check_accounting(broken)
    assert len(errors) == 1 and errors[0].startswith("DeadCode")
    assert check_accounting(broken, cleaned=False) == []


def test_rows_cover_every_kind_in_order():
    assert [r.kind for r in CleaningStats().ordered_rows()] == [k.value for k in SmellKind]
