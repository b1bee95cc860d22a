"""Acceptance gate: every criterion at its stated tolerance.

Each test prints its one-line verdict (visible with ``pytest -s`` or on
failure) and asserts it.  Budgeted criteria include their runtime check.
"""

import pytest

from gossipfresh import acceptance


def _run(name):
    result = acceptance.CRITERIA[name]()
    print(acceptance.format_line(result))
    assert result.passed, acceptance.format_line(result)
    return result


def test_criterion_1_closed_forms_match_recursion():
    result = _run("1")
    assert result.runtime < 10.0


def test_criterion_2_spot_values():
    _run("2")


def test_criterion_3_orderings_and_collapse():
    _run("3")


def test_criterion_4_flat_monte_carlo():
    result = _run("4")
    assert result.runtime < 60.0


def test_criterion_5_clustered_decomposition():
    _run("5")


def test_criterion_6_optimal_cluster_claims():
    result = _run("6")
    assert result.runtime < 5.0


def test_criterion_7_reproducibility(tmp_path):
    result = acceptance.criterion_7(tmp_dir=tmp_path)
    print(acceptance.format_line(result))
    assert result.passed, acceptance.format_line(result)


def test_selftest_aggregator_covers_all_criteria():
    assert sorted(acceptance.CRITERIA) == ["1", "2", "3", "4", "5", "6", "7"]
    with pytest.raises(ValueError, match="unknown criterion"):
        acceptance.run_criteria(["8"])
