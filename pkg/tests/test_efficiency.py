import math

import pytest
from hypothesis import given, strategies as st

from steffkit.efficiency import (efficiency_index, efficiency_table, evaluation_count, optimal_steps,
                                 table_csv)


def scan_best(n, m_hi):
    """Brute-force argmax over m, ties to the smaller m."""
    best = 1
    for m in range(2, m_hi + 1):
        if efficiency_index(m, n) > efficiency_index(best, n):
            best = m
    return best


def test_index_examples():
    assert efficiency_index(1, 1) == 2
    assert efficiency_index(2, 1) == 2
    assert abs(float(efficiency_index(2, 15)) - 2 ** (1 / 225)) < 1e-15
    assert abs(float(efficiency_index(2, 15)) - 1.003085) < 1e-6


def test_evaluation_counts():
    assert evaluation_count(1, 7) == 49
    assert evaluation_count(2, 7) == 98
    assert evaluation_count(5, 7) == 2 * 49 + 3 * 7
    with pytest.raises(ValueError):
        evaluation_count(0, 3)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 57, 100, 1000, 10 ** 4])
def test_two_steps_cost_as_much_as_one(n):
    assert abs(efficiency_index(1, n) - efficiency_index(2, n)) < 1e-30


@given(m=st.integers(1, 50), n=st.integers(1, 200))
def test_index_formula(m, n):
    evals = n * n if m == 1 else 2 * n * n + (m - 2) * n
    assert float(efficiency_index(m, n)) == pytest.approx((2 * m) ** (1 / evals), rel=1e-14)


def test_small_system_prefers_one_step():
    best = optimal_steps(1)
    assert best.m_best == 1 and best.index_best == 2 and best.m_star is None


@pytest.mark.parametrize("n", [2, 10, 100, 1000])
def test_unimodal_in_m(n):
    values = [efficiency_index(m, n) for m in range(2, 4 * n + 1)]
    peak = optimal_steps(n).m_best
    k = peak - 2
    assert all(a < b for a, b in zip(values[:k], values[1:k + 1]))
    assert all(a > b for a, b in zip(values[k:], values[k + 1:]))


def test_bisection_agrees_with_scan():
    for n in range(1, 201):
        assert optimal_steps(n).m_best == scan_best(n, 4 * n), n


@pytest.mark.parametrize("n", [2, 5, 10, 100, 1000, 12345])
def test_stationarity_residual(n):
    m = optimal_steps(n).m_star
    assert abs((1 - math.log(2 * float(m))) * float(m) - (2 - 2 * n)) < 1e-8


def test_known_optima():
    assert optimal_steps(10).m_best == scan_best(10, 60)
    assert optimal_steps(100).m_best == scan_best(100, 400)


def test_table_single_system():
    rows = efficiency_table([1], 3)
    assert [r.m for r in rows] == [1, 2, 3]
    assert [float(r.index) for r in rows] == pytest.approx([2, 2, 6 ** (1 / 3)])
    assert [r.is_best for r in rows] == [True, False, False]


def test_table_shape_for_large_system():
    rows = efficiency_table([100], 80)
    idx = [r.index for r in rows[1:]]
    peak = max(range(len(idx)), key=lambda i: idx[i])
    assert 0 < peak < len(idx) - 1
    assert all(a < b for a, b in zip(idx[:peak], idx[1:peak + 1]))
    assert all(a > b for a, b in zip(idx[peak:], idx[peak + 1:]))
    assert sum(r.is_best for r in rows) == 1


def test_table_adds_best_row_beyond_m_max():
    rows = efficiency_table([2, 100], 3)
    hundred = [r for r in rows if r.n == 100]
    assert len(hundred) == 4 and hundred[-1].is_best and hundred[-1].m == optimal_steps(100).m_best
    assert [(r.n, r.m) for r in rows[:3]] == [(2, 1), (2, 2), (2, 3)]


def test_table_rejects_empty():
    with pytest.raises(ValueError):
        efficiency_table([], 3)


def test_csv_format():
    text = table_csv(efficiency_table([1], 3))
    lines = text.splitlines()
    assert lines[0] == "n,m,evals,index,is_best"
    assert lines[1] == "1,1,1,2.00000000000,true"
    assert lines[3] == "1,3,3,1.81712059283,false"
