"""Efficiency index of the memoryless family as a function of step count.

An ``m``-step iteration on an ``n``-dimensional system costs ``n^2`` scalar
evaluations for ``m = 1`` and ``2n^2 + (m - 2) n`` for ``m >= 2``, and has
order ``2m``; the index is ``order ** (1 / evals)``.  For ``n >= 2`` the
continuous maximiser ``m*`` solves ``(1 - ln(2m)) m = 2 - 2n``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import mpmath

BITS = 256
BISECTION_TOL = 1e-10


@lru_cache(maxsize=1)
def _mp() -> mpmath.ctx_mp.MPContext:
    ctx = mpmath.ctx_mp.MPContext()
    ctx.prec = BITS
    return ctx


def evaluation_count(m: int, n: int) -> int:
    _check_positive(m=m, n=n)
    if m == 1:
        return n * n
    return 2 * n * n + (m - 2) * n


def efficiency_index(m: int, n: int):
    """``(2m) ** (1 / evals)`` as a 256-bit mpmath value."""
    mp = _mp()
    return mp.power(mp.mpf(2 * m), mp.mpf(1) / evaluation_count(m, n))


def _check_positive(**values):
    for key, v in values.items():
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValueError(f"{key} must be a positive integer, got {v!r}")


def _stationarity(m, n):
    mp = _mp()
    return (1 - mp.ln(2 * m)) * m - (2 - 2 * n)


@dataclass(frozen=True)
class OptimalSteps:
    n: int
    m_star: object  # None for n == 1, where the stationarity equation has no root on [2, inf)
    m_best: int
    index_best: object


def optimal_steps(n: int) -> OptimalSteps:
    """Best integer step count for system size ``n``.

    ``m*`` is bracketed on ``[2, 2n + 2]`` (the upper end doubles until the
    sign changes) and bisected to ``|dm| < 1e-10``; ``m_best`` is whichever
    of ``floor(m*)``, ``ceil(m*)`` has the larger index, the smaller one on a
    tie.
    """
    _check_positive(n=n)
    mp = _mp()
    if n == 1:
        return OptimalSteps(1, None, 1, efficiency_index(1, 1))
    lo, hi = mp.mpf(2), mp.mpf(2 * n + 2)
    while _stationarity(hi, n) > 0:
        hi *= 2
    while hi - lo >= BISECTION_TOL:
        mid = (lo + hi) / 2
        if _stationarity(mid, n) > 0:
            lo = mid
        else:
            hi = mid
    m_star = (lo + hi) / 2
    lo_m = int(mp.floor(m_star))
    hi_m = int(mp.ceil(m_star))
    candidates = sorted({lo_m, hi_m})
    best = max(candidates, key=lambda m: (efficiency_index(m, n), -m))
    return OptimalSteps(n, m_star, best, efficiency_index(best, n))


@dataclass(frozen=True)
class EfficiencyRow:
    n: int
    m: int
    evals: int
    index: object
    is_best: bool = False


def efficiency_table(n_values, m_max: int) -> list:
    """Rows for every ``(n, m)`` with ``m <= m_max``, ``n`` outer and ``m`` inner.

    The row at ``m_best`` is flagged ``is_best``; when ``m_best > m_max`` an
    extra flagged row for ``m_best`` closes that ``n``'s block.
    """
    n_values = list(n_values)
    if not n_values:
        raise ValueError("n_values must not be empty")
    _check_positive(m_max=m_max)
    rows = []
    for n in n_values:
        best = optimal_steps(n).m_best
        for m in range(1, m_max + 1):
            rows.append(EfficiencyRow(n, m, evaluation_count(m, n), efficiency_index(m, n), m == best))
        if best > m_max:
            rows.append(EfficiencyRow(n, best, evaluation_count(best, n), efficiency_index(best, n), True))
    return rows


def format_index(value) -> str:
    return _mp().nstr(value, 12, strip_zeros=False)


def table_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "m", "evals", "index", "is_best"])
    for r in rows:
        writer.writerow([r.n, r.m, r.evals, format_index(r.index), "true" if r.is_best else "false"])
    return buf.getvalue()
