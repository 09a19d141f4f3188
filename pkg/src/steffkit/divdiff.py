"""First-order divided-difference operators.

``potra_dd`` builds ``[x, y; F]`` column by column.  With the mixed points
``p_j = (x_1, ..., x_j, y_{j+1}, ..., y_n)`` (so ``p_0 = y`` and ``p_n = x``)
column ``j`` is ``(F(p_j) - F(p_{j-1})) / (x_j - y_j)``.  That takes ``n + 1``
vector evaluations, fewer when ``F(x)`` or ``F(y)`` is already known.  The
result satisfies the secant identity ``[x, y; F] (x - y) = F(x) - F(y)``
exactly up to rounding.
"""
from __future__ import annotations

from .errors import CoincidentComponent, DimensionError
from .numkernel import Matrix, Vector, _check_same


def _coincidence_check(x: Vector, y: Vector):
    ctx = x.ctx
    mp = ctx.mp
    tol = mp.ldexp(mp.mpf(1), 16 - ctx.significand_bits)
    for j, (a, b) in enumerate(zip(x.entries, y.entries)):
        if abs(a - b) < tol * max(1, abs(a)):
            raise CoincidentComponent(j)


def potra_dd(F, x: Vector, y: Vector, *, fx: Vector = None, fy: Vector = None) -> Matrix:
    """Componentwise divided difference ``[x, y; F]``.

    ``fx``/``fy`` may carry already-computed values ``F(x)``/``F(y)``.
    """
    _check_same(x, y)
    n = F.n
    if x.dim != n or y.dim != n:
        raise DimensionError(f"points must have dimension {n}")
    _coincidence_check(x, y)
    prev = fy if fy is not None else F(y)
    mixed = list(y.entries)
    columns = []
    for j in range(n):
        mixed[j] = x.entries[j]
        if j == n - 1 and fx is not None:
            cur = fx
        else:
            cur = F(Vector(x.ctx, mixed))
        h = x.entries[j] - y.entries[j]
        columns.append([(c - p) / h for c, p in zip(cur.entries, prev.entries)])
        prev = cur
    return Matrix.from_columns(x.ctx, columns)


def steffensen_point(x: Vector, beta, fx: Vector) -> Vector:
    """``x + beta F(x)`` for a scalar or matrix ``beta``."""
    if isinstance(beta, Matrix):
        return x + beta @ fx
    return x + fx * beta


def steffensen_dd(F, x: Vector, beta, *, fx: Vector = None) -> Matrix:
    """``[x + beta F(x), x; F]``; ``beta`` may be a scalar or a matrix."""
    if fx is None:
        fx = F(x)
    w = steffensen_point(x, beta, fx)
    return potra_dd(F, w, x, fy=fx)


def kurchatov_dd(F, x_curr: Vector, x_prev: Vector, *, f_prev: Vector = None) -> Matrix:
    """Kurchatov's operator ``[2 x_curr - x_prev, x_prev; F]``."""
    _check_same(x_curr, x_prev)
    return potra_dd(F, x_curr * 2 - x_prev, x_prev, fy=f_prev)
