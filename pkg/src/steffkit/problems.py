"""Nonlinear systems ``F(x) = 0``: built-in test problems and DSL-defined ones.

An evaluator is written once against a tiny math-library interface (``const``,
``sin``, ``cos``, ``exp``, ``ln``, ``ipow``, ``pow``) so the same definition
runs on arbitrary-precision :class:`~steffkit.numkernel.Vector` values and on
numpy arrays (the latter is what basin rendering uses).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as _expr
from .errors import DimensionError
from .numkernel import Field, PrecisionContext, Vector


def _ipow(a, k: int):
    if k < 0:
        return 1 / _ipow(a, -k)
    if k == 0:
        return a * 0 + 1
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result


class MPLib:
    """Math functions at the precision of one context."""

    def __init__(self, ctx: PrecisionContext):
        self.ctx = ctx
        mp = ctx.mp
        self.sin, self.cos, self.exp, self.ln = mp.sin, mp.cos, mp.exp, mp.ln
        self._consts = {}

    def const(self, text):
        v = self._consts.get(text)
        if v is None:
            v = self._consts[text] = self.ctx.convert(text)
        return v

    ipow = staticmethod(_ipow)

    @staticmethod
    def pow(a, b):
        return a ** b


class NumpyLib:
    """Elementwise float64/complex128 math on numpy arrays."""

    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    exp = staticmethod(np.exp)
    ln = staticmethod(np.log)
    ipow = staticmethod(_ipow)

    @staticmethod
    def const(text):
        return float(text)

    @staticmethod
    def pow(a, b):
        return np.power(a, b)


NUMPY = NumpyLib()


@lru_cache(maxsize=64)
def mp_lib(ctx: PrecisionContext) -> MPLib:
    return MPLib(ctx)


@dataclass(frozen=True)
class SystemDef:
    """A map ``F: field^n -> field^n``.

    ``func(xs, lib)`` receives the components as a sequence and returns the
    ``n`` residual components.  ``root_fn(ctx)`` (optional) returns the known
    roots at the precision of ``ctx``.
    """

    name: str
    n: int
    field: Field
    func: Callable = dc_field(repr=False)
    root_fn: Optional[Callable] = dc_field(default=None, repr=False, compare=False)
    exprs: Optional[tuple] = dc_field(default=None, repr=False, compare=False)

    def __call__(self, x: Vector) -> Vector:
        if x.dim != self.n:
            raise DimensionError(f"{self.name} expects dimension {self.n}, got {x.dim}")
        out = self.func(x.entries, mp_lib(x.ctx))
        if len(out) != self.n:
            raise DimensionError(f"{self.name} produced {len(out)} components, expected {self.n}")
        convert = x.ctx.convert
        return Vector(x.ctx, [convert(v) for v in out])

    def eval_array(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on a batch: ``X`` has shape ``(n, ...)``, so does the result."""
        X = np.asarray(X)
        if X.shape[0] != self.n:
            raise DimensionError(f"{self.name} expects leading dimension {self.n}, got {X.shape[0]}")
        out = self.func(list(X), NUMPY)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=X.dtype), X.shape[1:]) for c in out])

    def known_roots(self, ctx: PrecisionContext) -> list:
        if self.root_fn is None:
            return []
        return self.root_fn(ctx)


@lru_cache(maxsize=None)
def sine_chain_root(bits: int):
    """Root of ``x sin(x) = 1`` in [1, 1.2], bisected to full precision."""
    mp = PrecisionContext(bits).mp
    lo, hi = mp.mpf(1), mp.mpf("1.2")
    for _ in range(bits + 8):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        if mid * mp.sin(mid) - 1 < 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(lo * mp.sin(lo) - 1) <= abs(hi * mp.sin(hi) - 1) else hi


def sine_chain(n: int) -> SystemDef:
    """``F_i(x) = x_i sin(x_{i+1}) - 1`` with the last equation wrapping to ``x_1``."""
    if n < 2:
        raise ValueError("sine_chain needs n >= 2")

    def func(xs, lib):
        return [xs[i] * lib.sin(xs[(i + 1) % n]) - 1 for i in range(n)]

    def roots(ctx):
        return [ctx.full(n, sine_chain_root(ctx.significand_bits))]

    return SystemDef(f"sine_chain({n})", n, Field.REAL, func, roots)


def cubic_p1() -> SystemDef:
    """``(x - 1)^3 - 1`` over the complex numbers.

    Roots are ordered ``2, (1 - sqrt(3) i)/2, (1 + sqrt(3) i)/2``, the order
    of the default basin palette (orange, green, purple).  Under a real
    context only the real root is reported.
    """

    def func(xs, lib):
        return [_ipow(xs[0] - 1, 3) - 1]

    def roots(ctx):
        mp = ctx.mp
        two = ctx.vector([2])
        if not ctx.is_complex:
            return [two]
        half = mp.mpf(1) / 2
        im = mp.sqrt(3) / 2
        return [two, ctx.vector([mp.mpc(half, -im)]), ctx.vector([mp.mpc(half, im)])]

    return SystemDef("cubic_p1", 1, Field.COMPLEX, func, roots)


def quad_p2() -> SystemDef:
    """``x^2 - 1 = 0, y^2 - 1 = 0``; roots ordered (1,1), (1,-1), (-1,1), (-1,-1)."""

    def func(xs, lib):
        return [xs[0] * xs[0] - 1, xs[1] * xs[1] - 1]

    def roots(ctx):
        return [ctx.vector(p) for p in ((1, 1), (1, -1), (-1, 1), (-1, -1))]

    return SystemDef("quad_p2", 2, Field.REAL, func, roots)


def scalar_quadratic() -> SystemDef:
    """``x^2 - 1``; root 1 first, then -1."""

    def func(xs, lib):
        return [xs[0] * xs[0] - 1]

    return SystemDef("scalar_quadratic", 1, Field.REAL, func,
                     lambda ctx: [ctx.vector([1]), ctx.vector([-1])])


def parse_system(source: str, n: int, name: str = "custom", field: Field = Field.REAL) -> SystemDef:
    """Build a system from ``n`` newline-separated expressions in ``x1..xn``."""
    exprs = tuple(_expr.parse_lines(source, n))

    def func(xs, lib):
        return [_expr.evaluate(e, xs, lib) for e in exprs]

    return SystemDef(name, n, Field(field), func, None, exprs)


def load_system(path, n: int, field: Field = Field.REAL) -> SystemDef:
    path = Path(path)
    return parse_system(path.read_text(encoding="utf-8"), n, name=path.stem, field=field)


BUILTINS = {
    "sine_chain": sine_chain,
    "cubic_p1": cubic_p1,
    "quad_p2": quad_p2,
    "scalar_quadratic": scalar_quadratic,
}
ALIASES = {"p1": "cubic_p1", "p2": "quad_p2"}


def get_problem(name: str, **params) -> SystemDef:
    key = ALIASES.get(name, name)
    try:
        factory = BUILTINS[key]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)


def describe_builtins() -> Sequence[tuple]:
    return [
        ("sine_chain", "n", "x_i sin(x_{i+1}) - 1, cyclic; real n-dimensional"),
        ("cubic_p1", "", "(x - 1)^3 - 1; complex scalar, roots 2 and (1 +- sqrt(3) i)/2"),
        ("quad_p2", "", "x^2 - 1, y^2 - 1; real 2-dimensional, roots (+-1, +-1)"),
        ("scalar_quadratic", "", "x^2 - 1; real scalar, roots +-1"),
    ]
