"""Matrix weight functions ``H(t)`` and a numerical check of their expansion at ``I``.

A weight is expanded around the identity as
``H(t) = H(I) + H1 (t - I) + H2/2 (t - I)^2 + ...``.  Order ``2m`` of the
multi-step family needs ``H(I) = I`` and ``H1 = -1``; the memory variants also
want ``H2 = 2``.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import numkernel as nk
from .numkernel import Matrix, PrecisionContext

POLY = "poly"
RECIPROCAL = "reciprocal"
CUSTOM = "custom"


@dataclass(frozen=True)
class WeightSpec:
    """``kind`` is one of ``poly`` (coefficients of powers of ``t - I``),
    ``reciprocal`` (``t^-1``) or ``custom`` (a named callable on matrices)."""

    kind: str
    coeffs: tuple = ()
    name: str = ""
    func: Optional[Callable] = None
    array_func: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in (POLY, RECIPROCAL, CUSTOM):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == POLY and not self.coeffs:
            raise ValueError("polynomial weight needs at least one coefficient")
        if self.kind == CUSTOM and self.func is None:
            raise ValueError("custom weight needs an evaluator")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == POLY:
            return "poly:" + ",".join(str(c) for c in self.coeffs)
        return self.kind


def poly(*coeffs) -> WeightSpec:
    return WeightSpec(POLY, tuple(str(c) for c in coeffs))


def paper_poly() -> WeightSpec:
    """``H(t) = I - (t - I) + (t - I)^2``."""
    return WeightSpec(POLY, ("1", "-1", "1"), name="paper-poly")


def reciprocal() -> WeightSpec:
    """``H(t) = t^-1``."""
    return WeightSpec(RECIPROCAL, name="reciprocal")


def custom(name: str, func: Callable, array_func: Callable = None) -> WeightSpec:
    """Wrap ``func(T: Matrix) -> Matrix``; ``array_func`` optionally handles
    batched float arrays of shape ``(P, n, n)`` for basin rendering."""
    return WeightSpec(CUSTOM, name=name, func=func, array_func=array_func)


def parse_weight(text: str) -> WeightSpec:
    """Parse ``paper-poly``, ``reciprocal`` or ``poly:c0,c1,...``."""
    text = text.strip()
    if text == "paper-poly":
        return paper_poly()
    if text == "reciprocal":
        return reciprocal()
    m = re.fullmatch(r"poly:(.+)", text)
    if m:
        parts = [p.strip() for p in m.group(1).split(",")]
        for p in parts:
            float(p)  # validates the literal
        return poly(*parts)
    raise ValueError(f"unknown weight {text!r}; use paper-poly, reciprocal or poly:c0,c1,...")


def eval_weight(spec: WeightSpec, T: Matrix) -> Matrix:
    if not T.is_square:
        raise nk.DimensionError("weight argument must be square")
    ctx = T.ctx
    n = T.rows
    if spec.kind == POLY:
        eye = ctx.identity(n)
        E = T - eye
        coeffs = [ctx.convert(c) for c in spec.coeffs]
        acc = eye * coeffs[-1]
        for c in reversed(coeffs[:-1]):
            acc = acc @ E + eye * c
        return acc
    if spec.kind == RECIPROCAL:
        return nk.lu_solve(nk.lu_factor(T), ctx.identity(n))
    return spec.func(T)


def eval_weight_array(spec: WeightSpec, T: np.ndarray) -> np.ndarray:
    """Batched float evaluation; ``T`` has shape ``(P, n, n)``.

    Returns NaN blocks where a reciprocal weight meets a singular matrix.
    """
    n = T.shape[-1]
    eye = np.eye(n, dtype=T.dtype)
    if spec.kind == POLY:
        E = T - eye
        coeffs = [float(c) for c in spec.coeffs]
        acc = np.broadcast_to(eye * coeffs[-1], T.shape).copy()
        for c in reversed(coeffs[:-1]):
            acc = nk.batch_matmul(acc, E) + eye * c
        return acc
    if spec.kind == RECIPROCAL:
        return nk.batch_solve(T, np.broadcast_to(eye, T.shape))
    if spec.array_func is None:
        raise ValueError(f"custom weight {spec.label!r} has no array evaluator")
    return spec.array_func(T)


@dataclass(frozen=True)
class ConditionReport:
    H_at_I: float
    H1_est: float
    H2_est: float
    satisfies_theorem1: bool
    satisfies_memory: bool

    def lines(self):
        yield f"||H(I) - I||      = {self.H_at_I:.3e}"
        yield f"H1 estimate       = {self.H1_est:.10f}"
        yield f"H2 estimate       = {self.H2_est:.10f}"
        yield f"order-2m conditions (H(I)=I, H1=-1): {'yes' if self.satisfies_theorem1 else 'no'}"
        yield f"memory conditions (also H2=2):       {'yes' if self.satisfies_memory else 'no'}"


def _frob(A: Matrix, B: Matrix):
    return sum((a * b for a, b in zip(A.entries, B.entries)), A.ctx.mp.mpf(0))


def _random_direction(ctx, n, rng):
    U = ctx.matrix([[rng.uniform(-1, 1) for _ in range(n)] for _ in range(n)])
    return U * (1 / U.norm_fro())


@lru_cache(maxsize=128)
def check_conditions(spec: WeightSpec, *, bits: int = 256, dim: int = 3, directions: int = 5,
                     seed: int = 0) -> ConditionReport:
    """Estimate ``H(I)``, ``H1`` and ``H2`` by probing ``H(I +- eps U)``.

    Uses ``eps`` in {1e-4, 2e-4} with both signs: symmetric differences give
    ``H1 U`` and ``H2 U^2`` up to ``O(eps^2)`` and one Richardson step lifts
    that to ``O(eps^4)``.  Estimates are projected onto ``U`` and ``U^2`` in
    the Frobenius inner product and averaged over random unit directions.
    """
    ctx = PrecisionContext(bits)
    mp = ctx.mp
    eye = ctx.identity(dim)
    H0 = eval_weight(spec, eye)
    dev = (H0 - eye).norm_max()
    rng = random.Random(seed)
    eps = mp.mpf("1e-4")
    h1s, h2s = [], []
    for _ in range(directions):
        U = _random_direction(ctx, dim, rng)
        U2 = U @ U

        def probe(s):
            return eval_weight(spec, eye + U * s)

        hp1, hm1 = probe(eps), probe(-eps)
        hp2, hm2 = probe(2 * eps), probe(-2 * eps)
        a1 = (hp1 - hm1) * (1 / (2 * eps))
        a2 = (hp2 - hm2) * (1 / (4 * eps))
        first = (a1 * 4 - a2) * (mp.mpf(1) / 3)
        s1 = (hp1 + hm1 - H0 * 2) * (1 / eps ** 2)
        s2 = (hp2 + hm2 - H0 * 2) * (1 / (4 * eps ** 2))
        second = (s1 * 4 - s2) * (mp.mpf(1) / 3)
        h1s.append(_frob(first, U) / _frob(U, U))
        h2s.append(_frob(second, U2) / _frob(U2, U2))
    h1 = sum(h1s) / len(h1s)
    h2 = sum(h2s) / len(h2s)
    ok1 = dev < mp.mpf("1e-20") and abs(h1 + 1) < mp.mpf("1e-3")
    ok2 = ok1 and abs(h2 - 2) < mp.mpf("1e-2")
    return ConditionReport(float(dev), float(h1) + 0.0, float(h2) + 0.0, bool(ok1), bool(ok2))
