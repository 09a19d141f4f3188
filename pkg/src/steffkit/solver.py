"""Multi-step Steffensen-type iteration with a frozen divided difference.

One outer iteration from ``x``::

    w   = x + beta F(x)                 A = [w, x; F]       (factored once)
    z1  = x - A^-1 F(x)
    v   = z1 + delta F(z1)              T = A^-1 [z1, v; F]
    z_{j+1} = z_j - H(T) A^-1 F(z_j)    for j = 1 .. m-1

and the new iterate is ``z_m``.  The memory variants replace ``beta`` and
``delta`` every iteration by ``-M^-1`` and ``2 M^-1``, where ``M`` is the
divided difference ``[x_k, x_{k-1}; F]`` (``divided-difference`` memory) or
Kurchatov's ``[2 x_k - x_{k-1}, x_{k-1}; F]`` (``kurchatov`` memory).
"""
from __future__ import annotations

import enum
import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import mpmath

from . import numkernel as nk
from .divdiff import kurchatov_dd, potra_dd, steffensen_point
from .errors import (CoincidentComponent, ConfigError, InsufficientIterates, NonFinite,
                     PrecisionExhausted, SingularOperator, ZeroIncrement)
from .numkernel import Matrix, PrecisionContext, Vector
from .weights import WeightSpec, check_conditions, eval_weight, paper_poly

log = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e300


class Memory(enum.Enum):
    NONE = "none"
    DIVIDED_DIFFERENCE = "divided-difference"
    KURCHATOV = "kurchatov"


METHOD_MEMORY = {"SW": Memory.NONE, "SWD": Memory.DIVIDED_DIFFERENCE, "SWK": Memory.KURCHATOV}


def method_name(memory: Memory, m: int) -> str:
    prefix = {v: k for k, v in METHOD_MEMORY.items()}[memory]
    return f"{prefix}_{m}"


def auto_bits(tol, m: int) -> int:
    """Default precision for a run: ``STEFFKIT_PRECISION_BITS`` when set,
    otherwise enough bits to hold an error of size ``tol**(2m+2)``.

    The stopping test only fires one step after the error drops below
    ``tol``, and that step multiplies the number of correct digits by the
    order (at most ``2m + 2`` for every variant), so the working precision
    must reach well below ``tol**order`` or the Steffensen shift collapses.
    """
    if os.environ.get(nk.ENV_PRECISION):
        return nk.default_bits()
    digits = max(0.0, -float(mpmath.log10(mpmath.mpf(str(tol)))))
    return max(nk.DEFAULT_BITS, math.ceil((2 * m + 2) * digits * math.log2(10)) + 64)


def _real_tol(ctx: PrecisionContext, tol):
    value = ctx.convert(tol)
    return ctx.mp.mpf(value.real) if ctx.is_complex else value


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max-iterations"
    FAILED = "failed"


@dataclass(frozen=True)
class SolverConfig:
    m: int
    beta: object = "0.1"
    delta: object = "0.1"
    weight: WeightSpec = field(default_factory=paper_poly)
    memory: Memory = Memory.NONE
    tol: object = "1e-100"
    max_iter: int = 100
    precision: Optional[PrecisionContext] = None
    allow_nonconforming_weight: bool = False

    def __post_init__(self):
        if not isinstance(self.memory, Memory):
            object.__setattr__(self, "memory", Memory(self.memory))
        if not isinstance(self.m, int) or self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m!r}")
        if self.precision is None:
            object.__setattr__(self, "precision", PrecisionContext(auto_bits(self.tol, self.m)))
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        ctx = self.precision
        if _real_tol(ctx, self.tol) <= 0:
            raise ConfigError("tol must be positive")
        if self.memory is Memory.NONE:
            if ctx.convert(self.beta) == 0:
                raise ConfigError("beta must be nonzero")
            if self.m >= 2 and ctx.convert(self.delta) == 0:
                raise ConfigError("delta must be nonzero")
        if self.m >= 2 and not self.allow_nonconforming_weight:
            report = check_conditions(self.weight)
            if not report.satisfies_theorem1:
                raise ConfigError(
                    f"weight {self.weight.label} does not satisfy H(I)=I, H1=-1 "
                    f"(H1 estimate {report.H1_est:.6g}); pass allow_nonconforming_weight to override"
                )

    @property
    def name(self) -> str:
        return method_name(self.memory, self.m)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class IterTrace:
    """History of a run.

    ``iterates`` starts at ``x^(0)``; ``increments[k]`` is
    ``||x^(k+1) - x^(k)||`` and ``residuals[k]`` is ``||F(x^(k+1))||``.
    The memory seed ``x^(-1)`` is kept apart in ``seed``.  ``floor_reached``
    records that the last step found the iterate to be a fixed point at the
    working precision (its increment is then exactly zero).
    """

    iterates: list
    increments: list
    residuals: list
    params_used: list
    status: Status
    reason: Optional[str] = None
    acoc: Optional[object] = None
    seed: Optional[Vector] = None
    initial_residual: Optional[object] = None
    elapsed: float = 0.0
    floor_reached: bool = False

    @property
    def iterations(self) -> int:
        return len(self.increments)

    @property
    def x(self) -> Vector:
        return self.iterates[-1]

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _check_finite(x: Vector):
    if not x.is_finite() or x.norm_inf() > DIVERGENCE_NORM:
        raise NonFinite("iterate left the finite range")


def _at_floor(x: Vector, fx: Vector) -> bool:
    """True when ``||F(x)||`` is indistinguishable from rounding at this precision."""
    mp = x.ctx.mp
    floor = mp.ldexp(mp.mpf(1), 40 - x.ctx.significand_bits)
    return nk.norm2(fx) <= floor * max(1, x.norm_inf())


def _apply(param, fx: Vector) -> Vector:
    return param @ fx if isinstance(param, Matrix) else fx * param


def sw_iterate(F, x: Vector, beta_k, delta_k, cfg: SolverConfig, *, fx: Vector = None) -> Vector:
    """One outer iteration; ``beta_k``/``delta_k`` are scalars or matrices."""
    if x.dim != F.n:
        raise nk.DimensionError(f"iterate has dimension {x.dim}, system has {F.n}")
    if fx is None:
        fx = F(x)
    w = steffensen_point(x, beta_k, fx)
    try:
        A = potra_dd(F, w, x, fy=fx)
    except CoincidentComponent as exc:
        if _at_floor(x, fx):
            raise PrecisionExhausted() from exc
        raise
    fa = nk.lu_factor(A)
    z = x - nk.lu_solve(fa, fx)
    _check_finite(z)
    if cfg.m == 1:
        return z
    fz = F(z)
    v = z + _apply(delta_k, fz)
    try:
        B = potra_dd(F, z, v, fx=fz)
    except CoincidentComponent:
        if _at_floor(z, fz):
            # z1 is already a root to working precision; later substeps would only add rounding noise.
            return z
        raise
    W = eval_weight(cfg.weight, nk.lu_solve(fa, B))
    for j in range(1, cfg.m):
        if j > 1:
            fz = F(z)
        z = z - W @ nk.lu_solve(fa, fz)
        _check_finite(z)
    return z


def update_memory_params(F, x_curr: Vector, x_prev: Vector, mode: Memory, *,
                         f_curr: Vector = None, f_prev: Vector = None):
    """Return ``(beta_k, delta_k) = (-M^-1, 2 M^-1)`` as matrices."""
    mode = Memory(mode)
    if mode is Memory.DIVIDED_DIFFERENCE:
        M = potra_dd(F, x_curr, x_prev, fx=f_curr, fy=f_prev)
    elif mode is Memory.KURCHATOV:
        M = kurchatov_dd(F, x_curr, x_prev, f_prev=f_prev)
    else:
        raise ValueError("memory parameters need a memory mode")
    inv = nk.lu_solve(nk.lu_factor(M), x_curr.ctx.identity(F.n))
    return -inv, inv * 2


def _as_vector(ctx: PrecisionContext, x, n: int) -> Vector:
    if isinstance(x, Vector):
        if x.ctx != ctx:
            x = ctx.rebase(x)
        vec = x
    elif isinstance(x, (str, int, float, complex)):
        vec = ctx.full(n, x)
    else:
        vec = ctx.vector(x)
    if vec.dim != n:
        raise nk.DimensionError(f"starting point has dimension {vec.dim}, system has {n}")
    return vec


def default_seed(x0: Vector) -> Vector:
    """``x0 + 0.1`` componentwise."""
    return x0 + x0.ctx.full(x0.dim, "0.1")


def run(F, x0, cfg: SolverConfig, x_minus1=None) -> IterTrace:
    """Iterate until ``||x^(k+1) - x^(k)|| + ||F(x^(k+1))|| < tol``.

    The residual at ``x0`` is checked before the first step, so starting on
    a root converges in zero iterations.  Numerical failures end the run
    with ``Status.FAILED`` and the partial trace.  ``acoc`` uses the last
    three nonzero increments.
    """
    ctx = cfg.precision
    tol = _real_tol(ctx, cfg.tol)
    x = _as_vector(ctx, x0, F.n)
    memory = cfg.memory is not Memory.NONE
    seed = None
    if memory:
        seed = default_seed(x) if x_minus1 is None else _as_vector(ctx, x_minus1, F.n)
    beta = ctx.convert(cfg.beta)
    delta = ctx.convert(cfg.delta)

    start = time.perf_counter()
    fx = F(x)
    trace = IterTrace([x], [], [], [], Status.MAX_ITERATIONS, seed=seed, initial_residual=nk.norm2(fx))
    if trace.initial_residual < tol:
        trace.status = Status.CONVERGED
        trace.elapsed = time.perf_counter() - start
        return trace

    x_prev, f_prev = seed, (F(seed) if memory else None)
    try:
        for k in range(cfg.max_iter):
            if memory:
                beta, delta = update_memory_params(F, x, x_prev, cfg.memory, f_curr=fx, f_prev=f_prev)
            try:
                x_new = sw_iterate(F, x, beta, delta, cfg, fx=fx)
            except PrecisionExhausted:
                # x is a fixed point of the iteration at this precision.
                x_new = x
                trace.floor_reached = True
            f_new = fx if x_new is x else F(x_new)
            inc = nk.norm2(x_new - x)
            res = nk.norm2(f_new)
            trace.iterates.append(x_new)
            trace.increments.append(inc)
            trace.residuals.append(res)
            trace.params_used.append((beta, delta))
            log.debug("%s k=%d inc=%s res=%s", cfg.name, k + 1, _fmt(inc), _fmt(res))
            if inc + res < tol:
                trace.status = Status.CONVERGED
                break
            if trace.floor_reached:
                trace.status = Status.FAILED
                trace.reason = (
                    "PrecisionExhausted: the residual reached the working-precision floor above tol; "
                    f"raise precision above {ctx.significand_bits} bits"
                )
                break
            x_prev, f_prev = x, fx
            x, fx = x_new, f_new
    except NonFinite:
        trace.status = Status.FAILED
        trace.reason = "Diverged"
    except (SingularOperator, CoincidentComponent) as exc:
        trace.status = Status.FAILED
        trace.reason = f"{type(exc).__name__}: {exc}"
    trace.elapsed = time.perf_counter() - start
    window = _acoc_window(trace.increments)
    if len(window) >= 3:
        trace.acoc = acoc(window)
    return trace


def _acoc_window(increments):
    # A zero increment only marks a precision-floor fixed point and carries no order information.
    incs = list(increments)
    while incs and incs[-1] == 0:
        incs.pop()
    return incs


def _fmt(v):
    return v.context.nstr(v, 6) if hasattr(v, "context") else repr(v)


def acoc(trace_or_increments) -> object:
    """Approximate computational order of convergence from the last three increments."""
    incs = trace_or_increments.increments if isinstance(trace_or_increments, IterTrace) else trace_or_increments
    incs = list(incs)
    if len(incs) < 3:
        raise InsufficientIterates(f"ACOC needs 3 increments, got {len(incs)}")
    a, b, c = incs[-3:]
    if any(v == 0 for v in (a, b, c)):
        raise ZeroIncrement("ACOC undefined with a zero increment")
    ln = getattr(a, "context", None)
    log_ = ln.ln if ln is not None else math.log
    den = log_(b / a)
    if den == 0:
        raise ZeroIncrement("ACOC undefined: consecutive increments are equal")
    return log_(c / b) / den


def error_norms(trace: IterTrace, root: Vector) -> list:
    """``||x^(k) - root||`` for every stored iterate."""
    return [nk.norm2(x - root) for x in trace.iterates]


def solve(F, x0, m: int = 1, *, memory="none", x_minus1=None, **options) -> IterTrace:
    """Convenience wrapper: build a :class:`SolverConfig` and :func:`run` it."""
    if "precision" in options and isinstance(options["precision"], int):
        options["precision"] = PrecisionContext(options["precision"], F.field)
    cfg = SolverConfig(m=m, memory=Memory(memory), **options)
    return run(F, x0, cfg, x_minus1)
