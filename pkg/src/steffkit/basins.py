"""Dynamical planes: color each starting point by the root its orbit reaches.

Orbits run in machine precision (``float64``/``complex128``) and fully
vectorised: a batch holds every still-active pixel, and pixels leave the
batch as soon as they are classified.  Each outer iteration is the same
frozen-operator step as :mod:`steffkit.solver`, written over numpy arrays.

Plain planes take the pixel as ``x^(0)``.  For a complex scalar problem
the pixel is ``Re + i Im``; for a real 2-D system it is the pair of
components.  Memory planes take a real scalar problem and read the pixel
as ``(x^(0), x^(-1))`` on the horizontal and vertical axes.
"""
from __future__ import annotations

import csv
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numkernel as nk
from .errors import ConfigError, DimensionError
from .numkernel import Field
from .solver import Memory, SolverConfig
from .weights import eval_weight_array

NONE = -1
DIVERGED = -2

ORANGE = (255, 165, 0)
GREEN = (0, 200, 0)
PURPLE = (160, 32, 240)
RED = (220, 20, 60)
BLUE = (0, 0, 255)
BLACK = (0, 0, 0)

# Root order matches the built-in problems: p1 lists 2, (1 - sqrt3 i)/2, (1 + sqrt3 i)/2
# and p2 lists (1,1), (1,-1), (-1,1), (-1,-1).
P1_PALETTE = (ORANGE, GREEN, PURPLE)
P2_PALETTE = (ORANGE, GREEN, BLUE, RED)
DEFAULT_PALETTE = (ORANGE, GREEN, PURPLE, RED, (0, 170, 170), (255, 215, 0), (128, 128, 128))

ROW_CHUNK = 16
_COINCIDENT = 2.0 ** (16 - 53)


class Mode(enum.Enum):
    PLAIN = "plain"
    MEMORY = "memory"


@dataclass(frozen=True)
class BasinSpec:
    x_range: tuple = (-3.0, 3.0)
    y_range: tuple = (-3.0, 3.0)
    width: int = 400
    height: int = 400
    max_iter: Optional[int] = None  # 80 plain, 500 memory
    conv_tol: float = 1e-3
    div_threshold: float = 1e150
    mode: Mode = Mode.PLAIN
    palette: Sequence = DEFAULT_PALETTE

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "x_range", tuple(float(v) for v in self.x_range))
        object.__setattr__(self, "y_range", tuple(float(v) for v in self.y_range))
        object.__setattr__(self, "palette", tuple(tuple(int(c) for c in rgb) for rgb in self.palette))
        if self.max_iter is None:
            object.__setattr__(self, "max_iter", 500 if self.mode is Mode.MEMORY else 80)
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be at least 1")
        if not self.conv_tol > 0:
            raise ConfigError("conv_tol must be positive")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be nonnegative")
        for lo, hi in (self.x_range, self.y_range):
            if hi < lo:
                raise ConfigError(f"empty range ({lo}, {hi})")

    def axes(self):
        """Pixel coordinates: columns run left to right, rows top to bottom."""
        xs = _axis(*self.x_range, self.width)
        ys = _axis(*self.y_range, self.height)[::-1]
        return xs, ys


def _axis(lo, hi, count):
    if count == 1:
        return np.array([(lo + hi) / 2])
    return np.linspace(lo, hi, count)


@dataclass
class BasinImage:
    root_index: np.ndarray  # (height, width) int; NONE / DIVERGED for unclassified pixels
    iterations: np.ndarray
    spec: BasinSpec
    roots: list = field(default_factory=list)

    def color(self, index: int):
        if index == NONE:
            return BLACK
        if index == DIVERGED:
            return BLUE
        return self.spec.palette[index % len(self.spec.palette)]

    def rgb(self) -> np.ndarray:
        out = np.zeros(self.root_index.shape + (3,), dtype=np.uint8)
        for value in np.unique(self.root_index):
            out[self.root_index == value] = self.color(int(value))
        return out

    def shares(self) -> dict:
        """Fraction of pixels per label, keyed by root index, ``NONE`` and ``DIVERGED``."""
        total = self.root_index.size
        keys = list(range(len(self.roots))) + [NONE, DIVERGED]
        return {k: float(np.count_nonzero(self.root_index == k)) / total for k in keys}


# -- batched iteration --------------------------------------------------------

def _eval(F, X):
    return F.eval_array(X.T).T


def _batch_dd(F, x, y, *, fx=None, fy=None):
    """Potra divided difference for a batch of point pairs ``(P, n)``.

    Returns ``(A, ok)``; ``ok`` is False where some ``x_j`` and ``y_j`` coincide.
    """
    if fy is None:
        fy = _eval(F, y)
    P, n = x.shape
    h = x - y
    ok = np.all(np.abs(h) >= _COINCIDENT * np.maximum(1.0, np.abs(x)), axis=1)
    h = np.where(ok[:, None], h, 1.0)
    A = np.empty((P, n, n), dtype=np.result_type(x, fy))
    prev = fy
    mixed = y.copy()
    for j in range(n):
        mixed[:, j] = x[:, j]
        cur = fx if (j == n - 1 and fx is not None) else _eval(F, mixed)
        A[:, :, j] = (cur - prev) / h[:, j:j + 1]
        prev = cur
    return A, ok


def _apply(param, v):
    if np.ndim(param) == 0:
        return param * v
    return nk.batch_matvec(param, v)


def _sw_step(F, x, fx, beta, delta, cfg: SolverConfig):
    """One outer iteration on a batch; returns ``(x_new, ok)``."""
    w = x + _apply(beta, fx)
    A, ok = _batch_dd(F, w, x, fy=fx)
    z = x - nk.batch_solve(A, fx)
    if cfg.m == 1:
        return z, ok
    fz = _eval(F, z)
    v = z + _apply(delta, fz)
    B, ok_b = _batch_dd(F, z, v, fx=fz)
    # A coincident second operator means F(z1) is already at rounding level: keep z1.
    settled = ~ok_b
    T = nk.batch_solve(A, B)
    T[settled] = np.eye(F.n)
    W = eval_weight_array(cfg.weight, T)
    z1 = z
    for j in range(1, cfg.m):
        if j > 1:
            fz = _eval(F, z)
        z = z - nk.batch_matvec(W, nk.batch_solve(A, fz))
    z = np.where(settled[:, None], z1, z)
    return z, ok


def _memory_params(F, x, fx, xp, fxp, mode: Memory):
    if mode is Memory.KURCHATOV:
        M, ok = _batch_dd(F, 2 * x - xp, xp, fy=fxp)
    else:
        M, ok = _batch_dd(F, x, xp, fx=fx, fy=fxp)
    inv = nk.batch_solve(M, np.broadcast_to(np.eye(F.n), M.shape))
    return -inv, 2 * inv, ok


def _classify(x, roots, tol):
    """First root within ``tol`` of each point, or NONE."""
    label = np.full(x.shape[0], NONE, dtype=np.int64)
    for r_index in range(len(roots) - 1, -1, -1):
        dist = np.sqrt(np.sum(np.abs(x - roots[r_index]) ** 2, axis=1))
        label[dist < tol] = r_index
    return label


def _orbits(F, roots, x0, x_prev, cfg: SolverConfig, spec: BasinSpec):
    """Run ``P`` orbits; returns ``(root_index, iterations)``."""
    P = x0.shape[0]
    labels = np.full(P, NONE, dtype=np.int64)
    iters = np.full(P, spec.max_iter, dtype=np.int64)
    memory = cfg.memory is not Memory.NONE
    beta = float(np.real(complex(cfg.precision.convert(cfg.beta))))
    delta = float(np.real(complex(cfg.precision.convert(cfg.delta))))

    active = np.arange(P)
    x = x0
    xp = x_prev
    for k in range(spec.max_iter + 1):
        hit = _classify(x, roots, spec.conv_tol)
        done = hit != NONE
        labels[active[done]] = hit[done]
        iters[active[done]] = k
        if memory:
            escaped = ~done & (np.max(np.abs(x), axis=1) > spec.div_threshold)
            labels[active[escaped]] = DIVERGED
            iters[active[escaped]] = k
            done |= escaped
        bad = ~done & ~np.all(np.isfinite(x), axis=1)
        iters[active[bad]] = k
        done |= bad
        keep = ~done
        active, x = active[keep], x[keep]
        if memory:
            xp = xp[keep]
        if k == spec.max_iter or active.size == 0:
            break
        fx = _eval(F, x)
        if memory:
            fxp = _eval(F, xp)
            b, d, ok_m = _memory_params(F, x, fx, xp, fxp, cfg.memory)
            x_new, ok = _sw_step(F, x, fx, b, d, cfg)
            ok &= ok_m
        else:
            x_new, ok = _sw_step(F, x, fx, beta, delta, cfg)
        failed = ~ok
        iters[active[failed]] = k + 1
        keep = ok
        active = active[keep]
        if memory:
            xp = x[keep]
        x = x_new[keep]
    return labels, iters


def _render(F, roots, spec, cfg, seeds, workers):
    """Split the pixel rows into chunks and run them, possibly in threads."""
    height, width = spec.height, spec.width
    chunks = [(r, min(r + ROW_CHUNK, height)) for r in range(0, height, ROW_CHUNK)]

    def job(bounds):
        lo, hi = bounds
        x0, xm1 = seeds(lo, hi)
        with np.errstate(all="ignore"):
            return _orbits(F, roots, x0, xm1, cfg, spec)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, chunks))
    else:
        results = [job(c) for c in chunks]
    labels = np.concatenate([r[0] for r in results]).reshape(height, width)
    iters = np.concatenate([r[1] for r in results]).reshape(height, width)
    return labels, iters


def _float_roots(roots, dtype):
    out = []
    for r in roots:
        arr = r.to_numpy() if isinstance(r, nk.Vector) else np.atleast_1d(np.asarray(r))
        out.append(arr.astype(dtype))
    return out


def render_plain(F, roots, spec: BasinSpec, cfg: SolverConfig, *, workers: int = 1) -> BasinImage:
    """Plane of initial points for a memoryless method."""
    if cfg.memory is not Memory.NONE:
        raise ConfigError("render_plain needs a memoryless method; use render_memory")
    if spec.mode is not Mode.PLAIN:
        raise ConfigError("spec.mode must be plain")
    if not roots:
        raise ConfigError("at least one root is required")
    if F.n == 1 and F.field is Field.COMPLEX:
        dtype = np.complex128
    elif F.n == 2 and F.field is Field.REAL:
        dtype = np.float64
    else:
        raise DimensionError("plain planes need a complex scalar or a real 2-D system")
    froots = _float_roots(roots, dtype)
    xs, ys = spec.axes()

    def seeds(lo, hi):
        gx, gy = np.meshgrid(xs, ys[lo:hi])
        if dtype is np.complex128:
            pts = (gx + 1j * gy).reshape(-1, 1)
        else:
            pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        return pts, None

    labels, iters = _render(F, froots, spec, cfg, seeds, workers)
    return BasinImage(labels, iters, spec, list(roots))


def render_memory(F, roots, spec: BasinSpec, cfg: SolverConfig, *, workers: int = 1) -> BasinImage:
    """Plane of seed pairs ``(x^(0), x^(-1))`` for a memory method on the real line.

    Complex roots are dropped: orbits from real seeds stay real.
    """
    if cfg.memory is Memory.NONE:
        raise ConfigError("render_memory needs a memory method")
    if spec.mode is not Mode.MEMORY:
        raise ConfigError("spec.mode must be memory")
    if F.n != 1:
        raise DimensionError("memory planes need a scalar problem")
    real_roots = []
    for r in roots:
        value = complex(r.to_numpy()[0]) if isinstance(r, nk.Vector) else complex(r)
        if value.imag == 0:
            real_roots.append(r)
    if not real_roots:
        raise ConfigError("no real roots to track")
    froots = [np.real(v) for v in _float_roots(real_roots, np.complex128)]
    xs, ys = spec.axes()

    def seeds(lo, hi):
        gx, gy = np.meshgrid(xs, ys[lo:hi])
        return gx.reshape(-1, 1), gy.reshape(-1, 1)

    labels, iters = _render(F, froots, spec, cfg, seeds, workers)
    return BasinImage(labels, iters, spec, real_roots)


# -- output -------------------------------------------------------------------

def write_ppm(img: BasinImage, path) -> None:
    """Binary P6 image."""
    header = f"P6\n{img.spec.width} {img.spec.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.rgb().tobytes())


def write_csv(img: BasinImage, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "root_index", "iterations"])
        for (row, col), label in np.ndenumerate(img.root_index):
            writer.writerow([row, col, int(label), int(img.iterations[row, col])])
