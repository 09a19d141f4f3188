"""Arbitrary-precision scalars, vectors, dense matrices and LU solving.

Every value lives under a :class:`PrecisionContext`.  The context fixes the
significand width and whether entries are real (``mpf``) or complex
(``mpc``).  Each distinct width gets its own private ``mpmath.MPContext`` so
that nothing depends on mpmath's global precision and values of different
widths can never be combined by accident.
"""
from __future__ import annotations

import enum
import numbers
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import DimensionError, PrecisionMismatch, SingularOperator

# Every MPContext defines its own mpf/mpc subclasses; these are the shared bases.
_MPF = mpmath.ctx_mp_python._mpf
_MPC = mpmath.ctx_mp_python._mpc

DEFAULT_BITS = 1024
MIN_BITS = 64
ENV_PRECISION = "STEFFKIT_PRECISION_BITS"


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


@lru_cache(maxsize=None)
def _mp_for_bits(bits: int) -> mpmath.ctx_mp.MPContext:
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


def default_bits() -> int:
    """Default working precision, honouring ``STEFFKIT_PRECISION_BITS``."""
    raw = os.environ.get(ENV_PRECISION)
    if not raw:
        return DEFAULT_BITS
    try:
        bits = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_PRECISION} must be an integer, got {raw!r}") from None
    if bits < MIN_BITS:
        raise ValueError(f"{ENV_PRECISION} must be >= {MIN_BITS}, got {bits}")
    return bits


@dataclass(frozen=True)
class PrecisionContext:
    significand_bits: int = DEFAULT_BITS
    field: Field = Field.REAL

    def __post_init__(self):
        if not isinstance(self.significand_bits, numbers.Integral):
            raise TypeError("significand_bits must be an integer")
        if self.significand_bits < MIN_BITS:
            raise ValueError(f"significand_bits must be >= {MIN_BITS}")
        if not isinstance(self.field, Field):
            object.__setattr__(self, "field", Field(self.field))

    @property
    def mp(self):
        """The private mpmath context backing this precision."""
        return _mp_for_bits(self.significand_bits)

    @property
    def is_complex(self) -> bool:
        return self.field is Field.COMPLEX

    @property
    def eps(self):
        return self.mp.ldexp(self.mp.mpf(1), -self.significand_bits)

    def with_field(self, field: Field) -> "PrecisionContext":
        return PrecisionContext(self.significand_bits, Field(field))

    def convert(self, value):
        """Turn ``value`` into a scalar of this context.

        Python floats go through their shortest decimal ``repr`` so that
        ``0.1`` means one tenth at full precision rather than the binary
        double nearest to it.  Strings are parsed at full precision.
        """
        mp = self.mp
        if isinstance(value, (_MPF, _MPC)):
            if value.context is not mp:
                raise PrecisionMismatch(
                    f"scalar from a {value.context.prec}-bit context used in a "
                    f"{self.significand_bits}-bit context"
                )
            if isinstance(value, _MPC):
                return self._complex(value.real, value.imag)
            return mp.mpc(value) if self.is_complex else value
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, numbers.Integral):
            v = mp.mpf(int(value))
            return mp.mpc(v) if self.is_complex else v
        if isinstance(value, numbers.Real):
            v = mp.mpf(repr(float(value)))
            return mp.mpc(v) if self.is_complex else v
        if isinstance(value, numbers.Complex):
            c = complex(value)
            return self._complex(mp.mpf(repr(c.real)), mp.mpf(repr(c.imag)))
        if isinstance(value, str):
            text = value.strip().replace(" ", "")
            if text.endswith(("j", "i")):
                c = complex(text.replace("i", "j"))
                return self._complex(mp.mpf(repr(c.real)), mp.mpf(repr(c.imag)))
            v = mp.mpf(text)
            return mp.mpc(v) if self.is_complex else v
        raise TypeError(f"cannot convert {type(value).__name__} to a scalar")

    def _complex(self, re, im):
        mp = self.mp
        if self.is_complex:
            return mp.mpc(re, im)
        if im != 0:
            raise ValueError("complex value in a real context")
        return mp.mpf(re)

    def vector(self, values: Iterable) -> "Vector":
        return Vector(self, [self.convert(v) for v in values])

    def full(self, n: int, value) -> "Vector":
        v = self.convert(value)
        return Vector(self, [v] * n)

    def zeros(self, n: int) -> "Vector":
        return self.full(n, 0)

    def matrix(self, rows: Sequence[Sequence]) -> "Matrix":
        rows = [list(r) for r in rows]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise DimensionError("matrix rows must be nonempty and equally long")
        return Matrix(self, len(rows), len(rows[0]), [self.convert(v) for r in rows for v in r])

    def identity(self, n: int) -> "Matrix":
        one, zero = self.convert(1), self.convert(0)
        return Matrix(self, n, n, [one if i == j else zero for i in range(n) for j in range(n)])

    def diag(self, values: Sequence) -> "Matrix":
        n = len(values)
        zero = self.convert(0)
        entries = [zero] * (n * n)
        for i, v in enumerate(values):
            entries[i * n + i] = self.convert(v)
        return Matrix(self, n, n, entries)

    def rebase(self, obj):
        """Re-express a Vector/Matrix from another context in this one."""
        if isinstance(obj, Vector):
            return Vector(self, [self._foreign(v) for v in obj.entries])
        if isinstance(obj, Matrix):
            return Matrix(self, obj.rows, obj.cols, [self._foreign(v) for v in obj.entries])
        return self._foreign(obj)

    def _foreign(self, v):
        mp = self.mp
        if isinstance(v, _MPC):
            return self._complex(mp.mpf(v.real), mp.mpf(v.imag))
        if isinstance(v, _MPF):
            return self.convert(mp.mpf(v))
        return self.convert(v)


def _check_same(a, b):
    if a.ctx != b.ctx:
        raise PrecisionMismatch(f"cannot combine values from {a.ctx} and {b.ctx}")


class Vector:
    """Immutable vector of context scalars."""

    __slots__ = ("ctx", "entries")

    def __init__(self, ctx: PrecisionContext, entries):
        entries = tuple(entries)
        if not entries:
            raise DimensionError("vector must have positive dimension")
        self.ctx = ctx
        self.entries = entries

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __repr__(self):
        body = ", ".join(mpmath.nstr(v, 8) for v in self.entries[:6])
        more = ", ..." if self.dim > 6 else ""
        return f"Vector([{body}{more}], bits={self.ctx.significand_bits})"

    def __eq__(self, other):
        return isinstance(other, Vector) and self.ctx == other.ctx and self.entries == other.entries

    __hash__ = None

    def _conform(self, other):
        if not isinstance(other, Vector):
            return NotImplemented
        _check_same(self, other)
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch {self.dim} vs {other.dim}")
        return other

    def __add__(self, other):
        other = self._conform(other)
        if other is NotImplemented:
            return other
        return Vector(self.ctx, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        other = self._conform(other)
        if other is NotImplemented:
            return other
        return Vector(self.ctx, [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return Vector(self.ctx, [-a for a in self.entries])

    def __mul__(self, scalar):
        if isinstance(scalar, (Vector, Matrix)):
            return NotImplemented
        c = self.ctx.convert(scalar)
        return Vector(self.ctx, [c * a for a in self.entries])

    __rmul__ = __mul__

    def dot(self, other) -> object:
        other = self._conform(other)
        return sum((a * b for a, b in zip(self.entries, other.entries)), self.ctx.convert(0))

    def norm2(self):
        return norm2(self)

    def norm_inf(self):
        return max(abs(a) for a in self.entries)

    def is_finite(self) -> bool:
        mp = self.ctx.mp
        return all(mp.isfinite(a) for a in self.entries)

    def to_numpy(self):
        if self.ctx.is_complex:
            return np.array([complex(a) for a in self.entries])
        return np.array([float(a) for a in self.entries])


class Matrix:
    """Immutable dense matrix stored row-major."""

    __slots__ = ("ctx", "rows", "cols", "entries")

    def __init__(self, ctx: PrecisionContext, rows: int, cols: int, entries):
        entries = tuple(entries)
        if rows < 1 or cols < 1 or rows * cols != len(entries):
            raise DimensionError(f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(entries)}")
        self.ctx = ctx
        self.rows = rows
        self.cols = cols
        self.entries = entries

    @classmethod
    def from_columns(cls, ctx, columns: Sequence[Sequence]) -> "Matrix":
        cols = len(columns)
        rows = len(columns[0])
        return cls(ctx, rows, cols, [columns[j][i] for i in range(rows) for j in range(cols)])

    @property
    def shape(self):
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i):
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def column(self, j) -> Vector:
        return Vector(self.ctx, self.entries[j::self.cols])

    def tolist(self):
        return [list(self.row(i)) for i in range(self.rows)]

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols}, bits={self.ctx.significand_bits})"

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.ctx == other.ctx
            and self.shape == other.shape
            and self.entries == other.entries
        )

    __hash__ = None

    def _conform(self, other):
        _check_same(self, other)
        if other.shape != self.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        self._conform(other)
        return Matrix(self.ctx, self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        self._conform(other)
        return Matrix(self.ctx, self.rows, self.cols, [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return Matrix(self.ctx, self.rows, self.cols, [-a for a in self.entries])

    def __mul__(self, scalar):
        if isinstance(scalar, (Vector, Matrix)):
            return NotImplemented
        c = self.ctx.convert(scalar)
        return Matrix(self.ctx, self.rows, self.cols, [c * a for a in self.entries])

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Vector):
            _check_same(self, other)
            if other.dim != self.cols:
                raise DimensionError(f"cannot apply {self.shape} matrix to vector of dim {other.dim}")
            x = other.entries
            return Vector(self.ctx, [
                _sum_products(self.row(i), x, self.ctx) for i in range(self.rows)
            ])
        if isinstance(other, Matrix):
            _check_same(self, other)
            if other.rows != self.cols:
                raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
            out = []
            bcols = [other.entries[j::other.cols] for j in range(other.cols)]
            for i in range(self.rows):
                r = self.row(i)
                out.extend(_sum_products(r, c, self.ctx) for c in bcols)
            return Matrix(self.ctx, self.rows, other.cols, out)
        return NotImplemented

    def norm_max(self):
        return max(abs(a) for a in self.entries)

    def norm_fro(self):
        mp = self.ctx.mp
        return mp.sqrt(sum((_abs2(a) for a in self.entries), mp.mpf(0)))

    def transpose(self) -> "Matrix":
        return Matrix(self.ctx, self.cols, self.rows,
                      [self.entries[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)])


def _sum_products(a, b, ctx):
    acc = ctx.mp.mpf(0)
    for u, v in zip(a, b):
        acc += u * v
    if ctx.is_complex and not isinstance(acc, _MPC):
        acc = ctx.mp.mpc(acc)
    return acc


def _abs2(z):
    if isinstance(z, _MPC):
        return z.real * z.real + z.imag * z.imag
    return z * z


def norm2(v: Vector):
    """Euclidean norm; complex entries contribute their squared modulus."""
    mp = v.ctx.mp
    acc = mp.mpf(0)
    for a in v.entries:
        acc += _abs2(a)
    return mp.sqrt(acc)


@dataclass(frozen=True)
class LUFactors:
    """Packed ``P A = L U`` with unit-diagonal ``L`` stored below ``U``.

    ``perm[i]`` is the row of ``A`` that ended up in row ``i``.
    """

    lu: Matrix
    perm: tuple
    singular: bool

    @property
    def ctx(self):
        return self.lu.ctx

    @property
    def n(self):
        return self.lu.rows

    def lower(self) -> Matrix:
        n, ctx = self.n, self.ctx
        one, zero = ctx.convert(1), ctx.convert(0)
        return Matrix(ctx, n, n, [
            self.lu[i, j] if j < i else (one if i == j else zero)
            for i in range(n) for j in range(n)
        ])

    def upper(self) -> Matrix:
        n, zero = self.n, self.ctx.convert(0)
        return Matrix(self.ctx, n, n, [self.lu[i, j] if j >= i else zero for i in range(n) for j in range(n)])

    def permutation(self) -> Matrix:
        n = self.n
        return self.ctx.matrix([[1 if self.perm[i] == j else 0 for j in range(n)] for i in range(n)])


def lu_factor(A: Matrix) -> LUFactors:
    """Gaussian elimination with partial pivoting.

    A pivot smaller than ``2**(8 - bits) * max|A_ij|`` marks the factors as
    singular; elimination still runs to completion so the packed storage is
    always fully populated.
    """
    if not A.is_square:
        raise DimensionError(f"lu_factor needs a square matrix, got {A.shape}")
    n = A.rows
    mp = A.ctx.mp
    a = [list(A.row(i)) for i in range(n)]
    perm = list(range(n))
    scale = A.norm_max()
    threshold = mp.ldexp(scale, 8 - A.ctx.significand_bits)
    singular = scale == 0
    for k in range(n):
        p = max(range(k, n), key=lambda r: abs(a[r][k]))
        if p != k:
            a[k], a[p] = a[p], a[k]
            perm[k], perm[p] = perm[p], perm[k]
        pivot = a[k][k]
        if abs(pivot) <= threshold:
            singular = True
            continue
        rk = a[k]
        for i in range(k + 1, n):
            ri = a[i]
            f = ri[k] / pivot
            ri[k] = f
            if f:
                for j in range(k + 1, n):
                    ri[j] -= f * rk[j]
    return LUFactors(Matrix(A.ctx, n, n, [v for r in a for v in r]), tuple(perm), singular)


def _solve_vector(f: LUFactors, b):
    n = f.n
    lu = f.lu
    y = [b[f.perm[i]] for i in range(n)]
    for i in range(n):
        acc = y[i]
        for j in range(i):
            acc -= lu[i, j] * y[j]
        y[i] = acc
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for j in range(i + 1, n):
            acc -= lu[i, j] * y[j]
        y[i] = acc / lu[i, i]
    return y


def lu_solve(f: LUFactors, B):
    """Solve ``A X = B`` for a Vector or Matrix right-hand side."""
    if f.singular:
        raise SingularOperator("matrix is numerically singular")
    if isinstance(B, Vector):
        _check_same(f.lu, B)
        if B.dim != f.n:
            raise DimensionError(f"right-hand side has dim {B.dim}, expected {f.n}")
        return Vector(f.ctx, _solve_vector(f, B.entries))
    if isinstance(B, Matrix):
        _check_same(f.lu, B)
        if B.rows != f.n:
            raise DimensionError(f"right-hand side has {B.rows} rows, expected {f.n}")
        cols = [_solve_vector(f, B.entries[j::B.cols]) for j in range(B.cols)]
        return Matrix.from_columns(f.ctx, cols)
    raise TypeError(f"cannot solve against {type(B).__name__}")


def solve(A: Matrix, B):
    return lu_solve(lu_factor(A), B)


# Machine-precision batch kernels.  Every operation is elementwise over the
# leading batch axis with a fixed summation order, so a pixel's result does not
# depend on which other pixels share its batch.

def batch_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``A @ B`` for stacks of small matrices ``(P, n, k) x (P, k, q)``."""
    out = A[..., :, 0:1] * B[..., 0:1, :]
    for k in range(1, A.shape[-1]):
        out = out + A[..., :, k:k + 1] * B[..., k:k + 1, :]
    return out


def batch_matvec(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    return batch_matmul(A, b[..., None])[..., 0]


def batch_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` per batch element by partially pivoted elimination.

    ``A`` has shape ``(P, n, n)``; ``B`` is ``(P, n)`` or ``(P, n, k)``.
    Elements whose pivot falls below ``2**(8 - 53) * max|A|`` come back as NaN.
    """
    vector_rhs = B.ndim == A.ndim - 1
    dtype = np.result_type(A, B, np.float64)
    a = np.array(A, dtype=dtype)
    b = np.array(B[..., None] if vector_rhs else B, dtype=dtype)
    n = a.shape[-1]
    rows = np.arange(a.shape[0])
    threshold = np.ldexp(np.abs(a).reshape(a.shape[0], -1).max(axis=1), 8 - 53)
    bad = threshold == 0
    for k in range(n):
        p = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        swap = p != k
        if swap.any():
            idx = rows[swap]
            pk = p[swap]
            a[idx, k], a[idx, pk] = a[idx, pk], a[idx, k].copy()
            b[idx, k], b[idx, pk] = b[idx, pk], b[idx, k].copy()
        pivot = a[:, k, k]
        small = np.abs(pivot) <= threshold
        bad |= small
        pivot = np.where(small, 1, pivot)
        for i in range(k + 1, n):
            f = a[:, i, k] / pivot
            a[:, i, k:] -= f[:, None] * a[:, k, k:]
            b[:, i] -= f[:, None] * b[:, k]
        a[:, k, k] = pivot
    x = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        acc = b[:, i]
        for j in range(i + 1, n):
            acc = acc - a[:, i, j][:, None] * x[:, j]
        x[:, i] = acc / a[:, i, i][:, None]
    x[bad] = np.nan
    return x[..., 0] if vector_rhs else x
