"""MATLAB-compatible numeric core shared by the interpreter and the native
heart-rate pipeline.

Values are immutable tagged records: real/index scalars, real/index column
vectors, and row-major real matrices. All reals are IEEE doubles. Division
follows IEEE conventions (x/0 gives a signed infinity, 0/0 and NaN operands
give NaN) instead of raising.

Broadcast follows MATLAB: a scalar, or a length-1 vector, pairs with any
vector; an empty vector paired with a (effective) scalar stays empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RetargetError

RSCALAR = "rscalar"
ISCALAR = "iscalar"
RVEC = "rvec"
IVEC = "ivec"
RMAT = "rmat"

_VECTOR_KINDS = (RVEC, IVEC)
_SCALAR_KINDS = (RSCALAR, ISCALAR)


class ShapeMismatch(RetargetError):
    def __init__(self, a_shape, b_shape):
        super().__init__(f"shape mismatch: {a_shape} vs {b_shape}")
        self.a_shape = a_shape
        self.b_shape = b_shape


class IndexOutOfBounds(RetargetError):
    def __init__(self, hi, length):
        super().__init__(f"selection end {hi} out of bounds for length {length}")
        self.hi = hi
        self.length = length


@dataclass(frozen=True)
class NumValue:
    """Tagged numeric value.

    `data` holds the scalar in a one-element tuple, vector elements in
    order, or matrix entries row-major (`rows` x `cols`).
    """

    kind: str
    data: tuple
    rows: int = 0
    cols: int = 0

    def is_scalar(self) -> bool:
        return self.kind in _SCALAR_KINDS

    def is_vector(self) -> bool:
        return self.kind in _VECTOR_KINDS

    def is_matrix(self) -> bool:
        return self.kind == RMAT

    @property
    def scalar(self):
        if not self.is_scalar():
            raise ValueError(f"not a scalar: {self.kind}")
        return self.data[0]

    def __len__(self) -> int:
        return len(self.data)

    def shape(self):
        if self.kind == RMAT:
            return (self.rows, self.cols)
        if self.is_vector():
            return (len(self.data), 1)
        return (1, 1)


@dataclass(frozen=True)
class SpanSel:
    """Contiguous 0-based inclusive selection; `empty` selects nothing."""

    lo: int = 0
    hi: int = -1
    empty: bool = True


def span(lo: int, hi: int) -> SpanSel:
    """Selection lo..hi inclusive; hi < lo yields the empty selection."""
    if hi < lo:
        return SpanSel()
    if lo < 0:
        raise ValueError(f"negative span start: {lo}")
    return SpanSel(lo, hi, empty=False)


EMPTY_SPAN = SpanSel()


def rscalar(x) -> NumValue:
    return NumValue(RSCALAR, (float(x),))


def iscalar(n) -> NumValue:
    n = int(n)
    if n < 0:
        raise ValueError(f"index scalar must be non-negative: {n}")
    return NumValue(ISCALAR, (n,))


def rvec(xs) -> NumValue:
    return NumValue(RVEC, tuple(float(x) for x in xs))


def ivec(xs) -> NumValue:
    elems = tuple(int(x) for x in xs)
    if any(e < 0 for e in elems):
        raise ValueError("index vector elements must be non-negative")
    return NumValue(IVEC, elems)


def rmat(rows: int, cols: int, xs) -> NumValue:
    elems = tuple(float(x) for x in xs)
    if rows * cols != len(elems):
        raise ValueError(f"{rows}x{cols} matrix needs {rows * cols} entries, got {len(elems)}")
    return NumValue(RMAT, elems, rows=rows, cols=cols)


def _div(x: float, y: float) -> float:
    if y == 0.0:
        if x != x:  # NaN numerator
            return x
        if x == 0.0:
            return math.nan
        sign = math.copysign(1.0, x) * math.copysign(1.0, y)
        return math.copysign(math.inf, sign)
    return x / y


_OPS = {
    "+": lambda x, y: x + y,
    "-": lambda x, y: x - y,
    "*": lambda x, y: x * y,
    "/": _div,
}


def _effective_scalar(v: NumValue):
    """A scalar, or a length-1 vector, broadcasts against anything."""
    if v.is_scalar():
        return float(v.scalar)
    if v.is_vector() and len(v.data) == 1:
        return float(v.data[0])
    return None


def ew(op: str, a: NumValue, b: NumValue) -> NumValue:
    """Elementwise +, -, *, / with MATLAB broadcast rules."""
    if op not in _OPS:
        raise ValueError(f"unsupported elementwise op: {op}")
    f = _OPS[op]
    sa, sb = _effective_scalar(a), _effective_scalar(b)

    if a.kind == RMAT or b.kind == RMAT:
        if a.kind == RMAT and b.kind == RMAT:
            if a.shape() != b.shape():
                raise ShapeMismatch(a.shape(), b.shape())
            data = tuple(f(x, y) for x, y in zip(a.data, b.data))
            return NumValue(RMAT, data, rows=a.rows, cols=a.cols)
        m, s = (a, sb) if a.kind == RMAT else (b, sa)
        if s is None:
            raise ShapeMismatch(a.shape(), b.shape())
        if a.kind == RMAT:
            data = tuple(f(x, s) for x in m.data)
        else:
            data = tuple(f(s, x) for x in m.data)
        return NumValue(RMAT, data, rows=m.rows, cols=m.cols)

    if a.is_scalar() and b.is_scalar():
        return rscalar(f(float(a.scalar), float(b.scalar)))

    # At least one true vector operand.
    va = tuple(float(x) for x in a.data) if a.is_vector() else None
    vb = tuple(float(x) for x in b.data) if b.is_vector() else None
    if va is not None and vb is not None and len(va) == len(vb):
        return rvec(f(x, y) for x, y in zip(va, vb))
    if va is not None and sb is not None:
        return rvec(f(x, sb) for x in va)
    if vb is not None and sa is not None:
        return rvec(f(sa, x) for x in vb)
    raise ShapeMismatch(a.shape(), b.shape())


def diff(v: NumValue) -> NumValue:
    """Consecutive differences as reals; length max(len-1, 0)."""
    if v.is_scalar():
        return rvec(())
    if not v.is_vector():
        raise ShapeMismatch(v.shape(), "vector")
    xs = [float(x) for x in v.data]
    return rvec(xs[k + 1] - xs[k] for k in range(max(len(xs) - 1, 0)))


def slice(v: NumValue, s: SpanSel) -> NumValue:  # noqa: A001 - name fixed by the op contract
    """Elements s.lo..s.hi inclusive, preserving the vector kind."""
    if not v.is_vector():
        raise ShapeMismatch(v.shape(), "vector")
    if s.empty:
        return NumValue(v.kind, ())
    if s.hi >= len(v.data):
        raise IndexOutOfBounds(s.hi, len(v.data))
    return NumValue(v.kind, v.data[s.lo : s.hi + 1])


def length(x: NumValue) -> NumValue:
    """MATLAB length: 1 for scalars, element count for vectors,
    max(rows, cols) for matrices."""
    if x.is_scalar():
        return iscalar(1)
    if x.is_vector():
        return iscalar(len(x.data))
    return iscalar(max(x.rows, x.cols))
