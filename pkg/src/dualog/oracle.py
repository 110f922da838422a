"""High-precision reference arithmetic: correctly rounded e^x / ln(x) at fixed-point
widths, extended-precision field operations for ground truth, and bulk reference
tables for exhaustive sweeps.

Scalar reference values are produced through MPFR (via gmpy2), which guarantees
correct rounding for every operation it provides; fixed-point roundings of
transcendental values use an escalating-precision loop so that every emitted
code is provably the round-to-nearest-even result.  The bulk tables used by the
exhaustive sweeps are generated with plain integer arithmetic (incremental
products and a split-table log series) and carry a documented error bound of
``REF_SLOP`` units in the last guard bit; consumers must escalate to the exact
scalar path whenever a decision falls within that slop.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .fixedpt import UFix

__all__ = [
    "DEFAULT_PREC",
    "REF_GUARD",
    "REF_SLOP",
    "BigFloat",
    "ref_add",
    "ref_sub",
    "ref_mul",
    "ref_div",
    "ref_sqrt",
    "ref_dot",
    "ref_norm2",
    "ref_exp",
    "ref_ln",
    "ln2_code",
    "ln1p_pow2_code",
    "rne_fixed",
    "encode_ref_exact",
    "floor_fixed_exact",
    "two_ln2_floor",
    "exp_code_exact",
    "ln_code_exact",
    "exp_ref_table",
    "ln_ref_table",
    "gauss_ln_refs",
]

DEFAULT_PREC = 128

# Guard bits carried by the bulk reference tables, and the worst-case error of
# a table entry in units of 2^-REF_GUARD.  42 evaluation bits suffice to round
# 23-bit kernel outputs, so 50 guard bits leave >= 2^8 units between any table
# value and the nearest rounding/band boundary.
REF_GUARD = 50
REF_SLOP = 4

_GI_EXTRA = 46  # internal guard bits above REF_GUARD for the table generators
_TABLE_BITS = 16  # split-table index width for the integer ln evaluator


def _ctx(prec: int, rounding=gmpy2.RoundToNearest):
    return gmpy2.context(precision=prec, round=rounding)


def _to_fraction(x: mpfr) -> Fraction:
    m, e = x.as_mantissa_exp()
    m, e = int(m), int(e)
    return Fraction(m) * Fraction(2) ** e


def _floor_fixed(x: mpfr, bits: int) -> int:
    """floor(x * 2**bits) for nonnegative finite x, exact."""
    m, e = x.as_mantissa_exp()
    sh = bits + int(e)
    return (int(m) << sh) if sh >= 0 else (int(m) >> -sh)


# ---------------------------------------------------------------------------
# BigFloat: P-bit correctly rounded field arithmetic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BigFloat:
    """A sign/exponent/significand value with a fixed working precision.

    Wraps an MPFR float of ``prec`` significand bits; every arithmetic
    operation is correctly rounded (RNE) to that precision.
    """

    value: mpfr
    prec: int = DEFAULT_PREC

    @classmethod
    def from_real(cls, v, prec: int = DEFAULT_PREC) -> "BigFloat":
        if isinstance(v, Fraction):
            with _ctx(prec):
                return cls(gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator)), prec)
        with _ctx(prec):
            return cls(mpfr(v), prec)

    @property
    def sign(self) -> int:
        return -1 if self.value < 0 else 1

    @property
    def exponent(self) -> int:
        if self.value == 0:
            return 0
        _, e = self.value.as_mantissa_exp()
        return int(e) + self.prec

    @property
    def significand(self) -> int:
        m, _ = self.value.as_mantissa_exp()
        return abs(int(m))

    def to_fraction(self) -> Fraction:
        return _to_fraction(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def _binop(self, other: "BigFloat", fn) -> "BigFloat":
        if self.prec != other.prec:
            raise ValueError("BigFloat operands must share a precision")
        with _ctx(self.prec):
            return BigFloat(fn(self.value, other.value), self.prec)

    def __add__(self, other):
        return self._binop(other, gmpy2.add)

    def __sub__(self, other):
        return self._binop(other, gmpy2.sub)

    def __mul__(self, other):
        return self._binop(other, gmpy2.mul)

    def __truediv__(self, other):
        if other.value == 0:
            raise ZeroDivisionError("BigFloat division by zero")
        return self._binop(other, gmpy2.div)

    def __neg__(self):
        return BigFloat(-self.value, self.prec)

    def __abs__(self):
        return BigFloat(abs(self.value), self.prec)

    def sqrt(self) -> "BigFloat":
        if self.value < 0:
            raise ValueError("BigFloat sqrt of a negative value")
        with _ctx(self.prec):
            return BigFloat(gmpy2.sqrt(self.value), self.prec)


def ref_add(a: BigFloat, b: BigFloat) -> BigFloat:
    return a + b


def ref_sub(a: BigFloat, b: BigFloat) -> BigFloat:
    return a - b


def ref_mul(a: BigFloat, b: BigFloat) -> BigFloat:
    return a * b


def ref_div(a: BigFloat, b: BigFloat) -> BigFloat:
    return a / b


def ref_sqrt(a: BigFloat) -> BigFloat:
    return a.sqrt()


def ref_dot(xs: Sequence[BigFloat], ys: Sequence[BigFloat]) -> BigFloat:
    """Dot product evaluated with P+64 guard bits and a single final rounding."""
    if len(xs) != len(ys):
        raise ValueError("ref_dot length mismatch")
    if not xs:
        return BigFloat.from_real(0)
    prec = xs[0].prec
    with _ctx(2 * prec + 64):
        acc = mpfr(0)
        for x, y in zip(xs, ys):
            acc = gmpy2.add(acc, gmpy2.mul(x.value, y.value))
    with _ctx(prec):
        return BigFloat(mpfr(acc), prec)


def ref_norm2(v: Sequence[BigFloat]) -> BigFloat:
    return ref_sqrt(ref_dot(v, v))


# ---------------------------------------------------------------------------
# Correctly rounded fixed-point codes of transcendental values
# ---------------------------------------------------------------------------


def rne_fixed(evaluate: Callable[[int], mpfr], width: int, start_prec: int | None = None) -> int:
    """Round ``evaluate()`` to ``width`` fractional bits, nearest-even, exactly.

    ``evaluate(prec)`` must return the value correctly rounded to ``prec``
    significand bits.  Precision escalates until the rounding decision has a
    provable margin, so the caller must guarantee the value is not exactly a
    tie (true for the irrational values this is used on; handle dyadic cases
    before calling).
    """
    prec = start_prec or (width + 48)
    while prec <= 1 << 20:
        with _ctx(prec):
            t = evaluate(prec)
        ts = _to_fraction(t) * (1 << width)
        floor = int(ts)
        rem = ts - floor
        # |t - v| <= 2^(exp(t) - prec); scaled by 2^width
        err = Fraction(1, 2) ** (prec - 4 - width) * max(1, abs(floor))
        half = Fraction(1, 2)
        if abs(rem - half) > err:
            return floor + (1 if rem > half else 0)
        prec *= 2
    raise RuntimeError("rne_fixed failed to resolve a rounding decision")


def ln2_code(width: int) -> int:
    """RNE code of ln(2) at ``width`` fractional bits."""
    return _ln2_code_cached(width)


_LN2_CACHE: dict[int, int] = {}


def _ln2_code_cached(width: int) -> int:
    if width not in _LN2_CACHE:
        _LN2_CACHE[width] = rne_fixed(lambda p: gmpy2.log(mpfr(2)), width)
    return _LN2_CACHE[width]


_LN1P_CACHE: dict[tuple[int, int], int] = {}


def ln1p_pow2_code(n: int, width: int) -> int:
    """RNE code of ln(1 + 2**-n) at ``width`` fractional bits (n >= 0)."""
    key = (n, width)
    if key not in _LN1P_CACHE:
        _LN1P_CACHE[key] = rne_fixed(lambda p: gmpy2.log1p(mpfr(1) / (1 << n)), width)
    return _LN1P_CACHE[key]


def ref_exp(x: UFix, out_width: int) -> UFix:
    """Correctly rounded e^x to out_width fractional bits, x in [0, ln 2)."""
    xf = x.value
    if xf < 0 or not _below_ln2(xf):
        raise ValueError("ref_exp domain is [0, ln 2)")
    if x.code == 0:
        return UFix(1 << out_width, out_width, int_bits=1)
    num, den = xf.numerator, xf.denominator
    code = rne_fixed(lambda p: gmpy2.exp(gmpy2.mpq(num, den)), out_width)
    return UFix(code, out_width, int_bits=1)


def ref_ln(x: UFix, out_width: int) -> UFix:
    """Correctly rounded ln(x) to out_width fractional bits, x in [1, 2)."""
    xf = x.value
    if not (1 <= xf < 2):
        raise ValueError("ref_ln domain is [1, 2)")
    if xf == 1:
        return UFix(0, out_width)
    num, den = xf.numerator, xf.denominator
    code = rne_fixed(lambda p: gmpy2.log(gmpy2.mpq(num, den)), out_width)
    return UFix(code, out_width)


def _below_ln2(f: Fraction) -> bool:
    with _ctx(max(64, f.denominator.bit_length() + 40)):
        return mpfr(gmpy2.mpq(f.numerator, f.denominator)) < gmpy2.log(mpfr(2))


def exp_code_exact(xcode: int, x_bits: int, out_width: int) -> int:
    """RNE code (with integer bit) of e^(xcode * 2^-x_bits)."""
    if xcode == 0:
        return 1 << out_width
    return rne_fixed(lambda p: gmpy2.exp(gmpy2.mpq(xcode, 1 << x_bits)), out_width)


def ln_code_exact(kcode: int, x_bits: int, out_width: int) -> int:
    """RNE code of ln(1 + kcode * 2^-x_bits)."""
    if kcode == 0:
        return 0
    return rne_fixed(lambda p: gmpy2.log(gmpy2.mpq((1 << x_bits) + kcode, 1 << x_bits)), out_width)


def encode_ref_exact(evaluate: Callable[[int], mpfr], frac_bits: int, ln2c: int) -> tuple[int, int]:
    """Correctly rounded log-domain encoding (a, b_code) of a positive value.

    ``evaluate(prec)`` returns the value at ``prec`` bits.  Escalates until
    both the base-2 exponent and the RNE rounding of the base-e fraction are
    certain.  b is the fraction-RNE of ln(v / 2^a); a result landing on ln2c
    renormalizes upward.  The value must not be an exact power of two.
    """
    prec = frac_bits + 64
    while prec <= 1 << 20:
        with _ctx(prec):
            v = evaluate(prec)
            if v <= 0:
                raise ValueError("encode_ref_exact requires a positive value")
            a = int(gmpy2.floor(gmpy2.log2(v)))
        m = _to_fraction(v) / (Fraction(2) ** a)
        margin = Fraction(1, 1 << max(16, prec // 2))
        if not (1 + margin < m < 2 - margin):
            prec *= 2
            continue
        b = rne_fixed(
            lambda p: gmpy2.log(gmpy2.div(evaluate(p), gmpy2.exp2(a))),
            frac_bits,
            start_prec=prec,
        )
        if b >= ln2c:
            return a + 1, b - ln2c
        return a, b
    raise RuntimeError("encode_ref_exact failed to converge")


def floor_fixed_exact(evaluate: Callable[[int], mpfr], width: int) -> int:
    """floor(v * 2**width) with escalation; v must not be dyadic at width bits."""
    prec = width + 48
    while prec <= 1 << 20:
        with _ctx(prec):
            t = evaluate(prec)
        ts = _to_fraction(t) * (1 << width)
        floor = int(ts)
        err = Fraction(1, 2) ** (prec - 4 - width) * max(1, abs(floor))
        if ts - floor > err and floor + 1 - ts > err:
            return floor
        prec *= 2
    raise RuntimeError("floor_fixed_exact failed to resolve")


_TWO_LN2_CACHE: dict[int, int] = {}


def two_ln2_floor(width: int) -> int:
    """floor(2 ln 2 * 2**width)."""
    if width not in _TWO_LN2_CACHE:
        _TWO_LN2_CACHE[width] = floor_fixed_exact(lambda p: 2 * gmpy2.log(mpfr(2)), width)
    return _TWO_LN2_CACHE[width]


# ---------------------------------------------------------------------------
# Bulk reference tables (pure integer arithmetic)
# ---------------------------------------------------------------------------


def _exp_chunk(args) -> np.ndarray:
    x_bits, guard, k0, k1 = args
    gi = guard + _GI_EXTRA
    with _ctx(gi + 40, gmpy2.RoundToZero):
        step = _floor_fixed(gmpy2.exp(mpfr(1) / (1 << x_bits)), gi)
        r = (1 << gi) if k0 == 0 else _floor_fixed(gmpy2.exp(mpfr(k0) / (1 << x_bits)), gi)
    out = []
    app = out.append
    for _ in range(k1 - k0):
        app(r >> _GI_EXTRA)
        r = (r * step) >> gi
    return np.array(out, dtype=np.uint64)


def exp_ref_table(x_bits: int, count: int, guard: int = REF_GUARD, jobs: int = 1) -> np.ndarray:
    """floor-ish(e^(k*2^-x_bits) * 2^guard) for k in [0, count).

    Entry error is below REF_SLOP units of 2^-guard (one-sided: entries never
    exceed the true value by more than one unit).  Entry 0 is exact.
    """
    chunks = _split_range(count, jobs)
    args = [(x_bits, guard, k0, k1) for k0, k1 in chunks]
    return _run_chunks(_exp_chunk, args, jobs)


def _ln_split_tables(gi: int):
    tb = _TABLE_BITS
    with _ctx(gi + 40, gmpy2.RoundToZero):
        lnA = [0] * (1 << tb)
        for h in range(1, 1 << tb):
            lnA[h] = _floor_fixed(gmpy2.log(1 + mpfr(h) / (1 << tb)), gi)
        ln2 = _floor_fixed(gmpy2.log(mpfr(2)), gi)
    return lnA, ln2


def _ln_series(U: int, gi: int) -> int:
    """ln(1+u)*2^gi for U = floor(u*2^gi), u < 2^-14; error a few units."""
    U2 = (U * U) >> gi
    U3 = (U2 * U) >> gi
    U4 = (U3 * U) >> gi
    U5 = (U4 * U) >> gi
    U6 = (U5 * U) >> gi
    return U - U2 // 2 + U3 // 3 - U4 // 4 + U5 // 5 - U6 // 6


def _ln_of_fixed(mant: int, mant_bits: int, lnA: list[int], ln2: int, gi: int) -> int:
    """ln(mant * 2^-mant_bits) * 2^gi for values in [1, 4); error a few units."""
    extra = 0
    if mant >> (mant_bits + 1):
        mant_bits += 1  # value in [2, 4): halve and add ln 2
        extra = ln2
    tb = _TABLE_BITS
    fcode = mant - (1 << mant_bits)
    if mant_bits >= tb:
        h = fcode >> (mant_bits - tb)
    else:
        h = fcode << (tb - mant_bits)
    ah = (1 << tb) + h
    n_int = (mant << tb) - (ah << mant_bits)
    sh = gi - mant_bits
    U = ((n_int << sh) if sh >= 0 else (n_int >> -sh)) // ah
    return extra + lnA[h] + _ln_series(U, gi)


def _ln_chunk(args) -> np.ndarray:
    x_bits, guard, k0, k1 = args
    gi = guard + _GI_EXTRA
    lnA, _ = _ln_split_tables(gi)
    tb = _TABLE_BITS
    out = []
    app = out.append
    if x_bits <= tb:
        with _ctx(gi + 40, gmpy2.RoundToZero):
            for k in range(k0, k1):
                app(0 if k == 0 else _floor_fixed(gmpy2.log(1 + mpfr(k) / (1 << x_bits)), gi) >> _GI_EXTRA)
        return np.array(out, dtype=np.uint64)
    low_bits = x_bits - tb
    low_mask = (1 << low_bits) - 1
    for k in range(k0, k1):
        h = k >> low_bits
        l = k & low_mask
        U = (l << (gi - x_bits + tb)) // ((1 << tb) + h)
        app((lnA[h] + _ln_series(U, gi)) >> _GI_EXTRA)
    return np.array(out, dtype=np.uint64)


def ln_ref_table(x_bits: int, guard: int = REF_GUARD, jobs: int = 1) -> np.ndarray:
    """floor-ish(ln(1 + k*2^-x_bits) * 2^guard) for all 2^x_bits codes k.

    Entry error is below REF_SLOP units of 2^-guard; entry 0 is exact.
    """
    count = 1 << x_bits
    chunks = _split_range(count, jobs)
    args = [(x_bits, guard, k0, k1) for k0, k1 in chunks]
    return _run_chunks(_ln_chunk, args, jobs)


def _gauss_chunk_dense(args) -> np.ndarray:
    f_bits, guard, d0, d1 = args
    gi = guard + _GI_EXTRA
    lnA, ln2 = _ln_split_tables(gi)
    with _ctx(gi + 40, gmpy2.RoundToZero):
        step = _floor_fixed(gmpy2.exp(mpfr(1) / (1 << f_bits)), gi)
        w = _floor_fixed(gmpy2.exp(mpfr(int(d0)) / (1 << f_bits)), gi)
    out = []
    app = out.append
    one = 1 << gi
    for _ in range(d1 - d0):
        app(_ln_of_fixed(one + w, gi, lnA, ln2, gi) >> _GI_EXTRA)
        w = (w * step) >> gi
    return np.array(out, dtype=np.uint64)


def _gauss_chunk_sparse(args) -> np.ndarray:
    f_bits, guard, deltas = args
    gi = guard + _GI_EXTRA
    lnA, ln2 = _ln_split_tables(gi)
    out = []
    app = out.append
    one = 1 << gi
    with _ctx(gi + 40, gmpy2.RoundToZero):
        for d in deltas:
            w = _floor_fixed(gmpy2.exp(mpfr(int(d)) / (1 << f_bits)), gi)
            app(_ln_of_fixed(one + w, gi, lnA, ln2, gi) >> _GI_EXTRA)
    return np.array(out, dtype=np.uint64)


def gauss_ln_refs(f_bits: int, deltas: np.ndarray, guard: int = REF_GUARD, jobs: int = 1) -> np.ndarray:
    """ln(1 + e^(d*2^-f_bits)) * 2^guard for each signed delta d (|d| < 2^f_bits).

    Entry error is below REF_SLOP units of 2^-guard.  Dense delta sets are
    generated incrementally; sparse sets point-by-point.
    """
    deltas = np.asarray(deltas, dtype=np.int64)
    if deltas.size == 0:
        return np.zeros(0, dtype=np.uint64)
    d_lo, d_hi = int(deltas.min()), int(deltas.max())
    span = d_hi - d_lo + 1
    if deltas.size >= span // 2:
        full = _run_chunks(
            _gauss_chunk_dense,
            [(f_bits, guard, c0 + d_lo, c1 + d_lo) for c0, c1 in _split_range(span, jobs)],
            jobs,
        )
        return full[deltas - d_lo]
    chunks = np.array_split(deltas, max(1, min(jobs, deltas.size)))
    return _run_chunks(_gauss_chunk_sparse, [(f_bits, guard, c) for c in chunks if c.size], jobs)


def _split_range(count: int, jobs: int) -> list[tuple[int, int]]:
    jobs = max(1, jobs)
    n_chunks = min(max(1, jobs * 4), count) if count else 0
    bounds = np.linspace(0, count, n_chunks + 1, dtype=np.int64)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(n_chunks) if bounds[i] < bounds[i + 1]]


def _run_chunks(fn, args: list, jobs: int) -> np.ndarray:
    if not args:
        return np.zeros(0, dtype=np.uint64)
    if jobs <= 1 or len(args) == 1:
        parts = [fn(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(fn, args))
    return np.concatenate(parts)
