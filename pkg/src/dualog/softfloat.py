"""Deterministic IEEE-754-style binary32/binary64 emulation in pure integer
arithmetic: round-to-nearest-even, no subnormal support (subnormals flush to
zero on input and output), quiet-NaN canonicalization.

These are the float baselines the log-domain arithmetic is compared against;
they are verified bit-exactly against MPFR-rounded references by the fuzz
suite rather than delegating to native machine arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "SoftFloat",
    "sf_add",
    "sf_sub",
    "sf_mul",
    "sf_div",
    "sf_sqrt",
    "sf_fma",
]

_PARAMS = {
    32: (24, 8, 127),   # precision, exponent bits, bias
    64: (53, 11, 1023),
}


@dataclass(frozen=True)
class SoftFloat:
    """A binary32/binary64 bit pattern plus its format tag."""

    fmt: int
    bits: int

    def __post_init__(self) -> None:
        if self.fmt not in _PARAMS:
            raise ValueError("fmt must be 32 or 64")
        if not 0 <= self.bits < (1 << self.fmt):
            raise ValueError("bit pattern out of range")

    @property
    def _fields(self) -> tuple[int, int, int]:
        prec, ebits, _ = _PARAMS[self.fmt]
        frac_bits = prec - 1
        sign = self.bits >> (self.fmt - 1)
        exp = (self.bits >> frac_bits) & ((1 << ebits) - 1)
        frac = self.bits & ((1 << frac_bits) - 1)
        return sign, exp, frac

    @property
    def sign(self) -> int:
        return -1 if self._fields[0] else 1

    @property
    def is_nan(self) -> bool:
        _, exp, frac = self._fields
        return exp == (1 << _PARAMS[self.fmt][1]) - 1 and frac != 0

    @property
    def is_inf(self) -> bool:
        _, exp, frac = self._fields
        return exp == (1 << _PARAMS[self.fmt][1]) - 1 and frac == 0

    @property
    def is_zero(self) -> bool:
        # subnormals count as zero under the flush-to-zero policy
        _, exp, frac = self._fields
        return exp == 0

    @classmethod
    def nan(cls, fmt: int) -> "SoftFloat":
        prec, ebits, _ = _PARAMS[fmt]
        return cls(fmt, (((1 << ebits) - 1) << (prec - 1)) | (1 << (prec - 2)))

    @classmethod
    def inf(cls, fmt: int, sign: int = 1) -> "SoftFloat":
        prec, ebits, _ = _PARAMS[fmt]
        bits = ((1 << ebits) - 1) << (prec - 1)
        if sign < 0:
            bits |= 1 << (fmt - 1)
        return cls(fmt, bits)

    @classmethod
    def zero(cls, fmt: int, sign: int = 1) -> "SoftFloat":
        return cls(fmt, (1 << (fmt - 1)) if sign < 0 else 0)

    @classmethod
    def from_fraction(cls, v: Fraction, fmt: int) -> "SoftFloat":
        if v == 0:
            return cls.zero(fmt)
        sign = 1 if v > 0 else -1
        num, den = abs(v).numerator, abs(v).denominator
        # scale so the integer part carries at least prec+2 bits
        prec = _PARAMS[fmt][0]
        shift = prec + 2 - (num.bit_length() - den.bit_length())
        scaled = (num << shift) if shift >= 0 else num >> -shift
        q, rem = divmod(scaled, den)
        return _round_pack(sign, q, -shift, rem != 0, fmt)

    @classmethod
    def from_real(cls, v, fmt: int) -> "SoftFloat":
        if isinstance(v, SoftFloat):
            raise TypeError("use sf ops to convert between formats")
        if isinstance(v, Fraction):
            return cls.from_fraction(v, fmt)
        if isinstance(v, (int, float)):
            return cls.from_fraction(Fraction(v), fmt)
        return cls.from_fraction(v.to_fraction(), fmt)  # BigFloat

    def to_fraction(self) -> Fraction:
        if self.is_nan or self.is_inf:
            raise ValueError("no finite value")
        s, m, e = _unpack(self)
        return s * Fraction(m) * Fraction(2) ** e

    def __float__(self) -> float:
        if self.is_nan:
            return math.nan
        if self.is_inf:
            return math.inf * self.sign
        return float(self.to_fraction())


def _unpack(x: SoftFloat) -> tuple[int, int, int]:
    """(sign, mantissa with hidden bit, exp2) so that value = s*m*2^exp2;
    zeros return m = 0.  Callers must screen NaN/inf first."""
    prec, ebits, bias = _PARAMS[x.fmt]
    s, exp, frac = x._fields
    sign = -1 if s else 1
    if exp == 0:
        return sign, 0, 0
    m = frac | (1 << (prec - 1))
    return sign, m, exp - bias - (prec - 1)


def _round_pack(sign: int, mag: int, e2: int, sticky: bool, fmt: int) -> SoftFloat:
    """Round s*(mag + eps)*2^e2 (eps in (0,1) when sticky) to the format.

    Overflow after rounding gives a signed infinity; results whose rounded
    exponent falls below the normal range flush to a signed zero.
    """
    prec, _, bias = _PARAMS[fmt]
    if mag == 0:
        return SoftFloat.zero(fmt, sign)
    blen = mag.bit_length()
    if blen < prec:
        if sticky:
            raise AssertionError("sticky bits below an exact mantissa")
        mag <<= prec - blen
        e2 -= prec - blen
        blen = prec
    shift = blen - prec
    if shift > 0:
        rem = mag & ((1 << shift) - 1)
        mag >>= shift
        e2 += shift
        half = 1 << (shift - 1)
        if rem > half or (rem == half and (sticky or (mag & 1))):
            mag += 1
            if mag >> prec:
                mag >>= 1
                e2 += 1
    elif sticky:
        raise AssertionError("sticky bits below an exact mantissa")
    unbiased = e2 + prec - 1  # value = mag * 2^e2 with mag in [2^(prec-1), 2^prec)
    if unbiased > bias:
        return SoftFloat.inf(fmt, sign)
    if unbiased < 1 - bias:
        return SoftFloat.zero(fmt, sign)
    bits = (0 if sign > 0 else 1) << (fmt - 1)
    bits |= (unbiased + bias) << (prec - 1)
    bits |= mag & ((1 << (prec - 1)) - 1)
    return SoftFloat(fmt, bits)


def _check(a: SoftFloat, b: SoftFloat) -> None:
    if a.fmt != b.fmt:
        raise ValueError("operands must share a format")


def sf_add(a: SoftFloat, b: SoftFloat) -> SoftFloat:
    _check(a, b)
    fmt = a.fmt
    if a.is_nan or b.is_nan:
        return SoftFloat.nan(fmt)
    if a.is_inf or b.is_inf:
        if a.is_inf and b.is_inf and a.sign != b.sign:
            return SoftFloat.nan(fmt)
        return a if a.is_inf else b
    sa, ma, ea = _unpack(a)
    sb, mb, eb = _unpack(b)
    if ma == 0 and mb == 0:
        # IEEE: equal-signed zeros keep the sign, else +0 under RNE
        return SoftFloat.zero(fmt, sa if sa == sb else 1)
    if ma == 0:
        return b
    if mb == 0:
        return a
    e = min(ea, eb)
    total = sa * (ma << (ea - e)) + sb * (mb << (eb - e))
    if total == 0:
        return SoftFloat.zero(fmt)
    return _round_pack(1 if total > 0 else -1, abs(total), e, False, fmt)


def sf_sub(a: SoftFloat, b: SoftFloat) -> SoftFloat:
    return sf_add(a, _negate(b))


def _negate(x: SoftFloat) -> SoftFloat:
    return SoftFloat(x.fmt, x.bits ^ (1 << (x.fmt - 1)))


def sf_mul(a: SoftFloat, b: SoftFloat) -> SoftFloat:
    _check(a, b)
    fmt = a.fmt
    if a.is_nan or b.is_nan:
        return SoftFloat.nan(fmt)
    sign = a.sign * b.sign
    if a.is_inf or b.is_inf:
        if a.is_zero or b.is_zero:
            return SoftFloat.nan(fmt)
        return SoftFloat.inf(fmt, sign)
    sa, ma, ea = _unpack(a)
    sb, mb, eb = _unpack(b)
    if ma == 0 or mb == 0:
        return SoftFloat.zero(fmt, sign)
    return _round_pack(sign, ma * mb, ea + eb, False, fmt)


def sf_div(a: SoftFloat, b: SoftFloat) -> SoftFloat:
    _check(a, b)
    fmt = a.fmt
    if a.is_nan or b.is_nan:
        return SoftFloat.nan(fmt)
    sign = a.sign * b.sign
    if a.is_inf:
        return SoftFloat.nan(fmt) if b.is_inf else SoftFloat.inf(fmt, sign)
    if b.is_inf:
        return SoftFloat.zero(fmt, sign)
    sa, ma, ea = _unpack(a)
    sb, mb, eb = _unpack(b)
    if mb == 0:
        return SoftFloat.nan(fmt) if ma == 0 else SoftFloat.inf(fmt, sign)
    if ma == 0:
        return SoftFloat.zero(fmt, sign)
    prec = _PARAMS[fmt][0]
    shift = prec + 2
    q, rem = divmod(ma << shift, mb)
    return _round_pack(sign, q, ea - eb - shift, rem != 0, fmt)


def sf_sqrt(a: SoftFloat) -> SoftFloat:
    fmt = a.fmt
    if a.is_nan:
        return SoftFloat.nan(fmt)
    if a.is_zero:
        return a  # sqrt(+-0) = +-0
    if a.sign < 0:
        return SoftFloat.nan(fmt)
    if a.is_inf:
        return a
    _, m, e = _unpack(a)
    prec = _PARAMS[fmt][0]
    # scale to an even exponent with >= 2*prec+4 mantissa bits
    k = 2 * prec + 4 - m.bit_length()
    if (e - k) % 2:
        k += 1
    scaled = m << k
    root = math.isqrt(scaled)
    return _round_pack(1, root, (e - k) // 2, root * root != scaled, fmt)


def sf_fma(a: SoftFloat, b: SoftFloat, c: SoftFloat) -> SoftFloat:
    """a*b + c with a single rounding."""
    _check(a, b)
    _check(a, c)
    fmt = a.fmt
    if a.is_nan or b.is_nan or c.is_nan:
        return SoftFloat.nan(fmt)
    psign = a.sign * b.sign
    if a.is_inf or b.is_inf:
        if a.is_zero or b.is_zero:
            return SoftFloat.nan(fmt)
        if c.is_inf and c.sign != psign:
            return SoftFloat.nan(fmt)
        return SoftFloat.inf(fmt, psign)
    if c.is_inf:
        return c
    sa, ma, ea = _unpack(a)
    sb, mb, eb = _unpack(b)
    sc, mc, ec = _unpack(c)
    mp = ma * mb
    if mp == 0:
        if mc == 0:
            return SoftFloat.zero(fmt, psign if psign == sc else 1)
        return c
    if mc == 0:
        return _round_pack(psign, mp, ea + eb, False, fmt)
    e = min(ea + eb, ec)
    total = psign * (mp << (ea + eb - e)) + sc * (mc << (ec - e))
    if total == 0:
        return SoftFloat.zero(fmt)
    return _round_pack(1 if total > 0 else -1, abs(total), e, False, fmt)
