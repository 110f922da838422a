"""Exact unsigned fixed-point fractions and the rounding primitives built on them.

A ``UFix`` is nothing more than an integer code plus the number of fractional
bits it carries: the represented value is exactly ``code / 2**width``.  Codes
may extend above the binary point when a value needs integer bits (e.g. a
significand in [1, 2) at width w has codes in [2**w, 2**(w+1))).  All
arithmetic here is exact integer arithmetic; every narrowing operation names
its rounding mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Union

__all__ = [
    "RoundMode",
    "UFix",
    "ufix_from_real",
    "ufix_add",
    "ufix_sub",
    "ufix_shr",
    "ufix_narrow",
    "rne_shift",
    "trunc_shift",
    "round_code",
]

RealLike = Union[int, float, Fraction, str]


class RoundMode(Enum):
    """Rounding applied by a narrowing operation."""

    TRUNCATE = "truncate"
    RNE = "round-nearest-even"


def rne_shift(code: int, shift: int) -> int:
    """Round ``code / 2**shift`` to the nearest integer, ties to even."""
    if shift <= 0:
        return code << -shift
    half = 1 << (shift - 1)
    rem = code & ((1 << shift) - 1)
    q = code >> shift
    if rem > half or (rem == half and (q & 1)):
        q += 1
    return q


def trunc_shift(code: int, shift: int) -> int:
    """Truncate ``code / 2**shift`` toward zero (code is nonnegative)."""
    if shift <= 0:
        return code << -shift
    return code >> shift


def round_code(code: int, shift: int, mode: RoundMode) -> int:
    return rne_shift(code, shift) if mode is RoundMode.RNE else trunc_shift(code, shift)


@dataclass(frozen=True)
class UFix:
    """An unsigned fixed-point fraction: value is exactly ``code * 2**-width``.

    ``int_bits`` declares how far above the binary point the code is allowed
    to reach; it is a capacity declaration, not hidden state.
    """

    code: int
    width: int
    int_bits: int = 0

    def __post_init__(self) -> None:
        if self.width < 0:
            raise ValueError("width must be nonnegative")
        if self.code < 0:
            raise ValueError("UFix code must be nonnegative")
        if self.code >> (self.width + self.int_bits):
            raise ValueError(
                f"code {self.code:#x} does not fit in {self.int_bits} integer + "
                f"{self.width} fractional bits"
            )

    @property
    def value(self) -> Fraction:
        return Fraction(self.code, 1 << self.width)

    def __float__(self) -> float:
        return self.code / (1 << self.width)

    def __str__(self) -> str:
        ipart = self.code >> self.width
        fpart = self.code & ((1 << self.width) - 1)
        return f"{ipart}.{fpart:0{self.width}b}b"


def _as_fraction(v: RealLike) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, float, str)):
        return Fraction(v)
    # gmpy2.mpfr and friends convert exactly through their rational form
    return Fraction(*v.as_integer_ratio())


def ufix_from_real(v: RealLike, width: int, mode: RoundMode = RoundMode.RNE, int_bits: int = 0) -> UFix:
    """Round a nonnegative real to a width-bit fraction.

    RNE ties go to the even code.  Raises OverflowError when the rounded
    value does not fit the declared integer-bit budget.
    """
    f = _as_fraction(v)
    if f < 0:
        raise ValueError("ufix_from_real requires a nonnegative value")
    scaled = f * (1 << width)
    floor = int(scaled)
    rem = scaled - floor
    if mode is RoundMode.RNE:
        if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and (floor & 1)):
            floor += 1
    code = floor
    if code >> (width + int_bits):
        raise OverflowError(f"{float(f)} does not fit in {int_bits}+{width} bits after rounding")
    return UFix(code, width, int_bits)


def ufix_add(a: UFix, b: UFix) -> UFix:
    if a.width != b.width:
        raise ValueError("ufix_add operands must share a width")
    int_bits = max(a.int_bits, b.int_bits) + 1
    return UFix(a.code + b.code, a.width, int_bits)


def ufix_sub(a: UFix, b: UFix) -> UFix:
    if a.width != b.width:
        raise ValueError("ufix_sub operands must share a width")
    if a.code < b.code:
        raise ValueError("ufix_sub underflow: caller must guarantee a >= b")
    return UFix(a.code - b.code, a.width, max(a.int_bits, b.int_bits))


def ufix_shr(a: UFix, n: int) -> UFix:
    """Shift right by n bits; shifted-out LSBs are discarded, never rounded."""
    if n < 0:
        raise ValueError("shift count must be nonnegative")
    return UFix(a.code >> n, a.width, a.int_bits)


def ufix_narrow(a: UFix, width: int, mode: RoundMode) -> UFix:
    """Change the fractional width, rounding per mode when narrowing."""
    if width >= a.width:
        return UFix(a.code << (width - a.width), width, a.int_bits)
    code = round_code(a.code, a.width - width, mode)
    int_bits = a.int_bits
    if code >> (width + int_bits):
        int_bits += 1  # rounding carried into a new integer bit
    return UFix(code, width, int_bits)
