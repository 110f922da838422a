"""FLMA: floating-point log-linear multiply-add.

Multiplication and division stay in the log domain (dualbase module); add and
subtract go through the linear domain: p(.) evaluates the Euler significand
e^b with the exp kernel at F+alpha fractional bits, a sign-magnitude floating
accumulator with A fractional bits does the arithmetic, and q(.) brings the
result back through the ln kernel at F+beta input bits.

fused_term computes p(x' * y') in one step through the extended-domain exp
kernel, skipping the ln(2) renormalization error a db_mul would introduce;
inner_product chains fused terms through a single accumulator with one
terminal q(.), mirroring a multiply-accumulate pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .dualbase import DualBase, FlmaConfig, db_neg, db_zero
from .fixedpt import UFix, rne_shift
from .shiftadd import exp_kernel, exp_kernel_extended, ln_kernel

__all__ = [
    "LinearFloat",
    "lf_zero",
    "lf_inf",
    "lf_value",
    "p_convert",
    "q_convert",
    "lf_add",
    "db_add",
    "db_sub",
    "fused_term",
    "inner_product",
]


@dataclass(frozen=True)
class LinearFloat:
    """Sign-magnitude float: ±sig·2^(exponent-A), sig in [2^A, 2^(A+1))."""

    sign: int = 1
    exponent: int = 0
    sig: int = 0
    zero: bool = True
    inf: bool = False

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        if self.zero and self.inf:
            raise ValueError("zero and inf are mutually exclusive")
        if (self.zero or self.inf) and self.sig:
            raise ValueError("flagged values carry sig = 0")


def lf_zero() -> LinearFloat:
    return LinearFloat()


def lf_inf(sign: int) -> LinearFloat:
    return LinearFloat(sign=sign, zero=False, inf=True)


def lf_value(v: LinearFloat, cfg: FlmaConfig) -> Fraction:
    if v.inf:
        raise ValueError("lf_value of infinity")
    if v.zero:
        return Fraction(0)
    return v.sign * Fraction(v.sig, 1) * Fraction(2) ** (v.exponent - cfg.A)


def _lf_normalized(sign: int, exponent: int, sig: int, cfg: FlmaConfig) -> LinearFloat:
    if exponent > cfg.a_max:
        return lf_inf(sign)
    if exponent < cfg.a_min:
        return lf_zero()
    return LinearFloat(sign=sign, exponent=exponent, sig=sig, zero=False)


def p_convert(x: DualBase, cfg: FlmaConfig) -> LinearFloat:
    """Log -> linear: significand e^b at F+alpha bits, zero-extended to A."""
    if x.zero:
        return lf_zero()
    if x.inf:
        return lf_inf(x.sign)
    sig = exp_kernel(UFix(x.b, cfg.F), cfg.exp_cfg).code
    return LinearFloat(sign=x.sign, exponent=x.a,
                       sig=sig << (cfg.A - (cfg.F + cfg.alpha)), zero=False)


def q_convert(v: LinearFloat, cfg: FlmaConfig) -> DualBase:
    """Linear -> log: the accumulator's top F+beta fraction bits (RNE) feed
    the ln kernel; a rounded b landing on ln2c renormalizes upward."""
    if v.zero:
        return db_zero()
    if v.inf:
        return DualBase(sign=v.sign, inf=True)
    a = v.exponent
    w = cfg.F + cfg.beta
    sig = rne_shift(v.sig, cfg.A - w)
    if sig >> (w + 1):  # all-ones significand rounded up to 2.0
        a += 1
        sig = 1 << w
    b = ln_kernel(UFix(sig, w, int_bits=1), cfg.log_cfg).code
    if b >= cfg.ln2c:
        b -= cfg.ln2c
        a += 1
    if a > cfg.a_max:
        return DualBase(sign=v.sign, inf=True)
    if a < cfg.a_min:
        return db_zero()
    return DualBase(sign=v.sign, a=a, b=b)


def lf_add(u: LinearFloat, v: LinearFloat, cfg: FlmaConfig) -> LinearFloat:
    """Sign-magnitude floating add: exact integer alignment and sum, then a
    single RNE at A fractional bits.  Exact cancellation gives canonical +0."""
    if u.inf or v.inf:
        if u.inf and v.inf and u.sign != v.sign:
            raise ValueError("lf_add: opposite infinities")
        return lf_inf(u.sign if u.inf else v.sign)
    if u.zero:
        return v
    if v.zero:
        return u
    emin = min(u.exponent, v.exponent)
    mu = u.sig << (u.exponent - emin)
    mv = v.sig << (v.exponent - emin)
    total = u.sign * mu + v.sign * mv
    if total == 0:
        return lf_zero()
    sign = 1 if total > 0 else -1
    mag = abs(total)
    blen = mag.bit_length()
    if blen > cfg.A + 1:
        mag = rne_shift(mag, blen - (cfg.A + 1))
        if mag.bit_length() > cfg.A + 1:  # rounding carried into a new bit
            mag >>= 1
            blen += 1
    exponent = emin + (blen - 1) - cfg.A
    sig = mag << (cfg.A + 1 - mag.bit_length())
    return _lf_normalized(sign, exponent, sig, cfg)


def db_add(x: DualBase, y: DualBase, cfg: FlmaConfig) -> DualBase:
    """Two-term log-domain sum: q(p(x) + p(y))."""
    return q_convert(lf_add(p_convert(x, cfg), p_convert(y, cfg), cfg), cfg)


def db_sub(x: DualBase, y: DualBase, cfg: FlmaConfig) -> DualBase:
    return db_add(x, db_neg(y), cfg)


def fused_term(x: DualBase, y: DualBase, cfg: FlmaConfig) -> LinearFloat:
    """p(x'·y') in one step: the unreduced exponent sum b_x + b_y in
    [0, 2 ln 2) feeds the extended exp kernel, so no ln(2) rounding enters;
    the [1, 4) significand renormalizes into the result exponent."""
    if x.zero or y.zero:
        if x.inf or y.inf:
            raise ValueError("fused_term: zero times infinity")
        return lf_zero()
    sign = x.sign * y.sign
    if x.inf or y.inf:
        return lf_inf(sign)
    b_sum = UFix(x.b + y.b, cfg.F, int_bits=1)
    sig_u, carry = exp_kernel_extended(b_sum, cfg.exp_cfg)
    exponent = x.a + y.a
    sig = sig_u.code
    w = cfg.F + cfg.alpha
    if carry:
        exponent += 1
        sig = rne_shift(sig, 1)  # the dropped bit is rounded away
        if sig >> (w + 1):
            exponent += 1
            sig = 1 << w
    return _lf_normalized(sign, exponent, sig << (cfg.A - w), cfg)


def inner_product(xs: Sequence[DualBase], ys: Sequence[DualBase], cfg: FlmaConfig) -> DualBase:
    """q(sum_i p(x_i·y_i)): strictly sequential left-to-right accumulation
    through a single linear-domain accumulator, one terminal q(.)."""
    if len(xs) != len(ys):
        raise ValueError("inner_product: length mismatch")
    acc = lf_zero()
    for x, y in zip(xs, ys):
        acc = lf_add(acc, fused_term(x, y, cfg), cfg)
    return q_convert(acc, cfg)
