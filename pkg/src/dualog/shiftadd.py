"""Restoring shift-and-add kernels for e^x and ln(x) with an explicit-Euler
correction step computed through truncated multiplication / division.

Both kernels iterate over candidate factors (1 + 2^-n), keeping a residual L
(exp) or a partial product E (log).  The closing Euler step
``y = E + L*E`` (exp) or ``y = L + (x - E)/E`` (log) recovers roughly half the
iterations; its multiply/divide operates on deliberately truncated operands.

Iteration indexing: the recurrences test the factors n = 1 .. I, so the
residual entering the Euler step obeys L < 2^(-I+1), the envelope the
iteration-count formula is built on.  The n = 0 comparison is against ln(2),
statically false for inputs below ln(2), and is only enabled by the
extended-domain kernel.  The Euler-step operand bookkeeping (known-zero MSB
counts) stays at the conservative max(I-2, 0) / max(I-3, 0) of the hardware
design, one bit below what the residual bound would allow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

from . import oracle
from .fixedpt import UFix, rne_shift

__all__ = [
    "ExpParams",
    "LogParams",
    "KernelTrace",
    "exp_kernel",
    "exp_kernel_extended",
    "ln_kernel",
    "truncated_mul",
    "truncated_div",
    "required_iterations",
    "exp_domain_limit",
    "exp_extended_domain_limit",
    "mul_operand_shape",
    "div_operand_shape",
    "iteration_constant",
]


@dataclass(frozen=True)
class ExpParams:
    """Configuration of the e^x kernel.

    x_bits/y_bits are the input/output fractional widths, I the terminal
    iteration index, ell and p the fractional widths of L and E, and r the
    extra truncation applied to both Euler-multiplier operands.
    """

    x_bits: int
    y_bits: int
    I: int
    ell: int
    p: int
    r: int

    def __post_init__(self) -> None:
        if self.I <= 2:
            raise ValueError("ExpParams: I must be > 2 (Euler-step bookkeeping assumes it)")
        if self.ell < self.x_bits:
            raise ValueError("ExpParams: ell must be >= x_bits")
        if self.p < self.y_bits:
            raise ValueError("ExpParams: p must be >= y_bits")
        if not (0 <= self.r <= 4):
            raise ValueError("ExpParams: r must be in [0, 4]")
        if self.mul_width < 1:
            raise ValueError("ExpParams: ell - (I-2) - r leaves no multiplier operand bits")
        if self.p < self.mul_width:
            raise ValueError("ExpParams: p too small for the multiplier alignment")

    @property
    def zero_msbs(self) -> int:
        return max(self.I - 2, 0)

    @property
    def mul_width(self) -> int:
        return self.ell - self.zero_msbs - self.r


@dataclass(frozen=True)
class LogParams:
    """Configuration of the ln(x) kernel; s is the count of divisor fraction
    bits kept by the truncated divider, r the dividend LSBs dropped."""

    x_bits: int
    y_bits: int
    I: int
    ell: int
    p: int
    r: int
    s: int

    def __post_init__(self) -> None:
        if self.I <= 2:
            raise ValueError("LogParams: I must be > 2")
        if self.ell < self.x_bits:
            raise ValueError("LogParams: ell must be >= x_bits")
        if self.p < self.x_bits:
            raise ValueError("LogParams: p must be >= x_bits (comparisons align x to p)")
        if self.p < self.y_bits:
            raise ValueError("LogParams: p must be >= y_bits")
        if not (0 <= self.r <= 4):
            raise ValueError("LogParams: r must be in [0, 4]")
        if self.s < 1:
            raise ValueError("LogParams: s must be >= 1")
        if self.p < self.s:
            raise ValueError("LogParams: p must be >= s")
        if self.dividend_width < 1:
            raise ValueError("LogParams: p - max(0, I-3) - r leaves no dividend bits")

    @property
    def zero_msbs(self) -> int:
        return max(self.I - 3, 0)

    @property
    def dividend_width(self) -> int:
        return self.p - self.zero_msbs - self.r


@dataclass(frozen=True)
class KernelTrace:
    """Per-iteration digit decisions plus the codes entering the Euler step.

    digits[k] is the decision for factor n = k+1 (length I); the extended
    exp kernel prepends its n = 0 decision (length I+1).
    """

    digits: tuple[bool, ...]
    l_final: int
    e_final: int


@lru_cache(maxsize=None)
def iteration_constant(n: int, ell: int) -> int:
    """RNE code at ell fractional bits of ln(1 + 2^-n)."""
    return oracle.ln1p_pow2_code(n, ell)


@lru_cache(maxsize=None)
def exp_domain_limit(x_bits: int) -> int:
    """Exclusive input-code bound for exp_kernel: RNE_x_bits(ln 2)."""
    return oracle.ln2_code(x_bits)


@lru_cache(maxsize=None)
def exp_extended_domain_limit(x_bits: int) -> int:
    """Inclusive input-code bound for the extended kernel: floor(2 ln 2 * 2^x_bits)."""
    return oracle.two_ln2_floor(x_bits)


def _exp_core(x_code: int, cfg: ExpParams, extended: bool) -> tuple[int, KernelTrace]:
    ell, p, big_i, r = cfg.ell, cfg.p, cfg.I, cfg.r
    L = x_code << (ell - cfg.x_bits)
    E = 1 << p  # full code, p fractional bits, integer bits above
    digits = []
    start = 0 if extended else 1
    for n in range(start, big_i + 1):
        c = iteration_constant(n, ell)
        d = L >= c
        if d:
            L -= c
            E += E >> n
        digits.append(d)
        if n >= 2 and (L >> (ell - (n - 1))):
            raise AssertionError("residual L exceeded its bit-width schedule")
    trace = KernelTrace(tuple(digits), L, E)

    res = _trunc_mul_codes(L, E & ((1 << p) - 1), cfg)
    e_hi = E >> p
    wf = max(ell, p)
    y_wide = (E << (wf - p)) + ((L * e_hi) << (wf - ell)) + (res << (wf - p))
    y_code = rne_shift(y_wide, wf - cfg.y_bits)
    return y_code, trace


def _trunc_mul_codes(l_code: int, ef_code: int, cfg: ExpParams) -> int:
    w = cfg.mul_width
    l_int = l_code >> cfg.r
    e_int = ef_code >> (cfg.p - w)
    prod = l_int * e_int
    sh = cfg.p - (cfg.ell - cfg.r) - w
    return (prod << sh) if sh >= 0 else (prod >> -sh)


def truncated_mul(l_frac: UFix, e_frac: UFix, cfg: ExpParams) -> UFix:
    """Product of the truncated Euler-step operands, aligned to p fractional bits.

    l_frac is the residual L_I (ell bits, its max(I-2, 0) MSBs known zero);
    e_frac is the fractional field of E_I (p bits).  Both are truncated to the
    configured operand width, multiplied exactly, and the top p-I+2 product
    bits kept; carries out of the retained product's lower bits are honoured.
    """
    if l_frac.width != cfg.ell or e_frac.width != cfg.p:
        raise ValueError("truncated_mul operand widths must match cfg (ell, p)")
    if l_frac.code >> (cfg.ell - cfg.zero_msbs):
        raise ValueError("l_frac must carry max(I-2, 0) zero MSBs")
    return UFix(_trunc_mul_codes(l_frac.code, e_frac.code, cfg), cfg.p)


def exp_kernel(x: UFix, cfg: ExpParams, trace: bool = False):
    """Shift-and-add e^x over [0, RNE(ln 2)) with the Euler correction step.

    Returns a y_bits-wide fraction with one integer bit (value in [1, 2)).
    """
    if x.width != cfg.x_bits:
        raise ValueError("exp_kernel input width must equal cfg.x_bits")
    if x.code >= exp_domain_limit(cfg.x_bits):
        raise ValueError("exp_kernel input must be below RNE(ln 2)")
    y_code, tr = _exp_core(x.code, cfg, extended=False)
    y = UFix(y_code, cfg.y_bits, int_bits=1)
    return (y, tr) if trace else y


def exp_kernel_extended(x: UFix, cfg: ExpParams, trace: bool = False):
    """Extended-domain e^x over [0, 2 ln 2): the n = 0 test against ln(2) is
    enabled (one extra iteration) and L/E carry integer bits.

    Returns (y, carry): y has two integer bits (value in [1, 4)); carry is set
    when the value reached [2, 4).
    """
    if x.width != cfg.x_bits:
        raise ValueError("exp_kernel_extended input width must equal cfg.x_bits")
    if x.code > exp_extended_domain_limit(cfg.x_bits):
        raise ValueError("exp_kernel_extended input must be below 2 ln 2")
    y_code, tr = _exp_core(x.code, cfg, extended=True)
    y = UFix(y_code, cfg.y_bits, int_bits=2)
    carry = y_code >= (2 << cfg.y_bits)
    return (y, carry, tr) if trace else (y, carry)


def _trunc_div_codes(num: int, e_full: int, cfg: LogParams) -> int:
    d_int = num >> cfg.r
    v_int = (1 << cfg.s) + ((e_full - (1 << cfg.p)) >> (cfg.p - cfg.s))
    k = cfg.ell - cfg.p + cfg.r + cfg.s
    if k >= 0:
        return (d_int << k) // v_int
    return d_int // (v_int << -k)


def truncated_div(num: UFix, den: UFix, cfg: LogParams) -> UFix:
    """Truncated-operand division for the ln Euler step, aligned to ell bits.

    Drops the dividend's known-zero MSBs and r further LSBs, keeps the
    divisor's leading 1 plus its top s fraction bits, and truncates the exact
    quotient of those operands toward zero (restoring digit recurrence).
    """
    if num.width != cfg.p or den.width != cfg.p:
        raise ValueError("truncated_div operand widths must match cfg.p")
    if not (1 << cfg.p) <= den.code < (2 << cfg.p):
        raise ValueError("truncated_div divisor must lie in [1, 2)")
    if num.code >> (cfg.p - cfg.zero_msbs):
        raise ValueError("num must carry max(0, I-3) zero MSBs")
    return UFix(_trunc_div_codes(num.code, den.code, cfg), cfg.ell)


def ln_kernel(x: UFix, cfg: LogParams, trace: bool = False):
    """Shift-and-add ln(x) over [1, 2) with the Euler division step.

    The digit comparison E*(1 + 2^-n) <= x is exact on the stored operands;
    the E update truncates to p fractional bits.
    """
    if x.width != cfg.x_bits:
        raise ValueError("ln_kernel input width must equal cfg.x_bits")
    if not (1 << cfg.x_bits) <= x.code < (2 << cfg.x_bits):
        raise ValueError("ln_kernel input must lie in [1, 2)")
    ell, p, big_i = cfg.ell, cfg.p, cfg.I
    xp = x.code << (p - cfg.x_bits)
    E = 1 << p
    L = 0
    digits = []
    for n in range(1, big_i + 1):
        shifted = E >> n
        rem = E & ((1 << n) - 1)
        d = (E + shifted) <= (xp - 1 if rem else xp)
        if d:
            E += shifted
            L += iteration_constant(n, ell)
        digits.append(d)
    num = xp - E
    if num >> (p - cfg.zero_msbs):
        raise AssertionError("ln residual exceeded its known-zero MSB budget")
    tr = KernelTrace(tuple(digits), L, E)
    y_wide = L + _trunc_div_codes(num, E, cfg)
    y_code = rne_shift(y_wide, ell - cfg.y_bits)
    y = UFix(y_code, cfg.y_bits)
    return (y, tr) if trace else y


def mul_operand_shape(cfg: ExpParams) -> tuple[int, int, int]:
    """(multiplier width, multiplicand width, product MSBs kept)."""
    return (cfg.mul_width, cfg.mul_width, cfg.p - cfg.I + 2)


def div_operand_shape(cfg: LogParams) -> tuple[int, int]:
    """(dividend width, divisor width) of the truncated divider."""
    return (cfg.dividend_width, 1 + cfg.s)


def required_iterations(eps: float, kind: Literal["exp", "log"]) -> int:
    """Smallest terminal index I meeting the Euler-step accuracy bound.

    Uses the residual envelope L_{n+1} < 2^(-n+1): exp needs the residual at
    or below sqrt(2*eps / e^1.56), log needs x - E_I at or below sqrt(2*eps).
    A floor of I = 3 applies (the kernels assume I > 2).
    """
    import math

    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if kind == "exp":
        target = math.sqrt(2 * eps) / math.sqrt(math.exp(1.56))
    elif kind == "log":
        target = math.sqrt(2 * eps)
    else:
        raise ValueError("kind must be 'exp' or 'log'")
    i = 3
    while 2.0 ** (-i + 1) > target:
        i += 1
    return i
