"""The dual-base number system: values ±2^a·e^b (or zero) with an integer
base-2 exponent a and a base-e exponent b held as an F-bit fixed-point
fraction normalized into [0, ln 2).

Multiplication, division, integer powers and roots are pure code arithmetic
on (a, b); only the occasional ln(2) renormalization costs accuracy, and that
error is the fixed constant |ln 2 - RNE_F(ln 2)| in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import struct

import gmpy2

from . import oracle
from .oracle import BigFloat
from .shiftadd import ExpParams, LogParams

__all__ = [
    "DualBase",
    "FlmaConfig",
    "log32_config",
    "log64_config",
    "db_zero",
    "db_one",
    "db_mul",
    "db_div",
    "db_pow_int",
    "db_sqrt",
    "db_encode",
    "db_decode",
    "db_position",
    "db_neg",
    "db_abs",
    "pack_record",
    "unpack_record",
    "record_size",
    "write_vector_file",
    "read_vector_file",
    "VECTOR_MAGIC",
]


@dataclass(frozen=True)
class DualBase:
    """±2^a·e^(b·2^-F), or zero/infinity when flagged.

    b is a raw F-bit code; normalized values keep b below RNE_F(ln 2).
    Canonical zero and infinity carry sign +1, a = 0, b = 0 (infinity keeps
    its sign).
    """

    sign: int = 1
    a: int = 0
    b: int = 0
    zero: bool = False
    inf: bool = False

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        if self.zero and self.inf:
            raise ValueError("zero and inf are mutually exclusive")
        if (self.zero or self.inf) and (self.a or self.b):
            raise ValueError("flagged values must carry canonical a = b = 0")
        if self.b < 0:
            raise ValueError("b code must be nonnegative")

    @property
    def nonzero(self) -> bool:
        return not self.zero


def db_zero() -> DualBase:
    return DualBase(zero=True)


def db_one() -> DualBase:
    return DualBase()


@dataclass(frozen=True)
class FlmaConfig:
    """System parameters binding the exp/ln kernels to the arithmetic.

    E/F are the log-domain exponent/fraction widths, alpha/beta the extra
    precision carried by the log->linear / linear->log conversions, A the
    accumulator's fractional bits, ln2c the shared RNE_F(ln 2) code.
    """

    E: int
    F: int
    alpha: int
    beta: int
    A: int
    exp_cfg: ExpParams
    log_cfg: LogParams
    ln2c: int

    def __post_init__(self) -> None:
        if self.alpha < 1:
            raise ValueError("FlmaConfig: alpha must be >= 1 (unique log->linear conversion)")
        if self.beta < 1:
            raise ValueError("FlmaConfig: beta must be >= 1 (unique linear->log conversion)")
        if self.A < self.F + self.alpha:
            raise ValueError("FlmaConfig: accumulator needs A >= F + alpha")
        if self.exp_cfg.x_bits != self.F or self.exp_cfg.y_bits != self.F + self.alpha:
            raise ValueError("FlmaConfig: exp kernel widths must be F -> F + alpha")
        if self.log_cfg.x_bits != self.F + self.beta or self.log_cfg.y_bits != self.F:
            raise ValueError("FlmaConfig: ln kernel widths must be F + beta -> F")

    @property
    def a_min(self) -> int:
        return -(1 << (self.E - 1))

    @property
    def a_max(self) -> int:
        return (1 << (self.E - 1)) - 1


@lru_cache(maxsize=None)
def log32_config(alpha: int = 1, beta: int = 1, A: int | None = None) -> FlmaConfig:
    """The float32-equivalent system: E=8, F=23, kernels at 27+alpha/beta bits."""
    F = 23
    exp_cfg = ExpParams(x_bits=F, y_bits=F + alpha, I=13 + alpha, ell=27 + alpha, p=27 + alpha, r=2)
    log_cfg = LogParams(x_bits=F + beta, y_bits=F, I=14 + beta, ell=27 + beta, p=27 + beta, r=3, s=9)
    return FlmaConfig(E=8, F=F, alpha=alpha, beta=beta, A=F + alpha if A is None else A,
                      exp_cfg=exp_cfg, log_cfg=log_cfg, ln2c=oracle.ln2_code(F))


@lru_cache(maxsize=None)
def log64_config() -> FlmaConfig:
    """The float64-equivalent system: E=11, F=52, both kernels at 59 bits, I=29."""
    F = 52
    exp_cfg = ExpParams(x_bits=F, y_bits=F + 1, I=29, ell=59, p=59, r=2)
    log_cfg = LogParams(x_bits=F + 1, y_bits=F, I=29, ell=59, p=59, r=3, s=9)
    return FlmaConfig(E=11, F=F, alpha=1, beta=1, A=53,
                      exp_cfg=exp_cfg, log_cfg=log_cfg, ln2c=oracle.ln2_code(F))


def _require_normal(x: DualBase, cfg: FlmaConfig, what: str) -> None:
    if x.zero or x.inf:
        return
    if not (0 <= x.b < cfg.ln2c):
        raise ValueError(f"{what}: operand b code {x.b} is not normalized (must be < ln2c)")
    if not (cfg.a_min <= x.a <= cfg.a_max):
        raise ValueError(f"{what}: operand exponent {x.a} outside the E-bit range")


def _clamp_exponent(sign: int, a: int, b: int, cfg: FlmaConfig) -> DualBase:
    # overflow saturates to a flagged infinity; underflow flushes to zero
    if a > cfg.a_max:
        return DualBase(sign=sign, zero=False, inf=True)
    if a < cfg.a_min:
        return db_zero()
    return DualBase(sign=sign, a=a, b=b)


def db_mul(x: DualBase, y: DualBase, cfg: FlmaConfig) -> DualBase:
    _require_normal(x, cfg, "db_mul")
    _require_normal(y, cfg, "db_mul")
    sign = x.sign * y.sign
    if x.zero or y.zero:
        if x.inf or y.inf:
            raise ValueError("db_mul: zero times infinity is undefined")
        return db_zero()
    if x.inf or y.inf:
        return DualBase(sign=sign, inf=True)
    s = x.b + y.b
    a = x.a + y.a
    if s >= cfg.ln2c:
        s -= cfg.ln2c
        a += 1
    return _clamp_exponent(sign, a, s, cfg)


def db_div(x: DualBase, y: DualBase, cfg: FlmaConfig) -> DualBase:
    _require_normal(x, cfg, "db_div")
    _require_normal(y, cfg, "db_div")
    if y.zero:
        raise ZeroDivisionError("db_div: division by zero")
    sign = x.sign * y.sign
    if x.zero:
        return db_zero()
    if x.inf or y.inf:
        if x.inf and y.inf:
            raise ValueError("db_div: infinity over infinity is undefined")
        return DualBase(sign=sign, inf=True) if x.inf else db_zero()
    d = x.b - y.b
    a = x.a - y.a
    if d < 0:
        d += cfg.ln2c
        a -= 1
    return _clamp_exponent(sign, a, d, cfg)


def db_pow_int(x: DualBase, n: int, cfg: FlmaConfig) -> DualBase:
    _require_normal(x, cfg, "db_pow_int")
    if x.zero:
        if n > 0:
            return db_zero()
        raise ValueError("db_pow_int: zero to a non-positive power")
    if n == 0:
        return db_one()
    if x.inf:
        sign = x.sign if n % 2 else 1
        return DualBase(sign=sign, inf=True) if n > 0 else db_zero()
    sign = x.sign if n % 2 else 1
    k, rem = divmod(n * x.b, cfg.ln2c)
    return _clamp_exponent(sign, n * x.a + k, rem, cfg)


def _rne_halve(code: int) -> int:
    q = code >> 1
    return q + ((code & 1) & (q & 1))


def db_sqrt(x: DualBase, cfg: FlmaConfig) -> DualBase:
    _require_normal(x, cfg, "db_sqrt")
    if x.zero:
        return db_zero()
    if x.sign < 0:
        raise ValueError("db_sqrt: negative input")
    if x.inf:
        return DualBase(inf=True)
    if x.a % 2 == 0:
        a, b = x.a // 2, _rne_halve(x.b)
    else:
        a, b = (x.a - 1) // 2, _rne_halve(x.b + cfg.ln2c)
    if b >= cfg.ln2c:  # the halved fraction can round up onto ln2c
        a, b = a + 1, b - cfg.ln2c
    return _clamp_exponent(1, a, b, cfg)


def db_neg(x: DualBase) -> DualBase:
    if x.zero:
        return x
    return DualBase(sign=-x.sign, a=x.a, b=x.b, inf=x.inf)


def db_abs(x: DualBase) -> DualBase:
    if x.zero or x.sign > 0:
        return x
    return DualBase(sign=1, a=x.a, b=x.b, inf=x.inf)


def _floor_log2(f: Fraction) -> int:
    n, d = f.numerator, f.denominator
    e = n.bit_length() - d.bit_length()
    if (n >> e if e >= 0 else n << -e) < d:
        e -= 1
    return e


def db_encode(v: BigFloat | Fraction | float | int, cfg: FlmaConfig) -> DualBase:
    """Round a real to the nearest dual-base code: a = floor(log2 |v|),
    b = RNE_F(ln(|v| / 2^a)), renormalizing if the rounding reaches ln2c."""
    f = v.to_fraction() if isinstance(v, BigFloat) else Fraction(v)
    if f == 0:
        return db_zero()
    sign = 1 if f > 0 else -1
    mag = abs(f)
    a = _floor_log2(mag)
    m = mag / (Fraction(2) ** a)
    if m == 1:
        b = 0
    else:
        num, den = m.numerator, m.denominator
        b = oracle.rne_fixed(lambda p: gmpy2.log(gmpy2.mpq(num, den)), cfg.F)
        if b >= cfg.ln2c:
            a += 1
            b -= cfg.ln2c
    if not (cfg.a_min <= a <= cfg.a_max):
        raise OverflowError(f"db_encode: exponent {a} outside the E-bit range")
    return DualBase(sign=sign, a=a, b=b)


def db_decode(x: DualBase, cfg: FlmaConfig, prec: int = oracle.DEFAULT_PREC) -> BigFloat:
    """Evaluate ±2^a·e^(b·2^-F) to prec bits (sign applied; zero maps to 0)."""
    if x.inf:
        raise ValueError("db_decode: cannot decode an infinity flag")
    if x.zero:
        return BigFloat.from_real(0, prec)
    with gmpy2.context(precision=prec):
        m = gmpy2.exp(gmpy2.mpq(x.b, 1 << cfg.F))
        v = gmpy2.mul(m, gmpy2.exp2(x.a))
        if x.sign < 0:
            v = -v
    return BigFloat(v, prec)


def db_position(x: DualBase, cfg: FlmaConfig) -> int:
    """Index of a nonzero value along the normalized code sequence."""
    if x.zero or x.inf:
        raise ValueError("db_position requires a finite nonzero value")
    return x.a * cfg.ln2c + x.b


# --- serialization -----------------------------------------------------------

VECTOR_MAGIC = b"DBV1"


def record_size(cfg: FlmaConfig) -> int:
    """Bytes per record: a flags byte plus the packed [sign|a|b] payload."""
    return 1 + (1 + cfg.E + cfg.F + 7) // 8


def pack_record(x: DualBase, cfg: FlmaConfig) -> bytes:
    payload_bytes = record_size(cfg) - 1
    if x.zero:
        return bytes(payload_bytes + 1)
    _require_normal(x, cfg, "pack_record")
    flags = 0x01 | (0x02 if x.inf else 0)
    a_field = x.a & ((1 << cfg.E) - 1)
    payload = x.b | (a_field << cfg.F) | ((1 if x.sign < 0 else 0) << (cfg.F + cfg.E))
    return bytes([flags]) + payload.to_bytes(payload_bytes, "little")


def unpack_record(data: bytes, cfg: FlmaConfig) -> DualBase:
    if len(data) != record_size(cfg):
        raise ValueError("unpack_record: wrong record length")
    flags = data[0]
    if not flags & 0x01:
        if any(data[1:]):
            raise ValueError("unpack_record: zero record with nonzero payload")
        return db_zero()
    payload = int.from_bytes(data[1:], "little")
    b = payload & ((1 << cfg.F) - 1)
    a_field = (payload >> cfg.F) & ((1 << cfg.E) - 1)
    a = a_field - (1 << cfg.E) if a_field >= (1 << (cfg.E - 1)) else a_field
    sign = -1 if (payload >> (cfg.F + cfg.E)) & 1 else 1
    if flags & 0x02:
        if a or b:
            raise ValueError("unpack_record: infinity record with nonzero payload")
        return DualBase(sign=sign, inf=True)
    if b >= cfg.ln2c:
        raise ValueError("unpack_record: b code falls in the unused (non-normalized) space")
    return DualBase(sign=sign, a=a, b=b)


def write_vector_file(path, values, cfg: FlmaConfig) -> None:
    """Little-endian records behind a 16-byte header (magic, E, F, count)."""
    values = list(values)
    header = VECTOR_MAGIC + struct.pack("<HHQ", cfg.E, cfg.F, len(values))
    with open(path, "wb") as fh:
        fh.write(header)
        for v in values:
            fh.write(pack_record(v, cfg))


def read_vector_file(path, cfg: FlmaConfig) -> list[DualBase]:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != VECTOR_MAGIC:
            raise ValueError("not a dual-base vector file")
        e_bits, f_bits, count = struct.unpack("<HHQ", header[4:])
        if e_bits != cfg.E or f_bits != cfg.F:
            raise ValueError(f"vector file is (E={e_bits}, F={f_bits}), expected (E={cfg.E}, F={cfg.F})")
        rec = record_size(cfg)
        out = []
        for _ in range(count):
            data = fh.read(rec)
            if len(data) != rec:
                raise ValueError("vector file truncated")
            out.append(unpack_record(data, cfg))
    return out
