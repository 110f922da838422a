"""Sweep engines and error metrics: exhaustive kernel ulp statistics, FLMA
addition log-ulp grids, and the catastrophic-cancellation study.

Ulp accounting follows the hardware-evaluation convention: a kernel result is
scored by its code distance from the correctly rounded oracle value.  A result
equal to the correctly rounded value lies within 0.5 ulp of the infinitely
precise value and lands in the [0, 0.5] band; a one-code neighbour is an
incorrectly rounded result in the (0.5, 1] band, and so on.  Correctly rounded
references come from guard-bit tables, with any decision inside the table's
slop escalated to the exact scalar oracle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from . import oracle
from .batch import add_sweep_batch, exp_batch, ln_batch
from .dualbase import DualBase, FlmaConfig, db_decode, db_one, db_position, log32_config
from .flma import db_sub
from .shiftadd import ExpParams, LogParams, exp_domain_limit

__all__ = [
    "UlpStats",
    "SweepSpec",
    "AddSweepStats",
    "CancelStats",
    "sweep_exp",
    "sweep_log",
    "sweep_flma_add",
    "cancel_study",
    "log_ulp_distance",
    "write_csv",
]


@dataclass(frozen=True)
class UlpStats:
    """Band histogram of kernel results against the correctly rounded oracle."""

    total: int
    max_ulp_error: Fraction
    band_le_half: int
    band_half_to_1: int
    band_1_to_2: int
    band_over_2: int
    monotonicity_violations: int

    def __post_init__(self) -> None:
        if self.band_le_half + self.band_half_to_1 + self.band_1_to_2 + self.band_over_2 != self.total:
            raise ValueError("UlpStats bands must sum to the total")

    @property
    def histogram(self) -> dict[str, int]:
        return {
            "[0,0.5]": self.band_le_half,
            "(0.5,1]": self.band_half_to_1,
            "(1,2]": self.band_1_to_2,
            ">2": self.band_over_2,
        }

    @property
    def frac_le_half(self) -> float:
        return self.band_le_half / self.total

    @property
    def frac_half_to_1(self) -> float:
        return self.band_half_to_1 / self.total

    @property
    def monotone(self) -> bool:
        return self.monotonicity_violations == 0

    def merge(self, other: "UlpStats") -> "UlpStats":
        return UlpStats(
            total=self.total + other.total,
            max_ulp_error=max(self.max_ulp_error, other.max_ulp_error),
            band_le_half=self.band_le_half + other.band_le_half,
            band_half_to_1=self.band_half_to_1 + other.band_half_to_1,
            band_1_to_2=self.band_1_to_2 + other.band_1_to_2,
            band_over_2=self.band_over_2 + other.band_over_2,
            monotonicity_violations=self.monotonicity_violations + other.monotonicity_violations,
        )


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: kernel kind, parameter grid, and the sampling plan."""

    kernel: str
    i_values: tuple[int, ...] = ()
    lp_values: tuple[int, ...] = ()
    r_values: tuple[int, ...] = ()
    s_values: tuple[int, ...] = ()
    alpha_values: tuple[int, ...] = ()
    beta_values: tuple[int, ...] = ()
    x_bits: int = 23
    y_bits: int = 23
    exhaustive: bool = True
    x_samples: int = 4096
    y_samples: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kernel not in ("exp", "log", "flma_add", "cancel"):
            raise ValueError("kernel must be exp, log, flma_add or cancel")
        if self.kernel in ("exp", "log"):
            if not (self.i_values and self.lp_values and self.r_values):
                raise ValueError(f"{self.kernel} sweep needs I, ell=p and r grids")
            if self.kernel == "log" and not self.s_values:
                raise ValueError("log sweep needs an s grid")
            if self.exhaustive and self.x_bits > 24:
                raise ValueError("exhaustive sweeps are limited to x_bits <= 24")
        if self.kernel == "flma_add" and not (self.alpha_values and self.beta_values):
            raise ValueError("flma_add sweep needs alpha and beta grids")


@dataclass(frozen=True)
class AddSweepStats:
    alpha: int
    beta: int
    samples: int
    max_logulp: int
    incorrect: int

    @property
    def frac_incorrect(self) -> float:
        return self.incorrect / self.samples


@dataclass(frozen=True)
class CancelStats:
    alpha: int
    k_max: int
    max_logulp: int
    max_abs_err: float


def _cr_from_table(ref: np.ndarray, out_frac: int, exact_fn) -> np.ndarray:
    """Correctly rounded out_frac-bit codes from a guard-bit reference table;
    decisions inside the table slop are resolved by the exact oracle."""
    shift = oracle.REF_GUARD - out_frac
    half = np.int64(1 << (shift - 1))
    rem = ref & np.int64((1 << shift) - 1)
    cr = (ref >> shift) + (rem >= half)
    near = np.nonzero(np.abs(rem - half) <= 2 * oracle.REF_SLOP)[0]
    for idx in near:
        cr[idx] = exact_fn(int(idx))
    return cr


def _stats_from_codes(y: np.ndarray, cr: np.ndarray) -> UlpStats:
    dist = np.abs(y - cr)
    b0 = int((dist == 0).sum())
    b1 = int((dist == 1).sum())
    b2 = int((dist == 2).sum())
    b3 = int((dist > 2).sum())
    mono = int((np.diff(y) < 0).sum())
    mx = int(dist.max()) if y.size else 0
    return UlpStats(
        total=int(y.size),
        max_ulp_error=Fraction(1, 2) if mx == 0 else Fraction(mx),
        band_le_half=b0,
        band_half_to_1=b1,
        band_1_to_2=b2,
        band_over_2=b3,
        monotonicity_violations=mono,
    )


def sweep_exp(spec: SweepSpec, jobs: int = 1) -> list[tuple[ExpParams, UlpStats]]:
    """exp-kernel comparison against the correctly rounded oracle for every
    grid point (I, ell=p, r); exhaustive over the domain, or a seeded random
    sample of x_samples codes when spec.exhaustive is off (wide formats)."""
    limit = exp_domain_limit(spec.x_bits)
    if spec.exhaustive:
        codes = np.arange(limit, dtype=np.int64)
        ref = oracle.exp_ref_table(spec.x_bits, limit, jobs=jobs).astype(np.int64)
        cr = _cr_from_table(ref, spec.y_bits,
                            lambda k: oracle.exp_code_exact(k, spec.x_bits, spec.y_bits))
    else:
        gen = np.random.Generator(np.random.Philox(key=[spec.seed & 0xFFFFFFFFFFFFFFFF, 0x0E1]))
        codes = np.unique(gen.integers(0, limit, spec.x_samples)).astype(np.int64)
        cr = np.array([oracle.exp_code_exact(int(k), spec.x_bits, spec.y_bits) for k in codes],
                      dtype=np.int64)
    out = []
    for lp in spec.lp_values:
        for big_i in spec.i_values:
            for r in spec.r_values:
                cfg = ExpParams(x_bits=spec.x_bits, y_bits=spec.y_bits,
                                I=big_i, ell=lp, p=lp, r=r)
                y = exp_batch(codes, cfg)
                out.append((cfg, _stats_from_codes(y, cr)))
    return out


def sweep_log(spec: SweepSpec, jobs: int = 1) -> list[tuple[LogParams, UlpStats]]:
    """ln-kernel sweep over [1, 2) for every (I, ell=p, r, s); exhaustive or
    a seeded random sample, as for sweep_exp."""
    count = 1 << spec.x_bits
    if spec.exhaustive:
        fracs = np.arange(count, dtype=np.int64)
        ref = oracle.ln_ref_table(spec.x_bits, jobs=jobs).astype(np.int64)
        cr = _cr_from_table(ref, spec.y_bits,
                            lambda k: oracle.ln_code_exact(k, spec.x_bits, spec.y_bits))
    else:
        gen = np.random.Generator(np.random.Philox(key=[spec.seed & 0xFFFFFFFFFFFFFFFF, 0x102]))
        fracs = np.unique(gen.integers(0, count, spec.x_samples)).astype(np.int64)
        cr = np.array([oracle.ln_code_exact(int(k), spec.x_bits, spec.y_bits) for k in fracs],
                      dtype=np.int64)
    codes = (np.int64(1) << spec.x_bits) + fracs
    out = []
    for lp in spec.lp_values:
        for big_i in spec.i_values:
            for r in spec.r_values:
                for s in spec.s_values:
                    cfg = LogParams(x_bits=spec.x_bits, y_bits=spec.y_bits,
                                    I=big_i, ell=lp, p=lp, r=r, s=s)
                    y = ln_batch(codes, cfg)
                    out.append((cfg, _stats_from_codes(y, cr)))
    return out


def _add_reference(bx: np.ndarray, by: np.ndarray, f_bits: int, ln2c: int,
                   g_table: np.ndarray | None, g_offset: int, jobs: int) -> tuple[np.ndarray, np.ndarray]:
    """Correctly rounded encode of e^(bx u) + e^(by u) per pair (u = 2^-F).

    Uses ln(s) = bx*u + ln(1 + e^((by-bx)u)); equal codes are exact (2x is an
    exponent increment).  Near-boundary roundings escalate to the oracle.
    """
    guard = oracle.REF_GUARD
    delta = by - bx
    if g_table is None:
        uniq, inverse = np.unique(delta, return_inverse=True)
        g = oracle.gauss_ln_refs(f_bits, uniq, guard=guard, jobs=jobs).astype(np.int64)[inverse]
    else:
        g = g_table[delta - g_offset]
    ln2_floor = np.int64(oracle.two_ln2_floor(guard - 1))  # floor(ln2 * 2^guard)
    ref = (bx << np.int64(guard - f_bits)) + g - ln2_floor
    shift = guard - f_bits
    half = np.int64(1 << (shift - 1))
    rem = ref & np.int64((1 << shift) - 1)
    b_ref = (ref >> shift) + (rem >= half)
    a_ref = np.ones(bx.shape, dtype=np.int64)
    eq = delta == 0
    b_ref[eq] = bx[eq]
    near = np.nonzero((np.abs(rem - half) <= 2 * oracle.REF_SLOP) & ~eq)[0]
    for idx in near:
        xb, yb = int(bx[idx]), int(by[idx])
        a_x, b_x = oracle.encode_ref_exact(
            lambda p: gmpy2.exp(gmpy2.mpq(xb, 1 << f_bits)) + gmpy2.exp(gmpy2.mpq(yb, 1 << f_bits)),
            f_bits, ln2c)
        a_ref[idx] = a_x
        b_ref[idx] = b_x
    over = (b_ref >= ln2c) & ~eq
    a_ref = a_ref + over
    b_ref = b_ref - over * np.int64(ln2c)
    return a_ref, b_ref


def sweep_flma_add(spec: SweepSpec, jobs: int = 1) -> list[AddSweepStats]:
    """Log-ulp error of FLMA addition x + y over [1, 2)^2 per (alpha, beta).

    Reduced mode pairs an evenly strided x grid with seeded random y codes;
    exhaustive mode covers every x code (the full-reproduction run).
    """
    f_bits = 23
    ln2c = oracle.ln2_code(f_bits)
    # operands are values in [1, 2): normalized b codes, i.e. codes below ln2c
    if spec.exhaustive:
        x_codes = np.arange(ln2c, dtype=np.int64)
    else:
        stride = max(1, ln2c // spec.x_samples)
        x_codes = np.arange(spec.x_samples, dtype=np.int64) * stride
    gen = np.random.Generator(np.random.Philox(key=[spec.seed & 0xFFFFFFFFFFFFFFFF, 0x0ADD]))
    y_codes = gen.integers(0, ln2c, spec.y_samples).astype(np.int64)

    g_table, g_offset = None, 0
    if spec.exhaustive:
        lo = int(y_codes.min()) - int(x_codes.max())
        hi = int(y_codes.max()) - int(x_codes.min())
        deltas = np.arange(lo, hi + 1, dtype=np.int64)
        g_table = oracle.gauss_ln_refs(f_bits, deltas, jobs=jobs).astype(np.int64)
        g_offset = lo

    chunk = max(1, (1 << 22) // spec.y_samples)
    results = []
    for alpha in spec.alpha_values:
        for beta in spec.beta_values:
            cfg = log32_config(alpha, beta)
            max_ulp = 0
            incorrect = 0
            total = 0
            for c0 in range(0, x_codes.size, chunk):
                xs = np.repeat(x_codes[c0:c0 + chunk], spec.y_samples)
                ys = np.tile(y_codes, min(chunk, x_codes.size - c0))
                a_ref, b_ref = _add_reference(xs, ys, f_bits, ln2c, g_table, g_offset, jobs)
                a, b = add_sweep_batch(xs, ys, cfg)
                dist = np.abs((a - a_ref) * np.int64(ln2c) + (b - b_ref))
                max_ulp = max(max_ulp, int(dist.max()))
                incorrect += int((dist > 0).sum())
                total += xs.size
            results.append(AddSweepStats(alpha=alpha, beta=beta, samples=total,
                                         max_logulp=max_ulp, incorrect=incorrect))
    return results


def cancel_study(alphas, k_max: int = 1024, abs_err_prec: int = 128) -> list[CancelStats]:
    """Catastrophic cancellation 1 - (1 - k*eps): FLMA subtraction of the k-th
    value below one, for k = 1..k_max, per alpha (beta = 1 throughout)."""
    f_bits = 23
    ln2c = oracle.ln2_code(f_bits)
    one = db_one()
    refs = []
    exact_vals = []
    with gmpy2.context(precision=abs_err_prec):
        for k in range(1, k_max + 1):
            bk = ln2c - k
            a_r, b_r = oracle.encode_ref_exact(
                lambda p, bk=bk: 1 - gmpy2.exp(gmpy2.mpq(bk, 1 << f_bits)) / 2,
                f_bits, ln2c)
            refs.append(a_r * ln2c + b_r)
            exact_vals.append(1 - gmpy2.exp(gmpy2.mpq(bk, 1 << f_bits)) / 2)
    out = []
    for alpha in alphas:
        cfg = log32_config(alpha, 1)
        max_ulp = 0
        max_abs = 0.0
        for k in range(1, k_max + 1):
            y = DualBase(a=-1, b=ln2c - k)
            res = db_sub(one, y, cfg)
            max_ulp = max(max_ulp, abs(db_position(res, cfg) - refs[k - 1]))
            with gmpy2.context(precision=abs_err_prec):
                err = abs(db_decode(res, cfg, abs_err_prec).value - exact_vals[k - 1])
            max_abs = max(max_abs, float(err))
        out.append(CancelStats(alpha=alpha, k_max=k_max, max_logulp=max_ulp, max_abs_err=max_abs))
    return out


def log_ulp_distance(x: DualBase, y: DualBase, cfg: FlmaConfig) -> int:
    """Distance in codes along the normalized sequence; an exponent boundary
    costs ln2c - b_low + b_high codes.  Defined for same-sign values; zero
    only pairs with zero."""
    if x.zero or y.zero:
        if x.zero and y.zero:
            return 0
        raise ValueError("log_ulp_distance: zero pairs only with zero")
    if x.inf or y.inf:
        raise ValueError("log_ulp_distance: infinity has no position")
    if x.sign != y.sign:
        raise ValueError("log_ulp_distance: mixed signs")
    return abs(db_position(x, cfg) - db_position(y, cfg))


# --- CSV emission ---------------------------------------------------------------

_SCHEMAS = {
    "exp": ("I", "ell", "p", "r", "s", "max_ulp", "frac_le_half", "frac_half_to_1", "monotone"),
    "log": ("I", "ell", "p", "r", "s", "max_ulp", "frac_le_half", "frac_half_to_1", "monotone"),
    "flma_add": ("alpha", "beta", "samples", "max_logulp", "frac_incorrect"),
    "cancel": ("alpha", "k_range", "max_logulp", "max_abs_err"),
    "qr": ("kappa", "trial", "arithmetic", "error_l2", "seed"),
}


def write_csv(path, kind: str, rows: list[dict], config_note: str) -> None:
    """Emit rows under a header comment carrying the resolved configuration."""
    cols = _SCHEMAS[kind]
    with open(path, "w", newline="") as fh:
        fh.write(f"# dualog {kind} sweep; {config_note}\n")
        writer = csv.DictWriter(fh, fieldnames=list(cols))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in cols})


def sweep_rows_exp_log(results) -> list[dict]:
    rows = []
    for cfg, stats in results:
        rows.append({
            "I": cfg.I,
            "ell": cfg.ell,
            "p": cfg.p,
            "r": cfg.r,
            "s": getattr(cfg, "s", ""),
            "max_ulp": format_fraction(stats.max_ulp_error),
            "frac_le_half": f"{stats.frac_le_half:.6f}",
            "frac_half_to_1": f"{stats.frac_half_to_1:.6f}",
            "monotone": int(stats.monotone),
        })
    return rows


def format_fraction(f: Fraction) -> str:
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"
