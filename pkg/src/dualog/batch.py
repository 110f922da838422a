"""Vectorized kernel evaluation over arrays of input codes.

Two interchangeable backends compute bit-identical results: a pure-numpy
path (int64 array arithmetic) and numba-compiled per-element loops.  The
DUALOG_BACKEND environment variable picks one: "numpy", "numba", or "auto"
(default: numba when importable).  Configurations whose intermediates cannot
be proven to fit int64 fall back to the exact big-integer scalar kernels.

The scalar kernels in shiftadd.py stay the semantic reference; the parity
test suite asserts both vector backends agree with them code-for-code.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from .dualbase import FlmaConfig
from .fixedpt import UFix
from .shiftadd import ExpParams, LogParams, exp_kernel, exp_kernel_extended, ln_kernel, iteration_constant

__all__ = [
    "backend",
    "exp_batch",
    "ln_batch",
    "add_sweep_batch",
    "roundtrip_batch",
]

_NUMBA_FAILED = False


def backend() -> str:
    """Resolve the active backend from DUALOG_BACKEND (auto/numba/numpy)."""
    global _NUMBA_FAILED
    choice = os.environ.get("DUALOG_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"DUALOG_BACKEND must be auto, numba or numpy, not {choice!r}")
    if choice == "numpy":
        return "numpy"
    if _NUMBA_FAILED:
        return "numpy"
    try:
        from . import _batch_numba  # noqa: F401
    except Exception as exc:  # pragma: no cover - environment dependent
        if choice == "numba":
            raise RuntimeError(f"DUALOG_BACKEND=numba but numba is unavailable: {exc}")
        _NUMBA_FAILED = True
        warnings.warn(f"numba backend unavailable ({exc}); falling back to numpy")
        return "numpy"
    return "numba"


def _consts(ell: int, last_n: int) -> np.ndarray:
    return np.array([iteration_constant(n, ell) for n in range(last_n + 1)], dtype=np.int64)


def _exp_int64_safe(cfg: ExpParams, extended: bool) -> bool:
    wf = max(cfg.ell, cfg.p)
    head = 3 if extended else 2
    return 2 * cfg.mul_width <= 62 and wf + head <= 62


def _ln_int64_safe(cfg: LogParams) -> bool:
    k = cfg.ell - cfg.p + cfg.r + cfg.s
    return (
        cfg.p + 3 <= 62
        and cfg.ell + 2 <= 62
        and k >= 0
        and cfg.ell + 1 <= 62
        and cfg.s + 1 + k <= 62
    )


def _rne_np(v: np.ndarray, shift: int) -> np.ndarray:
    if shift <= 0:
        return v << -shift
    half = np.int64(1 << (shift - 1))
    rem = v & np.int64((1 << shift) - 1)
    q = v >> shift
    up = (rem > half) | ((rem == half) & ((q & 1) == 1))
    return q + up


def exp_batch(codes: np.ndarray, cfg: ExpParams, extended: bool = False) -> np.ndarray:
    """exp kernel over an int64 array of input codes; returns output codes
    (y_bits fractional, integer bits above)."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if not _exp_int64_safe(cfg, extended):
        fn = exp_kernel_extended if extended else exp_kernel
        ib = 1 if extended else 0
        out = np.empty(codes.shape, dtype=np.int64)
        for i, c in enumerate(codes):
            r = fn(UFix(int(c), cfg.x_bits, int_bits=ib), cfg)
            out[i] = (r[0] if extended else r).code
        return out
    if backend() == "numba":
        from ._batch_numba import exp_batch_nb

        out = np.empty(codes.shape, dtype=np.int64)
        exp_batch_nb(codes, _consts(cfg.ell, cfg.I), cfg.x_bits, cfg.y_bits,
                     cfg.I, cfg.ell, cfg.p, cfg.r, extended, out)
        return out
    return _exp_np(codes, cfg, extended)


def _exp_np(codes: np.ndarray, cfg: ExpParams, extended: bool) -> np.ndarray:
    ell, p, big_i, r = cfg.ell, cfg.p, cfg.I, cfg.r
    L = codes << np.int64(ell - cfg.x_bits)
    E = np.full(codes.shape, 1 << p, dtype=np.int64)
    for n in range(0 if extended else 1, big_i + 1):
        c = np.int64(iteration_constant(n, ell))
        d = L >= c
        L = L - np.where(d, c, np.int64(0))
        E = E + np.where(d, E >> n, np.int64(0))
    w = cfg.mul_width
    l_int = L >> r
    e_int = (E & np.int64((1 << p) - 1)) >> (p - w)
    prod = l_int * e_int
    cut = (ell - r) + w - p
    res = (prod >> cut) if cut >= 0 else (prod << -cut)
    e_hi = E >> p
    wf = max(ell, p)
    yw = (E << (wf - p)) + ((L * e_hi) << (wf - ell)) + (res << (wf - p))
    return _rne_np(yw, wf - cfg.y_bits)


def ln_batch(codes: np.ndarray, cfg: LogParams) -> np.ndarray:
    """ln kernel over full input codes (integer bit included, value in [1, 2));
    returns y_bits-wide output codes."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if not _ln_int64_safe(cfg):
        out = np.empty(codes.shape, dtype=np.int64)
        for i, c in enumerate(codes):
            out[i] = ln_kernel(UFix(int(c), cfg.x_bits, int_bits=1), cfg).code
        return out
    if backend() == "numba":
        from ._batch_numba import ln_batch_nb

        out = np.empty(codes.shape, dtype=np.int64)
        ln_batch_nb(codes, _consts(cfg.ell, cfg.I), cfg.x_bits, cfg.y_bits,
                    cfg.I, cfg.ell, cfg.p, cfg.r, cfg.s, out)
        return out
    return _ln_np(codes, cfg)


def _ln_np(codes: np.ndarray, cfg: LogParams) -> np.ndarray:
    ell, p, big_i, r, s = cfg.ell, cfg.p, cfg.I, cfg.r, cfg.s
    xp = codes << np.int64(p - cfg.x_bits)
    E = np.full(codes.shape, 1 << p, dtype=np.int64)
    L = np.zeros(codes.shape, dtype=np.int64)
    for n in range(1, big_i + 1):
        shifted = E >> n
        rem = E & np.int64((1 << n) - 1)
        d = (E + shifted) <= np.where(rem != 0, xp - 1, xp)
        E = E + np.where(d, shifted, np.int64(0))
        L = L + np.where(d, np.int64(iteration_constant(n, ell)), np.int64(0))
    num = xp - E
    d_int = num >> r
    v_int = (np.int64(1) << s) + ((E - np.int64(1 << p)) >> (p - s))
    k = ell - p + r + s
    q1 = d_int // v_int
    remq = d_int - q1 * v_int
    quot = (q1 << k) + ((remq << k) // v_int)
    return _rne_np(L + quot, ell - cfg.y_bits)


def add_sweep_batch(bx: np.ndarray, by: np.ndarray, cfg: FlmaConfig) -> tuple[np.ndarray, np.ndarray]:
    """Same-sign FLMA addition q(p(x') + p(y')) for log-domain operands with
    exponent 0 (values in [1, 2)); returns (a, b) result code arrays.

    Bit-identical to composing the scalar flma operations; specialized to the
    accuracy-sweep case where both operands are positive with a = 0.
    """
    bx = np.ascontiguousarray(bx, dtype=np.int64)
    by = np.ascontiguousarray(by, dtype=np.int64)
    w = cfg.F + cfg.alpha
    m1 = exp_batch(bx, cfg.exp_cfg)
    m2 = exp_batch(by, cfg.exp_cfg)
    acc = (m1 + m2) << np.int64(cfg.A - w)  # value in [2, 4) at A fractional bits
    a = np.ones(acc.shape, dtype=np.int64)
    sig = _rne_np(acc, 1)
    hi = sig >> np.int64(cfg.A + 1)
    a += hi
    sig = np.where(hi == 1, np.int64(1 << cfg.A), sig)
    return _q_batch(sig, a, cfg)


def _q_batch(sig: np.ndarray, a: np.ndarray, cfg: FlmaConfig) -> tuple[np.ndarray, np.ndarray]:
    wq = cfg.F + cfg.beta
    nar = _rne_np(sig, cfg.A - wq)
    hi = nar >> np.int64(wq + 1)
    a = a + hi
    nar = np.where(hi == 1, np.int64(1 << wq), nar)
    b = ln_batch(nar, cfg.log_cfg)
    over = b >= np.int64(cfg.ln2c)
    return a + over, b - over * np.int64(cfg.ln2c)


def roundtrip_batch(bcodes: np.ndarray, cfg: FlmaConfig) -> tuple[np.ndarray, np.ndarray]:
    """q(p(x')) over an array of b codes: returns (exponent delta, b code)."""
    bcodes = np.ascontiguousarray(bcodes, dtype=np.int64)
    sig = exp_batch(bcodes, cfg.exp_cfg) << np.int64(cfg.A - (cfg.F + cfg.alpha))
    return _q_batch(sig, np.zeros(bcodes.shape, dtype=np.int64), cfg)
