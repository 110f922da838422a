"""numba-compiled twins of the numpy batch kernels.

Every function here must stay bit-identical to its numpy counterpart in
batch.py; the parity tests enforce it.  All arithmetic is int64 and the
dispatcher only routes configurations whose intermediates provably fit.
"""

from __future__ import annotations

import warnings

import numba
import numpy as np
from numba import int64, njit, prange

# the sandbox TBB is older than numba wants; the workqueue layer it falls
# back to is fine for these kernels
warnings.filterwarnings("ignore", message=".*TBB.*", category=numba.NumbaWarning)


@njit(int64(int64, int64), cache=True, inline="always")
def _rne1(v, shift):
    if shift <= 0:
        return v << (-shift)
    half = int64(1) << (shift - 1)
    rem = v & ((int64(1) << shift) - 1)
    q = v >> shift
    if rem > half or (rem == half and (q & 1) == 1):
        q += 1
    return q


@njit(cache=True, parallel=True)
def exp_batch_nb(codes, consts, x_bits, y_bits, big_i, ell, p, r, extended, out):
    z = big_i - 2
    if z < 0:
        z = 0
    w = ell - z - r
    cut = (ell - r) + w - p
    wf = ell if ell > p else p
    n0 = 0 if extended else 1
    for i in prange(codes.shape[0]):
        L = codes[i] << (ell - x_bits)
        E = int64(1) << p
        for n in range(n0, big_i + 1):
            c = consts[n]
            if L >= c:
                L -= c
                E += E >> n
        l_int = L >> r
        e_int = (E & ((int64(1) << p) - 1)) >> (p - w)
        prod = l_int * e_int
        res = (prod >> cut) if cut >= 0 else (prod << (-cut))
        e_hi = E >> p
        yw = (E << (wf - p)) + ((L * e_hi) << (wf - ell)) + (res << (wf - p))
        out[i] = _rne1(yw, wf - y_bits)


@njit(cache=True, parallel=True)
def ln_batch_nb(codes, consts, x_bits, y_bits, big_i, ell, p, r, s, out):
    k = ell - p + r + s
    for i in prange(codes.shape[0]):
        xp = codes[i] << (p - x_bits)
        E = int64(1) << p
        L = int64(0)
        for n in range(1, big_i + 1):
            shifted = E >> n
            rem = E & ((int64(1) << n) - 1)
            lim = xp - 1 if rem != 0 else xp
            if E + shifted <= lim:
                E += shifted
                L += consts[n]
        num = xp - E
        d_int = num >> r
        v_int = (int64(1) << s) + ((E - (int64(1) << p)) >> (p - s))
        q1 = d_int // v_int
        remq = d_int - q1 * v_int
        quot = (q1 << k) + ((remq << k) // v_int)
        out[i] = _rne1(L + quot, ell - y_bits)
