"""Arithmetic-generic dense linear algebra for the least-squares accuracy
benchmark: condition-number-controlled matrix generation, Householder QR,
back-substitution, and solution error norms.

The same QR/backsolve code runs over any element arithmetic (oracle
BigFloat, soft floats, FLMA dual-base); reference matrices are produced at
oracle precision via a Jacobi eigendecomposition (a symmetric matrix's
singular values are the magnitudes of its eigenvalues) with the spectrum
rescaled in log space to hit the target condition number.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import flma, oracle, softfloat
from .dualbase import DualBase, FlmaConfig, db_decode, db_div, db_encode, db_mul, db_neg, db_sqrt, db_zero
from .oracle import BigFloat

__all__ = [
    "CondSpec",
    "GenericMatrix",
    "GenericVector",
    "OracleArithmetic",
    "SoftFloatArithmetic",
    "FlmaArithmetic",
    "JacobiConvergenceError",
    "jacobi_eigh",
    "gen_conditioned",
    "householder_qr",
    "backsolve",
    "lsq_solve",
    "lsq_error",
    "spearman",
]

GEN_PREC = 128
REF_PREC = 256


@dataclass(frozen=True)
class CondSpec:
    """One benchmark point: n x n matrices at a target condition number."""

    n: int
    kappa: float
    seed: int
    trials: int = 5

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("CondSpec: n must be >= 2")
        if self.kappa < 1:
            raise ValueError("CondSpec: kappa must be >= 1")
        if self.trials < 1:
            raise ValueError("CondSpec: trials must be >= 1")


class JacobiConvergenceError(RuntimeError):
    pass


@dataclass
class GenericMatrix:
    arith: "Arithmetic"
    rows: list

    def __post_init__(self) -> None:
        if self.rows and any(len(r) != len(self.rows[0]) for r in self.rows):
            raise ValueError("GenericMatrix must be rectangular")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)


@dataclass
class GenericVector:
    arith: "Arithmetic"
    items: list


# --- element arithmetics ------------------------------------------------------


class Arithmetic:
    """Field-ish operations an element type must provide for QR/backsolve."""

    name: str

    def from_oracle(self, v: BigFloat):
        raise NotImplementedError

    def to_oracle(self, x, prec: int) -> BigFloat:
        raise NotImplementedError

    def zero(self):
        raise NotImplementedError

    def two(self):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def div(self, a, b):
        raise NotImplementedError

    def sqrt(self, a):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def dot(self, xs: Sequence, ys: Sequence):
        raise NotImplementedError

    def is_zero(self, a) -> bool:
        raise NotImplementedError

    def is_negative(self, a) -> bool:
        raise NotImplementedError


class OracleArithmetic(Arithmetic):
    def __init__(self, prec: int = REF_PREC):
        self.prec = prec
        self.name = f"oracle{prec}"

    def from_oracle(self, v: BigFloat) -> BigFloat:
        return BigFloat.from_real(v.value, self.prec)

    def to_oracle(self, x: BigFloat, prec: int) -> BigFloat:
        return BigFloat.from_real(x.value, prec)

    def zero(self) -> BigFloat:
        return BigFloat.from_real(0, self.prec)

    def two(self) -> BigFloat:
        return BigFloat.from_real(2, self.prec)

    add = staticmethod(oracle.ref_add)
    sub = staticmethod(oracle.ref_sub)
    mul = staticmethod(oracle.ref_mul)
    div = staticmethod(oracle.ref_div)
    sqrt = staticmethod(oracle.ref_sqrt)

    def neg(self, a: BigFloat) -> BigFloat:
        return -a

    def dot(self, xs, ys) -> BigFloat:
        if not xs:
            return self.zero()
        return oracle.ref_dot(list(xs), list(ys))

    def is_zero(self, a: BigFloat) -> bool:
        return a.value == 0

    def is_negative(self, a: BigFloat) -> bool:
        return a.value < 0


class SoftFloatArithmetic(Arithmetic):
    """float32/float64 baseline; dot products accumulate through fused
    multiply-adds, one per term."""

    def __init__(self, fmt: int):
        self.fmt = fmt
        self.name = f"float{fmt}"

    def from_oracle(self, v: BigFloat):
        return softfloat.SoftFloat.from_real(v, self.fmt)

    def to_oracle(self, x, prec: int) -> BigFloat:
        if x.is_nan or x.is_inf:
            raise ValueError(f"{self.name}: non-finite value reached the oracle boundary")
        return BigFloat.from_real(x.to_fraction(), prec)

    def zero(self):
        return softfloat.SoftFloat.zero(self.fmt)

    def two(self):
        return softfloat.SoftFloat.from_real(2, self.fmt)

    add = staticmethod(softfloat.sf_add)
    sub = staticmethod(softfloat.sf_sub)
    mul = staticmethod(softfloat.sf_mul)
    div = staticmethod(softfloat.sf_div)
    sqrt = staticmethod(softfloat.sf_sqrt)

    def neg(self, a):
        return softfloat.sf_sub(self.zero(), a) if a.is_zero else softfloat.SoftFloat(a.fmt, a.bits ^ (1 << (a.fmt - 1)))

    def dot(self, xs, ys):
        acc = self.zero()
        for x, y in zip(xs, ys):
            acc = softfloat.sf_fma(x, y, acc)
        return acc

    def is_zero(self, a) -> bool:
        return a.is_zero

    def is_negative(self, a) -> bool:
        return a.sign < 0 and not a.is_zero


class FlmaArithmetic(Arithmetic):
    """Dual-base FLMA; dot products run the fused multiply-add pipeline with a
    single terminal log-domain conversion."""

    def __init__(self, cfg: FlmaConfig, name: str | None = None):
        self.cfg = cfg
        self.name = name or f"log{cfg.F + cfg.E + 1}"

    def from_oracle(self, v: BigFloat) -> DualBase:
        return db_encode(v, self.cfg)

    def to_oracle(self, x: DualBase, prec: int) -> BigFloat:
        return db_decode(x, self.cfg, prec)

    def zero(self) -> DualBase:
        return db_zero()

    def two(self) -> DualBase:
        return DualBase(a=1)

    def add(self, a, b):
        return flma.db_add(a, b, self.cfg)

    def sub(self, a, b):
        return flma.db_sub(a, b, self.cfg)

    def mul(self, a, b):
        return db_mul(a, b, self.cfg)

    def div(self, a, b):
        return db_div(a, b, self.cfg)

    def sqrt(self, a):
        return db_sqrt(a, self.cfg)

    def neg(self, a):
        return db_neg(a)

    def dot(self, xs, ys):
        return flma.inner_product(list(xs), list(ys), self.cfg)

    def is_zero(self, a) -> bool:
        return a.zero

    def is_negative(self, a) -> bool:
        return a.sign < 0 and not a.zero


# --- conditioned matrix generation --------------------------------------------


def _f64_jacobi(m: np.ndarray, sweeps: int = 30) -> np.ndarray:
    """Cyclic Jacobi in float64, returning the accumulated rotations V."""
    n = m.shape[0]
    a = m.copy()
    v = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                if a[i, j] == 0.0:
                    continue
                off = max(off, abs(a[i, j]))
                theta = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, -s], [s, c]])
                a[[i, j], :] = rot @ a[[i, j], :]
                a[:, [i, j]] = a[:, [i, j]] @ rot.T
                v[:, [i, j]] = v[:, [i, j]] @ rot.T
        if off < 1e-14 * np.abs(np.diag(a)).max():
            break
    return v


def jacobi_eigh(m_rows: list[list], prec: int = GEN_PREC, max_sweeps: int = 40):
    """Cyclic Jacobi eigendecomposition at mpfr precision.

    Returns (eigenvalues, V) with M = V diag(eig) V^T; a float64 pass seeds V
    so the high-precision sweeps only polish.  Raises JacobiConvergenceError
    on hitting the sweep cap.
    """
    n = len(m_rows)
    m64 = np.array([[float(x) for x in row] for row in m_rows])
    v0 = _f64_jacobi(m64)
    with gmpy2.context(precision=prec):
        v = [[mpfr(v0[i, j]) for j in range(n)] for i in range(n)]
        # the float64 seed is only orthogonal to ~1e-16; re-orthonormalize at
        # working precision (modified Gram-Schmidt over columns) so the
        # accumulated rotation matrix stays orthogonal to ~2^-prec
        for j in range(n):
            for k in range(j):
                d = sum(v[i][k] * v[i][j] for i in range(n))
                for i in range(n):
                    v[i][j] -= d * v[i][k]
            nrm = gmpy2.sqrt(sum(v[i][j] * v[i][j] for i in range(n)))
            for i in range(n):
                v[i][j] /= nrm
        a = [[mpfr(x) for x in row] for row in m_rows]
        # a <- v^T a v
        tmp = [[sum(v[k][i] * a[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        a = [[sum(tmp[i][k] * v[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        scale = max(abs(a[i][i]) for i in range(n))
        tol = scale * mpfr(2) ** (-(prec - 10))
        for _ in range(max_sweeps):
            off = max(abs(a[i][j]) for i in range(n - 1) for j in range(i + 1, n))
            if off <= tol:
                return [a[i][i] for i in range(n)], v
            for i in range(n - 1):
                for j in range(i + 1, n):
                    aij = a[i][j]
                    if abs(aij) <= tol / (n * n):
                        continue
                    theta = (a[j][j] - a[i][i]) / (2 * aij)
                    t = (1 if theta >= 0 else -1) / (abs(theta) + gmpy2.sqrt(1 + theta * theta))
                    c = 1 / gmpy2.sqrt(1 + t * t)
                    s = t * c
                    for k in range(n):
                        aki, akj = a[k][i], a[k][j]
                        a[k][i] = c * aki - s * akj
                        a[k][j] = s * aki + c * akj
                    for k in range(n):
                        aik, ajk = a[i][k], a[j][k]
                        a[i][k] = c * aik - s * ajk
                        a[j][k] = s * aik + c * ajk
                    for k in range(n):
                        vki, vkj = v[k][i], v[k][j]
                        v[k][i] = c * vki - s * vkj
                        v[k][j] = s * vki + c * vkj
    raise JacobiConvergenceError("Jacobi sweep cap reached")


@lru_cache(maxsize=8)
def _base_decomposition(n: int, seed: int, trial: int, prec: int):
    """Draw the symmetric matrix and b for (seed, trial); eigendecompose once.

    Stream derivation (documented for reproducibility): Philox keyed with
    (seed, trial); upper-triangle entries row-major from U(-2, 2), then b
    from U(0, 1).
    """
    gen = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, trial]))
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            m[i, j] = m[j, i] = gen.uniform(-2.0, 2.0)
    b = [gen.uniform(0.0, 1.0) for _ in range(n)]
    eig, v = jacobi_eigh([[m[i, j] for j in range(n)] for i in range(n)], prec)
    return eig, v, b


def gen_conditioned(spec: CondSpec, trial: int = 0, prec: int = GEN_PREC):
    """Reference (A, b) at oracle precision with cond(A) = spec.kappa.

    The spectrum of the raw symmetric draw is rescaled affinely in log space
    onto [sigma_max/kappa, sigma_max], preserving eigenvalue signs, and A is
    reassembled as U diag(lambda') U^T.  A failed eigendecomposition retries
    with a derived seed.
    """
    last_err: Exception | None = None
    for attempt in range(3):
        seed = spec.seed + attempt * 1000003
        try:
            eig, v, b64 = _base_decomposition(spec.n, seed, trial, prec)
            break
        except JacobiConvergenceError as exc:  # pragma: no cover - not seen in practice
            last_err = exc
    else:  # pragma: no cover
        raise JacobiConvergenceError(f"no convergent draw for {spec}") from last_err
    n = spec.n
    with gmpy2.context(precision=prec):
        mags = [abs(e) for e in eig]
        smax, smin = max(mags), min(mags)
        if smin == 0:
            raise JacobiConvergenceError("singular raw draw")
        kappa = mpfr(spec.kappa)
        if smax == smin:
            scaled = list(mags)
        else:
            t = gmpy2.log(kappa) / gmpy2.log(smax / smin)
            scaled = [gmpy2.exp(gmpy2.log(smax) + t * (gmpy2.log(s) - gmpy2.log(smax))) for s in mags]
        lam = [s if e >= 0 else -s for s, e in zip(scaled, eig)]
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                # associate symmetrically so A comes out exactly symmetric
                row.append(sum((v[i][k] * v[j][k]) * lam[k] for k in range(n)))
            rows.append(row)
    a_mat = [[BigFloat(x, prec) for x in row] for row in rows]
    b_vec = [BigFloat.from_real(x, prec) for x in b64]
    return a_mat, b_vec


# --- QR, backsolve, benchmark ---------------------------------------------------


def householder_qr(a: GenericMatrix, b: GenericVector) -> tuple[GenericMatrix, GenericVector]:
    """Householder QR of a square matrix, applying the reflectors to b.

    Returns (R, Q^T b).  Sign convention v = col + sign(col_0)*||col||*e_1,
    so R's diagonal takes -sign(col_0)*||col||.  A zero column skips its
    reflector (identity).
    """
    ar = a.arith
    n, m = a.shape
    if n != m:
        raise ValueError("householder_qr expects a square matrix")
    r = [row[:] for row in a.rows]
    c = b.items[:]
    for k in range(n):
        col = [r[i][k] for i in range(k, n)]
        if all(ar.is_zero(x) for x in col[1:]):
            continue  # already triangular here; identity reflector
        nrm = ar.sqrt(ar.dot(col, col))
        if ar.is_zero(nrm):
            continue
        beta = nrm if ar.is_negative(col[0]) else ar.neg(nrm)
        v = col[:]
        v[0] = ar.sub(col[0], beta)
        vtv = ar.dot(v, v)
        if ar.is_zero(vtv):
            continue
        tau = ar.div(ar.two(), vtv)
        r[k][k] = beta
        for i in range(k + 1, n):
            r[i][k] = ar.zero()
        for j in range(k + 1, n):
            colj = [r[i][j] for i in range(k, n)]
            f = ar.mul(tau, ar.dot(v, colj))
            for i in range(k, n):
                r[i][j] = ar.sub(r[i][j], ar.mul(f, v[i - k]))
        tail = c[k:]
        f = ar.mul(tau, ar.dot(v, tail))
        for i in range(k, n):
            c[i] = ar.sub(c[i], ar.mul(f, v[i - k]))
    return GenericMatrix(ar, r), GenericVector(ar, c)


def backsolve(r: GenericMatrix, c: GenericVector) -> GenericVector:
    """Back-substitution for upper-triangular R x = c."""
    ar = r.arith
    n, _ = r.shape
    x = [ar.zero()] * n
    for i in range(n - 1, -1, -1):
        if ar.is_zero(r.rows[i][i]):
            raise ZeroDivisionError(f"backsolve: zero diagonal at {i}")
        s = ar.dot(r.rows[i][i + 1:], x[i + 1:]) if i + 1 < n else ar.zero()
        x[i] = ar.div(ar.sub(c.items[i], s), r.rows[i][i])
    return GenericVector(ar, x)


def lsq_solve(a_ref: list[list[BigFloat]], b_ref: list[BigFloat], ar: Arithmetic) -> list[BigFloat]:
    """Round (A, b) into the arithmetic, QR-solve, decode x back to oracle."""
    a = GenericMatrix(ar, [[ar.from_oracle(x) for x in row] for row in a_ref])
    b = GenericVector(ar, [ar.from_oracle(x) for x in b_ref])
    r, qtb = householder_qr(a, b)
    x = backsolve(r, qtb)
    return [ar.to_oracle(v, REF_PREC) for v in x.items]


def lsq_error(spec: CondSpec, arithmetics: Sequence[Arithmetic]) -> list[dict]:
    """Per-trial, per-arithmetic solution error ||x - x_r||_2 for one spec.

    x_r comes from the oracle-precision QR on the unrounded A, b.
    """
    rows = []
    ref_ar = OracleArithmetic(REF_PREC)
    for trial in range(spec.trials):
        a_ref, b_ref = gen_conditioned(spec, trial)
        x_r = lsq_solve(a_ref, b_ref, ref_ar)
        for ar in arithmetics:
            x = lsq_solve(a_ref, b_ref, ar)
            diff = [xi - ri for xi, ri in zip(x, x_r)]
            err = float(oracle.ref_norm2(diff).value)
            rows.append({
                "kappa": spec.kappa,
                "trial": trial,
                "arithmetic": ar.name,
                "error_l2": err,
                "seed": spec.seed,
            })
    return rows


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation (average ranks on ties)."""

    def ranks(vals):
        order = sorted(range(len(vals)), key=lambda i: vals[i])
        rk = [0.0] * len(vals)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                rk[order[k]] = avg
            i = j + 1
        return rk

    rx, ry = ranks(list(xs)), ranks(list(ys))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return 0.0
    return cov / (vx * vy) ** 0.5
