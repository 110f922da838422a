import os

import numpy as np
import pytest

from dualog.batch import add_sweep_batch, backend, exp_batch, ln_batch, roundtrip_batch
from dualog.dualbase import DualBase, log32_config, log64_config
from dualog.fixedpt import UFix
from dualog.flma import db_add, p_convert, q_convert
from dualog.shiftadd import (
    ExpParams,
    LogParams,
    exp_domain_limit,
    exp_extended_domain_limit,
    exp_kernel,
    exp_kernel_extended,
    ln_kernel,
)


@pytest.fixture
def force_backend(monkeypatch):
    def setter(name):
        monkeypatch.setenv("DUALOG_BACKEND", name)

    return setter


def _sample_codes(rng, limit, n=1500):
    return np.unique(rng.integers(0, limit, n)).astype(np.int64)


@pytest.mark.parametrize("be", ["numpy", "numba"])
def test_exp_parity_with_scalar(be, force_backend):
    force_backend(be)
    cfg = log32_config().exp_cfg
    rng = np.random.default_rng(1)
    codes = _sample_codes(rng, exp_domain_limit(23))
    got = exp_batch(codes, cfg)
    want = np.array([exp_kernel(UFix(int(c), 23), cfg).code for c in codes])
    assert np.array_equal(got, want)


@pytest.mark.parametrize("be", ["numpy", "numba"])
def test_extended_parity_with_scalar(be, force_backend):
    force_backend(be)
    cfg = log32_config().exp_cfg
    rng = np.random.default_rng(2)
    codes = _sample_codes(rng, exp_extended_domain_limit(23) + 1, 800)
    got = exp_batch(codes, cfg, extended=True)
    want = np.array([exp_kernel_extended(UFix(int(c), 23, int_bits=1), cfg)[0].code for c in codes])
    assert np.array_equal(got, want)


@pytest.mark.parametrize("be", ["numpy", "numba"])
def test_ln_parity_with_scalar(be, force_backend):
    force_backend(be)
    cfg = log32_config().log_cfg
    rng = np.random.default_rng(3)
    codes = (np.int64(1) << 24) + _sample_codes(rng, 1 << 24, 800)
    got = ln_batch(codes, cfg)
    want = np.array([ln_kernel(UFix(int(c), 24, int_bits=1), cfg).code for c in codes])
    assert np.array_equal(got, want)


def test_backends_agree_log64(force_backend):
    c64 = log64_config()
    rng = np.random.default_rng(4)
    codes = _sample_codes(rng, c64.ln2c, 500)
    force_backend("numpy")
    a = exp_batch(codes, c64.exp_cfg)
    force_backend("numba")
    b = exp_batch(codes, c64.exp_cfg)
    assert np.array_equal(a, b)
    want = np.array([exp_kernel(UFix(int(c), 52), c64.exp_cfg).code for c in codes[:60]])
    assert np.array_equal(a[:60], want)


def test_add_sweep_batch_matches_scalar_pipeline():
    cfg = log32_config(2, 1)
    rng = np.random.default_rng(5)
    bx = rng.integers(0, cfg.ln2c, 300).astype(np.int64)
    by = rng.integers(0, cfg.ln2c, 300).astype(np.int64)
    a, b = add_sweep_batch(bx, by, cfg)
    for i in range(300):
        r = db_add(DualBase(b=int(bx[i])), DualBase(b=int(by[i])), cfg)
        assert (r.a, r.b) == (int(a[i]), int(b[i]))


def test_roundtrip_batch_matches_scalar():
    cfg = log32_config()
    rng = np.random.default_rng(6)
    codes = _sample_codes(rng, cfg.ln2c, 300)
    da, b = roundtrip_batch(codes, cfg)
    for i in range(codes.size):
        r = q_convert(p_convert(DualBase(b=int(codes[i])), cfg), cfg)
        assert (r.a, r.b) == (int(da[i]), int(b[i]))


def test_int64_unsafe_config_falls_back_to_scalar():
    # huge ell forces the big-integer fallback; results must equal the scalar kernel
    cfg = ExpParams(x_bits=23, y_bits=24, I=5, ell=40, p=40, r=0)
    codes = np.arange(0, 1000, 7, dtype=np.int64)
    got = exp_batch(codes, cfg)
    want = np.array([exp_kernel(UFix(int(c), 23), cfg).code for c in codes])
    assert np.array_equal(got, want)


def test_env_flag_validation(monkeypatch):
    monkeypatch.setenv("DUALOG_BACKEND", "cuda")
    with pytest.raises(ValueError):
        backend()
    monkeypatch.setenv("DUALOG_BACKEND", "numpy")
    assert backend() == "numpy"
