import random
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from dualog import oracle
from dualog.dualbase import DualBase, db_decode, db_mul, db_one, db_position, db_zero, log32_config
from dualog.fixedpt import ufix_from_real
from dualog.flma import (
    LinearFloat,
    db_add,
    db_sub,
    fused_term,
    inner_product,
    lf_add,
    lf_value,
    lf_zero,
    p_convert,
    q_convert,
)


@pytest.fixture(scope="module")
def cfg():
    return log32_config()


def rand_norm(rnd, cfg, a=0):
    return DualBase(a=a, b=rnd.randrange(cfg.ln2c))


def test_p_convert_trivial_and_paper_bits(cfg):
    one = p_convert(db_one(), cfg)
    assert (one.sign, one.exponent, one.sig) == (1, 0, 1 << cfg.A)
    y = DualBase(a=-1, b=cfg.ln2c - 1)
    py = p_convert(y, cfg)
    assert py.exponent == -1
    assert py.sig == 0b1111111111111111111111100  # 1.1111111111111111111111(00) at A=24
    assert p_convert(db_zero(), cfg).zero


def test_p_convert_accuracy_sample(cfg):
    rnd = random.Random(0)
    for _ in range(400):
        x = rand_norm(rnd, cfg)
        sig = p_convert(x, cfg).sig
        cr = oracle.exp_code_exact(x.b, cfg.F, cfg.F + cfg.alpha)
        assert abs(sig - cr) <= 1


def test_q_convert_trivials(cfg):
    assert q_convert(p_convert(db_one(), cfg), cfg) == db_one()
    v = LinearFloat(sign=1, exponent=-23, sig=1 << cfg.A, zero=False)
    assert q_convert(v, cfg) == DualBase(a=-23, b=0)
    assert q_convert(lf_zero(), cfg) == db_zero()
    from dualog.flma import lf_inf

    assert q_convert(lf_inf(-1), cfg).inf


def test_q_convert_accuracy_sample(cfg):
    rnd = random.Random(1)
    for _ in range(300):
        sig = (1 << cfg.A) + rnd.randrange(1 << cfg.A)
        v = LinearFloat(sign=1, exponent=0, sig=sig, zero=False)
        r = q_convert(v, cfg)
        cr = oracle.ln_code_exact(sig - (1 << cfg.A), cfg.A, cfg.F)  # A = F+beta here
        got_pos = r.a * cfg.ln2c + r.b  # position relative to exponent 0
        assert abs(got_pos - cr) <= 1


def test_lf_add_identity_and_worked_subtraction(cfg):
    u = p_convert(db_one(), cfg)
    assert lf_add(u, lf_zero(), cfg) == u
    py = p_convert(DualBase(a=-1, b=cfg.ln2c - 1), cfg)
    diff = lf_add(u, LinearFloat(sign=-1, exponent=py.exponent, sig=py.sig, zero=False), cfg)
    assert (diff.sign, diff.exponent, diff.sig) == (1, -23, 1 << cfg.A)


def test_lf_add_exact_cancellation_and_flags(cfg):
    u = p_convert(DualBase(b=12345), cfg)
    n = LinearFloat(sign=-1, exponent=u.exponent, sig=u.sig, zero=False)
    assert lf_add(u, n, cfg) == lf_zero()
    big = LinearFloat(sign=1, exponent=cfg.a_max, sig=(2 << cfg.A) - 1, zero=False)
    assert lf_add(big, big, cfg).inf
    tiny = LinearFloat(sign=1, exponent=cfg.a_min, sig=1 << cfg.A, zero=False)
    neg_half = LinearFloat(sign=-1, exponent=cfg.a_min - 1, sig=1 << cfg.A, zero=False)
    assert lf_add(tiny, neg_half, cfg) == lf_zero()  # underflow flushes
    with pytest.raises(ValueError):
        lf_add(LinearFloat(sign=1, inf=True), LinearFloat(sign=-1, inf=True), cfg)


def test_lf_add_matches_exact_rational(cfg):
    rnd = random.Random(2)
    for _ in range(2000):
        u = LinearFloat(sign=rnd.choice((1, -1)), exponent=rnd.randrange(-40, 40),
                        sig=(1 << cfg.A) + rnd.randrange(1 << cfg.A), zero=False)
        v = LinearFloat(sign=rnd.choice((1, -1)), exponent=rnd.randrange(-40, 40),
                        sig=(1 << cfg.A) + rnd.randrange(1 << cfg.A), zero=False)
        r = lf_add(u, v, cfg)
        exact = lf_value(u, cfg) + lf_value(v, cfg)
        if r.zero:
            assert exact == 0
            continue
        got = lf_value(r, cfg)
        ulp = Fraction(2) ** (r.exponent - cfg.A)
        assert abs(got - exact) <= ulp / 2


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_lf_add_commutative(data):
    cfg = log32_config()

    def draw_lf():
        return LinearFloat(
            sign=data.draw(st.sampled_from((1, -1))),
            exponent=data.draw(st.integers(min_value=-100, max_value=100)),
            sig=(1 << cfg.A) + data.draw(st.integers(min_value=0, max_value=(1 << cfg.A) - 1)),
            zero=False)

    u, v = draw_lf(), draw_lf()
    assert lf_add(u, v, cfg) == lf_add(v, u, cfg)


def test_db_add_trivials_and_worked_example(cfg):
    x = rand_norm(random.Random(3), cfg)
    assert db_add(x, db_zero(), cfg) == x
    one = db_one()
    y = DualBase(a=-1, b=cfg.ln2c - 1)  # 1 - 2^-24 rounded
    r = db_sub(one, y, cfg)
    assert (r.sign, r.a, r.b) == (1, -23, 0)
    assert db_sub(x, x, cfg) == db_zero()


def test_fused_term_examples(cfg):
    t = fused_term(db_one(), db_one(), cfg)
    assert (t.exponent, t.sig) == (0, 1 << cfg.A)
    b4 = ufix_from_real(0.4, 23).code
    b3 = ufix_from_real(0.3, 23).code
    t = fused_term(DualBase(a=1, b=b4), DualBase(a=-1, b=b3), cfg)
    assert t.exponent == 1
    cr = oracle.exp_code_exact(b4 + b3, 23, 24)  # in [2,4) at 24 bits
    half = (cr + 1) >> 1
    assert abs(t.sig - half) <= 1
    assert fused_term(db_zero(), db_one(), cfg).zero
    with pytest.raises(ValueError):
        fused_term(db_zero(), DualBase(inf=True), cfg)


def test_fused_term_no_worse_than_mul_path(cfg):
    rnd = random.Random(4)
    sum_fused = Fraction(0)
    sum_mul = Fraction(0)
    for _ in range(800):
        x, y = rand_norm(rnd, cfg), rand_norm(rnd, cfg)
        exact = db_decode(x, cfg, 120).to_fraction() * db_decode(y, cfg, 120).to_fraction()
        ft = fused_term(x, y, cfg)
        err_f = abs(lf_value(ft, cfg) - exact) / exact
        ml = p_convert(db_mul(x, y, cfg), cfg)
        err_m = abs(lf_value(ml, cfg) - exact) / exact
        # one fused step stays within 1 ulp of the significand at F+alpha bits
        assert err_f <= Fraction(1, 1 << (cfg.F + cfg.alpha)) * 2
        sum_fused += err_f
        sum_mul += err_m
    # skipping the ln(2) renormalization makes the fused path better on average
    assert sum_fused < sum_mul


def test_inner_product_trivials(cfg):
    assert inner_product([], [], cfg) == db_zero()
    ones = [db_one()] * 128
    assert inner_product(ones, ones, cfg) == DualBase(a=7)
    with pytest.raises(ValueError):
        inner_product([db_one()], [], cfg)


def test_inner_product_vs_oracle(cfg):
    rnd = random.Random(5)
    xs = [rand_norm(rnd, cfg) for _ in range(128)]
    ys = [rand_norm(rnd, cfg) for _ in range(128)]
    r = inner_product(xs, ys, cfg)
    exact = sum(db_decode(x, cfg, 128).to_fraction() * db_decode(y, cfg, 128).to_fraction()
                for x, y in zip(xs, ys))
    got = db_decode(r, cfg, 128).to_fraction()
    rel = abs(got - exact) / exact
    # regression-tracked: a few F-bit ulps of relative error
    assert rel < Fraction(8, 1 << 23)


def test_accumulation_determinism(cfg):
    rnd = random.Random(6)
    xs = [rand_norm(rnd, cfg) for _ in range(64)]
    ys = [rand_norm(rnd, cfg) for _ in range(64)]
    assert inner_product(xs, ys, cfg) == inner_product(list(xs), list(ys), cfg)
