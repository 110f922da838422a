"""Dual-base (±2^a·e^b) approximate logarithmic arithmetic.

Shift-and-add exp/ln kernels with Euler-step correction, the dual-base number
system built on them, FLMA log-linear multiply-add, IEEE-style soft floats for
baselines, and the analysis harness that measures all of it against a
high-precision oracle.
"""

from .dualbase import (
    DualBase,
    FlmaConfig,
    db_decode,
    db_div,
    db_encode,
    db_mul,
    db_one,
    db_pow_int,
    db_sqrt,
    db_zero,
    log32_config,
    log64_config,
)
from .fixedpt import RoundMode, UFix, ufix_add, ufix_from_real, ufix_narrow, ufix_shr, ufix_sub
from .flma import LinearFloat, db_add, db_sub, fused_term, inner_product, lf_add, p_convert, q_convert
from .oracle import BigFloat, ref_exp, ref_ln
from .shiftadd import (
    ExpParams,
    KernelTrace,
    LogParams,
    exp_kernel,
    exp_kernel_extended,
    ln_kernel,
    required_iterations,
    truncated_div,
    truncated_mul,
)
from .softfloat import SoftFloat, sf_add, sf_div, sf_fma, sf_mul, sf_sqrt, sf_sub

__version__ = "0.1.0"

__all__ = [
    "RoundMode",
    "UFix",
    "ufix_from_real",
    "ufix_add",
    "ufix_sub",
    "ufix_shr",
    "ufix_narrow",
    "BigFloat",
    "ref_exp",
    "ref_ln",
    "ExpParams",
    "LogParams",
    "KernelTrace",
    "exp_kernel",
    "exp_kernel_extended",
    "ln_kernel",
    "truncated_mul",
    "truncated_div",
    "required_iterations",
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
    "LinearFloat",
    "p_convert",
    "q_convert",
    "lf_add",
    "db_add",
    "db_sub",
    "fused_term",
    "inner_product",
    "SoftFloat",
    "sf_add",
    "sf_sub",
    "sf_mul",
    "sf_div",
    "sf_sqrt",
    "sf_fma",
]
