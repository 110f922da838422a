import numpy as np
import pytest

from dualog import oracle
from dualog.dualbase import log32_config
from dualog.shiftadd import exp_domain_limit


@pytest.fixture(scope="session")
def log32():
    return log32_config()


@pytest.fixture(scope="session")
def exp_cr_codes():
    """Correctly rounded e^x codes (23-bit in, 23-bit out) over the exp domain."""
    from dualog.analysis import _cr_from_table

    limit = exp_domain_limit(23)
    ref = oracle.exp_ref_table(23, limit).astype(np.int64)
    return _cr_from_table(ref, 23, lambda k: oracle.exp_code_exact(k, 23, 23))


@pytest.fixture(scope="session")
def ln_cr_codes():
    """Correctly rounded ln(x) codes over all 2^23 inputs in [1, 2)."""
    from dualog.analysis import _cr_from_table

    ref = oracle.ln_ref_table(23).astype(np.int64)
    return _cr_from_table(ref, 23, lambda k: oracle.ln_code_exact(k, 23, 23))
