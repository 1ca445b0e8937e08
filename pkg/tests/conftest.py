import pytest
from flint import ctx

from carleman.numerics import DEFAULT_PREC


@pytest.fixture(autouse=True)
def _reset_precision():
    ctx.prec = DEFAULT_PREC
    yield
    ctx.prec = DEFAULT_PREC
