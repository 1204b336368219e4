import pytest

from infoprocure import Bounds, MechanismParams, Prior, RngStream

SEED = 20260809


@pytest.fixture
def bounds():
    """Type-space rectangle of the Gaussian numerical study."""
    return Bounds(c_lo=0.1, c_hi=0.2, v_lo=10.0, v_hi=20.0)


@pytest.fixture
def prior():
    return Prior(cost=(0.1, 0.2), inv_fisher=(10.0, 20.0))


@pytest.fixture
def params(bounds):
    return MechanismParams.from_bounds(beta=100.0, bounds=bounds)


@pytest.fixture
def rng():
    return RngStream(SEED)
