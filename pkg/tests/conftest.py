import pytest

from denjoy_lab.denjoy import DenjoySystem

DESK_TAUS = (0.4, 0.35)
DESK_RHOS = (0.6180339887, 0.4142135624)


@pytest.fixture(scope="session")
def desk():
    return DenjoySystem(DESK_TAUS, DESK_RHOS, base_point=0.0, window=20)


@pytest.fixture(scope="session")
def desk10():
    return DenjoySystem(DESK_TAUS, DESK_RHOS, base_point=0.0, window=10)
