import warnings

import pytest

from wiblock.config import ScenarioConfig


@pytest.fixture
def cfg2():
    return ScenarioConfig(num_witnesses=2)


@pytest.fixture(autouse=True)
def _quiet_short_horizons():
    # short test horizons trigger the "too few confirmations" warning by design
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="horizon .* yields about")
        yield
