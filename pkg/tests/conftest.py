import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "ci",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("ci")

import helpers  # noqa: E402


@pytest.fixture
def msta():
    return helpers.msta_metric()


@pytest.fixture
def mstb():
    return helpers.mstb_metric()


@pytest.fixture
def fl_inst():
    return helpers.fl_instance()


@pytest.fixture
def quad():
    return helpers.quad_oracle()


@pytest.fixture
def mrr2():
    """Two robots sharing the far-point target geometry of the second
    tree fixture, each from its own root."""
    import numpy as np

    from salb.mrr import make_instance

    d = np.zeros((5, 5))
    root_row = [5.0, 3.0, 3.0]
    tt = {(0, 1): 3.0, (0, 2): 3.0, (1, 2): 6.0}
    d[0, 1] = d[1, 0] = 6.0  # robot-robot distance, any triangle-feasible value
    for r in (0, 1):
        for t in range(3):
            d[r, 2 + t] = d[2 + t, r] = root_row[t]
    for (a, b), v in tt.items():
        d[2 + a, 2 + b] = d[2 + b, 2 + a] = v
    return make_instance(d, 2, 3, 0.0)
