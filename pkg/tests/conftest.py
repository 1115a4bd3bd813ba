import numpy as np
import pytest

from vnhc import FIXTURE_CURRENTS, build_boat


@pytest.fixture(scope="session")
def boat_fixtures():
    """One (name, current, model, constraint) tuple per bundled current."""
    out = []
    for name, (c1, c2) in FIXTURE_CURRENTS.items():
        model, con = build_boat(c1, c2)
        out.append((name, (c1, c2), model, con))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
