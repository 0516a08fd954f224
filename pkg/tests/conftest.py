import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("wbopt", max_examples=25, deadline=None)
settings.load_profile("wbopt")


@pytest.fixture(scope="session")
def humanoid():
    from wbopt.model import load_humanoid
    return load_humanoid()


@pytest.fixture(scope="session")
def hand():
    from wbopt.model import load_hand
    return load_hand()


@pytest.fixture(scope="session")
def standing(humanoid):
    from wbopt.kinematics import standing_base_pose
    return standing_base_pose(humanoid)


def random_q(model, rng, scale=1.0):
    """Uniform q within limits, shrunk toward the midpoint by `scale`."""
    mid = 0.5 * (model.limits_lower + model.limits_upper)
    half = 0.5 * (model.limits_upper - model.limits_lower)
    return mid + (rng.uniform(-1, 1, model.nq) * half * scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
