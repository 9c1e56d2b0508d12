import itertools
import os

import numpy as np
import pytest
from hypothesis import settings

from mcsched import Association, Dimensions, Schedule, UtilityTensor

settings.register_profile("default", deadline=None, print_blob=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Gray independent set of the two-cloud worked example, 0-based (c, u, b, z).
EXAMPLE_GRAY = Schedule.of([
    (0, 0, 0, 0), (0, 0, 0, 1), (0, 1, 1, 0), (0, 1, 1, 1),
    (1, 2, 0, 0), (1, 2, 0, 1), (1, 3, 1, 0), (1, 3, 1, 1),
])
EXAMPLE_DIMS = Dimensions(clouds=2, bs_per_cloud=2, pzs_per_bs=2, users=4)


def random_utilities(seed, shape):
    return UtilityTensor(np.random.default_rng(seed).uniform(0.0, 4.0, size=shape))


def slot_assignments(dims):
    """Every schedule placing exactly one user on each (c, b, z) slot."""
    slots = [(c, b, z) for c in range(dims.clouds) for b in range(dims.bs_per_cloud)
             for z in range(dims.pzs_per_bs)]
    for users in itertools.product(range(dims.users), repeat=len(slots)):
        yield Schedule(frozenset(Association(c, u, b, z) for (c, b, z), u in zip(slots, users)))


@pytest.fixture
def example_uniform():
    return UtilityTensor(np.ones(EXAMPLE_DIMS.shape))
