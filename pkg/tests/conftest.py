import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Acceptance demands >= 200 cases per property; deadline off because single
# examples legitimately spend tens of ms inside the dual solver.
settings.register_profile(
    "sdsvm",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
    derandomize=True,
)
settings.load_profile("sdsvm")


@pytest.fixture
def linear_spec():
    from sdsvm import KernelSpec

    return KernelSpec(kind="linear")


def make_vectors(rows, ids=None):
    """Samples from a 2-D array, ids defaulting to 1-based positions."""
    from sdsvm import Sample

    rows = np.asarray(rows, dtype=np.float64)
    if ids is None:
        ids = range(1, rows.shape[0] + 1)
    return [Sample(id=i, payload=row) for i, row in zip(ids, rows)]
