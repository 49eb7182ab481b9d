import numpy as np
import pytest

from slicesense import AssignmentMatrix, KpiMatrix, SimConfig, simulate


FIG1 = AssignmentMatrix([[1, 1, 1], [1, 1, 0]])
FIG2 = AssignmentMatrix([[1, 1, 0], [0, 1, 1], [1, 0, 1]])

# two disjoint three-slice resources: the planted layout every stage can
# provably recover under strong settings
DISJOINT6 = AssignmentMatrix(
    [
        [1, 1, 1, 0, 0, 0],
        [0, 0, 0, 1, 1, 1],
    ]
)


@pytest.fixture(scope="session")
def disjoint_run():
    config = SimConfig(
        n_slices=6,
        n_resources=2,
        n_periods=2000,
        weight_shared=0.5,
        noise_variance=0.0,
        seed=20260801,
    )
    return simulate(config, truth=DISJOINT6), config


def random_measurements(rng: np.random.Generator, t: int, n: int) -> KpiMatrix:
    return KpiMatrix(np.abs(rng.standard_normal((t, n))))
