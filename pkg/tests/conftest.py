import numpy as np
import pytest

from vertexsim import RMatrix, VertexModel
from vertexsim.rng import stream_u64, to_unit

# 4x4 Boltzmann gate used as the reference fixture throughout the suite
# (printed to four decimals; its generating seed is unknown, so it can only
# be consumed, never regenerated).
FIXTURE_R = np.array([
    [0.5265, 0.1508, 0.0963, 0.0305],
    [0.1941, 0.1467, 0.0410, 0.0370],
    [0.3334, 0.2018, 0.1079, 0.0126],
    [0.1588, 0.0160, 0.0546, 0.0302],
])

FIXTURE_BETA = 2.0

# normalized singular values printed alongside the fixture
FIXTURE_SINGULAR = (1.0, 0.1553, 0.0511, 0.0437)


@pytest.fixture(scope="session")
def fixture_r() -> RMatrix:
    return RMatrix(entries=FIXTURE_R.copy())


@pytest.fixture(scope="session")
def fixture_model() -> VertexModel:
    """Vertex model whose Boltzmann gate reproduces FIXTURE_R exactly."""
    eps = -np.log(FIXTURE_R) / FIXTURE_BETA
    flat = np.empty(16)
    for l in range(2):
        for d in range(2):
            for r in range(2):
                for u in range(2):
                    flat[8 * l + 4 * d + 2 * r + u] = eps[2 * l + d, 2 * r + u]
    return VertexModel(energies=tuple(flat), beta=FIXTURE_BETA)


def positive_state(dim: int, seed: int) -> np.ndarray:
    """Seeded random entrywise-positive unit vector."""
    v = to_unit(stream_u64(seed, dim)) + 1e-12
    return v / np.linalg.norm(v)
