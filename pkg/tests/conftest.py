import numpy as np
import pytest

from nbz import _kernels
from nbz.model import ParticleSnapshot


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()


def random_snapshot(rng: np.random.Generator, n: int,
                    coord_span: float = 100.0,
                    vel_sd: float = 300.0) -> ParticleSnapshot:
    return ParticleSnapshot(
        rng.uniform(0, coord_span, n).astype(np.float32),
        rng.uniform(0, coord_span, n).astype(np.float32),
        rng.uniform(0, coord_span, n).astype(np.float32),
        rng.normal(0, vel_sd, n).astype(np.float32),
        rng.normal(0, vel_sd, n).astype(np.float32),
        rng.normal(0, vel_sd, n).astype(np.float32),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
