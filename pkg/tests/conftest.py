import numpy as np
import pytest

from delaytron.datasets import SyntheticSpec, gen_synsep, gen_synnonsep
from delaytron.rng import rng_stream


@pytest.fixture(scope="session")
def synsep_small():
    return gen_synsep(SyntheticSpec(num_samples=3000, seed=7), rng_stream(7, "data"))


@pytest.fixture(scope="session")
def synsep_full():
    return gen_synsep(SyntheticSpec(num_samples=100_000, seed=0), rng_stream(0, "data"))


@pytest.fixture(scope="session")
def synnonsep_full():
    spec = SyntheticSpec(num_samples=100_000, noise_rate=0.05, seed=0)
    return gen_synnonsep(spec, rng_stream(0, "data"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
