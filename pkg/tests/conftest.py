"""Shared corpus generation for the test suite."""

import numpy as np
import pytest
from hypothesis import settings

from tradegains import DiscreteDistribution, TradeInstance

# keep property-test runs reproducible across invocations
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")

#: Scaling parameters 0.05, 0.10, ..., 0.95.
LAMBDA_GRID = tuple(i / 20 for i in range(1, 20))


def random_discrete(rng, max_atoms=8, lo=0.0, hi=1.0):
    n = int(rng.integers(1, max_atoms + 1))
    values = np.unique(rng.uniform(lo, hi, n))
    probs = rng.dirichlet(np.ones(len(values)))
    return DiscreteDistribution.from_atoms(zip(values.tolist(), probs.tolist()))


def random_discrete_instance(seed, max_atoms=8):
    rng = np.random.default_rng(seed)
    return TradeInstance(
        buyer=random_discrete(rng, max_atoms), seller=random_discrete(rng, max_atoms)
    )


@pytest.fixture(scope="session")
def corpus_small():
    """100 seeded discrete x discrete instances for module-level property tests."""
    return [random_discrete_instance(seed) for seed in range(100)]
