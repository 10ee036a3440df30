"""Shared fixtures: the seeded sample suite used by the soundness tests.

The suite is one list of (model, t0, h, reference tol) draws reused by
both the bound-soundness and the product-formula-soundness tests, so the
expensive reference propagators are computed once per sample (they are
memoized inside the propagators module).  Most samples run small chains;
a handful exercise n = 7 and 8 at shorter steps where dense references
are still affordable.
"""

import dataclasses

import numpy as np
import pytest

from cfqm import spin_model

SUITE_SEED = 20240814
SUITE_SIZE = 50


@dataclasses.dataclass(frozen=True)
class Sample:
    model: spin_model.HeisenbergModel
    t0: float
    h: float
    reference_tol: float


def _build_suite() -> list[Sample]:
    rng = np.random.default_rng(SUITE_SEED)
    samples = []
    for i in range(SUITE_SIZE):
        big = i % 9 == 8  # 5 of 50 run the larger chains
        n = int(rng.integers(7, 9)) if big else int(rng.integers(2, 7))
        model = spin_model.random_model(n, seed=int(rng.integers(2 ** 31)))
        t0 = float(rng.uniform(0.0, 2.0 * np.pi))
        if big:
            h, tol = float(rng.uniform(0.10, 0.25)), 1e-9
        else:
            h, tol = float(rng.uniform(0.15, 0.60)), 1e-10
        samples.append(Sample(model, t0, h, tol))
    return samples


@pytest.fixture(scope="session")
def sample_suite() -> list[Sample]:
    return _build_suite()
