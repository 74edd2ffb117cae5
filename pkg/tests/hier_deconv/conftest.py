import os

import numpy as np
import pytest

from hier_deconv.ensembles import gen_dictionary
from hier_deconv.ensembles import make_rng
from hier_deconv.models import EnsembleConfig
from hier_deconv.models import HierSignal


here = os.path.dirname(__file__)


@pytest.fixture
def fixtures_dir():
    return os.path.join(here, '..', 'fixtures')


@pytest.fixture
def phase_table_path(fixtures_dir):
    return os.path.join(fixtures_dir, 'phase_table.csv')


@pytest.fixture
def rng():
    return make_rng(20170414)


@pytest.fixture
def dictionary():
    return gen_dictionary(EnsembleConfig(mu=8, n=4, seed=11))


@pytest.fixture
def compressed_dictionary():
    return gen_dictionary(EnsembleConfig(mu=8, n=5, m=3, a_kind='gaussian',
                                         seed=12))


@pytest.fixture
def random_signal(rng):
    def factory(shape):
        return HierSignal(rng.standard_normal(shape))
    return factory


def sparse_signal(rng: np.random.Generator, mu: int, n: int, s: int,
                  sigma: int) -> HierSignal:
    """
    A random signal with exactly s blocks of sigma non-zeros
    """
    values = np.zeros((mu, n))
    for k in rng.choice(mu, s, replace=False):
        values[k, rng.choice(n, sigma, replace=False)] = \
            rng.standard_normal(sigma)
    return HierSignal(values)


@pytest.fixture
def sparse_factory(rng):
    def factory(mu, n, s, sigma):
        return sparse_signal(rng, mu, n, s, sigma)
    return factory
