"""
Seeded random measurement ensembles and planted ground truths.

Every generator is a pure function of its dimensions and a 64-bit seed. Seeds
feed a counter-based ``Philox`` bit generator; normal variates come from
numpy's ziggurat sampler (``Generator.standard_normal``). Independent streams
are derived with :func:`derive_seed`, which hashes a base seed together with
an integer key through numpy's ``SeedSequence`` (the key is the spawn key),
so a stream never depends on the order in which other streams are drawn.

Variance conventions: U entries have variance 1/mu, Gaussian A entries 1/m
and mixing entries 1/M, so every factor is an isometry in expectation.
"""

import logging
from typing import Tuple

import numpy as np

from hier_deconv.errors import ConfigurationError
from hier_deconv.models import DemixingTruth
from hier_deconv.models import Dictionary
from hier_deconv.models import EnsembleConfig
from hier_deconv.models import GroundTruth
from hier_deconv.models import positive_int


__all__ = [
    'derive_seed',
    'make_rng',
    'gen_dictionary',
    'gen_ground_truth',
    'gen_demixing_truth',
    'gen_mixing',
]

logger = logging.getLogger(__name__)

# Stream keys of the draws belonging to one trial seed
DICTIONARY_STREAM = 0
TRUTH_STREAM = 1
MIXING_STREAM = 2


def derive_seed(base_seed: int, *key: int) -> int:
    """
    A 64-bit seed derived from ``base_seed`` and a tuple of non-negative
    integers. Equal inputs always give equal seeds.
    """
    seq = np.random.SeedSequence(entropy=int(base_seed),
                                 spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _gaussian(rng: np.random.Generator, shape: Tuple[int, ...],
              variance: float) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(variance)


def gen_dictionary(cfg: EnsembleConfig) -> Dictionary:
    """
    Draw Q = U A according to ``cfg``. U is drawn before A from the same
    stream.

    :param cfg: Ensemble configuration (validated on construction)
    :return: The dictionary
    """
    rng = make_rng(cfg.seed)

    if cfg.u_kind == 'rademacher':
        signs = rng.integers(0, 2, size=(cfg.mu, cfg.m)) * 2.0 - 1.0
        U = signs / np.sqrt(cfg.mu)
    else:
        U = _gaussian(rng, (cfg.mu, cfg.m), 1.0 / cfg.mu)

    A = None
    if cfg.a_kind == 'gaussian':
        A = _gaussian(rng, (cfg.m, cfg.n), 1.0 / cfg.m)

    logger.debug('Drew dictionary {}'.format(cfg))
    return Dictionary(U, A)


def _sparse_vector(rng: np.random.Generator, length: int,
                   nnz: int) -> np.ndarray:
    support = np.sort(rng.choice(length, size=nnz, replace=False))
    x = np.zeros(length)
    x[support] = rng.standard_normal(nnz)
    return x


def gen_ground_truth(mu: int, n: int, s: int, sigma: int,
                     seed: int) -> GroundTruth:
    """
    Draw an s-sparse filter h and a sigma-sparse message b with supports
    uniform without replacement and standard normal non-zeros.

    :raises: :class:`~hier_deconv.errors.ConfigurationError` when a sparsity
             exceeds its dimension
    """
    mu, n = positive_int('mu', mu), positive_int('n', n)
    s, sigma = positive_int('s', s), positive_int('sigma', sigma)
    if s > mu or sigma > n:
        raise ConfigurationError(
            'Sparsity (%d, %d) exceeds dimensions (%d, %d)' % (s, sigma, mu,
                                                               n))
    rng = make_rng(seed)
    h = _sparse_vector(rng, mu, s)
    b = _sparse_vector(rng, n, sigma)
    return GroundTruth(h, b)


def gen_demixing_truth(num_users: int, active: int, mu: int, n: int, s: int,
                       sigma: int, seed: int) -> DemixingTruth:
    """
    Draw ``active`` users uniformly out of ``num_users`` and a planted
    filter/message pair for each of them. User p's pair uses the stream
    ``derive_seed(seed, p)``.
    """
    num_users = positive_int('num_users', num_users)
    active = positive_int('active', active)
    if active > num_users:
        raise ConfigurationError('%d active users exceed %d users' % (
            active, num_users))

    users = np.sort(make_rng(seed).choice(num_users, size=active,
                                          replace=False))
    truths = {int(p): gen_ground_truth(mu, n, s, sigma, derive_seed(seed, p))
              for p in users}
    return DemixingTruth(num_users, truths)


def gen_mixing(M: int, N: int, seed: int) -> np.ndarray:
    """
    Draw an ``(M, N)`` Gaussian mixing matrix with entry variance 1/M.
    """
    M, N = positive_int('M', M), positive_int('N', N)
    return _gaussian(make_rng(seed), (M, N), 1.0 / M)
