"""
Empirical and exact (hierarchical) restricted isometry constants, and spot
checks of the inequalities relating them.

The constant of an operator for a pattern is the supremum of
``| ||op w||^2 - 1 |`` over unit-norm pattern-sparse w. Exact values come
from the extreme eigenvalues of the restricted Gram matrices of all maximal
supports, which is only feasible on tiny instances.
"""

import logging
from collections import namedtuple

import numpy as np

from hier_deconv.ensembles import make_rng
from hier_deconv.errors import ConfigurationError
from hier_deconv.errors import GuardExceededError
from hier_deconv.hier_core import count_supports
from hier_deconv.hier_core import iter_supports
from hier_deconv.lifted_ops import COperator
from hier_deconv.lifted_ops import DemixingOperator
from hier_deconv.lifted_ops import DenseOperator
from hier_deconv.lifted_ops import HOperator
from hier_deconv.lifted_ops import LiftedOperator
from hier_deconv.lifted_ops import build_matrix_Aw
from hier_deconv.models import Dictionary
from hier_deconv.models import HierSignal
from hier_deconv.models import RipEstimate
from hier_deconv.models import SparsityPattern


__all__ = [
    'estimate_hirip_mc',
    'exact_hirip_small',
    'check_factorization',
    'check_expectation_identity',
    'check_demixing_bound',
    'FactorizationReport',
    'ExpectationReport',
    'DemixingBoundReport',
]

logger = logging.getLogger(__name__)

FLOP_LIMIT = 10 ** 8

# Slack for rounding when comparing exactly computed constants
_ROUNDING = 1e-10

FactorizationReport = namedtuple('FactorizationReport', ['delta_h',
                                                         'delta_hat',
                                                         'delta_a',
                                                         'bound',
                                                         'holds'])

ExpectationReport = namedtuple('ExpectationReport', ['mean',
                                                     'stderr',
                                                     'expected',
                                                     'trials',
                                                     'holds'])

DemixingBoundReport = namedtuple('DemixingBoundReport', ['delta_m',
                                                         'delta_d',
                                                         'delta_c',
                                                         'bound',
                                                         'holds'])


def _random_support(rng: np.random.Generator, shape, budgets):
    if len(shape) == 1:
        return [(int(i),) for i in np.sort(rng.choice(shape[0], budgets[0],
                                                      replace=False))]
    entries = []
    for outer in np.sort(rng.choice(shape[0], budgets[0], replace=False)):
        entries.extend((int(outer),) + e
                       for e in _random_support(rng, shape[1:], budgets[1:]))
    return entries


def estimate_hirip_mc(op: LiftedOperator,
                      p: SparsityPattern,
                      trials: int,
                      seed: int = 0) -> RipEstimate:
    """
    Monte Carlo lower estimate of the restricted isometry constant of
    ``op`` for pattern ``p``: the largest ``| ||op w||^2 - 1 |`` over
    ``trials`` random unit-norm pattern-sparse w (uniform supports, Gaussian
    entries). Trial i draws the same w whatever the total number of trials.
    """
    if trials < 1:
        raise ConfigurationError('trials must be >= 1')
    p.check(op.domain_shape)

    rng = make_rng(seed)
    size = op.domain_size
    delta = 0.0

    for _ in range(trials):
        support = _random_support(rng, op.domain_shape, p.budgets)
        flat = np.ravel_multi_index(tuple(np.array(support).T),
                                    op.domain_shape)
        data = np.zeros(size)
        data[flat] = rng.standard_normal(flat.size)
        data /= np.linalg.norm(data)
        w = HierSignal.from_flat(data, op.domain_shape)
        energy = float(np.sum(op.apply(w) ** 2))
        delta = max(delta, abs(energy - 1.0))

    return RipEstimate(pattern=p, trials=trials, delta_lower=delta, seed=seed)


def _guard(shape, p: SparsityPattern, limit: int) -> int:
    supports = count_supports(shape, p)
    k = p.support_size()
    if supports * k ** 3 > limit:
        raise GuardExceededError(
            '{} supports of size {} exceed the flop limit {}'.format(
                supports, k, limit))
    return supports


def _gram_deviation(columns: np.ndarray) -> float:
    eig = np.linalg.eigvalsh(columns.T @ columns)
    return max(eig[-1] - 1.0, 1.0 - eig[0])


def exact_hirip_small(op: LiftedOperator,
                      p: SparsityPattern,
                      limit: int = FLOP_LIMIT) -> float:
    """
    Exact restricted isometry constant of ``op`` for pattern ``p``: the
    largest ``max(lambda_max - 1, 1 - lambda_min)`` of the restricted Gram
    matrix over all maximal supports.

    :raises: :class:`~hier_deconv.errors.GuardExceededError`
    """
    supports = _guard(op.domain_shape, p, limit)
    matrix = op.matrix()
    logger.debug('Scanning {} supports'.format(supports))

    delta = 0.0
    for support in iter_supports(op.domain_shape, p, limit=supports):
        delta = max(delta, _gram_deviation(matrix[:, support.flat_indices]))
    return delta


def _lifted_range_deviation(h_matrix: np.ndarray, A: np.ndarray, mu: int,
                            p: SparsityPattern, limit: int) -> float:
    """
    Largest relative deviation ``| ||H v||^2 - ||v||^2 | / ||v||^2`` over
    all v whose blocks are ``A w_k`` for a pattern-sparse w.
    """
    m, n = A.shape
    _guard((mu, n), p, limit)
    delta = 0.0

    for support in iter_supports((mu, n), p, limit=count_supports((mu, n),
                                                                  p)):
        basis = np.zeros((mu * m, len(support)))
        for col, (k, i) in enumerate(support):
            basis[k * m:(k + 1) * m, col] = A[:, i]

        left, values, _ = np.linalg.svd(basis, full_matrices=False)
        rank = int(np.sum(values > values[0] * 1e-12)) if values.size else 0
        if rank == 0:
            continue
        delta = max(delta, _gram_deviation(h_matrix @ left[:, :rank]))
    return delta


def check_factorization(U, A, p: SparsityPattern,
                        limit: int = FLOP_LIMIT) -> FactorizationReport:
    """
    Exact check of ``delta(H) <= Delta(H^) + delta_sigma(A) +
    Delta(H^) * delta_sigma(A)`` for Q = U A, where H^ is the shift-sum
    operator of U alone and Delta(H^) its deviation over blocks in the range
    of A.

    :param U: ``(mu, m)`` embedding matrix
    :param A: ``(m, n)`` compression matrix, or None for the identity
    :param p: (s, sigma) pattern
    """
    dictionary = Dictionary(U, A)
    mu, n = dictionary.mu, dictionary.n
    A = np.eye(n) if A is None else dictionary.A

    delta_h = exact_hirip_small(HOperator(dictionary), p, limit=limit)
    h_hat = HOperator(Dictionary(dictionary.U)).matrix()
    delta_hat = _lifted_range_deviation(h_hat, A, mu, p, limit)
    delta_a = exact_hirip_small(DenseOperator(A), SparsityPattern(1, p.sigma),
                                limit=limit)

    bound = delta_hat + delta_a + delta_hat * delta_a
    holds = delta_h <= bound + _ROUNDING
    if not holds:
        logger.warning('Factorization bound violated: {} > {}'.format(
            delta_h, bound))
    return FactorizationReport(delta_h, delta_hat, delta_a, bound, holds)


def check_expectation_identity(w: HierSignal,
                               trials: int,
                               seed: int = 0,
                               kind: str = 'gaussian') -> ExpectationReport:
    """
    Monte Carlo check of ``E ||A(w) gamma||^2 = ||A(w)||_F^2 = ||w||^2`` for
    gamma with independent centered unit-variance entries ('gaussian' or
    'rademacher'). Passes when the sample mean is within four standard
    errors of ``||w||^2``.
    """
    if trials < 2:
        raise ConfigurationError('trials must be >= 2')
    if kind not in ('gaussian', 'rademacher'):
        raise ConfigurationError('Unknown distribution %r' % kind)

    Aw = build_matrix_Aw(w)
    rng = make_rng(seed)
    size = (trials, Aw.shape[1])
    if kind == 'gaussian':
        gamma = rng.standard_normal(size)
    else:
        gamma = rng.integers(0, 2, size=size) * 2.0 - 1.0

    samples = np.sum((gamma @ Aw.T) ** 2, axis=1)
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(trials))
    expected = w.norm() ** 2
    holds = abs(mean - expected) <= max(4 * stderr, _ROUNDING)
    return ExpectationReport(mean, stderr, expected, trials, holds)


def check_demixing_bound(D, dictionary: Dictionary, p: SparsityPattern,
                         limit: int = FLOP_LIMIT) -> DemixingBoundReport:
    """
    Exact check of ``delta(M) <= delta_S(D) + delta(C) + delta_S(D) *
    delta(C)`` for the demixing operator of mixing matrix D and a dictionary
    shared by all users.

    :param D: ``(M, N)`` mixing matrix
    :param dictionary: Dictionary of the lifted convolution C
    :param p: (S, s, sigma) pattern
    """
    if p.levels != 3:
        raise ConfigurationError('The demixing bound needs an (S, s, sigma) '
                                 'pattern')
    D = np.asarray(D, dtype=np.float64)
    delta_m = exact_hirip_small(DemixingOperator(D, dictionary), p,
                                limit=limit)
    delta_d = exact_hirip_small(DenseOperator(D), SparsityPattern(1, p.S),
                                limit=limit)
    delta_c = exact_hirip_small(COperator(dictionary),
                                SparsityPattern(p.s, p.sigma), limit=limit)

    bound = delta_d + delta_c + delta_d * delta_c
    holds = delta_m <= bound + _ROUNDING
    if not holds:
        logger.warning('Demixing bound violated: {} > {}'.format(delta_m,
                                                                 bound))
    return DemixingBoundReport(delta_m, delta_d, delta_c, bound, holds)
