"""
Classes for representing hierarchically sparse signals, measurement
ensembles, solver settings and experiment results
"""

import math
from collections import namedtuple
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from hier_deconv.errors import ConfigurationError
from hier_deconv.errors import ShapeMismatchError
from hier_deconv.errors import SupportError


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return (a is None) == (b is None) and np.array_equal(a, b)
    return a == b


def positive_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigurationError('%s must be an integer, got %r' % (name,
                                                                   value))
    if value < 1:
        raise ConfigurationError('%s must be positive, got %d' % (name,
                                                                   value))
    return int(value)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class BaseModel(object):
    """
    Value objects compare equal when all attributes named in ``_compared``
    are equal (arrays are compared element-wise).
    """
    _compared = ()

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented

        return all([_same(getattr(self, a), getattr(other, a))
                    for a in self._compared])

    def __ne__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented

        return not self == other

    __hash__ = None


class HierSignal(BaseModel):
    """
    A lifted tensor w = sum_k e_k (x) w_k stored as ``num_blocks`` blocks of
    length ``block_len``. A three-level signal additionally carries an outer
    user axis: its values have shape ``(num_users, num_blocks, block_len)``.

    Values are real double precision and read-only after construction.
    """
    _compared = ('values',)

    def __init__(self, values):
        """
        Create a hierarchical signal from a 2-d ``(mu, n)`` or 3-d
        ``(N, mu, n)`` array.

        :param values: Block values, block-major
        :raises: :class:`~hier_deconv.errors.ShapeMismatchError`
        """
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            raise ConfigurationError('Only real-valued signals are supported')
        if arr.ndim not in (2, 3) or 0 in arr.shape:
            raise ShapeMismatchError(
                'Expected a (mu, n) or (N, mu, n) array, got shape {}'.format(
                    arr.shape))
        self.values = _frozen(arr)

    @classmethod
    def zeros(cls, shape: Tuple[int, ...]) -> 'HierSignal':
        return cls(np.zeros(shape))

    @classmethod
    def from_flat(cls, data, shape: Tuple[int, ...]) -> 'HierSignal':
        """
        Rebuild a signal from its flat block-major data.

        :param data: Flat array of ``prod(shape)`` scalars
        :param shape: ``(mu, n)`` or ``(N, mu, n)``
        """
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 1 or data.size != int(np.prod(shape)):
            raise ShapeMismatchError(
                'Cannot view {} values as shape {}'.format(data.size, shape))
        return cls(data.reshape(shape))

    @classmethod
    def outer(cls, h, b) -> 'HierSignal':
        """
        The rank-one tensor h (x) b, whose block k is ``h[k] * b``.
        """
        return cls(np.outer(np.asarray(h, dtype=np.float64),
                            np.asarray(b, dtype=np.float64)))

    @classmethod
    def stack(cls, signals: Sequence['HierSignal']) -> 'HierSignal':
        """
        Stack two-level signals of equal shape into a three-level signal.
        """
        shapes = {s.shape for s in signals}
        if len(shapes) != 1 or any(s.levels != 2 for s in signals):
            raise ShapeMismatchError('Can only stack two-level signals of '
                                     'equal shape, got {}'.format(shapes))
        return cls(np.stack([s.values for s in signals]))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def levels(self) -> int:
        return self.values.ndim

    @property
    def num_users(self) -> Optional[int]:
        return self.shape[0] if self.levels == 3 else None

    @property
    def num_blocks(self) -> int:
        return self.shape[-2]

    @property
    def block_len(self) -> int:
        return self.shape[-1]

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def data(self) -> np.ndarray:
        """
        The flat, block-major (row-major) view of the values
        """
        return self.values.reshape(-1)

    def block(self, k: int) -> np.ndarray:
        """
        Block ``k`` (taken modulo ``num_blocks``) of a two-level signal, or
        user ``k`` of a three-level signal.
        """
        if self.levels == 2:
            return self.values[k % self.num_blocks]
        return self.values[k]

    def user(self, p: int) -> 'HierSignal':
        if self.levels != 3:
            raise ShapeMismatchError('Only three-level signals have users')
        return HierSignal(self.values[p])

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def dot(self, other: 'HierSignal') -> float:
        if self.shape != other.shape:
            raise ShapeMismatchError('{} vs {}'.format(self.shape,
                                                       other.shape))
        return float(np.dot(self.data, other.data))

    def permute_blocks(self, perm: Sequence[int]) -> 'HierSignal':
        """
        Return the signal whose block ``k`` is block ``perm[k]`` of this one.
        """
        return HierSignal(np.take(self.values, perm, axis=-2))

    def __add__(self, other: 'HierSignal') -> 'HierSignal':
        if self.shape != other.shape:
            raise ShapeMismatchError('{} vs {}'.format(self.shape,
                                                       other.shape))
        return HierSignal(self.values + other.values)

    def __sub__(self, other: 'HierSignal') -> 'HierSignal':
        if self.shape != other.shape:
            raise ShapeMismatchError('{} vs {}'.format(self.shape,
                                                       other.shape))
        return HierSignal(self.values - other.values)

    def __mul__(self, scalar: float) -> 'HierSignal':
        return HierSignal(self.values * scalar)

    __rmul__ = __mul__

    def __repr__(self):  # pragma: no cover
        return 'HierSignal(shape=%s, norm=%.6g)' % (self.shape, self.norm())


class SparsityPattern(BaseModel):
    """
    The sparsity budget of a hierarchically sparse signal: at most ``s``
    active blocks with at most ``sigma`` entries each, and, for three-level
    signals, at most ``S`` active users.
    """
    _compared = ('s', 'sigma', 'S')

    def __init__(self, s: int, sigma: int, S: int = None):
        """
        :param s: Active-block budget
        :param sigma: Within-block budget
        :param S: Active-user budget (three-level patterns only)
        """
        self.s = positive_int('s', s)
        self.sigma = positive_int('sigma', sigma)
        self.S = None if S is None else positive_int('S', S)

    @property
    def levels(self) -> int:
        return 2 if self.S is None else 3

    @property
    def budgets(self) -> Tuple[int, ...]:
        if self.S is None:
            return self.s, self.sigma
        return self.S, self.s, self.sigma

    def check(self, shape: Tuple[int, ...]):
        """
        Raise unless this pattern is compatible with a signal of ``shape``.

        :raises: :class:`~hier_deconv.errors.ShapeMismatchError`
        """
        if len(shape) != self.levels:
            raise ShapeMismatchError(
                '{}-level pattern used with shape {}'.format(self.levels,
                                                             shape))
        for name, budget, dim in zip(('S', 's', 'sigma')[-self.levels:],
                                     self.budgets, shape):
            if budget > dim:
                raise ShapeMismatchError(
                    '{}={} exceeds dimension {}'.format(name, budget, dim))

    def support_size(self) -> int:
        return int(np.prod(self.budgets))

    def __repr__(self):  # pragma: no cover
        if self.S is None:
            return '(%d,%d)' % (self.s, self.sigma)
        return '(%d,%d,%d)' % (self.S, self.s, self.sigma)


class HierSupport(BaseModel):
    """
    A structured support: a sorted collection of coordinates of a signal of
    the given shape. Coordinates are ``(block, index)`` pairs for two-level
    signals and ``(user, block, index)`` triples for three-level signals, so
    sorting groups them by block.
    """
    _compared = ('shape', 'entries')

    def __init__(self, entries: Iterable[Tuple[int, ...]],
                 shape: Tuple[int, ...]):
        """
        :param entries: Coordinates of the support
        :param shape: Shape of the signals this support indexes
        :raises: :class:`~hier_deconv.errors.SupportError`
        """
        self.shape = tuple(int(d) for d in shape)
        entries = [tuple(int(i) for i in e) for e in entries]

        for e in entries:
            if len(e) != len(self.shape) or not all(
                    0 <= i < d for i, d in zip(e, self.shape)):
                raise SupportError(
                    'Entry {} out of range for shape {}'.format(e, self.shape))

        unique = sorted(set(entries))
        if len(unique) != len(entries):
            raise SupportError('Duplicate support entries')
        self.entries = tuple(unique)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> 'HierSupport':
        return cls([tuple(e) for e in np.argwhere(mask)], mask.shape)

    @classmethod
    def full(cls, shape: Tuple[int, ...]) -> 'HierSupport':
        return cls.from_mask(np.ones(shape, dtype=bool))

    @property
    def flat_indices(self) -> np.ndarray:
        """
        Positions of the entries in the flat block-major data array
        """
        if not self.entries:
            return np.zeros(0, dtype=np.intp)
        return np.ravel_multi_index(tuple(np.array(self.entries).T),
                                    self.shape)

    def blocks(self) -> List[Tuple[int, ...]]:
        """
        The distinct active blocks (``(block,)`` or ``(user, block)``)
        """
        return sorted({e[:-1] for e in self.entries})

    def users(self) -> List[int]:
        if len(self.shape) != 3:
            return []
        return sorted({e[0] for e in self.entries})

    def satisfies(self, pattern: SparsityPattern) -> bool:
        """
        True when the support fits within the budgets of ``pattern``
        """
        if pattern.levels != len(self.shape):
            return False

        for depth, budget in enumerate(pattern.budgets):
            counts = {}
            for e in self.entries:
                key = e[:depth]
                counts.setdefault(key, set()).add(e[depth])
            if any(len(v) > budget for v in counts.values()):
                return False
        return True

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self):  # pragma: no cover
        return 'HierSupport(%s)' % (list(self.entries),)


class Dictionary(BaseModel):
    """
    The factored measurement map Q = U A with U of shape ``(mu, m)`` and A of
    shape ``(m, n)``. ``A=None`` marks the identity (``m == n``).
    """
    _compared = ('U', 'A')

    def __init__(self, U, A=None):
        """
        :param U: Embedding matrix, shape ``(mu, m)``
        :param A: Compression matrix, shape ``(m, n)``, or None for identity
        """
        U = np.asarray(U, dtype=np.float64)
        if U.ndim != 2:
            raise ShapeMismatchError('U must be a matrix')
        if A is not None:
            A = np.asarray(A, dtype=np.float64)
            if A.ndim != 2 or A.shape[0] != U.shape[1]:
                raise ShapeMismatchError(
                    'Cannot compose U {} with A {}'.format(U.shape,
                                                          np.shape(A)))
            A = _frozen(A)
        self.U = _frozen(U)
        self.A = A

    @property
    def mu(self) -> int:
        return self.U.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[1]

    @property
    def n(self) -> int:
        return self.m if self.A is None else self.A.shape[1]

    @property
    def is_identity_a(self) -> bool:
        return self.A is None

    @property
    def matrix(self) -> np.ndarray:
        """
        The dense ``(mu, n)`` product Q = U A
        """
        return self.U if self.A is None else self.U @ self.A

    def apply(self, x: np.ndarray) -> np.ndarray:
        """
        Apply Q to a vector of length n, or to each column of an
        ``(n, k)`` array.
        """
        if self.A is None:
            return self.U @ x
        return self.U @ (self.A @ x)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """
        Apply Q^T to a vector of length mu, or to each column of a
        ``(mu, k)`` array.
        """
        z = self.U.T @ y
        return z if self.A is None else self.A.T @ z

    def __repr__(self):  # pragma: no cover
        return 'Dictionary(mu=%d, m=%d, n=%d, identity_a=%s)' % (
            self.mu, self.m, self.n, self.is_identity_a)


class EnsembleConfig(BaseModel):
    """
    How to draw a random dictionary Q = U A
    """
    U_KINDS = ['gaussian', 'rademacher']
    A_KINDS = ['identity', 'gaussian']

    _compared = ('mu', 'm', 'n', 'u_kind', 'a_kind', 'seed')

    def __init__(self,
                 mu: int,
                 n: int,
                 m: int = None,
                 u_kind: str = 'gaussian',
                 a_kind: str = 'identity',
                 seed: int = 0,
                 **kwargs):
        """
        :param mu: Signal (and measurement) length
        :param n: Message length
        :param m: Inner dimension; defaults to ``n`` and must equal it when
                  ``a_kind`` is 'identity'
        :param u_kind: Distribution of U, 'gaussian' or 'rademacher'
        :param a_kind: 'identity' or 'gaussian'
        :param seed: 64-bit unsigned seed
        """
        self.mu = positive_int('mu', mu)
        self.n = positive_int('n', n)
        self.m = self.n if m is None else positive_int('m', m)

        if u_kind not in self.U_KINDS:
            raise ConfigurationError('Unknown u_kind %r' % u_kind)
        if a_kind not in self.A_KINDS:
            raise ConfigurationError('Unknown a_kind %r' % a_kind)
        if a_kind == 'identity' and self.m != self.n:
            raise ConfigurationError(
                'Identity A requires m == n (got m=%d, n=%d)' % (self.m,
                                                                 self.n))
        if not 0 <= int(seed) < 2 ** 64:
            raise ConfigurationError('seed must be a 64-bit unsigned integer')

        self.u_kind = u_kind
        self.a_kind = a_kind
        self.seed = int(seed)

    def __repr__(self):  # pragma: no cover
        return 'EnsembleConfig(mu=%d, m=%d, n=%d, %s/%s, seed=%d)' % (
            self.mu, self.m, self.n, self.u_kind, self.a_kind, self.seed)


class GroundTruth(BaseModel):
    """
    A planted filter/message pair (h, b) with an s-sparse filter and a
    sigma-sparse message.
    """
    _compared = ('h', 'b')

    def __init__(self, h, b):
        """
        :param h: Filter of length mu
        :param b: Message of length n
        """
        self.h = _frozen(h)
        self.b = _frozen(b)

    @property
    def h_support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.h))

    @property
    def b_support(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.b))

    @property
    def lifted(self) -> HierSignal:
        return HierSignal.outer(self.h, self.b)


class DemixingTruth(BaseModel):
    """
    A planted three-level ground truth: ``num_users`` filter/message slots of
    which only the ``active`` ones are non-zero.
    """
    _compared = ('num_users', 'truths')

    def __init__(self, num_users: int, truths: dict):
        """
        :param num_users: Number of users N
        :param truths: Mapping of active user index to its
                       :class:`GroundTruth`
        """
        self.num_users = positive_int('num_users', num_users)
        if not truths:
            raise ConfigurationError('At least one user must be active')
        if any(not 0 <= p < self.num_users for p in truths):
            raise ConfigurationError('Active user index out of range')
        self.truths = dict(sorted(truths.items()))

    @property
    def active(self) -> Tuple[int, ...]:
        return tuple(self.truths)

    @property
    def lifted(self) -> HierSignal:
        first = next(iter(self.truths.values()))
        values = np.zeros((self.num_users, first.h.size, first.b.size))
        for p, truth in self.truths.items():
            values[p] = np.outer(truth.h, truth.b)
        return HierSignal(values)


class SolverConfig(BaseModel):
    """
    Stopping rules of the HiHTP solver and its inner conjugate gradient.
    """
    _compared = ('max_outer_iters', 'outer_tol', 'cg_tol', 'cg_max_iters',
                 'final_ls_tol', 'final_ls_max_iters')

    def __init__(self,
                 max_outer_iters: int = 25,
                 outer_tol: float = 1e-6,
                 cg_tol: float = 1e-4,
                 cg_max_iters: int = 100,
                 final_ls_tol: float = 10 ** -6.5,
                 final_ls_max_iters: int = 200,
                 **kwargs):
        """
        :param max_outer_iters: Cap on HiHTP iterations
        :param outer_tol: Halt once consecutive iterates differ by less than
                          this (Frobenius norm)
        :param cg_tol: Relative residual at which each restricted least
                       squares solve stops
        :param cg_max_iters: Cap on conjugate gradient iterations
        :param final_ls_tol: Relative residual of the final least squares
                             re-solve
        :param final_ls_max_iters: Cap on iterations of the final re-solve
        """
        self.max_outer_iters = positive_int('max_outer_iters',
                                             max_outer_iters)
        self.cg_max_iters = positive_int('cg_max_iters', cg_max_iters)
        self.final_ls_max_iters = positive_int('final_ls_max_iters',
                                                final_ls_max_iters)

        for name, value in (('outer_tol', outer_tol), ('cg_tol', cg_tol),
                            ('final_ls_tol', final_ls_tol)):
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError('%s must be > 0, got %r' % (name,
                                                                     value))
        self.outer_tol = float(outer_tol)
        self.cg_tol = float(cg_tol)
        self.final_ls_tol = float(final_ls_tol)


class SolveResult(BaseModel):
    """
    Output of a HiHTP solve
    """
    _compared = ('estimate', 'support', 'outer_iters', 'converged',
                 'residuals')

    def __init__(self,
                 estimate: HierSignal,
                 support: HierSupport,
                 outer_iters: int,
                 converged: bool,
                 residuals: List[float]):
        """
        :param estimate: The pattern-sparse estimate
        :param support: Support of the final least squares solve
        :param outer_iters: Number of HiHTP iterations run
        :param converged: True when the iterate difference dropped below the
                          outer tolerance before the iteration cap
        :param residuals: Measurement residual norm after every iteration,
                          followed by the residual of the final re-solve
        """
        self.estimate = estimate
        self.support = support
        self.outer_iters = outer_iters
        self.converged = converged
        self.residuals = list(residuals)

    def relative_error(self, truth: HierSignal) -> float:
        """
        Relative Frobenius error of the estimate against ``truth``
        """
        ref = truth.norm()
        diff = (self.estimate - truth).norm()
        return diff / ref if ref > 0 else diff


class RipEstimate(BaseModel):
    """
    An empirical lower estimate of a (hierarchical) restricted isometry
    constant, optionally alongside its exact value.
    """
    _compared = ('pattern', 'trials', 'delta_lower', 'exact', 'seed')

    def __init__(self,
                 pattern: SparsityPattern,
                 trials: int,
                 delta_lower: float,
                 exact: float = None,
                 seed: int = 0):
        if delta_lower < 0:
            raise ConfigurationError('delta_lower must be non-negative')
        self.pattern = pattern
        self.trials = trials
        self.delta_lower = float(delta_lower)
        self.exact = None if exact is None else float(exact)
        self.seed = seed


def _mu_range(stop: int) -> List[int]:
    return list(range(10, stop + 1, 10))


class ExperimentGrid(BaseModel):
    """
    The parameter grid of a phase transition experiment
    """
    #: The two full-size experiment sets and a desk-scale slice
    PRESETS = {
        'first': dict(n_values=[50, 170, 350], sigma_values=[5, 10, 15],
                      s_values=list(range(1, 8)), mu_values=_mu_range(250),
                      trials_per_point=100),
        'extended': dict(n_values=[50], sigma_values=list(range(3, 8)),
                         s_values=list(range(3, 8)),
                         mu_values=_mu_range(250), trials_per_point=500),
        'desk': dict(n_values=[50], sigma_values=[5], s_values=[1, 2, 3, 4],
                     mu_values=_mu_range(150), trials_per_point=30),
    }

    _compared = ('n_values', 'sigma_values', 's_values', 'mu_values',
                 'trials_per_point', 'base_seed', 'u_kind', 'a_kind',
                 'solver')

    def __init__(self,
                 n_values: Sequence[int],
                 sigma_values: Sequence[int],
                 s_values: Sequence[int],
                 mu_values: Sequence[int],
                 trials_per_point: int = 100,
                 base_seed: int = 0,
                 u_kind: str = 'gaussian',
                 a_kind: str = 'identity',
                 solver: SolverConfig = None,
                 **kwargs):
        """
        :param n_values: Message lengths
        :param sigma_values: Message sparsities
        :param s_values: Filter sparsities
        :param mu_values: Filter lengths (number of measurements)
        :param trials_per_point: Instances drawn per grid point
        :param base_seed: Seed every trial seed is derived from
        :param u_kind: Distribution of U
        :param a_kind: 'identity' or 'gaussian'
        :param solver: Solver settings (defaults when None)
        :raises: :class:`~hier_deconv.errors.ConfigurationError`
        """
        for name, values in (('n_values', n_values),
                             ('sigma_values', sigma_values),
                             ('s_values', s_values),
                             ('mu_values', mu_values)):
            if not values:
                raise ConfigurationError('%s must not be empty' % name)
            for v in values:
                positive_int(name, v)

        if max(sigma_values) > min(n_values):
            raise ConfigurationError('sigma exceeds the message length')
        if max(s_values) > min(mu_values):
            raise ConfigurationError('s exceeds the filter length')
        if u_kind not in EnsembleConfig.U_KINDS:
            raise ConfigurationError('Unknown u_kind %r' % u_kind)
        if a_kind not in EnsembleConfig.A_KINDS:
            raise ConfigurationError('Unknown a_kind %r' % a_kind)

        self.n_values = [int(v) for v in n_values]
        self.sigma_values = [int(v) for v in sigma_values]
        self.s_values = [int(v) for v in s_values]
        self.mu_values = [int(v) for v in mu_values]
        self.trials_per_point = positive_int('trials_per_point',
                                              trials_per_point)
        self.base_seed = int(base_seed)
        self.u_kind = u_kind
        self.a_kind = a_kind
        self.solver = solver if solver is not None else SolverConfig()

    @classmethod
    def from_preset(cls, name: str, **overrides) -> 'ExperimentGrid':
        """
        Build one of the :attr:`PRESETS` grids; keyword arguments replace
        preset values.
        """
        if name not in cls.PRESETS:
            raise ConfigurationError('Unknown preset %r' % name)
        params = dict(cls.PRESETS[name])
        params.update(overrides)
        return cls(**params)

    def points(self) -> List[Tuple[int, int, int, int]]:
        """
        All ``(n, mu, s, sigma)`` quadruples in canonical order
        """
        return [(n, mu, s, sigma)
                for n in self.n_values
                for sigma in self.sigma_values
                for s in self.s_values
                for mu in self.mu_values]

    def __repr__(self):  # pragma: no cover
        return 'ExperimentGrid(%d points x %d trials)' % (
            len(self.points()), self.trials_per_point)


class PhaseRow(BaseModel):
    """
    Aggregated outcome of one grid point
    """
    _compared = ('n', 'mu', 's', 'sigma', 'trials', 'successes', 'mean_iters',
                 'mean_ms')

    def __init__(self,
                 n: int,
                 mu: int,
                 s: int,
                 sigma: int,
                 trials: int,
                 successes: int,
                 mean_iters: float = 0.0,
                 mean_ms: float = None,
                 **kwargs):
        """
        :param n: Message length
        :param mu: Filter length
        :param s: Filter sparsity
        :param sigma: Message sparsity
        :param trials: Number of trials
        :param successes: Number of successful recoveries
        :param mean_iters: Mean number of HiHTP iterations
        :param mean_ms: Mean wall time per trial in milliseconds, or None
                        when timings were not recorded
        """
        if not 0 <= successes <= trials:
            raise ConfigurationError('successes must lie in [0, trials]')
        self.n = n
        self.mu = mu
        self.s = s
        self.sigma = sigma
        self.trials = positive_int('trials', trials)
        self.successes = successes
        self.mean_iters = mean_iters
        self.mean_ms = mean_ms

    @property
    def prob(self) -> float:
        return self.successes / self.trials

    @property
    def point(self) -> Tuple[int, int, int, int]:
        return self.n, self.mu, self.s, self.sigma

    def __repr__(self):  # pragma: no cover
        return 'PhaseRow(n=%d, mu=%d, s=%d, sigma=%d, %d/%d)' % (
            self.n, self.mu, self.s, self.sigma, self.successes, self.trials)


class PhaseTable(BaseModel):
    """
    Gridded success probabilities, one :class:`PhaseRow` per grid point
    """
    _compared = ('rows',)

    def __init__(self, rows: Iterable[PhaseRow]):
        self.rows = list(rows)

    def select(self, **criteria) -> 'PhaseTable':
        """
        Rows whose attributes equal all given criteria, e.g.
        ``table.select(s=2, sigma=5)``
        """
        return PhaseTable(r for r in self.rows
                          if all(getattr(r, k) == v
                                 for k, v in criteria.items()))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


class LogisticFit(BaseModel):
    """
    The logistic model P(success) = 1 / (1 + exp(-(intercept + slope *
    lambda_a))) fitted against the scaling statistic lambda_a.
    """
    _compared = ('a', 'c_a', 'intercept', 'slope', 'loss', 'separated')

    def __init__(self,
                 a: float,
                 c_a: float,
                 intercept: float,
                 slope: float,
                 loss: float,
                 separated: bool = False,
                 intercept_se: float = None,
                 slope_se: float = None,
                 **kwargs):
        """
        :param a: Exponent of s in lambda_a
        :param c_a: Weight of the s log(mu) term in lambda_a
        :param intercept: Fitted intercept
        :param slope: Fitted slope
        :param loss: Mean negative log-likelihood per trial
        :param separated: True when the outcomes were separable and the
                          parameters were capped
        :param intercept_se: Standard error of the intercept
        :param slope_se: Standard error of the slope
        """
        self.a = a
        self.c_a = c_a
        self.intercept = intercept
        self.slope = slope
        self.loss = loss
        self.separated = separated
        self.intercept_se = intercept_se
        self.slope_se = slope_se

    def predict(self, lam) -> np.ndarray:
        z = self.intercept + self.slope * np.asarray(lam, dtype=np.float64)
        return 1.0 / (1.0 + np.exp(-z))

    def __repr__(self):  # pragma: no cover
        return 'LogisticFit(a=%g, c_a=%g, loss=%.4f)' % (self.a, self.c_a,
                                                          self.loss)


RunConfig = namedtuple('RunConfig', ['command', 'params'])
"""
A validated CLI configuration: the subcommand name and its parameters
"""
