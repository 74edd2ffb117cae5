"""
Circular convolution and the lifted measurement operators.

A filter h of length mu convolved with an encoded message x = Q b is linear
in the tensor h (x) b:

* ``H(w) = sum_k S_k Q w_k`` (shifts of the encoded blocks),
* ``C = H o R`` with R reflecting the block index, so that
  ``C(h (x) b) = h * (Q b)``,
* ``M(X) = sum_p d^p (x) C(X_p)`` mixes N users over M slots.

Indices are taken modulo mu throughout.
"""

import logging
from typing import Tuple

import numpy as np

from hier_deconv.errors import GuardExceededError
from hier_deconv.errors import ShapeMismatchError
from hier_deconv.hier_core import embed
from hier_deconv.models import Dictionary
from hier_deconv.models import HierSignal
from hier_deconv.models import HierSupport


__all__ = [
    'circ_conv',
    'shift',
    'reflect',
    'apply_H',
    'adjoint_H',
    'apply_C',
    'adjoint_C',
    'apply_M',
    'adjoint_M',
    'build_matrix_Aw',
    'operator_norm',
    'LiftedOperator',
    'HOperator',
    'COperator',
    'DemixingOperator',
    'DenseOperator',
]

logger = logging.getLogger(__name__)

DENSE_LIMIT = 10 ** 7


def _vector(x, name: str = 'x') -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatchError('%s must be a vector' % name)
    return x


def circ_conv(h, x) -> np.ndarray:
    """
    Cyclic convolution ``[h * x]_l = sum_k h_{l-k} x_k``

    :raises: :class:`~hier_deconv.errors.ShapeMismatchError` on length
             mismatch
    """
    h, x = _vector(h, 'h'), _vector(x)
    if h.size != x.size:
        raise ShapeMismatchError('Lengths differ: {} vs {}'.format(h.size,
                                                                   x.size))
    idx = np.arange(h.size)
    return h[(idx[:, None] - idx[None, :]) % h.size] @ x


def shift(x, ell: int) -> np.ndarray:
    """
    ``[S_ell x]_k = x_{k+ell}``
    """
    return np.roll(_vector(x), -int(ell))


def reflect(x) -> np.ndarray:
    """
    ``[R x]_k = x_{-k}``
    """
    return np.roll(_vector(x)[::-1], 1)


def _check_dictionary(Q: Dictionary, shape: Tuple[int, ...]):
    if tuple(shape) != (Q.mu, Q.n):
        raise ShapeMismatchError(
            'Signal of shape {} does not match dictionary ({}, {})'.format(
                shape, Q.mu, Q.n))


def _reflect_blocks(values: np.ndarray) -> np.ndarray:
    mu = values.shape[-2]
    return np.take(values, (-np.arange(mu)) % mu, axis=-2)


def _H(Q: Dictionary, blocks: np.ndarray) -> np.ndarray:
    # Column k of P is Q w_k; output l sums P[l+k, k] over k.
    P = Q.apply(blocks.T)
    mu = Q.mu
    k = np.arange(mu)
    return P[(k[:, None] + k[None, :]) % mu, k[None, :]].sum(axis=1)


def _H_adjoint(Q: Dictionary, y: np.ndarray) -> np.ndarray:
    # Column k of Y is S_{-k} y.
    mu = Q.mu
    k = np.arange(mu)
    Y = y[(k[:, None] - k[None, :]) % mu]
    return Q.adjoint(Y).T


def _measurement(Q: Dictionary, y) -> np.ndarray:
    y = _vector(y, 'y')
    if y.size != Q.mu:
        raise ShapeMismatchError('Expected {} measurements, got {}'.format(
            Q.mu, y.size))
    return y


def apply_H(Q: Dictionary, w: HierSignal) -> np.ndarray:
    """
    ``H(w) = sum_k S_k Q w_k``
    """
    _check_dictionary(Q, w.shape)
    return _H(Q, w.values)


def adjoint_H(Q: Dictionary, y) -> HierSignal:
    """
    ``H*(y) = sum_k e_k (x) Q^T S_{-k} y``
    """
    return HierSignal(_H_adjoint(Q, _measurement(Q, y)))


def apply_C(Q: Dictionary, w: HierSignal) -> np.ndarray:
    """
    ``C(w) = H(R w)``; for ``w = h (x) b`` this is ``circ_conv(h, Q b)``.
    """
    _check_dictionary(Q, w.shape)
    return _H(Q, _reflect_blocks(w.values))


def adjoint_C(Q: Dictionary, y) -> HierSignal:
    """
    ``C*(y) = R H*(y)``
    """
    return HierSignal(_reflect_blocks(_H_adjoint(Q, _measurement(Q, y))))


def _check_mixing(D: np.ndarray, Q: Dictionary, shape: Tuple[int, ...]):
    if D.ndim != 2:
        raise ShapeMismatchError('The mixing matrix must be 2-d')
    if tuple(shape) != (D.shape[1], Q.mu, Q.n):
        raise ShapeMismatchError(
            'Signal of shape {} does not match {} users of ({}, {})'.format(
                shape, D.shape[1], Q.mu, Q.n))


def apply_M(D, Q: Dictionary, X: HierSignal) -> np.ndarray:
    """
    ``M(X) = sum_p d^p (x) C(X_p)``, returned slot-major: entries
    ``q*mu .. (q+1)*mu`` hold slot q.
    """
    D = np.asarray(D, dtype=np.float64)
    _check_mixing(D, Q, X.shape)
    per_user = np.stack([_H(Q, _reflect_blocks(x)) for x in X.values])
    return (D @ per_user).reshape(-1)


def adjoint_M(D, Q: Dictionary, y) -> HierSignal:
    """
    ``M*(y) = sum_p e_p (x) C*(sum_q D_{q,p} y_q)``
    """
    D = np.asarray(D, dtype=np.float64)
    y = _vector(y, 'y')
    if D.ndim != 2 or y.size != D.shape[0] * Q.mu:
        raise ShapeMismatchError('Expected {} measurements, got {}'.format(
            D.shape[0] * Q.mu, y.size))
    Z = D.T @ y.reshape(D.shape[0], Q.mu)
    return HierSignal(np.stack([_reflect_blocks(_H_adjoint(Q, z))
                                for z in Z]))


def build_matrix_Aw(w: HierSignal, limit: int = DENSE_LIMIT) -> np.ndarray:
    """
    The ``(mu, mu*n)`` matrix A(w) with ``A(w)[k, j*n + i] =
    w_{j-k}(i) / sqrt(mu)``. If U has rows ``gamma_j / sqrt(mu)`` then
    ``A(w) @ gamma.ravel() == H(w)`` for A the identity, and the Frobenius
    norm of A(w) equals the norm of w.

    :raises: :class:`~hier_deconv.errors.GuardExceededError`
    """
    if w.levels != 2:
        raise ShapeMismatchError('A(w) is defined for two-level signals')
    mu, n = w.shape
    if mu * mu * n > limit:
        raise GuardExceededError(
            'A(w) has {} entries, limit is {}'.format(mu * mu * n, limit))

    k = np.arange(mu)
    blocks = w.values[(k[None, :] - k[:, None]) % mu]
    return blocks.reshape(mu, mu * n) / np.sqrt(mu)


def operator_norm(matrix) -> float:
    """
    Spectral norm (largest singular value) of a dense matrix
    """
    return float(np.linalg.norm(np.asarray(matrix, dtype=np.float64), 2))


class LiftedOperator(object):
    """
    A linear map from hierarchical signals of ``domain_shape`` to
    measurement vectors of length ``codomain_size``.
    """

    def __init__(self, domain_shape: Tuple[int, ...], codomain_size: int):
        self.domain_shape = tuple(domain_shape)
        self.codomain_size = int(codomain_size)

    @property
    def domain_size(self) -> int:
        return int(np.prod(self.domain_shape))

    def check_signal(self, w: HierSignal):
        if w.shape != self.domain_shape:
            raise ShapeMismatchError('Signal of shape {} given to operator on '
                                     '{}'.format(w.shape, self.domain_shape))

    def check_measurement(self, y) -> np.ndarray:
        y = _vector(y, 'y')
        if y.size != self.codomain_size:
            raise ShapeMismatchError('Expected {} measurements, got {}'.format(
                self.codomain_size, y.size))
        return y

    def apply(self, w: HierSignal) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y) -> HierSignal:
        raise NotImplementedError

    def restricted_matrix(self, support: HierSupport,
                          limit: int = DENSE_LIMIT) -> np.ndarray:
        """
        The dense ``(codomain_size, len(support))`` matrix of the operator
        restricted to the coordinates of ``support``, assembled column by
        column.
        """
        if len(support) * self.codomain_size > limit:
            raise GuardExceededError('Restricted operator too large to '
                                     'assemble')
        columns = []
        for j in range(len(support)):
            unit = np.zeros(len(support))
            unit[j] = 1.0
            columns.append(self.apply(embed(unit, support,
                                            self.domain_shape)))
        return np.stack(columns, axis=1) if columns else np.zeros(
            (self.codomain_size, 0))

    def matrix(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        """
        The dense ``(codomain_size, domain_size)`` matrix of the operator
        """
        return self.restricted_matrix(HierSupport.full(self.domain_shape),
                                      limit=limit)


class HOperator(LiftedOperator):
    """
    The shift-sum operator ``H`` of a dictionary
    """

    def __init__(self, dictionary: Dictionary):
        super().__init__((dictionary.mu, dictionary.n), dictionary.mu)
        self.dictionary = dictionary

    def apply(self, w: HierSignal) -> np.ndarray:
        return apply_H(self.dictionary, w)

    def adjoint(self, y) -> HierSignal:
        return adjoint_H(self.dictionary, self.check_measurement(y))


class COperator(LiftedOperator):
    """
    The lifted circular convolution ``C = H o R`` of a dictionary
    """

    def __init__(self, dictionary: Dictionary):
        super().__init__((dictionary.mu, dictionary.n), dictionary.mu)
        self.dictionary = dictionary

    def apply(self, w: HierSignal) -> np.ndarray:
        return apply_C(self.dictionary, w)

    def adjoint(self, y) -> HierSignal:
        return adjoint_C(self.dictionary, self.check_measurement(y))


class DemixingOperator(LiftedOperator):
    """
    The demixing operator ``M`` of an ``(M, N)`` mixing matrix and a
    dictionary shared by all users
    """

    def __init__(self, mixing, dictionary: Dictionary):
        mixing = np.array(mixing, dtype=np.float64)
        if mixing.ndim != 2:
            raise ShapeMismatchError('The mixing matrix must be 2-d')
        mixing.flags.writeable = False
        super().__init__((mixing.shape[1], dictionary.mu, dictionary.n),
                         mixing.shape[0] * dictionary.mu)
        self.mixing = mixing
        self.dictionary = dictionary

    @property
    def num_slots(self) -> int:
        return self.mixing.shape[0]

    @property
    def num_users(self) -> int:
        return self.mixing.shape[1]

    def apply(self, X: HierSignal) -> np.ndarray:
        return apply_M(self.mixing, self.dictionary, X)

    def adjoint(self, y) -> HierSignal:
        return adjoint_M(self.mixing, self.dictionary,
                         self.check_measurement(y))


class DenseOperator(LiftedOperator):
    """
    An operator given by an explicit matrix acting on the flat data of
    signals of ``domain_shape``. A plain matrix with n columns can be viewed
    as acting on single-block signals of shape ``(1, n)``.
    """

    def __init__(self, matrix, domain_shape: Tuple[int, ...] = None):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ShapeMismatchError('Expected a matrix')
        if domain_shape is None:
            domain_shape = (1, matrix.shape[1])
        if int(np.prod(domain_shape)) != matrix.shape[1]:
            raise ShapeMismatchError('Matrix with {} columns cannot act on '
                                     'shape {}'.format(matrix.shape[1],
                                                       domain_shape))
        matrix.flags.writeable = False
        super().__init__(domain_shape, matrix.shape[0])
        self._matrix = matrix

    def apply(self, w: HierSignal) -> np.ndarray:
        self.check_signal(w)
        return self._matrix @ w.data

    def adjoint(self, y) -> HierSignal:
        y = self.check_measurement(y)
        return HierSignal.from_flat(self._matrix.T @ y, self.domain_shape)

    def restricted_matrix(self, support: HierSupport,
                          limit: int = DENSE_LIMIT) -> np.ndarray:
        return self._matrix[:, support.flat_indices]
