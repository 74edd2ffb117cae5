"""
Hierarchically sparse projections and support bookkeeping.

The (s, sigma)-projection keeps, in every block, the sigma entries of largest
magnitude and then the s blocks whose kept entries carry the most energy.
Three-level (S, s, sigma) patterns apply the same rule once more over users.
All selections are stable: among equal values the lowest index wins.
"""

import itertools
import logging
import math
from typing import Iterator
from typing import Tuple

import numpy as np

from hier_deconv.errors import GuardExceededError
from hier_deconv.errors import ShapeMismatchError
from hier_deconv.errors import SupportError
from hier_deconv.models import HierSignal
from hier_deconv.models import HierSupport
from hier_deconv.models import SparsityPattern


__all__ = [
    'project_hier',
    'brute_force_project',
    'restrict',
    'embed',
    'iter_supports',
    'count_supports',
]

logger = logging.getLogger(__name__)

ENUMERATION_LIMIT = 10 ** 6


def _top(values: np.ndarray, k: int) -> np.ndarray:
    """
    Indices of the k largest entries along the last axis; ties prefer the
    lowest index.
    """
    return np.argsort(-values, axis=-1, kind='stable')[..., :k]


def _selection_mask(values: np.ndarray, budgets: Tuple[int, ...]):
    """
    Mask of the best hierarchical approximation of ``values`` and the
    energy it captures per outermost entry.
    """
    energy = values ** 2
    inner = _top(energy, budgets[-1])
    mask = np.zeros(values.shape, dtype=bool)
    np.put_along_axis(mask, inner, True, axis=-1)
    captured = np.where(mask, energy, 0.0).sum(axis=-1)

    for budget in reversed(budgets[:-1]):
        chosen = _top(captured, budget)
        keep = np.zeros(captured.shape, dtype=bool)
        np.put_along_axis(keep, chosen, True, axis=-1)
        mask &= keep.reshape(keep.shape + (1,) * (mask.ndim - keep.ndim))
        captured = np.where(keep, captured, 0.0).sum(axis=-1)

    return mask


def project_hier(w: HierSignal,
                 p: SparsityPattern) -> Tuple[HierSupport, HierSignal]:
    """
    Best (s, sigma)-sparse (or (S, s, sigma)-sparse) approximation of ``w``
    in the l2 sense.

    The returned support always holds exactly ``s`` blocks of ``sigma``
    entries (``S * s * sigma`` entries for three-level patterns); when ``w``
    has fewer non-zeros the remaining slots are the lowest-index zero
    coordinates.

    :param w: Signal to project
    :param p: Sparsity pattern, with as many levels as ``w``
    :return: The support and the hard-thresholded copy of ``w``
    :raises: :class:`~hier_deconv.errors.ShapeMismatchError`
    """
    p.check(w.shape)
    mask = _selection_mask(w.values, p.budgets)
    return HierSupport.from_mask(mask), HierSignal(np.where(mask, w.values,
                                                            0.0))


def count_supports(shape: Tuple[int, ...], p: SparsityPattern) -> int:
    """
    Number of maximal supports of pattern ``p`` on signals of ``shape``
    """
    p.check(shape)
    count = 1
    for dim, budget in reversed(list(zip(shape, p.budgets))):
        count = math.comb(dim, budget) * count ** budget
    return count


def _supports(shape, budgets) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    if len(shape) == 1:
        for combo in itertools.combinations(range(shape[0]), budgets[0]):
            yield tuple((i,) for i in combo)
        return

    inner = list(_supports(shape[1:], budgets[1:]))
    for outer in itertools.combinations(range(shape[0]), budgets[0]):
        for choice in itertools.product(inner, repeat=len(outer)):
            yield tuple((o,) + e for o, sub in zip(outer, choice) for e in sub)


def iter_supports(shape: Tuple[int, ...], p: SparsityPattern,
                  limit: int = ENUMERATION_LIMIT) -> Iterator[HierSupport]:
    """
    Enumerate every maximal support of pattern ``p`` (exactly ``s`` blocks of
    exactly ``sigma`` entries, and ``S`` users for three-level patterns).

    :raises: :class:`~hier_deconv.errors.GuardExceededError` when there are
             more than ``limit`` supports
    """
    total = count_supports(shape, p)
    if total > limit:
        raise GuardExceededError(
            '{} supports exceed the enumeration limit {}'.format(total, limit))

    for entries in _supports(tuple(shape), p.budgets):
        yield HierSupport(entries, shape)


def brute_force_project(w: HierSignal, p: SparsityPattern,
                        limit: int = ENUMERATION_LIMIT
                        ) -> Tuple[HierSupport, HierSignal]:
    """
    Exhaustive counterpart of :func:`project_hier`: scans all maximal
    supports and keeps the first one capturing the most energy.

    :raises: :class:`~hier_deconv.errors.GuardExceededError`
    """
    energy = w.data ** 2
    best, best_energy = None, -1.0

    for support in iter_supports(w.shape, p, limit=limit):
        captured = float(energy[support.flat_indices].sum())
        if captured > best_energy:
            best, best_energy = support, captured

    logger.debug('Brute force projection captured {:.6g}'.format(best_energy))
    return best, embed(restrict(w, best), best, w.shape)


def restrict(w: HierSignal, support: HierSupport) -> np.ndarray:
    """
    The entries of ``w`` on ``support``, in support order
    """
    if tuple(w.shape) != support.shape:
        raise ShapeMismatchError('Support of shape {} used with signal of '
                                 'shape {}'.format(support.shape, w.shape))
    return w.data[support.flat_indices].copy()


def embed(v, support: HierSupport, shape: Tuple[int, ...]) -> HierSignal:
    """
    The signal of ``shape`` holding ``v`` on ``support`` and zeros elsewhere
    """
    v = np.asarray(v, dtype=np.float64)
    if tuple(shape) != support.shape:
        raise ShapeMismatchError('Support of shape {} used with shape '
                                 '{}'.format(support.shape, shape))
    if v.shape != (len(support),):
        raise SupportError('Expected {} values, got {}'.format(len(support),
                                                               v.shape))
    data = np.zeros(int(np.prod(shape)))
    data[support.flat_indices] = v
    return HierSignal.from_flat(data, shape)
