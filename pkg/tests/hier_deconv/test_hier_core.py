import itertools

import numpy as np
import pytest

from hier_deconv import hier_core
from hier_deconv.ensembles import make_rng
from hier_deconv.errors import GuardExceededError
from hier_deconv.errors import ShapeMismatchError
from hier_deconv.errors import SupportError
from hier_deconv.models import HierSignal
from hier_deconv.models import HierSupport
from hier_deconv.models import SparsityPattern


def captured(w: HierSignal, support: HierSupport) -> float:
    return float(np.sum(w.data[support.flat_indices] ** 2))


def test_project_picks_best_single_entry():
    w = HierSignal([[3, 0, 0], [0, 0, 4], [1, 1, 0]])
    support, projected = hier_core.project_hier(w, SparsityPattern(1, 1))

    assert support.entries == ((1, 2),)
    expected = np.zeros((3, 3))
    expected[1, 2] = 4.0
    assert np.array_equal(projected.values, expected)


def test_project_compares_block_energies():
    w = HierSignal([[1, 1], [0, 2]])
    support, projected = hier_core.project_hier(w, SparsityPattern(1, 2))

    assert support.blocks() == [(1,)]
    assert np.array_equal(projected.values, [[0, 0], [0, 2]])


def test_project_is_identity_on_sparse_signals(sparse_factory):
    w = sparse_factory(6, 5, 2, 3)
    support, projected = hier_core.project_hier(w, SparsityPattern(2, 3))
    assert projected == w
    assert set(zip(*np.nonzero(w.values))) <= set(support.entries)


def test_project_full_pattern_is_identity(random_signal):
    w = random_signal((4, 3))
    support, projected = hier_core.project_hier(w, SparsityPattern(4, 3))
    assert projected == w
    assert support == HierSupport.full((4, 3))


def test_project_support_has_exact_size():
    w = HierSignal.zeros((4, 3))
    support, projected = hier_core.project_hier(w, SparsityPattern(2, 2))
    assert support.entries == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert projected == w


def test_project_rejects_mismatched_pattern():
    with pytest.raises(ShapeMismatchError):
        hier_core.project_hier(HierSignal.zeros((2, 2)),
                               SparsityPattern(3, 1))
    with pytest.raises(ShapeMismatchError):
        hier_core.project_hier(HierSignal.zeros((2, 2)),
                               SparsityPattern(1, 1, S=1))


def test_brute_force_examples():
    w = HierSignal([[3, 0, 0], [0, 0, 4], [1, 1, 0]])
    support, projected = hier_core.brute_force_project(w,
                                                       SparsityPattern(1, 1))
    assert support.entries == ((1, 2),)
    assert captured(w, support) == 16.0

    support, _ = hier_core.brute_force_project(HierSignal([[1, 1], [0, 2]]),
                                               SparsityPattern(1, 2))
    assert support.blocks() == [(1,)]


def test_brute_force_zero_signal():
    w = HierSignal.zeros((3, 3))
    support, projected = hier_core.brute_force_project(w,
                                                       SparsityPattern(2, 1))
    assert support.satisfies(SparsityPattern(2, 1))
    assert len(support) == 2
    assert projected == w


@pytest.mark.parametrize(['mu', 'n', 's', 'sigma'], [
    (mu, n, s, sigma)
    for mu, n in itertools.product(range(1, 5), repeat=2)
    for s in (1, 2) for sigma in (1, 2)
    if s <= mu and sigma <= n
])
def test_projection_matches_brute_force(mu, n, s, sigma):
    rng = make_rng(mu * 1000 + n * 100 + s * 10 + sigma)
    p = SparsityPattern(s, sigma)
    for _ in range(5):
        w = HierSignal(rng.standard_normal((mu, n)))
        fast, _ = hier_core.project_hier(w, p)
        slow, _ = hier_core.brute_force_project(w, p)
        assert fast.satisfies(p)
        assert captured(w, fast) == pytest.approx(captured(w, slow),
                                                  rel=1e-12)


def test_projection_matches_brute_force_random_sizes():
    rng = make_rng(99)
    for _ in range(100):
        mu, n = rng.integers(1, 7, size=2)
        s, sigma = rng.integers(1, mu + 1), rng.integers(1, n + 1)
        p = SparsityPattern(int(s), int(sigma))
        w = HierSignal(rng.standard_normal((mu, n)))
        fast, _ = hier_core.project_hier(w, p)
        slow, _ = hier_core.brute_force_project(w, p)
        assert captured(w, fast) == pytest.approx(captured(w, slow),
                                                  rel=1e-12)


def test_projection_is_idempotent():
    rng = make_rng(101)
    for _ in range(300):
        mu, n = rng.integers(1, 7, size=2)
        p = SparsityPattern(int(rng.integers(1, mu + 1)),
                            int(rng.integers(1, n + 1)))
        w = HierSignal(rng.standard_normal((mu, n)))
        support, projected = hier_core.project_hier(w, p)
        again, twice = hier_core.project_hier(projected, p)
        assert twice == projected
        assert captured(projected, again) == pytest.approx(
            captured(projected, support), rel=1e-12)


def test_projection_commutes_with_block_permutation():
    rng = make_rng(102)
    for _ in range(300):
        mu, n = rng.integers(1, 7, size=2)
        p = SparsityPattern(int(rng.integers(1, mu + 1)),
                            int(rng.integers(1, n + 1)))
        w = HierSignal(rng.standard_normal((mu, n)))
        perm = rng.permutation(mu)
        _, projected = hier_core.project_hier(w.permute_blocks(perm), p)
        _, expected = hier_core.project_hier(w, p)
        assert projected == expected.permute_blocks(perm)


def test_three_level_projection(rng):
    p = SparsityPattern(1, 2, S=2)
    for _ in range(20):
        w = HierSignal(rng.standard_normal((3, 3, 3)))
        fast, projected = hier_core.project_hier(w, p)
        slow, _ = hier_core.brute_force_project(w, p)
        assert fast.satisfies(p)
        assert len(fast.users()) == 2
        assert captured(w, fast) == pytest.approx(captured(w, slow),
                                                  rel=1e-12)
        assert projected.norm() ** 2 == pytest.approx(captured(w, fast))


def test_three_level_selects_strongest_user():
    values = np.zeros((3, 2, 2))
    values[0, 0, 0] = 1.0
    values[2, 1, 1] = 5.0
    values[2, 0, 1] = 1.0
    support, projected = hier_core.project_hier(HierSignal(values),
                                                SparsityPattern(1, 1, S=1))
    assert support.users() == [2]
    assert support.entries == ((2, 1, 1),)
    assert projected.values[2, 1, 1] == 5.0


@pytest.mark.parametrize(['shape', 'budgets', 'count'], [
    ((3, 3), (1, 1), 9),
    ((4, 3), (2, 2), 6 * 3 ** 2),
    ((4, 4), (4, 4), 1),
    ((2, 3, 2), (1, 2, 1), 2 * 3 * 2 ** 2),
])
def test_count_supports(shape, budgets, count):
    S = budgets[0] if len(budgets) == 3 else None
    p = SparsityPattern(*budgets[-2:], S=S)
    assert hier_core.count_supports(shape, p) == count

    supports = list(hier_core.iter_supports(shape, p))
    assert len(supports) == count
    assert len(set(s.entries for s in supports)) == count
    assert all(s.satisfies(p) and len(s) == p.support_size()
               for s in supports)


def test_iter_supports_guard():
    with pytest.raises(GuardExceededError):
        list(hier_core.iter_supports((10, 10), SparsityPattern(3, 3),
                                     limit=1000))


def test_restrict_embed():
    w = HierSignal(np.arange(6.0).reshape(3, 2))
    support = HierSupport([(0, 1), (2, 0)], (3, 2))
    v = hier_core.restrict(w, support)
    assert list(v) == [1.0, 4.0]

    back = hier_core.embed(v, support, (3, 2))
    assert np.array_equal(back.values, [[0, 1], [0, 0], [4, 0]])

    full = HierSupport.full((3, 2))
    assert np.array_equal(hier_core.restrict(w, full), w.data)
    assert hier_core.embed(w.data, full, (3, 2)) == w


def test_restrict_embed_empty_support():
    empty = HierSupport([], (3, 2))
    assert hier_core.restrict(HierSignal.zeros((3, 2)), empty).size == 0
    assert hier_core.embed([], empty, (3, 2)) == HierSignal.zeros((3, 2))


def test_restrict_embed_errors():
    support = HierSupport([(0, 1)], (3, 2))
    with pytest.raises(ShapeMismatchError):
        hier_core.restrict(HierSignal.zeros((2, 3)), support)
    with pytest.raises(SupportError):
        hier_core.embed([1.0, 2.0], support, (3, 2))
    with pytest.raises(ShapeMismatchError):
        hier_core.embed([1.0], support, (2, 3))
