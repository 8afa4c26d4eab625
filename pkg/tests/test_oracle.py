import numpy as np
import pytest

from nswbandit.core import RewardMatrix
from nswbandit.optimizer import HalfSpace
from nswbandit.oracle import (GridTooLargeError, grid_optimal_constrained, grid_optimal_policy,
                              simplex_lattice)


@pytest.mark.parametrize("k, res, count", [(1, 0.5, 1), (2, 0.25, 5), (3, 0.5, 6), (3, 0.01, 5151)])
def test_lattice_size_and_membership(k, res, count):
    pts = simplex_lattice(k, res)
    assert pts.shape == (count, k)
    np.testing.assert_allclose(pts.sum(axis=1), 1.0)
    assert pts.min() >= 0


def test_lattice_is_lexicographic():
    pts = simplex_lattice(3, 0.25)
    keys = [tuple(p) for p in pts]
    assert keys == sorted(keys)


def test_lattice_limits():
    with pytest.raises(GridTooLargeError):
        simplex_lattice(4, 0.1)
    with pytest.raises(GridTooLargeError):
        simplex_lattice(3, 1e-4)
    with pytest.raises(ValueError):
        simplex_lattice(2, 0.3)


def test_grid_examples():
    pi, v = grid_optimal_policy(RewardMatrix([[1, 0], [0, 1]]))
    np.testing.assert_allclose(pi.probs, [0.5, 0.5])
    assert v == pytest.approx(0.25)
    pi, v = grid_optimal_policy(RewardMatrix([[0.9, 0.1], [0.8, 0.2]]))
    np.testing.assert_allclose(pi.probs, [1.0, 0.0])
    assert v == pytest.approx(0.72)


def test_grid_tie_takes_first_lattice_point():
    pi, v = grid_optimal_policy(RewardMatrix([[0.5, 0.5, 0.5]]), 0.5)
    np.testing.assert_array_equal(pi.probs, [0.0, 0.0, 1.0])
    assert v == 0.5


def test_constrained_grid_examples():
    mu = RewardMatrix([[0.2, 0.9, 0.8]])
    # only arm 0 satisfies pi_1 + pi_2 <= 0
    g = grid_optimal_constrained(mu, [0.0, 0.0, 0.0], HalfSpace([0.0, 1.0, 1.0], 0.0), 0.01)
    assert g.feasible
    np.testing.assert_allclose(g.policy.probs, [1.0, 0.0, 0.0])
    assert g.objective == pytest.approx(0.2)
    g = grid_optimal_constrained(mu, [0.0, 0.0, 0.5], None, 0.01)
    np.testing.assert_allclose(g.policy.probs, [0.0, 0.0, 1.0])
    assert g.objective == pytest.approx(1.3)


def test_constrained_grid_infeasible():
    g = grid_optimal_constrained(RewardMatrix([[0.5, 0.5]]), [0.0, 0.0], HalfSpace([1.0, 1.0], 0.5), 0.01)
    assert not g.feasible and g.objective == float("-inf")
