import numpy as np
import pytest

from nswbandit.core import Policy, RewardMatrix, nsw
from nswbandit.environment import (BanditInstance, derive_seed, generate_instance, load_instance, make_rng,
                                   sample_rewards, save_instance)


def test_instance_entries_in_range():
    for seed in range(20):
        inst = generate_instance(6, 5, seed)
        v = inst.mu_star.values
        assert v.shape == (6, 5)
        assert v.min() >= 0.1 and v.max() <= 1.0


def test_instance_reproducible():
    a, b = generate_instance(4, 3, 17), generate_instance(4, 3, 17)
    assert np.array_equal(a.mu_star.values, b.mu_star.values)
    assert np.array_equal(a.opt_policy.probs, b.opt_policy.probs) and a.opt_nsw == b.opt_nsw
    assert not np.array_equal(a.mu_star.values, generate_instance(4, 3, 18).mu_star.values)


def test_instance_means_follow_exponential_shortfall():
    x = np.concatenate([1 - generate_instance(10, 10, s).mu_star.values.ravel() for s in range(50)])
    # 5000 draws of an exponential with mean 0.04: standard error 0.04 / sqrt(5000)
    assert abs(x.mean() - 0.04) < 4 * 0.04 / np.sqrt(x.size)


def test_instance_rejects_empty():
    with pytest.raises(ValueError):
        generate_instance(0, 2, 1)


def test_bernoulli_mean_at_floor():
    mu = RewardMatrix([[0.1]])
    rng = make_rng(1, 2)
    draws = np.array([sample_rewards(mu, 0, rng)[0] for _ in range(100_000)])
    assert abs(draws.mean() - 0.1) < 0.003


def test_bernoulli_degenerate():
    rng = make_rng(2, 2)
    mu = RewardMatrix([[1.0, 0.3], [1.0, 0.3]])
    for _ in range(1000):
        np.testing.assert_array_equal(sample_rewards(mu, 0, rng), [1.0, 1.0])


def test_agents_are_independent():
    rng = make_rng(3, 2)
    mu = RewardMatrix([[0.5], [0.5]])
    draws = np.array([sample_rewards(mu, 0, rng) for _ in range(10_000)])
    assert abs(np.corrcoef(draws.T)[0, 1]) < 0.03


def test_sample_rejects_bad_arm():
    mu = RewardMatrix([[0.5, 0.5]])
    with pytest.raises(IndexError):
        sample_rewards(mu, 2, make_rng(0, 2))
    with pytest.raises(IndexError):
        sample_rewards(mu, -1, make_rng(0, 2))


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, 1, 4, 2, 0) == derive_seed(0, 1, 4, 2, 0)
    seeds = {derive_seed(0, 1, 4, 2, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2 ** 63 for s in seeds)


def test_streams_are_distinct():
    assert make_rng(5, 1).random() != make_rng(5, 2).random()


def test_instance_file_round_trip(tmp_path):
    inst = generate_instance(3, 4, 99)
    path = tmp_path / "inst.txt"
    save_instance(inst, path)
    assert path.read_text().splitlines()[0] == "3 4 99"
    back = load_instance(path)
    assert np.array_equal(back.mu_star.values, inst.mu_star.values)
    assert back.seed == 99 and back.opt_nsw == inst.opt_nsw


def test_instance_file_shape_check(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2 0\n0.5 0.5\n")
    with pytest.raises(ValueError):
        load_instance(path)


def test_mean_optimal_nsw_matches_generator():
    vals = [generate_instance(4, 2, derive_seed(0, 1, 4, 2, i)).opt_nsw for i in range(10)]
    # Monte Carlo of the generating model: the best vertex product is a close lower bound on the optimum
    rng = np.random.default_rng(0)
    x = np.maximum(0.1, 1 - rng.exponential(0.04, size=(20_000, 4, 2)))
    best_vertex = np.prod(x, axis=1).max(axis=1)
    assert abs(np.mean(vals) - best_vertex.mean()) <= 3 * best_vertex.std() / np.sqrt(10)


def test_optimum_dominates_vertices():
    for seed in range(20):
        inst = generate_instance(4, 2, seed)
        assert inst.opt_nsw >= np.prod(inst.mu_star.values, axis=0).max() - 1e-12


def test_optimal_policy_beats_random_policies():
    rng = np.random.default_rng(0)
    for seed in range(5):
        inst = generate_instance(5, 4, seed)
        for pi in rng.dirichlet(np.ones(4), size=1000):
            assert inst.opt_nsw >= nsw(Policy(pi), inst.mu_star) - 1e-3


def test_from_means_accepts_arrays():
    inst = BanditInstance.from_means([[0.9, 0.1], [0.8, 0.2]])
    assert inst.opt_nsw == pytest.approx(0.72)
    assert inst.n_agents == 2 and inst.n_arms == 2
