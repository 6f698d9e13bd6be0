from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcgd.analysis import check_local_nash
from pcgd.games import bilinear_game, four_player_example, random_quadratic_polymatrix
from pcgd.optimizers import OptimizerConfig, run

PRINTED_HESSIAN = np.array([
    [0, 1, 1, 1],
    [-1, 0, 1, 1],
    [-1, -1, 0, 1],
    [-1, -1, -1, 0],
], dtype=float)


def test_bilinear_gradient():
    np.testing.assert_array_equal(bilinear_game().gradient([1, 1]), [1, -1])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_four_player_gradient_formula(theta):
    a, b, c, d = theta
    expected = [b + c + d, -a + c + d, -a - b + d, -a - b - c]
    np.testing.assert_allclose(four_player_example().gradient(theta), expected, atol=1e-12)


def test_four_player_hessian_is_printed_matrix():
    g = four_player_example()
    np.testing.assert_array_equal(g.hessian(np.ones(4)), PRINTED_HESSIAN)
    np.testing.assert_array_equal(g.offdiag_hvp(np.zeros(4), np.eye(4)[2]), PRINTED_HESSIAN[:, 2])


def test_four_player_losses_are_pairwise_zero_sum():
    theta = np.random.default_rng(1).standard_normal(4)
    assert four_player_example().losses(theta).sum() == pytest.approx(0.0, abs=1e-12)


def test_random_polymatrix_is_seeded_and_scale_consistent():
    a = random_quadratic_polymatrix(5, a_scale=1.0)
    b = random_quadratic_polymatrix(5, a_scale=1.0)
    c = random_quadratic_polymatrix(5, a_scale=10.0)
    np.testing.assert_array_equal(a.H, b.H)
    S = lambda H: 0.5 * (H + H.T)
    np.testing.assert_allclose(S(a.H), S(c.H), atol=1e-12)
    np.testing.assert_allclose(10 * (a.H - S(a.H)), c.H - S(c.H), atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_random_polymatrix_has_local_nash_at_origin(seed):
    game = random_quadratic_polymatrix(seed, a_scale=100.0)
    assert check_local_nash(game, np.zeros(game.dim))
    assert np.linalg.eigvalsh(0.5 * (game.H + game.H.T)).min() > 0


def test_decoupled_game_pcgd_equals_simgd():
    game = random_quadratic_polymatrix(0, (1, 1), a_scale=0.0, zero_offdiag=True)
    theta0 = np.array([1.0, -2.0])
    p, _ = run(game, theta0, OptimizerConfig("pcgd", 0.3), 20)
    s, _ = run(game, theta0, OptimizerConfig("simgd", 0.3), 20)
    np.testing.assert_allclose(p, s, rtol=0, atol=1e-15)
