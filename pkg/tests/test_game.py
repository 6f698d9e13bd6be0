from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcgd.game import BlockPartition, ContractError, DenseGame, FlatParams, NumericError, block_view, offdiag_mask
from pcgd.games import bilinear_game, four_player_example, random_quadratic_polymatrix


def test_block_view_offsets():
    p = BlockPartition((2, 3))
    theta = FlatParams(p, [1, 2, 3, 4, 5])
    np.testing.assert_array_equal(block_view(theta, 1), [3, 4, 5])
    np.testing.assert_array_equal(block_view(theta, 0), [1, 2])


def test_single_player_block_is_whole_vector():
    theta = FlatParams(BlockPartition((4,)), [1, 2, 3, 4])
    np.testing.assert_array_equal(block_view(theta, 0), [1, 2, 3, 4])


def test_partition_rejects_bad_dims_and_lengths():
    with pytest.raises(ContractError):
        BlockPartition((2, 0))
    with pytest.raises(ContractError):
        FlatParams(BlockPartition((2, 2)), [1, 2, 3])
    with pytest.raises(IndexError):
        BlockPartition((1, 1)).slice(2)


def test_losses_examples():
    np.testing.assert_array_equal(bilinear_game().losses([1, 2]), [2, -2])
    np.testing.assert_array_equal(four_player_example().losses([1, 1, 1, 1]), [3, 1, -1, -3])


def test_losses_dimension_mismatch():
    with pytest.raises(ContractError):
        bilinear_game().losses([1, 2, 3])


def test_gradient_examples():
    np.testing.assert_array_equal(bilinear_game().gradient([1, 1]), [1, -1])
    np.testing.assert_array_equal(four_player_example().gradient([1, 1, 1, 1]), [3, 1, -1, -3])
    np.testing.assert_array_equal(four_player_example().gradient(np.zeros(4)), np.zeros(4))


def test_offdiag_hvp_examples():
    g = bilinear_game()
    np.testing.assert_array_equal(g.offdiag_hvp([0.3, -2.0], [2.0, 5.0]), [5.0, -2.0])
    np.testing.assert_array_equal(four_player_example().offdiag_hvp(np.zeros(4), np.ones(4)), [3, 1, -1, -3])
    np.testing.assert_array_equal(g.offdiag_hvp([1, 1], [0, 0]), [0, 0])


def test_nonfinite_gradient_names_block():
    class Broken(DenseGame):
        def _gradient(self, theta):
            out = super()._gradient(theta)
            out[2] = np.nan
            return out

    g = Broken(BlockPartition((2, 2)), np.eye(4))
    with pytest.raises(NumericError) as info:
        g.gradient(np.ones(4))
    assert info.value.block == 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), h=st.sampled_from([1e-4, 1e-5]))
def test_hvp_matches_finite_differences(seed, h):
    # quadratic games: central differences of xi are exact up to rounding
    game = random_quadratic_polymatrix(seed, (2, 1, 3), a_scale=3.0)
    rng = np.random.default_rng(seed)
    theta, v = rng.standard_normal(game.dim), rng.standard_normal(game.dim)
    fd = (game.gradient(theta + h * v) - game.gradient(theta - h * v)) / (2 * h)
    mask = offdiag_mask(game.partition)
    H_d = np.where(mask, 0.0, game.H)
    np.testing.assert_allclose(fd, H_d @ v + game.offdiag_hvp(theta, v), atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_transpose_hvp_is_adjoint(seed):
    game = random_quadratic_polymatrix(seed, (1, 2, 2), a_scale=5.0)
    rng = np.random.default_rng(seed)
    theta, u, v = (rng.standard_normal(game.dim) for _ in range(3))
    lhs = u @ game.offdiag_hvp(theta, v)
    rhs = game.offdiag_hvp_transpose(theta, u) @ v
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_column_oracles_match_single_columns():
    game = random_quadratic_polymatrix(3, (2, 2), a_scale=2.0)
    rng = np.random.default_rng(0)
    T, V = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    for j in range(5):
        np.testing.assert_allclose(game.gradient_columns(T)[:, j], game.gradient(T[:, j]), rtol=1e-14)
        np.testing.assert_allclose(game.offdiag_hvp_columns(T, V)[:, j], game.offdiag_hvp(T[:, j], V[:, j]))
        np.testing.assert_allclose(game.offdiag_hvp_transpose_columns(T, V)[:, j],
                                   game.offdiag_hvp_transpose(T[:, j], V[:, j]))
