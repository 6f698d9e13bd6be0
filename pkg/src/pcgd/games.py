"""Analytic benchmark games with known equilibria."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .game import BlockPartition, ContractError, DenseGame, Game


class BilinearGame(Game):
    """Two-player zero-sum game ``L1 = g*x*y``, ``L2 = -g*x*y``."""

    columns_ok = True

    def __init__(self, coupling: float = 1.0):
        if coupling == 0:
            raise ContractError("coupling must be nonzero (the game Hessian would be singular)")
        super().__init__(BlockPartition((1, 1)))
        self.coupling = float(coupling)

    def _losses(self, theta):
        x, y = theta
        return np.array([self.coupling * x * y, -self.coupling * x * y])

    def _gradient(self, theta):
        x, y = theta
        return np.array([self.coupling * y, -self.coupling * x])

    def _offdiag_hvp(self, theta, v):
        return np.array([self.coupling * v[1], -self.coupling * v[0]])

    def _offdiag_hvp_transpose(self, theta, v):
        return np.array([-self.coupling * v[1], self.coupling * v[0]])

    def hessian(self, theta):
        g = self.coupling
        return np.array([[0.0, g], [-g, 0.0]])


FOUR_PLAYER_COUPLING = np.array(
    [
        [0.0, 1.0, 1.0, 1.0],
        [-1.0, 0.0, 1.0, 1.0],
        [-1.0, -1.0, 0.0, 1.0],
        [-1.0, -1.0, -1.0, 0.0],
    ]
)


class FourPlayerGame(Game):
    """Four scalar players with pairwise zero-sum bilinear interactions.

    ``L_i = theta_i * sum_j C[i, j] theta_j`` with ``C`` antisymmetric, +1 above
    the diagonal.  The game Hessian equals ``C`` everywhere, its symmetric part
    vanishes, and the origin is the unique equilibrium.
    """

    columns_ok = True

    def __init__(self):
        super().__init__(BlockPartition((1, 1, 1, 1)))
        self.C = FOUR_PLAYER_COUPLING.copy()

    def _losses(self, theta):
        return theta * (self.C @ theta)

    def _gradient(self, theta):
        return self.C @ theta

    def _offdiag_hvp(self, theta, v):
        return self.C @ v

    def _offdiag_hvp_transpose(self, theta, v):
        return self.C.T @ v

    def hessian(self, theta):
        return self.C.copy()


def bilinear_game(coupling: float = 1.0) -> BilinearGame:
    return BilinearGame(coupling)


def four_player_example() -> FourPlayerGame:
    return FourPlayerGame()


class QuadraticPolymatrixGame(DenseGame):
    """``L_i = 0.5 x_i' B_ii x_i + sum_{j != i} x_i' B_ij x_j``; equilibrium at 0."""

    def block(self, i: int, j: int) -> np.ndarray:
        return self.H[self.partition.slice(i), self.partition.slice(j)]


def random_quadratic_polymatrix(seed: int, dims: Sequence[int] = (2, 2, 2), s_scale: float = 1.0,
                                a_scale: float = 1.0, zero_offdiag: bool = False,
                                max_retries: int = 10) -> QuadraticPolymatrixGame:
    """Seeded random quadratic polymatrix game with a strict local Nash point at 0.

    The symmetric part of the Hessian is ``s_scale * P`` with
    ``P = G'G/d + 0.1 I`` for a Gaussian ``G``: its diagonal blocks are the
    players' own curvatures ``B_ii`` and its off-diagonal blocks the
    symmetric couplings.  The antisymmetric couplings are a random
    antisymmetric matrix restricted to the off-diagonal blocks and scaled by
    ``a_scale``.  Random draws do not depend on the scales, so the same seed at
    different ``a_scale`` gives the same game with stronger competition.
    """
    partition = BlockPartition(tuple(dims))
    if s_scale < 0:
        raise ContractError("s_scale must be non-negative")
    d = partition.total
    owner = np.repeat(np.arange(partition.n_players), partition.dims)
    off = owner[:, None] != owner[None, :]
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        G = rng.standard_normal((d, d))
        R = rng.standard_normal((d, d))
        P = G.T @ G / d + 0.1 * np.eye(d)
        K = np.where(off, 0.5 * (R - R.T), 0.0)
        if zero_offdiag:
            P = np.where(off, 0.0, P)
            K = np.zeros_like(K)
        H = s_scale * P + a_scale * K
        if np.linalg.cond(H) < 1e12:
            return QuadraticPolymatrixGame(partition, H)
    raise ContractError(f"could not draw an invertible game Hessian in {max_retries} tries")
