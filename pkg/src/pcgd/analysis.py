"""Local convergence analysis of PCGD on small games.

Assembles the dense game Hessian, splits it into symmetric/antisymmetric and
block-diagonal/off-diagonal parts, and checks whether the Jacobian of the PCGD
update map has spectral radius below one at a fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import BlockPartition, ContractError, Game, offdiag_mask
from .linalg import LinearOperator, spectral_norm_symmetric, spectral_radius

HESSIAN_CAP = 200
TOL_MARGIN = 1e-8


@dataclass
class DenseGameHessian:
    H: np.ndarray
    partition: BlockPartition

    @property
    def S(self) -> np.ndarray:
        return 0.5 * (self.H + self.H.T)

    @property
    def A(self) -> np.ndarray:
        return 0.5 * (self.H - self.H.T)

    @property
    def H_o(self) -> np.ndarray:
        return np.where(offdiag_mask(self.partition), self.H, 0.0)

    @property
    def H_d(self) -> np.ndarray:
        return np.where(offdiag_mask(self.partition), 0.0, self.H)

    def diagonal_block(self, i: int) -> np.ndarray:
        s = self.partition.slice(i)
        return self.H[s, s]


@dataclass
class ConvergenceVerdict:
    rho: float
    eta: float
    step_bound: float
    is_local_nash: bool
    converges_locally: bool
    rho_accurate: bool = True


def assemble_hessian(game: Game, theta, cap: int = HESSIAN_CAP, h: float = 1e-5) -> DenseGameHessian:
    """Dense game Hessian: the analytic oracle if the game has one, else central
    differences of the simultaneous gradient with step ``h``."""
    theta = game.partition.check(theta, "theta")
    d = game.dim
    if d > cap:
        raise ContractError(f"dimension {d} exceeds the dense Hessian cap {cap}")
    H = game.hessian(theta)
    if H is None:
        H = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            H[:, j] = (game.gradient(theta + e) - game.gradient(theta - e)) / (2 * h)
    return DenseGameHessian(np.array(H, dtype=np.float64), game.partition)


def decompose(H, partition: BlockPartition | None = None):
    """Return ``(S, A, H_d, H_o)``; without a partition every coordinate is its own player."""
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractError(f"expected a square matrix, got {H.shape}")
    if partition is None:
        partition = BlockPartition((1,) * H.shape[0])
    dense = DenseGameHessian(H, partition)
    return dense.S, dense.A, dense.H_d, dense.H_o


def theorem_step_bound(S, factor: float = 4.0) -> float:
    """``1 / (factor * ||S||)``; infinite when S vanishes.

    ``factor=4`` is the certified bound; ``factor=2`` is the weaker bound that
    the convergence argument itself reaches.
    """
    norm = spectral_norm_symmetric(S)
    return math.inf if norm == 0.0 else 1.0 / (factor * norm)


def pcgd_update_jacobian(H, partition: BlockPartition, eta: float) -> np.ndarray:
    """``I - eta (I + eta H_o)^{-1} H`` by a direct dense solve."""
    H = np.asarray(H, dtype=np.float64)
    d = H.shape[0]
    H_o = np.where(offdiag_mask(partition), H, 0.0)
    M = np.eye(d) + eta * H_o
    if np.linalg.cond(M) > 1.0 / np.finfo(float).eps:
        raise np.linalg.LinAlgError("I + eta H_o is singular to machine precision")
    return np.eye(d) - eta * np.linalg.solve(M, H)


def simgd_update_jacobian(H, eta: float) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    return np.eye(H.shape[0]) - eta * H


def _min_eigenvalue_symmetric(B: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric block via power iteration on ``c I - B``."""
    if B.size == 0:
        return 0.0
    c = spectral_norm_symmetric(B)
    if c == 0.0:
        return 0.0
    shifted = LinearOperator(B.shape[0], lambda v: c * v - B @ v)
    top = spectral_norm_symmetric(shifted)
    return c - top


def check_local_nash(game: Game, theta, tol: float = 1e-8, hessian: DenseGameHessian | None = None) -> bool:
    """Second-order test: stationary and every own-curvature block PSD up to ``tol``.

    A singular PSD block leaves the variational definition undecided; this
    surrogate reports True in that boundary case.
    """
    theta = game.partition.check(theta, "theta")
    if np.linalg.norm(game.gradient(theta)) > tol:
        return False
    dense = hessian if hessian is not None else assemble_hessian(game, theta)
    for i in range(game.n_players):
        block = dense.diagonal_block(i)
        block = 0.5 * (block + block.T)
        if _min_eigenvalue_symmetric(block) < -tol:
            return False
    return True


def classify_dense(dense: DenseGameHessian, eta: float, is_local_nash: bool = True,
                   tol: float = 1e-10) -> ConvergenceVerdict:
    J = pcgd_update_jacobian(dense.H, dense.partition, eta)
    est = spectral_radius(J, tol=tol)
    bound = theorem_step_bound(dense.S)
    return ConvergenceVerdict(
        rho=est.value, eta=eta, step_bound=bound, is_local_nash=is_local_nash,
        converges_locally=est.value < 1.0 - TOL_MARGIN, rho_accurate=est.accurate,
    )


def classify_convergence(game: Game, theta_bar, eta: float, tol: float = 1e-8) -> ConvergenceVerdict:
    """Ostrowski test for PCGD at an (approximately) stationary point."""
    theta_bar = game.partition.check(theta_bar, "theta_bar")
    xi_norm = float(np.linalg.norm(game.gradient(theta_bar)))
    if xi_norm > tol:
        raise ContractError(f"point is not stationary: ||xi|| = {xi_norm:.3g} > {tol}")
    dense = assemble_hessian(game, theta_bar)
    nash = check_local_nash(game, theta_bar, tol, hessian=dense)
    return classify_dense(dense, eta, nash)
