"""Differentiable-game abstraction shared by every optimizer.

All players' parameters live in one flat float64 vector; a
:class:`BlockPartition` says which slice belongs to which player.  A
:class:`Game` exposes the losses, the simultaneous gradient and products with
the block-off-diagonal part of the game Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, range, sign)."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message: str, block: int | None = None):
        super().__init__(message)
        self.block = block


@dataclass(frozen=True)
class BlockPartition:
    dims: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1 or any(d <= 0 for d in dims):
            raise ContractError(f"player dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "offsets", tuple(np.concatenate([[0], np.cumsum(dims)]).tolist()))

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        return self.offsets[-1]

    def slice(self, i: int) -> slice:
        if not 0 <= i < len(self.dims):
            raise IndexError(f"player index {i} out of range for {len(self.dims)} players")
        return slice(self.offsets[i], self.offsets[i + 1])

    def split(self, values: np.ndarray) -> list[np.ndarray]:
        return [values[self.slice(i)] for i in range(self.n_players)]

    def check(self, values, name: str = "vector") -> np.ndarray:
        """Return ``values`` as a float64 vector, raising if its length is wrong."""
        if isinstance(values, FlatParams):
            if values.partition != self:
                raise ContractError(f"{name} has partition {values.partition.dims}, expected {self.dims}")
            values = values.values
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.total:
            raise ContractError(f"{name} must have shape ({self.total},), got {arr.shape}")
        return arr


@dataclass
class FlatParams:
    """A parameter vector together with its player partition."""

    partition: BlockPartition
    values: np.ndarray

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64)
        if self.values.shape != (self.partition.total,):
            raise ContractError(
                f"values must have shape ({self.partition.total},), got {self.values.shape}"
            )

    @classmethod
    def zeros(cls, partition: BlockPartition) -> FlatParams:
        return cls(partition, np.zeros(partition.total))

    def block(self, i: int) -> np.ndarray:
        return self.values[self.partition.slice(i)]

    def blocks(self) -> list[np.ndarray]:
        return self.partition.split(self.values)

    def copy(self) -> FlatParams:
        return FlatParams(self.partition, self.values.copy())


def block_view(theta: FlatParams, i: int) -> np.ndarray:
    return theta.block(i)


class Game:
    """Base class for n-player differentiable games.

    Subclasses implement ``_losses``, ``_gradient`` and ``_offdiag_hvp``; the
    public methods validate shapes and finiteness around them.  Games that can
    also multiply by the transpose of the off-diagonal Hessian (needed by the
    normal-equations solve and by SGA) override ``_offdiag_hvp_transpose``.

    ``pure`` marks oracles that are safe to call concurrently; sample-based
    games set it to False.
    """

    pure = True
    columns_ok = False  # oracles accept a d x k block of column-wise points


    def __init__(self, partition: BlockPartition | Sequence[int]):
        if not isinstance(partition, BlockPartition):
            partition = BlockPartition(tuple(partition))
        self.partition = partition

    @property
    def n_players(self) -> int:
        return self.partition.n_players

    @property
    def dim(self) -> int:
        return self.partition.total

    def losses(self, theta) -> np.ndarray:
        theta = self.partition.check(theta, "theta")
        return np.asarray(self._losses(theta), dtype=np.float64)

    def gradient(self, theta) -> np.ndarray:
        theta = self.partition.check(theta, "theta")
        return self._checked(self._gradient(theta), "simultaneous gradient")

    def offdiag_hvp(self, theta, v) -> np.ndarray:
        theta = self.partition.check(theta, "theta")
        v = self.partition.check(v, "v")
        return self._checked(self._offdiag_hvp(theta, v), "off-diagonal HVP")

    def offdiag_hvp_transpose(self, theta, v) -> np.ndarray:
        theta = self.partition.check(theta, "theta")
        v = self.partition.check(v, "v")
        return self._checked(self._offdiag_hvp_transpose(theta, v), "transposed off-diagonal HVP")

    # column-wise oracles: column j of the result uses column j of theta

    def gradient_columns(self, Theta: np.ndarray) -> np.ndarray:
        if self.columns_ok:
            return np.asarray(self._gradient(Theta), dtype=np.float64)
        return np.column_stack([self.gradient(t) for t in Theta.T])

    def offdiag_hvp_columns(self, Theta: np.ndarray, V: np.ndarray) -> np.ndarray:
        if self.columns_ok:
            return np.asarray(self._offdiag_hvp(Theta, V), dtype=np.float64)
        return np.column_stack([self.offdiag_hvp(t, v) for t, v in zip(Theta.T, V.T)])

    def offdiag_hvp_transpose_columns(self, Theta: np.ndarray, V: np.ndarray) -> np.ndarray:
        if self.columns_ok:
            return np.asarray(self._offdiag_hvp_transpose(Theta, V), dtype=np.float64)
        return np.column_stack([self.offdiag_hvp_transpose(t, v) for t, v in zip(Theta.T, V.T)])

    @property
    def has_transpose(self) -> bool:
        return type(self)._offdiag_hvp_transpose is not Game._offdiag_hvp_transpose

    def hessian(self, theta) -> np.ndarray | None:
        """Dense game Hessian, or None when the game has no analytic form."""
        return None

    def _losses(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _offdiag_hvp(self, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _offdiag_hvp_transpose(self, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no transposed off-diagonal HVP")

    def _checked(self, out, what: str) -> np.ndarray:
        out = np.asarray(out, dtype=np.float64)
        if out.shape != (self.dim,):
            raise ContractError(f"{what} returned shape {out.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(out)):
            for i in range(self.n_players):
                if not np.all(np.isfinite(out[self.partition.slice(i)])):
                    raise NumericError(f"non-finite {what} in block {i}", block=i)
        return out


def eval_losses(game: Game, theta) -> np.ndarray:
    return game.losses(theta)


def simultaneous_gradient(game: Game, theta) -> np.ndarray:
    return game.gradient(theta)


def offdiag_hvp(game: Game, theta, v) -> np.ndarray:
    return game.offdiag_hvp(theta, v)


def offdiag_mask(partition: BlockPartition) -> np.ndarray:
    """Boolean d x d mask that is True on block-off-diagonal entries."""
    owner = np.repeat(np.arange(partition.n_players), partition.dims)
    return owner[:, None] != owner[None, :]


class DenseGame(Game):
    """Quadratic game defined by a constant game Hessian ``H`` and offset ``b``.

    Player i's loss is ``0.5 x_i' H_ii x_i + sum_{j != i} x_i' H_ij x_j + b_i' x_i``
    so that the simultaneous gradient is ``H theta + b``.
    """

    columns_ok = True

    def __init__(self, partition, H, b=None):
        super().__init__(partition)
        self.H = np.array(H, dtype=np.float64)
        if self.H.shape != (self.dim, self.dim):
            raise ContractError(f"H must be {self.dim}x{self.dim}, got {self.H.shape}")
        self.b = np.zeros(self.dim) if b is None else self.partition.check(b, "b").copy()
        self.H_o = np.where(offdiag_mask(self.partition), self.H, 0.0)

    def _losses(self, theta):
        out = np.empty(self.n_players)
        for i in range(self.n_players):
            s = self.partition.slice(i)
            x = theta[s]
            diag = self.H[s, s]
            out[i] = 0.5 * x @ diag @ x + x @ (self.H_o[s] @ theta) + self.b[s] @ x
        return out

    def _gradient(self, theta):
        b = self.b if theta.ndim == 1 else self.b[:, None]
        return self.H @ theta + b

    def _offdiag_hvp(self, theta, v):
        return self.H_o @ v

    def _offdiag_hvp_transpose(self, theta, v):
        return self.H_o.T @ v

    def hessian(self, theta):
        return self.H.copy()
