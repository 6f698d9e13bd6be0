"""PCGD and the baseline optimizers behind one stepping interface.

Every optimizer minimises each player's own loss.  A step takes the current
flat parameter vector and returns the new one together with an
:class:`UpdateReport`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import ContractError, Game, NumericError
from .linalg import (
    LinearOperator, conjugate_gradient_normal, conjugate_gradient_normal_columns, default_max_iter,
)

METHODS = ("simgd", "pcgd", "extragradient", "sga")


@dataclass
class OptimizerConfig:
    method: str = "pcgd"
    eta: float = 0.1
    sga_lambda: float = 1.0
    cg_eps: float = 1e-6
    cg_max_iter: int | None = None
    warm_start: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.eta > 0:
            raise ContractError(f"step size must be positive, got {self.eta}")
        if not self.cg_eps > 0:
            raise ContractError("cg_eps must be positive")


@dataclass
class StepState:
    previous_solution: np.ndarray | None = None
    step: int = 0


@dataclass
class UpdateReport:
    method: str
    xi_norm: float
    step_norm: float
    cg_iterations: int = 0
    cg_residual: float = 0.0
    cg_converged: bool = True
    gradient_calls: int = 1
    extra: dict = field(default_factory=dict)


def _check_eta(eta):
    if not eta > 0:
        raise ContractError(f"step size must be positive, got {eta}")


def simgd_step(game: Game, theta, eta: float):
    _check_eta(eta)
    theta = game.partition.check(theta, "theta")
    xi = game.gradient(theta)
    delta = -eta * xi
    report = UpdateReport("simgd", float(np.linalg.norm(xi)), float(np.linalg.norm(delta)))
    return theta + delta, report


def pcgd_operator(game: Game, theta: np.ndarray, eta: float) -> LinearOperator:
    """The operator ``I + eta * H_o(theta)`` as a matrix-free map."""
    return LinearOperator(
        game.dim,
        lambda v: v + eta * game.offdiag_hvp(theta, v),
        lambda v: v + eta * game.offdiag_hvp_transpose(theta, v),
    )


def pcgd_step(game: Game, theta, config: OptimizerConfig, state: StepState | None = None):
    """``theta - eta * (I + eta H_o)^{-1} xi``, with the solve done by CG.

    A CG solve that misses its tolerance still yields a step from the best
    iterate; the report carries ``cg_converged=False``.
    """
    if state is None:
        state = StepState()
    theta = game.partition.check(theta, "theta")
    eta = config.eta
    _check_eta(eta)
    if not game.has_transpose:
        raise ContractError(f"{type(game).__name__} cannot run PCGD: no transposed off-diagonal HVP")
    xi = game.gradient(theta)
    M = pcgd_operator(game, theta, eta)
    x0 = state.previous_solution if config.warm_start else None
    max_iter = config.cg_max_iter or default_max_iter(game.dim)
    x, cg = conjugate_gradient_normal(M, xi, x0=x0, eps=config.cg_eps, max_iter=max_iter)
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite PCGD solve")
    state.previous_solution = x.copy()
    state.step += 1
    delta = -eta * x
    report = UpdateReport(
        "pcgd", float(np.linalg.norm(xi)), float(np.linalg.norm(delta)),
        cg_iterations=cg.iterations, cg_residual=cg.residual, cg_converged=cg.converged,
    )
    return theta + delta, report


def extragradient_step(game: Game, theta, eta: float):
    _check_eta(eta)
    theta = game.partition.check(theta, "theta")
    xi = game.gradient(theta)
    half = theta - eta * xi
    xi_half = game.gradient(half)
    delta = -eta * xi_half
    report = UpdateReport("extragradient", float(np.linalg.norm(xi)), float(np.linalg.norm(delta)),
                          gradient_calls=2)
    return theta + delta, report


def sga_step(game: Game, theta, eta: float, lam: float = 1.0):
    """Symplectic gradient adjustment with a fixed coefficient.

    The adjusted direction is ``xi + lam * A' xi`` with ``A`` the antisymmetric
    part of the game Hessian.  Block-diagonal Hessian blocks are symmetric and
    cancel in ``A``, so ``A' xi = (H_o' xi - H_o xi) / 2`` needs only the
    off-diagonal products.
    """
    _check_eta(eta)
    theta = game.partition.check(theta, "theta")
    if not game.has_transpose:
        raise ContractError(f"SGA is unsupported for {type(game).__name__}: no transposed HVP")
    xi = game.gradient(theta)
    if lam != 0.0:
        At_xi = 0.5 * (game.offdiag_hvp_transpose(theta, xi) - game.offdiag_hvp(theta, xi))
        direction = xi + lam * At_xi
    else:
        direction = xi
    delta = -eta * direction
    report = UpdateReport("sga", float(np.linalg.norm(xi)), float(np.linalg.norm(delta)))
    return theta + delta, report


def step(game: Game, theta, config: OptimizerConfig, state: StepState | None = None):
    """Dispatch one update of ``config.method``."""
    if state is None:
        state = StepState()
    if config.method == "pcgd":
        return pcgd_step(game, theta, config, state)
    if config.method == "simgd":
        out = simgd_step(game, theta, config.eta)
    elif config.method == "extragradient":
        out = extragradient_step(game, theta, config.eta)
    else:
        out = sga_step(game, theta, config.eta, config.sga_lambda)
    state.step += 1
    return out


def run(game: Game, theta0, config: OptimizerConfig, steps: int, state: StepState | None = None):
    """Apply ``steps`` updates; returns the list of iterates (including ``theta0``) and reports."""
    state = state or StepState()
    theta = game.partition.check(theta0, "theta0").copy()
    iterates, reports = [theta], []
    for _ in range(steps):
        theta, rep = step(game, theta, config, state)
        iterates.append(theta)
        reports.append(rep)
    return iterates, reports


@dataclass
class MultistartResult:
    theta: np.ndarray  # d x k final (or frozen) iterates
    stopped_at: np.ndarray  # step at which each column met ``stop``; -1 if never
    norms: np.ndarray  # steps+1 x k iterate norms (frozen columns repeat their last norm)
    cg_iterations: np.ndarray  # total CG iterations per column


def run_multistart(game: Game, Theta0, config: OptimizerConfig, steps: int, stop=None) -> MultistartResult:
    """Run independent starting points (columns of ``Theta0``) side by side.

    Each column follows exactly the single-start update of ``config.method``
    (PCGD columns get their own CG solve and warm start); only the arithmetic
    is batched.  ``stop(norms)`` returns a mask of columns to freeze.
    """
    Theta = np.array(Theta0, dtype=np.float64)
    if Theta.ndim != 2 or Theta.shape[0] != game.dim:
        raise ContractError(f"starting points must be a {game.dim} x k matrix")
    eta = config.eta
    k = Theta.shape[1]
    stopped_at = np.full(k, -1, dtype=np.int64)
    cg_total = np.zeros(k, dtype=np.int64)
    norms = [np.linalg.norm(Theta, axis=0)]
    active = np.ones(k, dtype=bool)
    if stop is not None:
        hit = stop(norms[0])
        stopped_at[hit] = 0
        active &= ~hit
    prev = None
    max_iter = config.cg_max_iter or default_max_iter(game.dim)
    for step_k in range(1, steps + 1):
        if not active.any():
            norms.append(norms[-1])
            continue
        Xi = game.gradient_columns(Theta)
        if config.method == "simgd":
            D = -eta * Xi
        elif config.method == "extragradient":
            D = -eta * game.gradient_columns(Theta - eta * Xi)
        elif config.method == "sga":
            At = 0.5 * (game.offdiag_hvp_transpose_columns(Theta, Xi) - game.offdiag_hvp_columns(Theta, Xi))
            D = -eta * (Xi + config.sga_lambda * At)
        else:
            X, rep = conjugate_gradient_normal_columns(
                lambda V: V + eta * game.offdiag_hvp_columns(Theta, V),
                lambda V: V + eta * game.offdiag_hvp_transpose_columns(Theta, V),
                Xi, X0=prev if config.warm_start else None, eps=config.cg_eps, max_iter=max_iter)
            prev = X
            cg_total += np.where(active, rep.iterations, 0)
            D = -eta * X
        if not np.all(np.isfinite(D[:, active])):
            raise NumericError(f"non-finite {config.method} update at step {step_k}")
        Theta = np.where(active, Theta + D, Theta)
        nrm = np.linalg.norm(Theta, axis=0)
        norms.append(nrm)
        if stop is not None:
            hit = active & stop(nrm)
            stopped_at[hit] = step_k
            active &= ~hit
    return MultistartResult(Theta, stopped_at, np.array(norms), cg_total)
