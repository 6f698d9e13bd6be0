"""Matrix-free linear algebra: normal-equations CG and spectral estimators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .game import ContractError

Vector = np.ndarray


@dataclass
class LinearOperator:
    """A d x d linear map given by its action (and optionally its transpose)."""

    dim: int
    apply: Callable[[Vector], Vector]
    apply_transpose: Callable[[Vector], Vector] | None = None
    batched: bool = False  # apply also accepts a d x k matrix of columns

    @classmethod
    def from_matrix(cls, M) -> LinearOperator:
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ContractError(f"expected a square matrix, got shape {M.shape}")
        return cls(M.shape[0], lambda v: M @ v, lambda v: M.T @ v, batched=True)

    def __matmul__(self, v):
        return self.apply(v)

    @property
    def T(self) -> LinearOperator:
        if self.apply_transpose is None:
            raise ContractError("operator has no transpose")
        return LinearOperator(self.dim, self.apply_transpose, self.apply, self.batched)

    def apply_columns(self, Q: np.ndarray) -> np.ndarray:
        if self.batched:
            return self.apply(Q)
        return np.column_stack([self.apply(q) for q in Q.T])

    def to_dense(self) -> np.ndarray:
        return np.column_stack([self.apply(e) for e in np.eye(self.dim)])


def as_operator(M) -> LinearOperator:
    return M if isinstance(M, LinearOperator) else LinearOperator.from_matrix(M)


@dataclass
class CgReport:
    iterations: int
    residual: float
    converged: bool
    warm_started: bool
    history: list[float] = field(default_factory=list, repr=False)


def default_max_iter(d: int) -> int:
    return max(1, min(10 * d, 500))


def conjugate_gradient_normal(M, y, x0=None, eps: float = 1e-6, max_iter: int | None = None):
    """Solve ``M x = y`` by conjugate gradients on ``M'M x = M'y``.

    Stops once ``||M'M x - M'y|| <= eps ||M'y||``.  The residual is recomputed
    from scratch before declaring convergence, so the reported relative
    residual is the true one at the returned iterate.  ``report.history`` holds
    the relative residual of the recursion at every iteration.

    Returns ``(x, CgReport)``.  On breakdown or when ``max_iter`` runs out the
    best iterate seen is returned with ``converged=False``.
    """
    M = as_operator(M)
    if M.apply_transpose is None:
        raise ContractError("normal-equations CG needs the transpose of M")
    y = np.asarray(y, dtype=np.float64)
    d = M.dim
    if y.shape != (d,):
        raise ContractError(f"right-hand side must have shape ({d},), got {y.shape}")
    if eps <= 0:
        raise ContractError("eps must be positive")
    if max_iter is None:
        max_iter = default_max_iter(d)
    if max_iter < 1:
        raise ContractError("max_iter must be at least 1")

    def normal(v):
        return M.apply_transpose(M.apply(v))

    b = M.apply_transpose(y)
    b_norm = np.linalg.norm(b)
    warm = x0 is not None and np.any(x0)
    if b_norm == 0.0:
        return np.zeros(d), CgReport(0, 0.0, True, bool(warm), [0.0])

    x = np.zeros(d) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (d,):
        raise ContractError(f"initial guess must have shape ({d},), got {x.shape}")
    r = b - normal(x) if warm else b.copy()
    rel = np.linalg.norm(r) / b_norm
    history = [rel]
    best_x, best_rel = x.copy(), rel
    if rel <= eps:
        return x, CgReport(0, rel, True, bool(warm), history)

    p = r.copy()
    rr = r @ r
    for k in range(1, max_iter + 1):
        Ap = normal(p)
        curvature = p @ Ap
        if not curvature > 0.0:
            return best_x, CgReport(k, best_rel, False, bool(warm), history)
        alpha = rr / curvature
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = r @ r
        rel = np.sqrt(rr_new) / b_norm
        if rel <= eps:
            # the recursive residual drifts from the true one; confirm before stopping
            r = b - normal(x)
            rr_new = r @ r
            rel = np.sqrt(rr_new) / b_norm
        history.append(rel)
        if rel < best_rel:
            best_x, best_rel = x.copy(), rel
        if rel <= eps:
            return x, CgReport(k, rel, True, bool(warm), history)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return best_x, CgReport(max_iter, best_rel, False, bool(warm), history)


@dataclass
class CgColumnsReport:
    iterations: np.ndarray  # per column
    residual: np.ndarray
    converged: np.ndarray


def conjugate_gradient_normal_columns(apply, apply_transpose, Y, X0=None, eps: float = 1e-6,
                                      max_iter: int | None = None):
    """Column-wise :func:`conjugate_gradient_normal` for independent systems.

    ``apply`` and ``apply_transpose`` map a d x k block of columns to a d x k
    block, column j through its own operator.  Every column runs its own CG
    recursion and stopping test; finished columns are frozen while the rest
    continue.  Used to run many starting points of one game side by side.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ContractError("right-hand sides must be a d x k matrix")
    d, k = Y.shape
    if eps <= 0:
        raise ContractError("eps must be positive")
    max_iter = default_max_iter(d) if max_iter is None else max_iter

    def normal(V):
        return apply_transpose(apply(V))

    B = apply_transpose(Y)
    b_norm = np.linalg.norm(B, axis=0)
    zero = b_norm == 0.0
    safe = np.where(zero, 1.0, b_norm)
    X = np.zeros((d, k)) if X0 is None else np.array(X0, dtype=np.float64)
    X[:, zero] = 0.0
    R = B - normal(X) if X0 is not None else B.copy()
    rel = np.linalg.norm(R, axis=0) / safe
    rel[zero] = 0.0
    iters = np.zeros(k, dtype=np.int64)
    active = rel > eps
    best_X, best_rel = X.copy(), rel.copy()
    P = R.copy()
    rr = np.einsum("ij,ij->j", R, R)
    for it in range(1, max_iter + 1):
        if not active.any():
            break
        AP = normal(P)
        curv = np.einsum("ij,ij->j", P, AP)
        broken = active & ~(curv > 0.0)
        active &= ~broken
        alpha = np.where(active, rr / np.where(active, curv, 1.0), 0.0)
        X = X + alpha * P
        R = R - alpha * AP
        rr_new = np.einsum("ij,ij->j", R, R)
        rel_new = np.sqrt(rr_new) / safe
        check = active & (rel_new <= eps)
        if check.any():
            R_true = B - normal(X)
            R[:, check] = R_true[:, check]
            rr_new[check] = np.einsum("ij,ij->j", R_true, R_true)[check]
            rel_new[check] = np.sqrt(rr_new[check]) / safe[check]
        rel = np.where(active, rel_new, rel)
        iters[active] = it
        improved = active & (rel < best_rel)
        best_X[:, improved] = X[:, improved]
        best_rel[improved] = rel[improved]
        done = active & (rel <= eps)
        active &= ~done
        beta = np.where(active, rr_new / np.where(rr > 0, rr, 1.0), 0.0)
        P = np.where(active, R + beta * P, P)
        rr = np.where(active, rr_new, rr)
    converged = rel <= eps
    X = np.where(converged, X, best_X)
    return X, CgColumnsReport(iters, np.where(converged, rel, best_rel), converged)


def dense_solve(M, y) -> np.ndarray:
    """Direct solve used as a cross-check for small systems."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape[0] > 200:
        raise ContractError("dense cross-check solve is limited to d <= 200")
    return np.linalg.solve(M, y)


def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def spectral_norm_symmetric(S, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest |eigenvalue| of a symmetric operator by power iteration.

    Iterates until the estimate changes by less than ``tol`` (relative) between
    ``k`` and ``2k`` iterations.
    """
    S = as_operator(S)
    if S.dim == 0:
        raise ContractError("operator has dimension 0")
    v = _unit(np.random.default_rng(seed).standard_normal(S.dim))
    estimate = 0.0
    checkpoint = 1
    reference = None
    for k in range(1, max_iter + 1):
        w = S.apply(v)
        estimate = float(np.linalg.norm(w))
        if estimate == 0.0:
            return 0.0
        v = w / estimate
        if k == checkpoint:
            if reference is not None and abs(estimate - reference) <= tol * estimate:
                return estimate
            reference = estimate
            checkpoint *= 2
    return estimate


@dataclass
class SpectralRadiusEstimate:
    value: float
    accurate: bool
    iterations: int

    def __float__(self):
        return self.value


def _ritz(F: LinearOperator, Q: np.ndarray):
    """Dominant Ritz value of F on range(Q) and its relative residual."""
    FQ = F.apply_columns(Q)
    B = Q.T @ FQ
    lams, Y = np.linalg.eig(B)
    k = int(np.argmax(np.abs(lams)))
    lam = lams[k]
    rho = float(abs(lam))
    if rho == 0.0:
        return 0.0, 0.0, FQ
    y = Y[:, k]
    resid = np.linalg.norm(FQ @ y - lam * (Q @ y)) / (rho * np.linalg.norm(Q @ y))
    return rho, float(resid), FQ


def spectral_radius(F, tol: float = 1e-8, max_iter: int = 20_000, restarts: int = 5,
                    seed: int = 0, block: int = 4) -> SpectralRadiusEstimate:
    """Estimate max |eigenvalue| of a (possibly nonsymmetric) operator.

    Block power iteration on ``block`` vectors from ``restarts`` seeded random
    starts.  The dominant Ritz value of the iterated subspace is accepted once
    its Ritz pair has relative residual below ``tol``; a dominant
    complex-conjugate pair is captured because the block holds at least two
    directions.  The largest estimate over all starts is returned and
    ``accurate`` is False if some start never settled.
    """
    F = as_operator(F)
    if F.dim == 0:
        return SpectralRadiusEstimate(0.0, True, 0)
    m = min(F.dim, max(2, block))
    rng = np.random.default_rng(seed)
    best = 0.0
    accurate = True
    total = 0
    for _ in range(max(1, restarts)):
        Q, _ = np.linalg.qr(rng.standard_normal((F.dim, m)))
        rho, settled, k = 0.0, False, 0
        while k < max_iter:
            rho, resid, FQ = _ritz(F, Q)
            k += 1
            if rho == 0.0 or resid <= tol:
                settled = True
                break
            Q, _ = np.linalg.qr(FQ)
            for _ in range(3):
                Q, _ = np.linalg.qr(F.apply_columns(Q))
            k += 3
        total += k
        accurate &= settled
        best = max(best, rho)
    return SpectralRadiusEstimate(best, accurate, total)


def dense_matvec(A, x) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if A.ndim != 2 or x.shape != (A.shape[1],):
        raise ContractError(f"cannot multiply {A.shape} by {x.shape}")
    return A @ x


def dense_transpose(A) -> np.ndarray:
    return np.asarray(A, dtype=np.float64).T.copy()


def dense_add(A, B) -> np.ndarray:
    A, B = np.asarray(A, dtype=np.float64), np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ContractError(f"shape mismatch {A.shape} vs {B.shape}")
    return A + B


def dense_scale(alpha: float, A) -> np.ndarray:
    return alpha * np.asarray(A, dtype=np.float64)
