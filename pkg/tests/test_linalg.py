from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcgd.game import ContractError
from pcgd.linalg import (
    LinearOperator, conjugate_gradient_normal, conjugate_gradient_normal_columns, dense_matvec, dense_solve,
    spectral_norm_symmetric, spectral_radius,
)


def test_cg_identity_one_iteration():
    y = np.array([3.0, -1.0, 2.0])
    x, rep = conjugate_gradient_normal(np.eye(3), y)
    np.testing.assert_allclose(x, y)
    assert rep.iterations <= 1 and rep.converged


def test_cg_bilinear_system():
    x, rep = conjugate_gradient_normal(np.array([[1.0, 1.0], [-1.0, 1.0]]), np.array([1.0, -1.0]))
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
    assert rep.converged


def test_cg_zero_rhs():
    x, rep = conjugate_gradient_normal(np.eye(2), np.zeros(2), x0=np.ones(2))
    np.testing.assert_array_equal(x, 0.0)
    assert rep.residual == 0.0 and rep.converged


def test_cg_needs_transpose():
    op = LinearOperator(2, lambda v: v)
    with pytest.raises(ContractError):
        conjugate_gradient_normal(op, np.ones(2))


def test_cg_inconsistent_system_solves_normal_equations():
    # y orthogonal to range(M): M'y = 0, so x = 0 satisfies the stopping rule
    M = np.array([[1.0, 0.0], [0.0, 0.0]])
    x, rep = conjugate_gradient_normal(M, np.array([0.0, 1.0]))
    np.testing.assert_array_equal(x, 0.0)
    assert rep.converged


def test_cg_iteration_cap_is_reported_not_raised():
    rng = np.random.default_rng(0)
    M = np.diag(np.logspace(0, 3, 20)) + 0.1 * rng.standard_normal((20, 20))
    x, rep = conjugate_gradient_normal(M, np.ones(20), eps=1e-14, max_iter=2)
    assert not rep.converged and rep.iterations == 2
    assert np.all(np.isfinite(x))
    assert rep.residual == pytest.approx(min(rep.history))


def test_cg_warm_start_at_solution_takes_no_iterations():
    M = np.array([[2.0, 1.0], [-1.0, 3.0]])
    y = np.array([1.0, 2.0])
    x, rep = conjugate_gradient_normal(M, y, x0=np.linalg.solve(M, y))
    assert rep.iterations == 0 and rep.warm_started


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), d=st.integers(1, 24), eta=st.floats(0.01, 10.0))
def test_cg_matches_dense_and_termination_holds(seed, d, eta):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d))
    M = np.eye(d) + eta * 0.5 * (A - A.T)
    y = rng.standard_normal(d)
    eps = 1e-8
    x, rep = conjugate_gradient_normal(M, y, eps=eps)
    assert rep.converged
    b = M.T @ y
    assert np.linalg.norm(M.T @ M @ x - b) <= eps * np.linalg.norm(b) * (1 + 1e-6)
    ref = dense_solve(M, y)
    assert np.linalg.norm(x - ref) <= 1e-6 * np.linalg.norm(ref) * max(1.0, np.linalg.cond(M))


def test_cg_columns_match_single_column_solves():
    rng = np.random.default_rng(4)
    d, k = 6, 5
    A = rng.standard_normal((d, d))
    M = np.eye(d) + 2.0 * (A - A.T)
    Y = rng.standard_normal((d, k))
    X, rep = conjugate_gradient_normal_columns(lambda V: M @ V, lambda V: M.T @ V, Y, eps=1e-10)
    assert rep.converged.all()
    for j in range(k):
        x, single = conjugate_gradient_normal(M, Y[:, j], eps=1e-10)
        np.testing.assert_allclose(X[:, j], x, rtol=1e-8, atol=1e-10)
        assert rep.iterations[j] == single.iterations


def test_spectral_norm_examples():
    assert spectral_norm_symmetric(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-9)
    assert spectral_norm_symmetric(np.zeros((4, 4))) == 0.0
    assert spectral_norm_symmetric(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0, rel=1e-9)


@pytest.mark.parametrize("F, rho", [
    (0.5 * np.eye(3), 0.5),
    (np.array([[0.0, 0.7], [-0.7, 0.0]]), 0.7),
    (np.diag([0.9, -1.1]), 1.1),
])
def test_spectral_radius_examples(F, rho):
    est = spectral_radius(F)
    assert est.value == pytest.approx(rho, rel=1e-7)
    assert est.accurate


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), d=st.integers(2, 10))
def test_spectral_radius_matches_eigvals(seed, d):
    F = np.random.default_rng(seed).standard_normal((d, d))
    exact = np.abs(np.linalg.eigvals(F)).max()
    assert spectral_radius(F, tol=1e-10, max_iter=50_000).value == pytest.approx(exact, rel=1e-4)


def test_dense_matvec_example_and_mismatch():
    np.testing.assert_array_equal(dense_matvec([[0, 1], [-1, 0]], [1, 1]), [1, -1])
    with pytest.raises(ContractError):
        dense_matvec(np.eye(2), np.ones(3))
