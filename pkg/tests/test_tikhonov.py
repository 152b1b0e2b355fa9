import numpy as np
import pytest

from compact_tik.grid import shepp_logan
from compact_tik.linop import DiagonalOperator, LinearOperator, matrix_operator
from compact_tik.radon import RadonGeometry, radon_forward, radon_operator
from compact_tik.tikhonov import (
    TikhonovProblem,
    dense_normal_solve,
    solve_tikhonov,
    tikhonov_objective,
    z_alpha,
)


def zero_operator(n, m):
    return LinearOperator(
        domain_dim=n,
        range_dim=m,
        apply=lambda x: np.zeros(m),
        apply_adjoint=lambda y: np.zeros(n),
    )


def test_zero_operator_returns_prior():
    rng = np.random.default_rng(0)
    x_star = rng.standard_normal(6)
    problem = TikhonovProblem(
        op=zero_operator(6, 4), data=rng.standard_normal(4), alpha=0.7, x_star=x_star
    )
    res = solve_tikhonov(problem)
    assert np.allclose(res.x, x_star, atol=1e-12)


def test_identity_closed_form():
    n = 5
    ident = matrix_operator(np.eye(n))
    c = 3.0
    alpha = 0.25
    res = solve_tikhonov(TikhonovProblem(op=ident, data=np.full(n, c), alpha=alpha))
    assert np.allclose(res.x, np.full(n, c / (1 + alpha)), atol=1e-10)


def test_alpha_validation():
    with pytest.raises(ValueError):
        TikhonovProblem(op=matrix_operator(np.eye(2)), data=np.ones(2), alpha=0.0)


def test_dimension_validation():
    with pytest.raises(ValueError):
        TikhonovProblem(op=matrix_operator(np.eye(2)), data=np.ones(3), alpha=1.0)
    with pytest.raises(ValueError):
        TikhonovProblem(
            op=matrix_operator(np.eye(2)), data=np.ones(2), alpha=1.0, x_star=np.ones(3)
        )


def test_radon_normal_equation_residual():
    img = shepp_logan(32, 32)
    geom = RadonGeometry.for_grid(32, 12)
    op = radon_operator(geom, 32, 32)
    data = radon_forward(img, geom).values
    res = solve_tikhonov(TikhonovProblem(op=op, data=data, alpha=0.1), tol=1e-8)
    rhs_norm = np.linalg.norm(op.apply_adjoint(data))
    assert res.residual_norm <= 1e-8 * rhs_norm


def test_cg_matches_dense_oracle_16():
    img = shepp_logan(16, 16)
    geom = RadonGeometry.for_grid(16, 10)
    op = radon_operator(geom, 16, 16)
    from compact_tik.radon import dense_matrix

    mat = dense_matrix(geom, 16, 16)
    rng = np.random.default_rng(4)
    data = radon_forward(img, geom).values + 0.01 * rng.standard_normal(geom.size)
    for alpha in (1e-3, 1e-1, 10.0):
        res = solve_tikhonov(TikhonovProblem(op=op, data=data, alpha=alpha), max_iter=5000)
        direct = dense_normal_solve(mat, data, alpha)
        rel = np.linalg.norm(res.x - direct) / np.linalg.norm(direct)
        assert rel <= 1e-6


def test_stability_bound_random_pairs():
    # ||x_a(y1) - x_a(y2)|| <= ||y1 - y2|| / (2 sqrt(alpha))
    rng = np.random.default_rng(5)
    geom = RadonGeometry.for_grid(16, 8)
    op = radon_operator(geom, 16, 16)
    alpha = 0.05
    for _ in range(20):
        y1 = rng.standard_normal(geom.size)
        y2 = rng.standard_normal(geom.size)
        x1 = solve_tikhonov(TikhonovProblem(op=op, data=y1, alpha=alpha)).x
        x2 = solve_tikhonov(TikhonovProblem(op=op, data=y2, alpha=alpha)).x
        lhs = np.linalg.norm(x1 - x2)
        rhs = np.linalg.norm(y1 - y2) / (2 * np.sqrt(alpha))
        assert lhs <= rhs * (1 + 1e-8)


def test_distance_to_prior_monotone_in_alpha():
    rng = np.random.default_rng(6)
    geom = RadonGeometry.for_grid(16, 8)
    op = radon_operator(geom, 16, 16)
    data = rng.standard_normal(geom.size)
    alphas = np.logspace(-4, 2, 13)
    norms = []
    for alpha in alphas:
        res = solve_tikhonov(TikhonovProblem(op=op, data=data, alpha=float(alpha)),
                             max_iter=5000)
        norms.append(np.linalg.norm(res.x))
    for a, b in zip(norms, norms[1:]):
        assert b <= a * (1 + 1e-8)


def test_objective_dominance():
    rng = np.random.default_rng(7)
    geom = RadonGeometry.for_grid(12, 6)
    op = radon_operator(geom, 12, 12)
    data = rng.standard_normal(geom.size)
    alpha = 0.3
    tol = 1e-10
    res = solve_tikhonov(TikhonovProblem(op=op, data=data, alpha=alpha), tol=tol)
    j_star = tikhonov_objective(op, data, alpha, res.x)
    for _ in range(10):
        v = rng.standard_normal(144)
        assert j_star <= tikhonov_objective(op, data, alpha, v) + 10 * tol


def test_z_alpha_identity():
    ident = matrix_operator(np.eye(4))
    x_dagger = np.array([1.0, 2.0, -1.0, 0.5])
    w = np.array([0.5, -0.5, 1.0, 2.0])
    alpha = 0.8
    z = z_alpha(ident, x_dagger, w, alpha)
    assert np.allclose(z, x_dagger - (alpha / (1 + alpha)) * w, atol=1e-10)


def test_z_alpha_tiny_alpha_identity():
    ident = matrix_operator(np.eye(3))
    x_dagger = np.ones(3)
    w = np.array([1.0, -2.0, 3.0])
    alpha = 1e-12
    z = z_alpha(ident, x_dagger, w, alpha)
    assert np.allclose(z, x_dagger - alpha * w / (1 + alpha), atol=1e-15)


def test_z_alpha_diagonal_componentwise():
    s = np.array([2.0, 1.0, 0.5, 0.25])
    op = DiagonalOperator(s)
    rng = np.random.default_rng(8)
    x_dagger = rng.standard_normal(4)
    w = rng.standard_normal(4)
    alpha = 0.37
    z = z_alpha(op, x_dagger, w, alpha)
    expected = x_dagger - alpha * s * w / (s**2 + alpha)
    assert np.allclose(z, expected, atol=1e-10)


def test_z_alpha_validation():
    ident = matrix_operator(np.eye(3))
    with pytest.raises(ValueError):
        z_alpha(ident, np.ones(3), np.ones(3), alpha=0.0)
    with pytest.raises(ValueError):
        z_alpha(ident, np.ones(2), np.ones(3), alpha=1.0)
