"""Matrix-free linear operators and a conjugate-gradient solver.

An operator is anything exposing ``domain_dim``, ``range_dim``, ``apply``
and ``apply_adjoint`` over flat float64 vectors; the adjoint pair must
satisfy <Ax, y> = <x, A^T y> up to floating-point roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalFailureError


@dataclass(frozen=True)
class LinearOperator:
    """Behavioral apply/adjoint pair on flat vectors."""

    domain_dim: int
    range_dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    apply_adjoint: Callable[[np.ndarray], np.ndarray]


def matrix_operator(mat):
    """Wrap a dense 2-D array as a LinearOperator."""
    mat = np.asarray(mat, dtype=np.float64)
    return LinearOperator(
        domain_dim=mat.shape[1],
        range_dim=mat.shape[0],
        apply=lambda x: mat @ x,
        apply_adjoint=lambda y: mat.T @ y,
    )


class DiagonalOperator:
    """Square operator with positive singular values, stored nonincreasing.

    Satisfies the LinearOperator contract; apply and apply_adjoint coincide.
    """

    def __init__(self, singular_values):
        s = np.asarray(singular_values, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("singular_values must be a nonempty 1-D array")
        if np.any(s <= 0):
            raise ValueError("singular values must be positive")
        if np.any(np.diff(s) > 0):
            raise ValueError("singular values must be nonincreasing")
        self.singular_values = s
        self.domain_dim = s.size
        self.range_dim = s.size

    def apply(self, x):
        return self.singular_values * x

    def apply_adjoint(self, y):
        return self.singular_values * y


def adjoint_defect(op, n_probes=10, seed=0):
    """Max relative defect |<Ax,y> - <x,A^T y>| / (||Ax|| ||y||) on random probes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        x = rng.standard_normal(op.domain_dim)
        y = rng.standard_normal(op.range_dim)
        ax = op.apply(x)
        aty = op.apply_adjoint(y)
        defect = abs(ax @ y - x @ aty) / (np.linalg.norm(ax) * np.linalg.norm(y))
        worst = max(worst, defect)
    return worst


@dataclass(frozen=True)
class CgResult:
    """Solution plus convergence metadata."""

    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool


def cg_solve(apply_spd, rhs, tol=1e-10, max_iter=2000, x0=None):
    """Conjugate gradients for M x = rhs with M symmetric positive definite.

    Parameters
    ----------
    apply_spd : callable
        x -> M x for the SPD operator M (behavioral assumption, unchecked).
    rhs : ndarray
        Right-hand side.
    tol : float
        Stop when ||M x - rhs|| <= tol * ||rhs||. Must be > 0.
    max_iter : int
        Iteration cap; hitting it is reported, not raised.
    x0 : ndarray, optional
        Warm start; defaults to zero.

    Returns
    -------
    CgResult

    Raises
    ------
    NumericalFailureError
        If non-finite values appear during the iteration.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
    r = rhs - apply_spd(x)
    p = r.copy()
    rs = r @ r
    if not np.isfinite(rs):
        raise NumericalFailureError("non-finite initial residual in cg_solve")
    rhs_norm = float(np.linalg.norm(rhs))
    threshold = tol * rhs_norm
    iterations = 0
    while np.sqrt(rs) > threshold and iterations < max_iter:
        mp = apply_spd(p)
        denom = p @ mp
        if not np.isfinite(denom) or denom <= 0.0:
            if denom == 0.0 and rs == 0.0:
                break
            raise NumericalFailureError(
                f"CG breakdown at iteration {iterations}: p^T M p = {denom}"
            )
        step = rs / denom
        x = x + step * p
        r = r - step * mp
        rs_next = r @ r
        if not np.isfinite(rs_next):
            raise NumericalFailureError(f"non-finite residual at iteration {iterations}")
        p = r + (rs_next / rs) * p
        rs = rs_next
        iterations += 1
    residual_norm = float(np.sqrt(rs))
    return CgResult(
        x=x,
        iterations=iterations,
        residual_norm=residual_norm,
        converged=residual_norm <= threshold,
    )
