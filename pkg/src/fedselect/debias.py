"""Debiasing of L1-penalized fits via a relaxed-inverse-covariance correction.

The corrected estimate is

    theta_d = theta_hat + (1/n) M X^T (y - X theta_hat)

where M approximately inverts the sample covariance Sigma_hat = X^T X / n.
M is built row-by-row from penalized regressions of each column on the
rest (objective (1/2n)||x_i - X_{-i} g||^2 + lambda_tilde ||g||_1), or set
to Sigma^{-1} directly when the population covariance is known.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import Dataset
from .errors import DegenerateColumnError, ParameterError
from .lasso import LassoFit, _fit_gram, lambda_tilde_theory, to_objective_scale

_A_SQ_FLOOR = 1e-12


@dataclass
class DebiasedFit:
    """A debiased coefficient vector with the pieces that produced it."""

    theta_d: np.ndarray
    M: np.ndarray
    lambda_tilde: float | None
    sigma_hat: float
    lasso: LassoFit


def nodewise_regression(
    X: np.ndarray,
    i: int,
    lambda_tilde: float,
    *,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    gram: np.ndarray | None = None,
) -> np.ndarray:
    """Penalized regression of column i on the remaining columns.

    Minimizes (1/2n)||x_i - X_{-i} g||^2 + lambda_tilde ||g||_1, solved on
    the 2n-rescaled objective.  Returns the length p-1 coefficient vector.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not 0 <= i < p:
        raise ParameterError(f"column index {i} out of range for p={p}")
    if p < 2:
        raise ParameterError("nodewise regression needs at least two columns")
    if lambda_tilde < 0.0:
        raise ParameterError(f"lambda_tilde must be >= 0, got {lambda_tilde}")
    G = X.T @ X if gram is None else gram
    keep = np.arange(p) != i
    G_sub = G[np.ix_(keep, keep)]
    b_sub = G[keep, i]
    lam_obj = to_objective_scale(lambda_tilde, n)
    slack = tol * (lam_obj + float(np.max(np.abs(b_sub), initial=0.0)))
    gamma, _, converged, _ = _fit_gram(
        G_sub, b_sub, lam_obj, slack=slack, tol=tol, max_iter=max_iter
    )
    if not converged:
        raise DegenerateColumnError(
            f"relaxed projection for column {i} did not converge", column=i
        )
    return gamma


def build_m(
    X: np.ndarray,
    lambda_tilde: float | None = None,
    *,
    K: float = 2.0,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Assemble the relaxed inverse covariance M from p nodewise regressions.

    Row i of M is the i-th row of C (ones on the diagonal, -gamma_i off it)
    divided by a_i^2 = (x_i - X_{-i} gamma_i)^T x_i / n.  A collapsed scale
    a_i^2 <= 1e-12 (e.g. a duplicated column) raises DegenerateColumnError.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    G = X.T @ X
    if p == 1:
        a_sq = G[0, 0] / n
        if a_sq <= _A_SQ_FLOOR:
            raise DegenerateColumnError(
                f"residual scale for column 0 collapsed (a^2={a_sq:.3e})", column=0
            )
        return np.array([[1.0 / a_sq]])
    if lambda_tilde is None:
        lambda_tilde = lambda_tilde_theory(n, p, K)
    M = np.zeros((p, p))
    indices = np.arange(p)
    for i in range(p):
        gamma = nodewise_regression(
            X, i, lambda_tilde, tol=tol, max_iter=max_iter, gram=G
        )
        keep = indices != i
        # (x_i - X_{-i} gamma)^T x_i computed on the Gram pair
        a_sq = (G[i, i] - float(gamma @ G[keep, i])) / n
        if a_sq <= _A_SQ_FLOOR:
            raise DegenerateColumnError(
                f"residual scale for column {i} collapsed (a^2={a_sq:.3e})", column=i
            )
        M[i, i] = 1.0 / a_sq
        M[i, keep] = -gamma / a_sq
    return M


def known_covariance_m(covariance: np.ndarray | None, p: int) -> np.ndarray:
    """M = Sigma^{-1} for a known population covariance (None means identity)."""
    if covariance is None:
        return np.eye(p)
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (p, p):
        raise ParameterError(f"covariance must be ({p}, {p}), got {cov.shape}")
    return np.linalg.inv(cov)


def debias(
    dataset: Dataset,
    fit: LassoFit,
    M: np.ndarray,
    *,
    lambda_tilde: float | None = None,
    sigma_hat: float = 0.0,
) -> DebiasedFit:
    """Apply the correction theta_hat + (1/n) M X^T (y - X theta_hat)."""
    M = np.asarray(M, dtype=float)
    if M.shape != (dataset.p, dataset.p):
        raise ParameterError(f"M must be ({dataset.p}, {dataset.p}), got {M.shape}")
    theta = fit.coefficients
    residual = dataset.y - dataset.X @ theta
    theta_d = theta + (M @ (dataset.X.T @ residual)) / dataset.n
    return DebiasedFit(
        theta_d=theta_d, M=M, lambda_tilde=lambda_tilde, sigma_hat=sigma_hat, lasso=fit
    )
