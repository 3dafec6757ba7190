"""Centralized reference pipeline: pooled penalized fit, then a refit."""

from __future__ import annotations

import numpy as np

from .datagen import Dataset, SeedLike
from .lasso import cross_validate_lambda, default_lambda_grid, fit_lasso


def centralized_lasso_refit(
    dataset: Dataset,
    k_folds: int = 5,
    rng_seed: SeedLike = 0,
    *,
    grid_size: int = 50,
    grid_ratio: float = 1e-4,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Cross-validated pooled fit, then ordinary least squares on its support.

    Returns (theta_full, support).  An empty penalized support yields the
    zero vector.
    """
    grid = default_lambda_grid(dataset, num=grid_size, ratio=grid_ratio)
    cv = cross_validate_lambda(
        dataset, k_folds=k_folds, lambda_grid=grid, rng_seed=rng_seed,
        tol=tol, max_iter=max_iter,
    )
    fit = fit_lasso(dataset, cv.lam, tol=tol, max_iter=max_iter)
    support = tuple(int(j) for j in np.flatnonzero(fit.coefficients))
    theta_full = np.zeros(dataset.p)
    if support:
        cols = np.asarray(support, dtype=np.int64)
        coef, *_ = np.linalg.lstsq(dataset.X[:, cols], dataset.y, rcond=None)
        theta_full[cols] = coef
    return theta_full, support
