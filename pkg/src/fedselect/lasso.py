"""L1-penalized least squares by cyclic coordinate descent.

The objective solved here is

    F(theta) = ||y - X theta||_2^2 + lam * ||theta||_1

with no 1/(2n) prefactor.  Theory-driven penalty formulas (`lambda_theory`,
`lambda_tilde_theory`) are stated on the (1/(2n))||.||^2 + lam||.||_1 scale
common in the debiasing literature; `to_objective_scale` converts them
(multiply by 2n) before they drive this solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .datagen import Dataset, SeedLike, _as_rng
from .errors import ParameterError


def soft_threshold(z, t):
    """Elementwise sign(z) * max(|z| - t, 0)."""
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@dataclass
class LassoFit:
    """Solution of the penalized objective at one penalty value."""

    coefficients: np.ndarray
    lam: float
    iterations: int
    converged: bool
    objective: float
    objective_trace: np.ndarray | None = None


@njit(cache=True)
def _cd_solve(G, b, lam, theta, max_iter, tol, slack, obj_out, record_obj, yty):
    """Cyclic coordinate descent on the Gram form of the objective.

    Maintains q = G @ theta.  A fit counts as converged only after a full
    sweep whose largest coefficient change is below tol *and* whose
    subgradient residual is within `slack`.  Between full sweeps the active
    (nonzero) coordinates are iterated alone.  Returns (sweeps, converged).
    """
    p = G.shape[0]
    q = G @ theta
    lam_half = 0.5 * lam
    sweeps = 0
    converged = False
    while sweeps < max_iter:
        # full sweep over every coordinate
        max_delta = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            rho = b[j] - q[j] + gjj * theta[j]
            if rho > lam_half:
                new = (rho - lam_half) / gjj
            elif rho < -lam_half:
                new = (rho + lam_half) / gjj
            else:
                new = 0.0
            d = new - theta[j]
            if d != 0.0:
                for k in range(p):
                    q[k] += G[k, j] * d
                theta[j] = new
                ad = abs(d)
                if ad > max_delta:
                    max_delta = ad
        sweeps += 1
        if record_obj:
            l1 = 0.0
            tq = 0.0
            tb = 0.0
            for k in range(p):
                l1 += abs(theta[k])
                tq += theta[k] * q[k]
                tb += theta[k] * b[k]
            obj_out[sweeps - 1] = yty - 2.0 * tb + tq + lam * l1
        if max_delta < tol:
            # subgradient residual check at the full-sweep point
            kkt = 0.0
            for j in range(p):
                grad = 2.0 * (b[j] - q[j])
                if theta[j] > 0.0:
                    v = abs(grad - lam)
                elif theta[j] < 0.0:
                    v = abs(grad + lam)
                else:
                    v = abs(grad) - lam
                    if v < 0.0:
                        v = 0.0
                if v > kkt:
                    kkt = v
            if kkt <= slack:
                converged = True
                break
        # active-set sweeps until the nonzero coordinates settle
        while sweeps < max_iter:
            max_delta_a = 0.0
            changed = False
            for j in range(p):
                if theta[j] == 0.0:
                    continue
                gjj = G[j, j]
                if gjj <= 0.0:
                    continue
                rho = b[j] - q[j] + gjj * theta[j]
                if rho > lam_half:
                    new = (rho - lam_half) / gjj
                elif rho < -lam_half:
                    new = (rho + lam_half) / gjj
                else:
                    new = 0.0
                d = new - theta[j]
                if d != 0.0:
                    for k in range(p):
                        q[k] += G[k, j] * d
                    theta[j] = new
                    changed = True
                    ad = abs(d)
                    if ad > max_delta_a:
                        max_delta_a = ad
            sweeps += 1
            if record_obj:
                l1 = 0.0
                tq = 0.0
                tb = 0.0
                for k in range(p):
                    l1 += abs(theta[k])
                    tq += theta[k] * q[k]
                    tb += theta[k] * b[k]
                obj_out[sweeps - 1] = yty - 2.0 * tb + tq + lam * l1
            if max_delta_a < tol or not changed:
                break
    return sweeps, converged


def _fit_gram(
    G: np.ndarray,
    b: np.ndarray,
    lam: float,
    *,
    slack: float,
    theta0: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    record_obj: bool = False,
    yty: float = 0.0,
) -> tuple[np.ndarray, int, bool, np.ndarray | None]:
    """Solve on a precomputed Gram pair (used by fit_lasso, CV, and debiasing)."""
    p = G.shape[0]
    theta = np.zeros(p) if theta0 is None else np.array(theta0, dtype=float)
    obj_out = np.zeros(max_iter) if record_obj else np.zeros(1)
    sweeps, converged = _cd_solve(
        G, b, lam, theta, max_iter, tol, slack, obj_out, record_obj, yty
    )
    trace = obj_out[:sweeps].copy() if record_obj else None
    return theta, sweeps, bool(converged), trace


def kkt_scale(X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Slack scale for the subgradient check: lam + ||X^T y||_inf."""
    return lam + float(np.max(np.abs(X.T @ y), initial=0.0))


def kkt_residual(X: np.ndarray, y: np.ndarray, theta: np.ndarray, lam: float) -> float:
    """Worst-coordinate subgradient violation of the objective at theta.

    For theta_j != 0 the stationarity residual is |2 x_j^T (y - X theta) -
    lam * sign(theta_j)|; for theta_j == 0 it is the excess of
    |2 x_j^T (y - X theta)| over lam.
    """
    grad = 2.0 * (X.T @ (y - X @ theta))
    nz = theta != 0.0
    res_nz = np.abs(grad[nz] - lam * np.sign(theta[nz]))
    res_z = np.maximum(np.abs(grad[~nz]) - lam, 0.0)
    worst = 0.0
    if res_nz.size:
        worst = max(worst, float(res_nz.max()))
    if res_z.size:
        worst = max(worst, float(res_z.max()))
    return worst


def fit_lasso(
    dataset: Dataset,
    lam: float,
    *,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    warm_start: np.ndarray | None = None,
    track_objective: bool = False,
) -> LassoFit:
    """Minimize ||y - X theta||^2 + lam ||theta||_1 by cyclic coordinate descent.

    Stops at the first full sweep where both the largest coefficient change
    is below tol and the subgradient residual is within tol * (lam +
    ||X^T y||_inf); `converged` reports whether that happened before
    max_iter sweeps.
    """
    if not math.isfinite(lam) or lam < 0.0:
        raise ParameterError(f"lam must be finite and >= 0, got {lam}")
    if tol <= 0.0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    X, y = dataset.X, dataset.y
    if warm_start is not None:
        warm_start = np.asarray(warm_start, dtype=float)
        if warm_start.shape != (dataset.p,):
            raise ParameterError(f"warm_start must have shape ({dataset.p},)")
    G = X.T @ X
    b = X.T @ y
    slack = tol * kkt_scale(X, y, lam)
    theta, sweeps, converged, trace = _fit_gram(
        G, b, lam, slack=slack, theta0=warm_start, tol=tol, max_iter=max_iter,
        record_obj=track_objective, yty=float(y @ y),
    )
    resid = y - X @ theta
    objective = float(resid @ resid + lam * np.abs(theta).sum())
    return LassoFit(
        coefficients=theta, lam=float(lam), iterations=sweeps, converged=converged,
        objective=objective, objective_trace=trace,
    )


def default_lambda_grid(dataset: Dataset, num: int = 50, ratio: float = 1e-4) -> np.ndarray:
    """Descending log-spaced penalty grid from lam_max = 2 ||X^T y||_inf.

    lam_max is the smallest penalty whose solution is identically zero.
    """
    if num < 1:
        raise ParameterError(f"num must be >= 1, got {num}")
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"ratio must be in (0, 1), got {ratio}")
    lam_max = 2.0 * float(np.max(np.abs(dataset.X.T @ dataset.y), initial=0.0))
    if lam_max <= 0.0:
        raise ParameterError("X^T y is identically zero; the penalty grid is undefined")
    if num == 1:
        return np.array([lam_max])
    return np.geomspace(lam_max, ratio * lam_max, num)


@dataclass
class CVResult:
    """Cross-validation table: chosen penalty plus the per-penalty errors."""

    lam: float
    lambda_grid: np.ndarray
    mean_errors: np.ndarray


def cross_validate_lambda(
    dataset: Dataset,
    k_folds: int = 5,
    lambda_grid: np.ndarray | None = None,
    rng_seed: SeedLike = 0,
    *,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> CVResult:
    """Pick the grid penalty minimizing mean held-out squared prediction error.

    Rows are shuffled once, split into k folds of near-equal size, and each
    fold is predicted by fits trained on the rest (warm-started down the
    descending grid).  Ties resolve to the larger penalty.
    """
    if k_folds < 2:
        raise ParameterError(f"k_folds must be >= 2, got {k_folds}")
    if dataset.n < k_folds:
        raise ParameterError(
            f"need at least k_folds={k_folds} rows, got {dataset.n}"
        )
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(dataset)
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("lambda_grid must be a non-empty 1-D array")
    if np.any(grid < 0.0) or np.any(~np.isfinite(grid)):
        raise ParameterError("lambda_grid entries must be finite and >= 0")
    if np.any(np.diff(grid) > 0.0):
        grid = np.sort(grid)[::-1]

    rng = _as_rng(rng_seed)
    order = rng.permutation(dataset.n)
    folds = np.array_split(order, k_folds)
    total_sq_err = np.zeros(grid.size)
    for fold in folds:
        mask = np.ones(dataset.n, dtype=bool)
        mask[fold] = False
        X_tr, y_tr = dataset.X[mask], dataset.y[mask]
        X_val, y_val = dataset.X[fold], dataset.y[fold]
        G = X_tr.T @ X_tr
        b = X_tr.T @ y_tr
        base = float(np.max(np.abs(b), initial=0.0))
        theta = np.zeros(dataset.p)
        for gi, lam in enumerate(grid):
            theta, _, _, _ = _fit_gram(
                G, b, lam, slack=tol * (lam + base), theta0=theta,
                tol=tol, max_iter=max_iter,
            )
            err = y_val - X_val @ theta
            total_sq_err[gi] += float(err @ err)
    mean_errors = total_sq_err / dataset.n
    best = int(np.argmin(mean_errors))  # first occurrence on the descending grid
    return CVResult(lam=float(grid[best]), lambda_grid=grid, mean_errors=mean_errors)


def lambda_theory(sigma_hat: float, n: float, p: float, k: float = 8.0) -> float:
    """Noise-calibrated penalty k * sigma_hat * sqrt(log p / n).

    Stated on the (1/(2n))-scaled objective; see `to_objective_scale`.
    """
    if sigma_hat < 0.0:
        raise ParameterError(f"sigma_hat must be >= 0, got {sigma_hat}")
    if n <= 0 or p <= 1:
        raise ParameterError(f"need n > 0 and p > 1, got n={n} p={p}")
    if k < 8.0:
        raise ParameterError(f"k must be >= 8, got {k}")
    return k * sigma_hat * math.sqrt(math.log(p) / n)


def lambda_tilde_theory(n: float, p: float, K: float = 2.0) -> float:
    """Relaxed-projection penalty K * sqrt(log p / n) (same (1/(2n)) scale)."""
    if n <= 0 or p <= 1:
        raise ParameterError(f"need n > 0 and p > 1, got n={n} p={p}")
    if K <= 0.0:
        raise ParameterError(f"K must be > 0, got {K}")
    return K * math.sqrt(math.log(p) / n)


def to_objective_scale(lam_penalty: float, n: int) -> float:
    """Convert a (1/(2n))-scale penalty to this module's objective scale (x 2n)."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return 2.0 * n * lam_penalty


def estimate_sigma(dataset: Dataset, fit: LassoFit) -> float:
    """Scaled residual noise estimate ||y - X theta||_2 / sqrt(n - s_hat)."""
    resid = dataset.y - dataset.X @ fit.coefficients
    s_hat = int(np.count_nonzero(fit.coefficients))
    dof = max(dataset.n - s_hat, 1)
    return float(np.linalg.norm(resid) / math.sqrt(dof))
