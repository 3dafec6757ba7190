"""Per-client feature selection from debiased coefficients.

Clients keep either every coordinate whose debiased magnitude clears a
threshold, or the k largest-magnitude coordinates.  The admissible
threshold window trades the per-coordinate false-positive level epsilon
against the miss level delta through worst-case bias (r_max) and noise
(sigma_max) scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class FeatureSet:
    """Sorted, deduplicated indices selected by one client."""

    client_id: int
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise ParameterError("feature indices must be distinct")
        if idx and idx[0] < 0:
            raise ParameterError("feature indices must be >= 0")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class ThresholdInterval:
    """Admissible threshold window [lower, upper]; empty when lower > upper."""

    lower: float
    upper: float
    epsilon: float
    delta: float

    @property
    def is_empty(self) -> bool:
        return self.lower > self.upper

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def threshold_features(theta_d: np.ndarray, tau: float, client_id: int = 0) -> FeatureSet:
    """Select every coordinate with |theta_d_j| >= tau (boundary included)."""
    if tau < 0.0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    theta_d = np.asarray(theta_d, dtype=float)
    selected = np.flatnonzero(np.abs(theta_d) >= tau)
    return FeatureSet(client_id=client_id, indices=tuple(int(j) for j in selected))


def top_k_features(theta_d: np.ndarray, k: int, client_id: int = 0) -> FeatureSet:
    """Select the k largest-magnitude coordinates; ties go to the lower index."""
    theta_d = np.asarray(theta_d, dtype=float)
    p = theta_d.shape[0]
    if not 0 < k <= p:
        raise ParameterError(f"k must satisfy 0 < k <= p, got k={k} p={p}")
    # stable sort on (-|value|, index): equal magnitudes keep index order
    order = np.argsort(-np.abs(theta_d), kind="stable")
    return FeatureSet(client_id=client_id, indices=tuple(int(j) for j in order[:k]))


def default_top_k(p: int) -> int:
    """Default per-client set size: 25 per 100 dimensions, at least 1."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return max(1, round(25 * p / 100))


def r_max(sigma: float, s0: int, p: int, n_local: int, c_r: float = 1.0) -> float:
    """Worst-case debiasing bias scale c_r * sigma * sqrt(s0) * log(p) / n_local."""
    if sigma < 0.0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    if s0 < 0:
        raise ParameterError(f"s0 must be >= 0, got {s0}")
    if p < 2 or n_local < 1:
        raise ParameterError(f"need p >= 2 and n_local >= 1, got p={p} n_local={n_local}")
    if c_r <= 0.0:
        raise ParameterError(f"c_r must be > 0, got {c_r}")
    return c_r * sigma * math.sqrt(s0) * math.log(p) / n_local


def sigma_max(sigma: float, p: int, n_local: int) -> float:
    """Worst-case per-coordinate noise scale.

    Returns sqrt of (sigma^2 / n_local) * (1 + sqrt(log p / n_local)).
    """
    if sigma < 0.0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    if p < 1 or n_local < 1:
        raise ParameterError(f"need p >= 1 and n_local >= 1, got p={p} n_local={n_local}")
    return math.sqrt((sigma**2 / n_local) * (1.0 + math.sqrt(math.log(p) / n_local)))


def threshold_interval(
    beta: float,
    sigma: float,
    s0: int,
    p: int,
    n_local: int,
    epsilon: float,
    delta: float,
    c_r: float = 1.0,
) -> ThresholdInterval:
    """Admissible threshold window for per-coordinate error levels (epsilon, delta).

    lower = r_max + sqrt(2) * sigma_max * sqrt(log(1/epsilon)) caps each null
    coordinate's selection probability at epsilon; upper = beta - r_max -
    sqrt(2) * sigma_max * sqrt(log(1/(2 delta))) caps each supported
    coordinate's miss probability at delta.  The window may be empty.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must be in (0, 1), got {epsilon}")
    if not 0.0 < delta < 0.5:
        raise ParameterError(f"delta must be in (0, 0.5), got {delta}")
    if beta <= 0.0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    rm = r_max(sigma, s0, p, n_local, c_r)
    sm = sigma_max(sigma, p, n_local)
    lower = rm + math.sqrt(2.0) * sm * math.sqrt(math.log(1.0 / epsilon))
    upper = beta - rm - math.sqrt(2.0) * sm * math.sqrt(math.log(1.0 / (2.0 * delta)))
    return ThresholdInterval(lower=lower, upper=upper, epsilon=epsilon, delta=delta)
