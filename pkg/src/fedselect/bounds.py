"""Closed-form performance bounds for thresholded selection and voting.

Everything here is an analytic evaluator: Gaussian tail rates for one
client's thresholded coordinates, binomial vote-amplification rates,
coarse union/Markov tails, a KL-based sum-of-dependent-Bernoulli tail,
and sample-complexity orders for the three aggregation regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError


def gauss_tail_two_sided(tau: float, mean: float, sd: float) -> float:
    """P(|Z| >= tau) for Z ~ N(mean, sd^2); sd = 0 degenerates to an indicator."""
    if tau < 0.0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    if sd < 0.0:
        raise ParameterError(f"sd must be >= 0, got {sd}")
    if sd == 0.0:
        return 1.0 if abs(mean) >= tau else 0.0
    root2 = math.sqrt(2.0)
    return 1.0 - 0.5 * (
        math.erf((tau - mean) / (root2 * sd)) + math.erf((tau + mean) / (root2 * sd))
    )


def fpr_upper(tau: float, r_max: float, sigma_max: float) -> float:
    """Worst-case selection rate of a null coordinate at threshold tau.

    The coordinate is modeled as N(R, sd^2) with |R| <= r_max and
    sd <= sigma_max; the bound maximizes the two-sided tail over the
    boundary cases R = +/- r_max, sd in {0, sigma_max}.  Thresholds not
    exceeding r_max give the trivial bound 1.
    """
    if tau < 0.0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    if r_max < 0.0 or sigma_max < 0.0:
        raise ParameterError("r_max and sigma_max must be >= 0")
    if tau <= r_max:
        return 1.0
    worst = max(
        gauss_tail_two_sided(tau, mean, sd)
        for mean in (r_max, -r_max)
        for sd in (0.0, sigma_max)
    )
    return min(1.0, worst)


def tpr_lower(tau: float, beta: float, r_max: float, sigma_max: float) -> float:
    """Worst-case detection rate of a supported coordinate at threshold tau.

    Coordinates with true magnitude >= beta and bias at most r_max are
    detected except with the one-sided tail below; clamped to [0, 1].
    A threshold of 0 keeps everything, so the rate is exactly 1.
    """
    if tau < 0.0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    if beta <= 0.0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    if r_max < 0.0 or sigma_max < 0.0:
        raise ParameterError("r_max and sigma_max must be >= 0")
    if tau == 0.0:
        return 1.0
    margin = beta - r_max - tau
    if sigma_max == 0.0:
        return 1.0 if margin >= 0.0 else 0.0
    bound = 1.0 - 0.5 * math.erfc(margin / (math.sqrt(2.0) * sigma_max))
    return min(1.0, max(0.0, bound))


def mv_probability(r: float, num_clients: int) -> float:
    """P(Bin(N, r) >= ceil(N/2)): survival of one coordinate under voting."""
    if not 0.0 <= r <= 1.0:
        raise ParameterError(f"r must be in [0, 1], got {r}")
    if num_clients < 1:
        raise ParameterError(f"num_clients must be >= 1, got {num_clients}")
    quorum = (num_clients + 1) // 2
    total = 0.0
    for i in range(quorum, num_clients + 1):
        total += math.comb(num_clients, i) * r**i * (1.0 - r) ** (num_clients - i)
    return min(1.0, total)


def post_consensus_expectations(
    p: int, s0: int, r_fp: float, r_tp: float, num_clients: int
) -> tuple[float, float]:
    """(E[false positives], E[true positives]) after the vote.

    Coordinates act independently: each of the p - s0 nulls survives with
    probability mv_probability(r_fp, N), each of the s0 supported ones with
    mv_probability(r_tp, N).
    """
    if not 0 <= s0 <= p:
        raise ParameterError(f"need 0 <= s0 <= p, got s0={s0} p={p}")
    e_fp = (p - s0) * mv_probability(r_fp, num_clients)
    e_tp = s0 * mv_probability(r_tp, num_clients)
    return e_fp, e_tp


def markov_tail(
    epsilon: float, delta: float, s0: int, p: int, num_clients: int
) -> tuple[float, float, float]:
    """Coarse union-bound guarantees with unit constants.

    Returns (fp_bound, tp_bound, prob_floor): at most N^2 * epsilon * log p
    false positives, at least s0 * (1 - N^2 * delta) true positives, each
    holding with probability at least 1 - (1/N^2 + 1/p).
    """
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise ParameterError("epsilon and delta must be in (0, 1)")
    if p < 2 or s0 < 0 or num_clients < 1:
        raise ParameterError(f"bad sizes: p={p} s0={s0} N={num_clients}")
    n_sq = float(num_clients**2)
    fp_bound = n_sq * epsilon * math.log(p)
    tp_bound = s0 * (1.0 - n_sq * delta)
    prob_floor = 1.0 - (1.0 / n_sq + 1.0 / p)
    return fp_bound, tp_bound, prob_floor


def kl_bernoulli(a: float, b: float) -> float:
    """KL divergence between Bernoulli(a) and Bernoulli(b)."""
    if not 0.0 < a < 1.0 or not 0.0 < b < 1.0:
        raise ParameterError(f"a and b must be in (0, 1), got a={a} b={b}")
    return a * math.log(a / b) + (1.0 - a) * math.log((1.0 - a) / (1.0 - b))


def pelekis_tail(gamma: float, epsilon: float, p: int, b: float = 1.0) -> float:
    """Upper tail for a sum of p dependent Bernoulli(gamma) indicators.

    P(sum >= p * gamma * (1 + epsilon)) <= b * exp(-p * D(gamma(1+eps) || gamma)),
    clamped to 1.  Requires epsilon in (0, 1/gamma - 1) so the inflated rate
    stays below 1, and a constant b >= 1.
    """
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must be in (0, 1), got {gamma}")
    if not 0.0 < epsilon < 1.0 / gamma - 1.0:
        raise ParameterError(
            f"epsilon must be in (0, 1/gamma - 1) = (0, {1.0 / gamma - 1.0}), got {epsilon}"
        )
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if b < 1.0:
        raise ParameterError(f"b must be >= 1, got {b}")
    inflated = gamma * (1.0 + epsilon)
    return min(1.0, b * math.exp(-p * kl_bernoulli(inflated, gamma)))


class Regime(str, Enum):
    """Aggregation regime for sample-complexity orders."""

    CENTRALIZED = "centralized"
    DECENTRALIZED = "decentralized"
    PROPOSED = "proposed"


def sample_complexity(
    epsilon: float,
    delta: float,
    snr: float,
    regime: Regime | str,
    num_clients: int = 1,
    c: float = 1.0,
) -> float:
    """Order-level total sample count to reach error levels (epsilon, delta).

    Centralized and the voting protocol need c * snr^-2 * log(1/(epsilon *
    delta)) samples; shipping raw estimates without voting (decentralized
    averaging of local selections) pays an extra factor N.
    """
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise ParameterError("epsilon and delta must be in (0, 1)")
    if snr <= 0.0:
        raise ParameterError(f"snr must be > 0, got {snr}")
    if num_clients < 1:
        raise ParameterError(f"num_clients must be >= 1, got {num_clients}")
    if c <= 0.0:
        raise ParameterError(f"c must be > 0, got {c}")
    regime = Regime(regime)
    base = c * snr**-2 * math.log(1.0 / (epsilon * delta))
    if regime is Regime.DECENTRALIZED:
        return num_clients * base
    return base


@dataclass
class BoundCurve:
    """fpr_upper / tpr_lower evaluated on a threshold grid."""

    thresholds: np.ndarray
    fpr_upper: np.ndarray
    tpr_lower: np.ndarray
    r_max: float
    sigma_max: float
    beta: float


def bound_curve(
    thresholds: np.ndarray, beta: float, r_max: float, sigma_max: float
) -> BoundCurve:
    """Evaluate both analytic rate bounds over a threshold grid."""
    taus = np.asarray(thresholds, dtype=float)
    if taus.ndim != 1 or taus.size == 0:
        raise ParameterError("thresholds must be a non-empty 1-D array")
    fpr = np.array([fpr_upper(t, r_max, sigma_max) for t in taus])
    tpr = np.array([tpr_lower(t, beta, r_max, sigma_max) for t in taus])
    return BoundCurve(
        thresholds=taus, fpr_upper=fpr, tpr_lower=tpr,
        r_max=r_max, sigma_max=sigma_max, beta=beta,
    )
