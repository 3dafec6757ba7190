"""Selection and regression quality scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class SelectionMetrics:
    """Confusion counts and derived rates for one selected index set."""

    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f_measure: float
    accuracy: float
    fdp: float

    @property
    def fpr(self) -> float:
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else 0.0

    @property
    def tpr(self) -> float:
        return self.recall


def score_selection(selected: Iterable[int], support: Iterable[int], p: int) -> SelectionMetrics:
    """Score a selected index set against the true support over p coordinates.

    An empty selection counts as precision 1 (no false discoveries); recall
    is tp / s0; the F measure is their harmonic mean, 0 when tp == 0.
    """
    sel = set(int(i) for i in selected)
    sup = set(int(i) for i in support)
    if sel and (min(sel) < 0 or max(sel) >= p):
        raise ParameterError("selected indices out of range")
    if sup and (min(sup) < 0 or max(sup) >= p):
        raise ParameterError("support indices out of range")
    s0 = len(sup)
    if s0 == 0:
        raise ParameterError("support must be non-empty to score recall")
    tp = len(sel & sup)
    fp = len(sel - sup)
    fn = s0 - tp
    tn = p - s0 - fp
    precision = 1.0 if not sel else tp / len(sel)
    recall = tp / s0
    f_measure = 0.0 if tp == 0 else 2.0 * precision * recall / (precision + recall)
    accuracy = (tp + tn) / p
    return SelectionMetrics(
        tp=tp, fp=fp, tn=tn, fn=fn, precision=precision, recall=recall,
        f_measure=f_measure, accuracy=accuracy, fdp=1.0 - precision,
    )


def score_regression(theta_hat: np.ndarray, theta_star: np.ndarray) -> float:
    """Per-coordinate parameter error ||theta_hat - theta*||_2^2 / p."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_hat.shape != theta_star.shape or theta_hat.ndim != 1:
        raise ParameterError(
            f"shape mismatch: {theta_hat.shape} vs {theta_star.shape}"
        )
    diff = theta_hat - theta_star
    return float(diff @ diff) / theta_hat.shape[0]
