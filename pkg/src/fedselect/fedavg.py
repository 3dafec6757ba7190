"""Federated averaging of least-squares models on a star network.

Each round the server ships the current coefficients to every client, each
client takes `local_steps` full-gradient steps on its own squared-error
loss, and the server averages the returned models weighted by shard size.
Traffic is metered at f_bits per coefficient in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import Dataset, Partition
from .errors import ParameterError, StepSizeError
from .metrics import score_regression

_DIVERGENCE_FACTOR = 10.0


@dataclass
class FedAvgOptions:
    """Knobs for one averaging run.  mu=None picks 1 / (2 * L_hat)."""

    mu: float | None = None
    local_steps: int = 1
    max_rounds: int = 10_000
    tol: float = 1e-8
    f_bits: int = 32

    def __post_init__(self):
        if self.mu is not None and self.mu <= 0.0:
            raise ParameterError(f"mu must be > 0, got {self.mu}")
        if self.local_steps < 1:
            raise ParameterError(f"local_steps must be >= 1, got {self.local_steps}")
        if self.max_rounds < 1:
            raise ParameterError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.tol <= 0.0:
            raise ParameterError(f"tol must be > 0, got {self.tol}")
        if self.f_bits < 1:
            raise ParameterError(f"f_bits must be >= 1, got {self.f_bits}")


@dataclass
class FedAvgState:
    """Final model plus the per-round trajectory.

    history rows are (round, mse, max_delta); mse is the parameter error
    against the reference vector when one was supplied, otherwise the
    pooled mean squared training residual.
    """

    theta: np.ndarray
    rounds: int
    converged: bool
    history: np.ndarray
    columns: np.ndarray | None
    mu: float


def _spectral_bound(G: np.ndarray, iters: int = 500, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a PSD Gram matrix by power iteration."""
    d = G.shape[0]
    v = np.full(d, 1.0 / np.sqrt(d))
    v += np.arange(d) * (1e-9 / max(d, 1))  # deterministic symmetry breaking
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - lam) <= tol * max(1.0, norm):
            return norm
        lam = norm
    return lam


def client_update(
    shard: Dataset, theta: np.ndarray, mu: float, local_steps: int = 1
) -> np.ndarray:
    """Run local_steps of gradient descent on ||y - X theta||^2.

    Raises StepSizeError when the local loss grows past 10x its value at
    the start of the call.
    """
    if mu <= 0.0:
        raise ParameterError(f"mu must be > 0, got {mu}")
    if local_steps < 1:
        raise ParameterError(f"local_steps must be >= 1, got {local_steps}")
    theta = np.asarray(theta, dtype=float).copy()
    X, y = shard.X, shard.y
    resid = y - X @ theta
    loss_start = float(resid @ resid)
    for _ in range(local_steps):
        theta += 2.0 * mu * (X.T @ resid)
        resid = y - X @ theta
    loss_end = float(resid @ resid)
    if loss_start > 0.0 and loss_end > _DIVERGENCE_FACTOR * loss_start:
        raise StepSizeError(
            f"local loss grew {loss_end / loss_start:.2f}x in one update; reduce mu"
        )
    return theta


def expand_coefficients(theta: np.ndarray, columns: np.ndarray | None, p: int) -> np.ndarray:
    """Embed a restricted coefficient vector back into R^p (zeros elsewhere)."""
    if columns is None:
        if theta.shape != (p,):
            raise ParameterError(f"theta must have shape ({p},)")
        return np.asarray(theta, dtype=float)
    full = np.zeros(p)
    full[np.asarray(columns, dtype=np.int64)] = theta
    return full


def run_fedavg(
    partition: Partition,
    columns: np.ndarray | None = None,
    options: FedAvgOptions | None = None,
    theta_ref: np.ndarray | None = None,
):
    """Average locally trained least-squares models until they stop moving.

    columns restricts training to those design columns (the post-vote
    stage); None trains on all of them.  Stops when the aggregated model's
    max coordinate change falls below tol, or at max_rounds.  Returns
    (FedAvgState, CommLedger).
    """
    from .consensus import CommLedger, Direction, Phase  # local import, no cycle at module load

    options = options or FedAvgOptions()
    p_full = partition.shards[0].p
    if columns is not None:
        columns = np.asarray(columns, dtype=np.int64)
        if columns.size == 0:
            raise ParameterError("columns must be non-empty when given")
        if columns.min() < 0 or columns.max() >= p_full:
            raise ParameterError("columns out of range")
    mats = [
        (shard.X if columns is None else shard.X[:, columns], shard.y)
        for shard in partition.shards
    ]
    d = mats[0][0].shape[1]
    n_total = partition.n_total
    weights = [shard.n / n_total for shard in partition.shards]
    grams = [(X.T @ X, X.T @ y) for X, y in mats]

    mu = options.mu
    if mu is None:
        l_hat = max(_spectral_bound(G) for G, _ in grams)
        if l_hat <= 0.0:
            raise ParameterError("all shards have zero design energy; cannot pick mu")
        mu = 1.0 / (2.0 * l_hat)

    ledger = CommLedger()
    theta = np.zeros(d)
    history = []
    converged = False
    rounds = 0
    bits = d * options.f_bits
    for rounds in range(1, options.max_rounds + 1):
        loss_start = sum(
            float((y - X @ theta) @ (y - X @ theta)) for X, y in mats
        )
        new_theta = np.zeros(d)
        for client_id, ((G, b), w) in enumerate(zip(grams, weights)):
            ledger.record(client_id, Phase.FEDAVG_MODEL_DOWN, Direction.SERVER_TO_CLIENT, bits)
            local = theta.copy()
            for _ in range(options.local_steps):
                local += 2.0 * mu * (b - G @ local)
            ledger.record(client_id, Phase.FEDAVG_MODEL_UP, Direction.CLIENT_TO_SERVER, bits)
            new_theta += w * local
        max_delta = float(np.max(np.abs(new_theta - theta)))
        theta = new_theta
        loss_end = sum(float((y - X @ theta) @ (y - X @ theta)) for X, y in mats)
        if loss_start > 0.0 and loss_end > _DIVERGENCE_FACTOR * loss_start:
            raise StepSizeError(
                f"global loss grew {loss_end / loss_start:.2f}x in round {rounds}; reduce mu"
            )
        if theta_ref is not None:
            mse = score_regression(expand_coefficients(theta, columns, p_full), theta_ref)
        else:
            mse = loss_end / n_total
        history.append((rounds, mse, max_delta))
        if max_delta < options.tol:
            converged = True
            break
    state = FedAvgState(
        theta=theta, rounds=rounds, converged=converged,
        history=np.asarray(history), columns=columns, mu=mu,
    )
    return state, ledger
