"""Star-topology selection protocol: local estimates, one vote, one broadcast.

Stage one runs the full per-client pipeline (penalized fit, debiasing,
selection) on each shard and uploads only index sets.  The server keeps
every coordinate named by at least half the clients and broadcasts the
result.  An optional weight-averaging stage then refits coefficients on
the agreed columns.  All traffic is metered in a CommLedger under the
bit-cost model: ceil(log2 p) bits per index, f_bits per float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from . import fedavg as fedavg_mod
from .datagen import Partition
from .debias import DebiasedFit, build_m, debias, known_covariance_m
from .errors import ClientRunError, ParameterError, ProtocolError
from .lasso import (
    cross_validate_lambda,
    default_lambda_grid,
    estimate_sigma,
    fit_lasso,
    lambda_theory,
    lambda_tilde_theory,
    to_objective_scale,
)
from .selection import (
    FeatureSet,
    default_top_k,
    threshold_features,
    threshold_interval,
    top_k_features,
)


class Direction(str, Enum):
    CLIENT_TO_SERVER = "client_to_server"
    SERVER_TO_CLIENT = "server_to_client"


class Phase(str, Enum):
    FEATURE_UPLOAD = "feature_upload"
    SELECTION_BROADCAST = "selection_broadcast"
    FEDAVG_MODEL_DOWN = "fedavg_model_down"
    FEDAVG_MODEL_UP = "fedavg_model_up"


def index_bits(p: int) -> int:
    """Bits to name one of p coordinates: ceil(log2 p)."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return (p - 1).bit_length()


@dataclass(frozen=True)
class Message:
    """One transmission on a star link, with its metered size."""

    direction: Direction
    phase: Phase
    payload: tuple
    payload_bits: int

    def __post_init__(self):
        if self.payload_bits < 0:
            raise ProtocolError(f"payload_bits must be >= 0, got {self.payload_bits}")

    @classmethod
    def indices(
        cls, direction: Direction, phase: Phase, idx: tuple[int, ...], p: int
    ) -> "Message":
        return cls(direction, phase, tuple(idx), len(idx) * index_bits(p))

    @classmethod
    def vector(
        cls, direction: Direction, phase: Phase, values: np.ndarray, f_bits: int
    ) -> "Message":
        values = np.asarray(values, dtype=float)
        return cls(direction, phase, tuple(values.tolist()), values.size * f_bits)


class CommLedger:
    """Accumulated message and bit counts per (client, phase, direction)."""

    def __init__(self):
        self._counts: dict[tuple[int, str, str], list[int]] = {}

    def record(
        self,
        client_id: int,
        phase: Phase,
        direction: Direction,
        bits: int,
        messages: int = 1,
    ) -> None:
        if bits < 0 or messages < 0:
            raise ProtocolError("bits and messages must be >= 0")
        key = (client_id, Phase(phase).value, Direction(direction).value)
        entry = self._counts.setdefault(key, [0, 0])
        entry[0] += messages
        entry[1] += bits

    def record_message(self, client_id: int, message: Message) -> None:
        self.record(client_id, message.phase, message.direction, message.payload_bits)

    def merge(self, other: "CommLedger") -> None:
        for key, (messages, bits) in other._counts.items():
            entry = self._counts.setdefault(key, [0, 0])
            entry[0] += messages
            entry[1] += bits

    def total_bits(self, phase: Phase | None = None, direction: Direction | None = None) -> int:
        return sum(
            bits
            for (cid, ph, dr), (_, bits) in self._counts.items()
            if (phase is None or ph == Phase(phase).value)
            and (direction is None or dr == Direction(direction).value)
        )

    def total_messages(
        self, phase: Phase | None = None, direction: Direction | None = None
    ) -> int:
        return sum(
            messages
            for (cid, ph, dr), (messages, _) in self._counts.items()
            if (phase is None or ph == Phase(phase).value)
            and (direction is None or dr == Direction(direction).value)
        )

    def rows(self) -> list[dict[str, Any]]:
        """Sorted rows with keys client_id, phase, direction, messages, bits."""
        out = []
        for (cid, phase, direction) in sorted(self._counts):
            messages, bits = self._counts[(cid, phase, direction)]
            out.append(
                {
                    "client_id": cid,
                    "phase": phase,
                    "direction": direction,
                    "messages": messages,
                    "bits": bits,
                }
            )
        return out


@dataclass(frozen=True)
class ConsensusResult:
    """Vote outcome: retained coordinates plus the per-coordinate tallies."""

    selected: tuple[int, ...]
    votes: np.ndarray
    quorum: int
    num_clients: int


def majority_vote(feature_sets: list[FeatureSet], p: int) -> ConsensusResult:
    """Keep every coordinate appearing in at least ceil(N/2) of the N sets."""
    if not feature_sets:
        raise ProtocolError("majority_vote needs at least one feature set")
    ids = [fs.client_id for fs in feature_sets]
    if len(set(ids)) != len(ids):
        raise ProtocolError(f"duplicate client ids in vote: {sorted(ids)}")
    num_clients = len(feature_sets)
    votes = np.zeros(p, dtype=np.int64)
    for fs in feature_sets:
        for idx in fs.indices:
            if idx >= p:
                raise ProtocolError(
                    f"client {fs.client_id} named index {idx} outside p={p}"
                )
            votes[idx] += 1
    quorum = (num_clients + 1) // 2
    selected = tuple(int(j) for j in np.flatnonzero(votes >= quorum))
    return ConsensusResult(
        selected=selected, votes=votes, quorum=quorum, num_clients=num_clients
    )


@dataclass
class ProtocolConfig:
    """Everything one simulated run needs besides the data itself.

    sigma / beta / s0_hint are the model quantities some modes require:
    theory-scaled penalties and the analytic threshold window cannot be
    evaluated without them (synthetic runs pass the true values).
    """

    selection_mode: str = "top_k"  # top_k | threshold | interval
    k: int | None = None
    tau: float | None = None
    epsilon: float = 0.05
    delta: float = 0.05
    lambda_mode: str = "cv"  # cv | theory
    cv_folds: int = 5
    cv_grid_size: int = 50
    cv_grid_ratio: float = 1e-4
    theory_k: float = 8.0
    m_mode: str = "nodewise"  # nodewise | known
    nodewise_K: float = 2.0
    sigma: float | None = None
    beta: float | None = None
    s0_hint: int | None = None
    covariance: np.ndarray | None = None
    c_r: float = 1.0
    f_bits: int = 32
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 10_000
    fedavg_options: "fedavg_mod.FedAvgOptions | None" = None

    def __post_init__(self):
        if self.selection_mode not in ("top_k", "threshold", "interval"):
            raise ParameterError(f"unknown selection_mode {self.selection_mode!r}")
        if self.lambda_mode not in ("cv", "theory"):
            raise ParameterError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.m_mode not in ("nodewise", "known"):
            raise ParameterError(f"unknown m_mode {self.m_mode!r}")
        if self.selection_mode == "threshold" and self.tau is None:
            raise ParameterError("threshold selection requires tau")
        if self.lambda_mode == "theory" and self.sigma is None:
            raise ParameterError("theory lambda requires sigma")
        if self.selection_mode == "interval" and (
            self.sigma is None or self.beta is None or self.s0_hint is None
        ):
            raise ParameterError("interval selection requires sigma, beta and s0_hint")


@dataclass
class ClientDiagnostics:
    """Per-client facts a run reports back alongside its feature set."""

    client_id: int
    n_local: int
    lam: float
    sigma_hat: float
    iterations: int
    converged: bool
    tau: float | None
    set_size: int
    interval_empty: bool = False
    debiased: DebiasedFit | None = field(default=None, repr=False)


@dataclass
class ProtocolResult:
    """Outcome of one simulated protocol run."""

    feature_sets: list[FeatureSet]
    consensus: ConsensusResult
    ledger: CommLedger
    diagnostics: list[ClientDiagnostics]
    fedavg: "fedavg_mod.FedAvgState | None" = None


def _run_client(
    client_id: int, shard, p: int, cfg: ProtocolConfig
) -> tuple[FeatureSet, ClientDiagnostics]:
    n_local = shard.n
    if cfg.lambda_mode == "cv":
        grid = default_lambda_grid(shard, num=cfg.cv_grid_size, ratio=cfg.cv_grid_ratio)
        cv = cross_validate_lambda(
            shard,
            k_folds=cfg.cv_folds,
            lambda_grid=grid,
            rng_seed=[cfg.seed, client_id],
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )
        lam = cv.lam
    else:
        lam = to_objective_scale(
            lambda_theory(cfg.sigma, n_local, p, cfg.theory_k), n_local
        )
    fit = fit_lasso(shard, lam, tol=cfg.tol, max_iter=cfg.max_iter)
    sigma_hat = cfg.sigma if cfg.sigma is not None else estimate_sigma(shard, fit)

    if cfg.m_mode == "known":
        M = known_covariance_m(cfg.covariance, p)
        lambda_tilde = None
    else:
        lambda_tilde = lambda_tilde_theory(n_local, p, cfg.nodewise_K)
        M = build_m(
            shard.X, lambda_tilde, K=cfg.nodewise_K, tol=cfg.tol, max_iter=cfg.max_iter
        )
    db = debias(shard, fit, M, lambda_tilde=lambda_tilde, sigma_hat=sigma_hat)

    tau_used: float | None = None
    interval_empty = False
    if cfg.selection_mode == "top_k":
        k = cfg.k if cfg.k is not None else default_top_k(p)
        fs = top_k_features(db.theta_d, k, client_id=client_id)
        # the k-th largest magnitude is the threshold this choice implies
        tau_used = float(np.sort(np.abs(db.theta_d))[p - k])
    elif cfg.selection_mode == "threshold":
        tau_used = float(cfg.tau)
        fs = threshold_features(db.theta_d, tau_used, client_id=client_id)
    else:
        window = threshold_interval(
            cfg.beta, cfg.sigma, cfg.s0_hint, p, n_local,
            cfg.epsilon, cfg.delta, cfg.c_r,
        )
        interval_empty = window.is_empty
        tau_used = window.lower if window.is_empty else window.midpoint
        fs = threshold_features(db.theta_d, tau_used, client_id=client_id)

    diag = ClientDiagnostics(
        client_id=client_id, n_local=n_local, lam=lam, sigma_hat=sigma_hat,
        iterations=fit.iterations, converged=fit.converged, tau=tau_used,
        set_size=len(fs), interval_empty=interval_empty, debiased=db,
    )
    return fs, diag


def run_stage_one(
    partition: Partition, cfg: ProtocolConfig
) -> tuple[list[FeatureSet], CommLedger, list[ClientDiagnostics]]:
    """Run the per-client pipeline on every shard and meter the uploads.

    A failing client does not stop the others; after the loop all failures
    are raised together as ClientRunError.
    """
    p = partition.shards[0].p
    ledger = CommLedger()
    feature_sets: list[FeatureSet] = []
    diagnostics: list[ClientDiagnostics] = []
    failures: dict[int, Exception] = {}
    for client_id, shard in enumerate(partition.shards):
        try:
            fs, diag = _run_client(client_id, shard, p, cfg)
        except Exception as exc:  # surfaced collectively below
            failures[client_id] = exc
            continue
        feature_sets.append(fs)
        diagnostics.append(diag)
        ledger.record_message(
            client_id,
            Message.indices(Direction.CLIENT_TO_SERVER, Phase.FEATURE_UPLOAD, fs.indices, p),
        )
    if failures:
        raise ClientRunError(failures)
    return feature_sets, ledger, diagnostics


def run_protocol(partition: Partition, cfg: ProtocolConfig) -> ProtocolResult:
    """Stage one, the vote, the broadcast, and (optionally) weight averaging."""
    p = partition.shards[0].p
    feature_sets, ledger, diagnostics = run_stage_one(partition, cfg)
    consensus = majority_vote(feature_sets, p)
    for client_id in range(partition.num_clients):
        ledger.record_message(
            client_id,
            Message.indices(
                Direction.SERVER_TO_CLIENT, Phase.SELECTION_BROADCAST,
                consensus.selected, p,
            ),
        )
    state = None
    if cfg.fedavg_options is not None:
        columns = np.asarray(consensus.selected, dtype=np.int64)
        state, fed_ledger = fedavg_mod.run_fedavg(
            partition, columns=columns, options=cfg.fedavg_options
        )
        ledger.merge(fed_ledger)
    return ProtocolResult(
        feature_sets=feature_sets, consensus=consensus, ledger=ledger,
        diagnostics=diagnostics, fedavg=state,
    )


def comm_cost_model(
    p: int, s0: int, num_clients: int, rounds: int, selected_size: int, f_bits: int = 32
) -> float:
    """Closed-form bit cost of the protocol plus a restricted averaging stage.

    2N * (ceil(log2 p) * s0 index bits + rounds * selected_size * f_bits).
    """
    if s0 < 0 or rounds < 0 or selected_size < 0:
        raise ParameterError("s0, rounds and selected_size must be >= 0")
    if num_clients < 1:
        raise ParameterError(f"num_clients must be >= 1, got {num_clients}")
    if f_bits < 1:
        raise ParameterError(f"f_bits must be >= 1, got {f_bits}")
    return 2.0 * num_clients * (
        index_bits(p) * s0 + rounds * selected_size * f_bits
    )


def fedavg_baseline_cost(p: int, num_clients: int, rounds: int, f_bits: int = 32) -> float:
    """Bit cost of full-dimension weight averaging: 2N * p * rounds * f_bits."""
    if p < 1 or num_clients < 1 or rounds < 0 or f_bits < 1:
        raise ParameterError("bad cost-model arguments")
    return 2.0 * num_clients * p * rounds * f_bits
