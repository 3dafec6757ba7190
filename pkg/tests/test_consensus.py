"""Voting, traffic metering, and the end-to-end selection protocol."""

import numpy as np
import pytest

from fedselect import (
    ClientRunError,
    CommLedger,
    FeatureSet,
    ParameterError,
    ProtocolConfig,
    ProtocolError,
    comm_cost_model,
    fedavg_baseline_cost,
    index_bits,
    majority_vote,
    partition_rows,
    run_protocol,
)
from fedselect.consensus import Direction, Phase
from fedselect.fedavg import FedAvgOptions

from conftest import make_problem


@pytest.mark.parametrize(
    "p, bits",
    [(1, 0), (2, 1), (3, 2), (4, 2), (100, 7), (1000, 10), (1024, 10), (1025, 11)],
)
def test_index_bits_values(p, bits):
    assert index_bits(p) == bits


def test_index_bits_rejects_nonpositive():
    with pytest.raises(ParameterError):
        index_bits(0)


def brute_force_vote(sets, num_clients, p):
    quorum = (num_clients + 1) // 2
    return tuple(
        j for j in range(p) if sum(j in s for s in sets) >= quorum
    )


def test_majority_vote_matches_enumeration_oracle():
    p, num_clients = 6, 5
    for seed in range(20):
        rng = np.random.default_rng(seed)
        raw = [
            frozenset(np.flatnonzero(rng.random(p) < 0.4).tolist())
            for _ in range(num_clients)
        ]
        feature_sets = [
            FeatureSet(indices=tuple(sorted(s)), client_id=i)
            for i, s in enumerate(raw)
        ]
        result = majority_vote(feature_sets, p)
        assert result.selected == brute_force_vote(raw, num_clients, p)
        assert result.quorum == 3
        for j in range(p):
            assert result.votes[j] == sum(j in s for s in raw)


def test_majority_vote_even_count_quorum():
    sets = [
        FeatureSet(indices=(0, 1), client_id=0),
        FeatureSet(indices=(1, 2), client_id=1),
        FeatureSet(indices=(3,), client_id=2),
        FeatureSet(indices=(3,), client_id=3),
    ]
    result = majority_vote(sets, p=5)
    # four clients need only two agreeing votes
    assert result.quorum == 2
    assert result.selected == (1, 3)


def test_majority_vote_validation():
    with pytest.raises(ProtocolError):
        majority_vote([], p=4)
    dup = [FeatureSet(client_id=1, indices=(0,)), FeatureSet(client_id=1, indices=(1,))]
    with pytest.raises(ProtocolError):
        majority_vote(dup, p=4)
    out = [FeatureSet(client_id=0, indices=(5,))]
    with pytest.raises(ProtocolError):
        majority_vote(out, p=4)


def test_ledger_accumulates_and_filters():
    ledger = CommLedger()
    ledger.record(0, Phase.FEATURE_UPLOAD, Direction.CLIENT_TO_SERVER, bits=15)
    ledger.record(0, Phase.FEATURE_UPLOAD, Direction.CLIENT_TO_SERVER, bits=5)
    ledger.record(1, Phase.SELECTION_BROADCAST, Direction.SERVER_TO_CLIENT, bits=10)
    assert ledger.total_bits() == 30
    assert ledger.total_messages() == 3
    assert ledger.total_bits(phase=Phase.FEATURE_UPLOAD) == 20
    assert ledger.total_messages(phase=Phase.FEATURE_UPLOAD) == 2
    assert ledger.total_bits(direction=Direction.SERVER_TO_CLIENT) == 10
    other = CommLedger()
    other.record(0, Phase.FEATURE_UPLOAD, Direction.CLIENT_TO_SERVER, bits=1)
    other.record(2, Phase.FEDAVG_MODEL_UP, Direction.CLIENT_TO_SERVER, bits=64)
    ledger.merge(other)
    assert ledger.total_bits() == 95
    rows = ledger.rows()
    assert [r["client_id"] for r in rows] == sorted(r["client_id"] for r in rows)
    first = rows[0]
    assert first == {
        "client_id": 0,
        "phase": "feature_upload",
        "direction": "client_to_server",
        "messages": 3,
        "bits": 21,
    }
    with pytest.raises(ProtocolError):
        ledger.record(0, Phase.FEATURE_UPLOAD, Direction.CLIENT_TO_SERVER, bits=-1)


def easy_partition(seed=0, num_clients=5, n=200, p=30, s0=3):
    truth, dataset = make_problem(p, s0, n, beta=0.8, sigma=0.05, seed=seed)
    return truth, partition_rows(dataset, num_clients, rng_seed=[seed, 2])


def test_run_protocol_recovers_well_separated_support():
    truth, partition = easy_partition()
    cfg = ProtocolConfig(
        selection_mode="threshold", tau=0.4,
        lambda_mode="theory", sigma=0.05, seed=0,
    )
    result = run_protocol(partition, cfg)
    assert result.consensus.selected == tuple(truth.support.tolist())
    assert len(result.feature_sets) == 5
    assert len(result.diagnostics) == 5
    for diag in result.diagnostics:
        assert diag.converged
        assert diag.n_local == 40
        assert diag.tau == 0.4
        assert diag.set_size == len(result.feature_sets[diag.client_id])


def test_run_protocol_ledger_counts_are_exact():
    truth, partition = easy_partition(seed=1)
    cfg = ProtocolConfig(
        selection_mode="threshold", tau=0.4,
        lambda_mode="theory", sigma=0.05, seed=1,
    )
    result = run_protocol(partition, cfg)
    bits_per_index = index_bits(30)
    assert bits_per_index == 5
    upload = sum(len(fs) for fs in result.feature_sets) * bits_per_index
    broadcast = 5 * len(result.consensus.selected) * bits_per_index
    ledger = result.ledger
    assert ledger.total_bits(phase=Phase.FEATURE_UPLOAD) == upload
    assert ledger.total_bits(phase=Phase.SELECTION_BROADCAST) == broadcast
    assert ledger.total_bits() == upload + broadcast
    assert ledger.total_messages(direction=Direction.CLIENT_TO_SERVER) == 5
    assert ledger.total_messages(direction=Direction.SERVER_TO_CLIENT) == 5


def test_run_protocol_collects_all_client_failures():
    truth, dataset = make_problem(6, 1, 4, seed=2)
    partition = partition_rows(dataset, 2, rng_seed=0)
    cfg = ProtocolConfig(selection_mode="top_k", k=1, lambda_mode="cv", cv_folds=5)
    with pytest.raises(ClientRunError) as excinfo:
        run_protocol(partition, cfg)
    # two-row shards cannot be split five ways, and neither client can
    assert sorted(excinfo.value.failures) == [0, 1]


def test_run_protocol_top_k_reports_kth_magnitude_threshold():
    truth, partition = easy_partition(seed=3)
    cfg = ProtocolConfig(
        selection_mode="top_k", k=3, lambda_mode="theory", sigma=0.05, seed=3
    )
    result = run_protocol(partition, cfg)
    for diag in result.diagnostics:
        values = np.abs(diag.debiased.theta_d)
        assert diag.set_size == 3
        assert diag.tau == pytest.approx(float(np.sort(values)[-3]))
        assert values[list(result.feature_sets[diag.client_id].indices)].min() >= diag.tau


def test_run_protocol_with_averaging_stage():
    truth, partition = easy_partition(seed=4)
    cfg = ProtocolConfig(
        selection_mode="threshold", tau=0.4,
        lambda_mode="theory", sigma=0.05, seed=4,
        fedavg_options=FedAvgOptions(max_rounds=500),
    )
    result = run_protocol(partition, cfg)
    assert result.fedavg is not None
    assert tuple(result.fedavg.columns.tolist()) == result.consensus.selected
    assert result.ledger.total_bits(phase=Phase.FEDAVG_MODEL_UP) > 0
    assert result.ledger.total_bits(phase=Phase.FEDAVG_MODEL_DOWN) > 0
    down = result.ledger.total_bits(phase=Phase.FEDAVG_MODEL_DOWN)
    d = len(result.consensus.selected)
    assert down == result.fedavg.rounds * 5 * d * 32


def test_protocol_config_validation():
    with pytest.raises(ParameterError):
        ProtocolConfig(selection_mode="ranked")
    with pytest.raises(ParameterError):
        ProtocolConfig(selection_mode="threshold")  # tau missing
    with pytest.raises(ParameterError):
        ProtocolConfig(lambda_mode="theory")  # sigma missing
    with pytest.raises(ParameterError):
        ProtocolConfig(selection_mode="interval", sigma=0.1)  # beta, s0 missing


def test_comm_cost_model_hand_values():
    proposed = comm_cost_model(
        p=1000, s0=10, num_clients=20, rounds=100, selected_size=10, f_bits=32
    )
    assert proposed == 2 * 20 * (10 * 10 + 100 * 10 * 32)
    assert proposed == 1_284_000
    baseline = fedavg_baseline_cost(p=1000, num_clients=20, rounds=100, f_bits=32)
    assert baseline == 2 * 20 * 1000 * 100 * 32
    assert baseline == 128_000_000
    assert baseline / proposed > 10
    with pytest.raises(ParameterError):
        comm_cost_model(1000, -1, 20, 100, 10)
    with pytest.raises(ParameterError):
        fedavg_baseline_cost(0, 20, 100)
