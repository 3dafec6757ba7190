"""Command-line front end: run, bounds, sweep, real.

Every output file starts with a provenance block (the fully resolved config,
the master seed, the subcommand, and the package version) so a result can be
reproduced from the file alone.  All floats are printed with 17 significant
digits, and replicate work is parallelised with per-replicate child seeds in
a fixed collection order, so the same config and seed produce byte-identical
files regardless of ``--jobs``.

Exit codes: 0 success, 2 configuration error (nothing written), 3 runtime
error (client failures are reported per client).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np

from . import __version__
from .baselines import centralized_lasso_refit
from .bounds import bound_curve
from .config import load_config, require_sections
from .consensus import ProtocolConfig, run_protocol
from .datagen import (
    Dataset,
    generate_ground_truth,
    load_binary_design_csv,
    partition_rows,
    sample_dataset,
)
from .errors import ClientRunError, ConfigError, FedselectError
from .fedavg import FedAvgOptions, expand_coefficients, run_fedavg
from .metrics import score_regression, score_selection
from .selection import default_top_k, r_max, sigma_max


# ---------------------------------------------------------------------------
# Deterministic rendering: 17-significant-digit floats everywhere.
# ---------------------------------------------------------------------------

def format_float(value: float) -> str:
    """Render a float with 17 significant digits (round-trip exact)."""
    if not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return format(float(value), ".17g")


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def render_json(obj: Any, indent: int | None = None, _level: int = 0) -> str:
    """Serialise to JSON with sorted keys and 17-significant-digit floats.

    The standard encoder prints floats with the shortest round-trip repr,
    which varies in width; output files pin one format instead.
    """
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return format_float(v)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [render_json(v, indent, _level + 1) for v in obj]
        if indent is None:
            return "[" + ", ".join(items) + "]"
        pad = " " * (indent * (_level + 1))
        close = " " * (indent * _level)
        if not items:
            return "[]"
        return "[\n" + ",\n".join(pad + it for it in items) + "\n" + close + "]"
    if isinstance(obj, dict):
        keys = sorted(obj.keys())
        rendered = [
            (render_json(str(k)), render_json(obj[k], indent, _level + 1)) for k in keys
        ]
        if indent is None:
            return "{" + ", ".join(f"{k}: {v}" for k, v in rendered) + "}"
        pad = " " * (indent * (_level + 1))
        close = " " * (indent * _level)
        if not rendered:
            return "{}"
        body = ",\n".join(f"{pad}{k}: {v}" for k, v in rendered)
        return "{\n" + body + "\n" + close + "}"
    raise TypeError(f"cannot render {type(obj).__name__} as JSON")


def _provenance(cfg: dict[str, Any], command: str) -> dict[str, Any]:
    echoed = {k: v for k, v in cfg.items() if k != "output_dir"}
    return {
        "command": command,
        "config": echoed,
        "master_seed": cfg["seed"],
        "version": __version__,
    }


def write_csv(
    path: str,
    header: list[str],
    rows: list[list[Any]],
    provenance: dict[str, Any],
) -> None:
    lines = ["# provenance: " + render_json(provenance)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, payload: dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_json(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Replicate execution.
# ---------------------------------------------------------------------------

def _stage_seeds(master_seed: int, replicate: int) -> list[int]:
    """Five independent child seeds: truth, sampling, partition, protocol, refit."""
    ss = np.random.SeedSequence([int(master_seed), int(replicate)])
    return [int(v) for v in ss.generate_state(5)]


def _network_sizes(cfg: dict[str, Any], overrides: dict[str, Any]) -> tuple[int, int, int]:
    """Resolve (num_clients, n_total, n_local) honouring sweep overrides."""
    net = cfg["network"]
    num_clients = int(overrides.get("num_clients", net["num_clients"]))
    if "n_local" in net:
        n_local = int(overrides.get("n_local", net["n_local"]))
        n_total = num_clients * n_local
    else:
        n_total = int(net["n_total"])
        n_local = n_total // num_clients
    return num_clients, n_total, n_local


def _covariance_array(cfg: dict[str, Any]) -> np.ndarray | None:
    cov = cfg["model"]["covariance"]
    if cov == "identity":
        return None
    return np.asarray(cov, dtype=float)


def build_protocol_config(
    cfg: dict[str, Any],
    seed: int,
    overrides: dict[str, Any] | None = None,
    with_model: bool = True,
) -> ProtocolConfig:
    """Translate a resolved config dict into a ProtocolConfig."""
    overrides = overrides or {}
    sel = cfg["selection"]
    lam = cfg["lambda"]
    deb = cfg["debias"]
    con = cfg["constants"]
    sol = cfg["solver"]
    model = cfg.get("model") if with_model else None
    tau = overrides.get("tau", sel["tau"])
    return ProtocolConfig(
        selection_mode=sel["mode"],
        k=sel["k"],
        tau=None if tau is None else float(tau),
        epsilon=sel["epsilon"],
        delta=sel["delta"],
        lambda_mode=lam["mode"],
        cv_folds=lam["folds"],
        cv_grid_size=lam["grid_size"],
        cv_grid_ratio=lam["grid_ratio"],
        theory_k=lam["k"],
        m_mode=deb["mode"],
        nodewise_K=deb["K"],
        sigma=model["sigma"] if model else None,
        beta=model["beta"] if model else None,
        s0_hint=model["s0"] if model else None,
        covariance=_covariance_array(cfg) if model else None,
        c_r=con["c_r"],
        f_bits=con["f_bits"],
        seed=int(seed),
        tol=sol["tol"],
        max_iter=sol["max_iter"],
    )


def _fedavg_options(cfg: dict[str, Any]) -> FedAvgOptions:
    fed = cfg["fedavg"]
    return FedAvgOptions(
        mu=fed["mu"],
        local_steps=fed["local_steps"],
        max_rounds=fed["max_rounds"],
        tol=fed["tol"],
        f_bits=cfg["constants"]["f_bits"],
    )


def _prediction_mse(dataset: Dataset, theta: np.ndarray) -> float:
    resid = dataset.y - dataset.X @ theta
    return float(resid @ resid / dataset.n)


def run_replicate(
    cfg: dict[str, Any], replicate: int, overrides: dict[str, Any] | None = None
) -> dict[str, Any]:
    """One synthetic end-to-end repetition; returns metrics and ledger rows."""
    overrides = overrides or {}
    seeds = _stage_seeds(cfg["seed"], replicate)
    model = cfg["model"]
    num_clients, n_total, _ = _network_sizes(cfg, overrides)

    truth = generate_ground_truth(
        p=model["p"],
        s0=model["s0"],
        beta=model["beta"],
        sigma=model["sigma"],
        covariance=_covariance_array(cfg),
        rng_seed=seeds[0],
    )
    dataset = sample_dataset(truth, n_total, rng_seed=seeds[1])
    partition = partition_rows(dataset, num_clients, rng_seed=seeds[2])
    pcfg = build_protocol_config(cfg, seeds[3], overrides)
    result = run_protocol(partition, pcfg)

    p = truth.p
    server = score_selection(result.consensus.selected, truth.support, p)
    client_scores = [
        score_selection(fs.indices, truth.support, p) for fs in result.feature_sets
    ]
    diags = result.diagnostics
    metrics: dict[str, Any] = {
        "server_precision": server.precision,
        "server_recall": server.recall,
        "server_f_measure": server.f_measure,
        "server_accuracy": server.accuracy,
        "server_fdp": server.fdp,
        "server_set_size": len(result.consensus.selected),
        "exact_recovery": float(
            tuple(result.consensus.selected) == tuple(int(j) for j in truth.support)
        ),
        "client_precision_mean": float(np.mean([m.precision for m in client_scores])),
        "client_recall_mean": float(np.mean([m.recall for m in client_scores])),
        "client_f_measure_mean": float(np.mean([m.f_measure for m in client_scores])),
        "client_fdp_mean": float(np.mean([m.fdp for m in client_scores])),
        "client_set_size_mean": float(np.mean([d.set_size for d in diags])),
        "client_lambda_mean": float(np.mean([d.lam for d in diags])),
        "client_converged_frac": float(np.mean([d.converged for d in diags])),
    }

    history_rows: list[list[Any]] = []
    fed = cfg["fedavg"]
    fed_keys = (
        "fedavg_rounds",
        "fedavg_converged",
        "fedavg_mse_param",
        "fedavg_mse_prediction",
        "baseline_rounds",
        "baseline_mse_param",
        "baseline_mse_prediction",
        "baseline_bits",
        "centralized_mse_param",
    )
    if fed["enabled"]:
        for key in fed_keys:
            metrics[key] = None
        options = _fedavg_options(cfg)
        columns = np.asarray(result.consensus.selected, dtype=np.int64)
        if columns.size:
            state, fed_ledger = run_fedavg(
                partition, columns=columns, options=options, theta_ref=truth.theta_star
            )
            result.ledger.merge(fed_ledger)
            theta_full = expand_coefficients(state.theta, state.columns, p)
            metrics["fedavg_rounds"] = state.rounds
            metrics["fedavg_converged"] = float(state.converged)
            metrics["fedavg_mse_param"] = score_regression(theta_full, truth.theta_star)
            metrics["fedavg_mse_prediction"] = _prediction_mse(dataset, theta_full)
            for row in state.history:
                history_rows.append(
                    ["selected", int(row[0]), float(row[1]), float(row[2])]
                )
        if fed["baseline"]:
            base_state, base_ledger = run_fedavg(
                partition, columns=None, options=options, theta_ref=truth.theta_star
            )
            base_full = expand_coefficients(base_state.theta, base_state.columns, p)
            metrics["baseline_rounds"] = base_state.rounds
            metrics["baseline_mse_param"] = score_regression(base_full, truth.theta_star)
            metrics["baseline_mse_prediction"] = _prediction_mse(dataset, base_full)
            metrics["baseline_bits"] = base_ledger.total_bits()
            for row in base_state.history:
                history_rows.append(
                    ["baseline", int(row[0]), float(row[1]), float(row[2])]
                )
        theta_c, _ = centralized_lasso_refit(
            dataset,
            k_folds=cfg["lambda"]["folds"],
            rng_seed=seeds[4],
            grid_size=cfg["lambda"]["grid_size"],
            grid_ratio=cfg["lambda"]["grid_ratio"],
            tol=cfg["solver"]["tol"],
            max_iter=cfg["solver"]["max_iter"],
        )
        metrics["centralized_mse_param"] = score_regression(theta_c, truth.theta_star)

    metrics["total_bits"] = result.ledger.total_bits()
    metrics["total_messages"] = result.ledger.total_messages()

    return {
        "replicate": replicate,
        "metrics": metrics,
        "ledger_rows": result.ledger.rows(),
        "history_rows": history_rows,
    }


def _worker(payload: tuple[dict[str, Any], int, dict[str, Any] | None]) -> dict[str, Any]:
    cfg, replicate, overrides = payload
    return run_replicate(cfg, replicate, overrides)


def _map_replicates(
    payloads: list[tuple[dict[str, Any], int, dict[str, Any] | None]], jobs: int
) -> list[dict[str, Any]]:
    if jobs <= 1 or len(payloads) <= 1:
        return [_worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_worker, payloads))


def _aggregate(results: list[dict[str, Any]]) -> dict[str, dict[str, float | int]]:
    """Mean and standard error per metric, skipping absent (None) values."""
    names: list[str] = []
    for res in results:
        for name in res["metrics"]:
            if name not in names:
                names.append(name)
    summary: dict[str, dict[str, float | int]] = {}
    for name in names:
        values = [
            float(res["metrics"][name])
            for res in results
            if res["metrics"].get(name) is not None
        ]
        if not values:
            continue
        arr = np.asarray(values)
        stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        summary[name] = {
            "mean": float(arr.mean()),
            "stderr": stderr,
            "count": int(arr.size),
        }
    return summary


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def cmd_run(cfg: dict[str, Any], out_dir: str, jobs: int) -> int:
    require_sections(cfg, ("model", "network"), "run")
    replicates = cfg["replicates"]
    payloads = [(cfg, rep, None) for rep in range(replicates)]
    results = _map_replicates(payloads, jobs)

    prov = _provenance(cfg, "run")
    os.makedirs(out_dir, exist_ok=True)

    metric_names = list(results[0]["metrics"].keys())
    header = ["replicate"] + metric_names
    rows = [
        [res["replicate"]] + [res["metrics"].get(name) for name in metric_names]
        for res in results
    ]
    write_csv(os.path.join(out_dir, "metrics.csv"), header, rows, prov)

    ledger_rows = [
        [res["replicate"], lr["client_id"], lr["phase"], lr["direction"],
         lr["messages"], lr["bits"]]
        for res in results
        for lr in res["ledger_rows"]
    ]
    write_csv(
        os.path.join(out_dir, "ledger.csv"),
        ["replicate", "client_id", "phase", "direction", "messages", "bits"],
        ledger_rows,
        prov,
    )

    if cfg["fedavg"]["enabled"]:
        history_rows = [
            [res["replicate"]] + hr for res in results for hr in res["history_rows"]
        ]
        write_csv(
            os.path.join(out_dir, "fedavg_history.csv"),
            ["replicate", "variant", "round", "mse", "max_delta"],
            history_rows,
            prov,
        )

    write_json(
        os.path.join(out_dir, "summary.json"),
        {
            "provenance": prov,
            "replicates": replicates,
            "metrics": _aggregate(results),
        },
    )
    print(f"run: {replicates} replicates -> {out_dir}")
    return 0


def cmd_bounds(cfg: dict[str, Any], out_dir: str) -> int:
    require_sections(cfg, ("model", "network", "bounds"), "bounds")
    model = cfg["model"]
    _, _, n_local = _network_sizes(cfg, {})
    rm = r_max(model["sigma"], model["s0"], model["p"], n_local, cfg["constants"]["c_r"])
    sm = sigma_max(model["sigma"], model["p"], n_local)
    grid_cfg = cfg["bounds"]
    taus = np.linspace(grid_cfg["tau_start"], grid_cfg["tau_stop"], grid_cfg["tau_num"])
    curve = bound_curve(taus, model["beta"], rm, sm)

    prov = _provenance(cfg, "bounds")
    prov["derived"] = {"r_max": rm, "sigma_max": sm, "n_local": n_local}
    os.makedirs(out_dir, exist_ok=True)
    rows = [
        [float(t), float(f), float(g)]
        for t, f, g in zip(curve.thresholds, curve.fpr_upper, curve.tpr_lower)
    ]
    write_csv(
        os.path.join(out_dir, "bounds.csv"),
        ["tau", "fpr_upper", "tpr_lower"],
        rows,
        prov,
    )
    print(f"bounds: {len(rows)} grid points -> {out_dir}")
    return 0


def cmd_sweep(cfg: dict[str, Any], out_dir: str, jobs: int) -> int:
    require_sections(cfg, ("model", "network", "sweep"), "sweep")
    axis = cfg["sweep"]["axis"]
    grid = cfg["sweep"]["grid"]
    replicates = cfg["replicates"]

    payloads = []
    keys = []
    for value in grid:
        axis_value = float(value) if axis == "tau" else int(value)
        for rep in range(replicates):
            payloads.append((cfg, rep, {axis: axis_value}))
            keys.append(axis_value)
    results = _map_replicates(payloads, jobs)

    prov = _provenance(cfg, "sweep")
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for axis_value, res in zip(keys, results):
        for name, value in res["metrics"].items():
            if value is None:
                continue
            rows.append([axis_value, res["replicate"], name, float(value)])
    write_csv(
        os.path.join(out_dir, "sweep.csv"),
        ["axis_value", "replicate", "metric", "value"],
        rows,
        prov,
    )
    print(f"sweep over {axis}: {len(grid)} values x {replicates} replicates -> {out_dir}")
    return 0


def _parse_truth_file(path: str, dataset: Dataset) -> tuple[list[int], list[str]]:
    """Resolve a plain index/name truth list to retained column positions."""
    by_original: dict[int, int] = {
        int(orig): pos for pos, orig in enumerate(dataset.feature_indices)
    }
    by_name: dict[str, int] = {
        name: pos for pos, name in enumerate(dataset.feature_names)
    }
    positions: list[int] = []
    unresolved: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            token = line.strip()
            if not token or token.startswith("#"):
                continue
            pos: int | None = None
            try:
                pos = by_original.get(int(token))
            except ValueError:
                pos = by_name.get(token)
            if pos is None:
                unresolved.append(token)
            else:
                positions.append(pos)
    return sorted(set(positions)), unresolved


def cmd_real(cfg: dict[str, Any], out_dir: str) -> int:
    require_sections(cfg, ("network", "real"), "real")
    real = cfg["real"]
    if cfg["selection"]["mode"] == "interval":
        raise ConfigError(
            "command 'real' cannot use selection mode 'interval' (no model section)"
        )
    if cfg["lambda"]["mode"] == "theory":
        raise ConfigError("command 'real' requires lambda mode 'cv'")
    if cfg["debias"]["mode"] == "known":
        raise ConfigError("command 'real' requires debias mode 'nodewise'")

    dataset = load_binary_design_csv(
        real["dataset_path"],
        response_column=real["response_column"],
        min_occurrence=real["min_occurrence"],
    )
    seeds = _stage_seeds(cfg["seed"], 0)
    num_clients = cfg["network"]["num_clients"]
    partition = partition_rows(dataset, num_clients, rng_seed=seeds[2])
    pcfg = build_protocol_config(cfg, seeds[3], with_model=False)
    if pcfg.selection_mode == "top_k" and pcfg.k is None:
        pcfg.k = default_top_k(dataset.p)
    result = run_protocol(partition, pcfg)

    selected = list(result.consensus.selected)
    summary: dict[str, Any] = {
        "n_rows": dataset.n,
        "p_retained": dataset.p,
        "num_clients": num_clients,
        "selected_size": len(selected),
        "client_set_size_mean": float(
            np.mean([d.set_size for d in result.diagnostics])
        ),
        "bits_proposed": result.ledger.total_bits(),
    }

    if real["truth_file"] is not None:
        positions, unresolved = _parse_truth_file(real["truth_file"], dataset)
        summary["truth_resolved"] = len(positions)
        summary["truth_unresolved"] = len(unresolved)
        if positions:
            scored = score_selection(selected, positions, dataset.p)
            summary["power"] = scored.recall
            summary["fdp"] = scored.fdp
        else:
            summary["power"] = 0.0
            summary["fdp"] = 1.0 if selected else 0.0

    history_rows: list[list[Any]] = []
    if cfg["fedavg"]["enabled"] and selected:
        options = _fedavg_options(cfg)
        columns = np.asarray(selected, dtype=np.int64)
        state, fed_ledger = run_fedavg(partition, columns=columns, options=options)
        result.ledger.merge(fed_ledger)
        summary["fedavg_rounds"] = state.rounds
        summary["fedavg_mse_prediction"] = _prediction_mse(
            dataset, expand_coefficients(state.theta, state.columns, dataset.p)
        )
        summary["bits_proposed"] = result.ledger.total_bits()
        for row in state.history:
            history_rows.append(["selected", int(row[0]), float(row[1]), float(row[2])])
        if cfg["fedavg"]["baseline"]:
            base_state, base_ledger = run_fedavg(partition, columns=None, options=options)
            summary["baseline_rounds"] = base_state.rounds
            summary["baseline_bits"] = base_ledger.total_bits()
            summary["cost_ratio"] = base_ledger.total_bits() / result.ledger.total_bits()
            for row in base_state.history:
                history_rows.append(
                    ["baseline", int(row[0]), float(row[1]), float(row[2])]
                )

    prov = _provenance(cfg, "real")
    os.makedirs(out_dir, exist_ok=True)
    write_csv(
        os.path.join(out_dir, "selection.csv"),
        ["position", "original_index", "name"],
        [
            [pos, int(dataset.feature_indices[pos]), dataset.feature_names[pos]]
            for pos in selected
        ],
        prov,
    )
    write_csv(
        os.path.join(out_dir, "ledger.csv"),
        ["client_id", "phase", "direction", "messages", "bits"],
        [
            [lr["client_id"], lr["phase"], lr["direction"], lr["messages"], lr["bits"]]
            for lr in result.ledger.rows()
        ],
        prov,
    )
    if history_rows:
        write_csv(
            os.path.join(out_dir, "fedavg_history.csv"),
            ["variant", "round", "mse", "max_delta"],
            history_rows,
            prov,
        )
    write_json(
        os.path.join(out_dir, "real_summary.json"),
        {"provenance": prov, "results": summary},
    )
    print(f"real: {len(selected)} features selected -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Entry point.
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedselect",
        description="Distributed sparse feature selection simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "synthetic replicates: metrics, summary, ledger, optional history"),
        ("bounds", "analytic false/true positive rate bounds over a threshold grid"),
        ("sweep", "replicate grid over one axis (num_clients, tau, n_local)"),
        ("real", "one protocol run on a binary design CSV"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument(
            "--seed", type=int, default=None, help="master seed (overrides config)"
        )
        if name in ("run", "sweep"):
            sp.add_argument(
                "--jobs", type=int, default=1, help="parallel replicate workers"
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError(f"--seed must be in [0, 2^64), got {args.seed}")
            cfg["seed"] = args.seed
        out_dir = args.out if args.out is not None else cfg.get("output_dir")
        if out_dir is None:
            raise ConfigError("no output directory: pass --out or set output_dir")
        jobs = getattr(args, "jobs", 1)
        if jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            return cmd_run(cfg, out_dir, jobs)
        if args.command == "bounds":
            return cmd_bounds(cfg, out_dir)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir, jobs)
        return cmd_real(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ClientRunError as exc:
        print("runtime error: one or more clients failed", file=sys.stderr)
        for client_id, err in sorted(exc.failures.items()):
            print(f"  client {client_id}: {type(err).__name__}: {err}", file=sys.stderr)
        return 3
    except (FedselectError, OSError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
