"""Experiment configuration: JSON loading, validation, and default resolution.

A configuration file is a single JSON object with optional sections.  Unknown
keys anywhere in the document are rejected so that a typo (``"taus"`` for
``"tau"``) fails loudly instead of silently running with a default.  After
validation the configuration is *resolved*: every omitted field is filled with
its default so the provenance block embedded in output files is a complete,
self-contained record of what actually ran.

Sections
--------
``model``        synthetic ground truth (p, s0, beta, sigma, covariance)
``network``      num_clients plus exactly one of n_local / n_total
``selection``    mode (top_k | threshold | interval) and its parameters
``lambda``       regularisation mode (cv | theory) and its parameters
``debias``       nodewise-regression vs known-covariance bypass
``fedavg``       optional post-selection averaging stage
``constants``    c_r (threshold-interval radius constant) and f_bits
``solver``       coordinate-descent tolerance / iteration cap
``bounds``       tau grid for the ``bounds`` subcommand
``sweep``        axis + grid for the ``sweep`` subcommand
``real``         ingestion options for the ``real`` subcommand
``replicates``   number of independent repetitions (default 20)
``seed``         master seed, overridable with ``--seed``
``output_dir``   fallback for ``--out``; never echoed into provenance, so the
                 same config and seed produce byte-identical files anywhere
"""

from __future__ import annotations

import copy
import json
from typing import Any

import jsonschema

from .errors import ConfigError

_NUMBER = {"type": "number"}
_POS_NUMBER = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "integer", "minimum": 2},
                "s0": _POS_INT,
                "beta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "sigma": {"type": "number", "minimum": 0},
                "covariance": {
                    "anyOf": [
                        {"const": "identity"},
                        {
                            "type": "array",
                            "items": {"type": "array", "items": _NUMBER},
                        },
                    ]
                },
            },
            "required": ["p", "s0", "beta", "sigma"],
        },
        "network": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "num_clients": _POS_INT,
                "n_local": _POS_INT,
                "n_total": _POS_INT,
            },
            "required": ["num_clients"],
        },
        "selection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["top_k", "threshold", "interval"]},
                "k": _POS_INT,
                "tau": {"type": "number", "minimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
            },
        },
        "lambda": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["cv", "theory"]},
                "folds": {"type": "integer", "minimum": 2},
                "grid_size": {"type": "integer", "minimum": 2},
                "grid_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "k": {"type": "number", "minimum": 8},
            },
        },
        "debias": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["nodewise", "known"]},
                "K": _POS_NUMBER,
            },
        },
        "fedavg": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "baseline": {"type": "boolean"},
                "mu": {"anyOf": [{"type": "null"}, _POS_NUMBER]},
                "local_steps": _POS_INT,
                "max_rounds": _POS_INT,
                "tol": _POS_NUMBER,
            },
        },
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c_r": _POS_NUMBER,
                "f_bits": _POS_INT,
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": _POS_NUMBER,
                "max_iter": _POS_INT,
            },
        },
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau_start": {"type": "number", "minimum": 0},
                "tau_stop": {"type": "number", "minimum": 0},
                "tau_num": _POS_INT,
            },
            "required": ["tau_start", "tau_stop", "tau_num"],
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "axis": {"enum": ["num_clients", "tau", "n_local"]},
                "grid": {
                    "type": "array",
                    "items": _NUMBER,
                    "minItems": 1,
                },
            },
            "required": ["axis", "grid"],
        },
        "real": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dataset_path": {"type": "string"},
                "response_column": {"anyOf": [{"type": "null"}, {"type": "string"}]},
                "min_occurrence": {"type": "integer", "minimum": 0},
                "truth_file": {"anyOf": [{"type": "null"}, {"type": "string"}]},
            },
            "required": ["dataset_path"],
        },
        "replicates": _POS_INT,
        "seed": {"type": "integer", "minimum": 0, "exclusiveMaximum": 2**64},
        "output_dir": {"type": "string"},
    },
}

DEFAULTS: dict[str, Any] = {
    "selection": {
        "mode": "top_k",
        "k": None,  # resolved to max(1, round(0.25 * p)) when a model is present
        "tau": None,
        "epsilon": 0.05,
        "delta": 0.05,
    },
    "lambda": {
        "mode": "cv",
        "folds": 5,
        "grid_size": 50,
        "grid_ratio": 1e-4,
        "k": 8.0,
    },
    "debias": {"mode": "nodewise", "K": 2.0},
    "fedavg": {
        "enabled": False,
        "baseline": False,
        "mu": None,
        "local_steps": 1,
        "max_rounds": 10_000,
        "tol": 1e-8,
    },
    "constants": {"c_r": 1.0, "f_bits": 32},
    "solver": {"tol": 1e-10, "max_iter": 100_000},
    "real": {"response_column": None, "min_occurrence": 3, "truth_file": None},
    "replicates": 20,
    "seed": 0,
}

_MODEL_DEFAULTS = {"covariance": "identity"}


def _schema_error_path(err: jsonschema.ValidationError) -> str:
    parts = ["$"]
    for item in err.absolute_path:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(f".{item}")
    return "".join(parts)


def load_config(path: str) -> dict[str, Any]:
    """Read a JSON config file and return the resolved configuration dict.

    Raises :class:`ConfigError` for unreadable files, malformed JSON, schema
    violations (including unknown keys), and cross-field inconsistencies.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    return resolve_config(raw)


def resolve_config(raw: dict[str, Any]) -> dict[str, Any]:
    """Validate ``raw`` against the schema and fill every default.

    Returns a deep-copied, fully materialised dict; ``raw`` is not modified.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(f"config error at {_schema_error_path(first)}: {first.message}")

    cfg = copy.deepcopy(raw)
    for section, defaults in DEFAULTS.items():
        if isinstance(defaults, dict):
            merged = dict(defaults)
            merged.update(cfg.get(section, {}))
            cfg[section] = merged
        else:
            cfg.setdefault(section, defaults)
    if "model" in cfg:
        merged = dict(_MODEL_DEFAULTS)
        merged.update(cfg["model"])
        cfg["model"] = merged

    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: dict[str, Any]) -> None:
    model = cfg.get("model")
    network = cfg.get("network")

    if network is not None:
        has_local = "n_local" in network
        has_total = "n_total" in network
        if has_local == has_total:
            raise ConfigError(
                "config error at $.network: exactly one of n_local / n_total is required"
            )

    if model is not None:
        if model["s0"] >= model["p"]:
            raise ConfigError("config error at $.model: s0 must be smaller than p")
        cov = model["covariance"]
        if cov != "identity" and len(cov) != model["p"]:
            raise ConfigError(
                "config error at $.model.covariance: matrix must be p x p"
            )

    sel = cfg["selection"]
    if sel["mode"] == "threshold" and sel["tau"] is None:
        raise ConfigError(
            "config error at $.selection: mode 'threshold' requires tau"
        )
    if sel["mode"] == "interval" and model is None:
        raise ConfigError(
            "config error at $.selection: mode 'interval' requires a model section "
            "(it is derived from sigma, beta, and s0)"
        )
    if sel["mode"] == "top_k" and sel["k"] is None and model is not None:
        sel["k"] = max(1, round(0.25 * model["p"]))

    if cfg["lambda"]["mode"] == "theory" and model is None:
        raise ConfigError(
            "config error at $.lambda: mode 'theory' requires a model section "
            "(the rate constant multiplies sigma)"
        )

    if cfg["debias"]["mode"] == "known" and model is None:
        raise ConfigError(
            "config error at $.debias: mode 'known' requires a model section"
        )

    fed = cfg["fedavg"]
    if fed["baseline"] and not fed["enabled"]:
        raise ConfigError(
            "config error at $.fedavg: baseline requires enabled=true"
        )

    sweep = cfg.get("sweep")
    if sweep is not None:
        axis = sweep["axis"]
        if axis == "tau" and sel["mode"] != "threshold":
            raise ConfigError(
                "config error at $.sweep: axis 'tau' requires selection.mode 'threshold'"
            )
        if axis in ("num_clients", "n_local"):
            for i, v in enumerate(sweep["grid"]):
                if not float(v).is_integer() or v < 1:
                    raise ConfigError(
                        f"config error at $.sweep.grid[{i}]: axis {axis!r} needs "
                        f"positive integers, got {v!r}"
                    )
        if axis == "n_local" and network is not None and "n_local" not in network:
            raise ConfigError(
                "config error at $.sweep: axis 'n_local' requires network.n_local"
            )
        if axis == "tau":
            for i, v in enumerate(sweep["grid"]):
                if v < 0:
                    raise ConfigError(
                        f"config error at $.sweep.grid[{i}]: tau must be >= 0"
                    )

    bounds = cfg.get("bounds")
    if bounds is not None and bounds["tau_stop"] < bounds["tau_start"]:
        raise ConfigError(
            "config error at $.bounds: tau_stop must be >= tau_start"
        )


def require_sections(cfg: dict[str, Any], names: tuple[str, ...], command: str) -> None:
    """Raise :class:`ConfigError` unless every section in ``names`` is present."""
    missing = [n for n in names if n not in cfg]
    if missing:
        raise ConfigError(
            f"command {command!r} requires config section(s): {', '.join(missing)}"
        )
