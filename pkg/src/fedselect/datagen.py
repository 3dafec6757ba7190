"""Synthetic sparse-regression data, row partitioning, and binary CSV ingestion.

The sampling model is y = X theta* + omega with X rows drawn i.i.d. from
N(0, Sigma) and omega ~ N(0, sigma^2 I).  theta* is s0-sparse with every
supported coefficient at least beta in magnitude.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, InsufficientDataError, ParameterError

SeedLike = int | list[int] | tuple[int, ...] | np.random.SeedSequence | np.random.Generator


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _validate_covariance(covariance: np.ndarray | None, p: int) -> np.ndarray | None:
    """Return a validated copy of an explicit covariance, or None for identity."""
    if covariance is None:
        return None
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (p, p):
        raise ParameterError(f"covariance must be ({p}, {p}), got {cov.shape}")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise ParameterError("covariance must be symmetric")
    if not np.allclose(np.diag(cov), 1.0, atol=1e-12):
        raise ParameterError("covariance must have unit diagonal")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("covariance must be positive definite") from exc
    return cov


@dataclass(frozen=True)
class GroundTruth:
    """True model parameters behind a synthetic dataset."""

    p: int
    s0: int
    support: np.ndarray
    theta_star: np.ndarray
    beta: float
    sigma: float
    covariance: np.ndarray | None = None

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        theta = np.asarray(self.theta_star, dtype=float)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "theta_star", theta)
        if self.p < 1:
            raise ParameterError(f"p must be >= 1, got {self.p}")
        if not 0 <= self.s0 < self.p:
            raise ParameterError(f"s0 must satisfy 0 <= s0 < p, got s0={self.s0} p={self.p}")
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta must be in (0, 1], got {self.beta}")
        if self.sigma < 0.0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")
        if theta.shape != (self.p,):
            raise ParameterError(f"theta_star must have shape ({self.p},)")
        if support.shape != (self.s0,) or len(np.unique(support)) != self.s0:
            raise ParameterError("support must hold s0 distinct indices")
        if self.s0 and (support.min() < 0 or support.max() >= self.p):
            raise ParameterError("support indices out of range")
        on = np.zeros(self.p, dtype=bool)
        on[support] = True
        if np.any(theta[~on] != 0.0):
            raise ParameterError("theta_star must be zero off the support")
        if np.any(np.abs(theta[on]) < self.beta):
            raise ParameterError("supported coefficients must be >= beta in magnitude")
        object.__setattr__(self, "covariance", _validate_covariance(self.covariance, self.p))

    def to_json(self) -> str:
        payload = {
            "p": self.p,
            "s0": self.s0,
            "support": self.support.tolist(),
            "theta_star": self.theta_star.tolist(),
            "beta": self.beta,
            "sigma": self.sigma,
            "covariance": None if self.covariance is None else self.covariance.tolist(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        raw = json.loads(text)
        cov = raw.get("covariance")
        return cls(
            p=raw["p"],
            s0=raw["s0"],
            support=np.asarray(raw["support"], dtype=np.int64),
            theta_star=np.asarray(raw["theta_star"], dtype=float),
            beta=raw["beta"],
            sigma=raw["sigma"],
            covariance=None if cov is None else np.asarray(cov, dtype=float),
        )


@dataclass
class Dataset:
    """A design matrix with its response vector.

    feature_indices / feature_names carry the original column identities when
    the dataset came from a filtered file (None for synthetic data).
    """

    X: np.ndarray
    y: np.ndarray
    feature_indices: tuple[int, ...] | None = None
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ParameterError(f"X must be 2-D, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise ParameterError(
                f"y must have shape ({self.X.shape[0]},), got {self.y.shape}"
            )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class Partition:
    """Disjoint row shards of one dataset, one per client."""

    shards: list[Dataset]
    permutation: np.ndarray = field(repr=False)

    @property
    def num_clients(self) -> int:
        return len(self.shards)

    @property
    def client_sizes(self) -> list[int]:
        return [shard.n for shard in self.shards]

    @property
    def n_total(self) -> int:
        return sum(self.client_sizes)


def generate_ground_truth(
    p: int,
    s0: int,
    beta: float,
    sigma: float,
    covariance: np.ndarray | None = None,
    rng_seed: SeedLike = 0,
) -> GroundTruth:
    """Draw an s0-sparse coefficient vector with magnitudes uniform on [beta, 1].

    Support indices are a uniform s0-subset of {0..p-1}; signs are independent
    fair coin flips, so each coefficient is uniform on [-1, -beta] u [beta, 1].
    """
    if not 0 < s0 < p:
        raise ParameterError(f"need 0 < s0 < p, got s0={s0} p={p}")
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must be in (0, 1], got {beta}")
    if sigma < 0.0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    rng = _as_rng(rng_seed)
    support = np.sort(rng.choice(p, size=s0, replace=False)).astype(np.int64)
    magnitudes = rng.uniform(beta, 1.0, size=s0)
    signs = rng.choice([-1.0, 1.0], size=s0)
    theta = np.zeros(p)
    theta[support] = signs * magnitudes
    return GroundTruth(
        p=p, s0=s0, support=support, theta_star=theta, beta=beta, sigma=sigma,
        covariance=covariance,
    )


def sample_dataset(truth: GroundTruth, n: int, rng_seed: SeedLike = 0) -> Dataset:
    """Draw n rows from the linear model defined by `truth`."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = _as_rng(rng_seed)
    X = rng.standard_normal((n, truth.p))
    if truth.covariance is not None:
        X = X @ np.linalg.cholesky(truth.covariance).T
    noise = truth.sigma * rng.standard_normal(n) if truth.sigma > 0.0 else 0.0
    y = X @ truth.theta_star + noise
    return Dataset(X=X, y=y)


def partition_rows(dataset: Dataset, num_clients: int, rng_seed: SeedLike = 0) -> Partition:
    """Split rows into num_clients disjoint shards whose sizes differ by at most 1."""
    if num_clients < 1:
        raise ParameterError(f"num_clients must be >= 1, got {num_clients}")
    if dataset.n < num_clients:
        raise InsufficientDataError(
            f"cannot split {dataset.n} rows across {num_clients} clients"
        )
    rng = _as_rng(rng_seed)
    perm = rng.permutation(dataset.n)
    base, extra = divmod(dataset.n, num_clients)
    shards = []
    start = 0
    for client in range(num_clients):
        size = base + (1 if client < extra else 0)
        rows = perm[start:start + size]
        start += size
        shards.append(
            Dataset(
                X=dataset.X[rows],
                y=dataset.y[rows],
                feature_indices=dataset.feature_indices,
                feature_names=dataset.feature_names,
            )
        )
    return Partition(shards=shards, permutation=perm)


_MISSING_TOKENS = {"", "na", "nan", "n/a", "null", "."}


def load_binary_design_csv(
    path: str,
    response_column: str | None = None,
    min_occurrence: int = 3,
) -> Dataset:
    """Load a comma-separated file of binary features plus one numeric response.

    The first row is a header.  The response column is chosen by name
    (default: the last column).  Rows containing missing cells are dropped;
    any other non-binary feature cell raises DataFormatError with its line
    number.  Feature columns whose count of ones is <= min_occurrence are
    dropped, and the retained original column indices/names are recorded on
    the returned Dataset.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", line_number=1) from None
        header = [name.strip() for name in header]
        if response_column is None:
            response_idx = len(header) - 1
        else:
            try:
                response_idx = header.index(response_column)
            except ValueError:
                raise DataFormatError(
                    f"response column {response_column!r} not in header"
                ) from None
        feature_cols = [i for i in range(len(header)) if i != response_idx]
        if not feature_cols:
            raise DataFormatError("no feature columns besides the response")

        rows: list[list[float]] = []
        responses: list[float] = []
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"expected {len(header)} cells, got {len(row)}", line_number
                )
            cells = [cell.strip() for cell in row]
            if any(cell.lower() in _MISSING_TOKENS for cell in cells):
                continue  # row-drop for missing values
            try:
                response = float(cells[response_idx])
            except ValueError:
                raise DataFormatError(
                    f"response cell {cells[response_idx]!r} is not numeric", line_number
                ) from None
            if math.isnan(response):
                continue
            features = []
            for col in feature_cols:
                cell = cells[col]
                if cell not in ("0", "1"):
                    raise DataFormatError(
                        f"feature cell {cell!r} in column {header[col]!r} is not binary",
                        line_number,
                    )
                features.append(float(cell))
            rows.append(features)
            responses.append(response)

    if not rows:
        raise DataFormatError("no usable data rows")
    X = np.asarray(rows, dtype=float)
    y = np.asarray(responses, dtype=float)
    counts = X.sum(axis=0)
    keep = np.flatnonzero(counts > min_occurrence)
    if keep.size == 0:
        raise DataFormatError(
            f"every feature column has <= {min_occurrence} ones; nothing retained"
        )
    kept_original = tuple(feature_cols[i] for i in keep)
    kept_names = tuple(header[feature_cols[i]] for i in keep)
    return Dataset(
        X=X[:, keep], y=y, feature_indices=kept_original, feature_names=kept_names
    )
