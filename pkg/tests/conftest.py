"""Shared fixtures: small synthetic problems and a binary design file."""

from __future__ import annotations

import numpy as np
import pytest

from fedselect import generate_ground_truth, sample_dataset


def make_problem(p, s0, n, beta=0.5, sigma=0.1, seed=0, covariance=None):
    """One seeded ground truth plus a sampled dataset."""
    truth = generate_ground_truth(
        p, s0, beta, sigma, covariance=covariance, rng_seed=[seed, 0]
    )
    dataset = sample_dataset(truth, n, rng_seed=[seed, 1])
    return truth, dataset


def write_binary_csv(path, n=60, p=9, rare_column=7, seed=3, noise=0.05):
    """Binary design with two causal columns (1 and 4) and one rare column."""
    rng = np.random.default_rng(seed)
    X = (rng.random((n, p)) < 0.35).astype(int)
    X[:, rare_column] = (rng.random(n) < 0.02).astype(int)
    coef = np.zeros(p)
    coef[[1, 4]] = [1.2, -0.9]
    y = X @ coef + noise * rng.standard_normal(n)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join([f"g{j}" for j in range(p)] + ["resp"]) + "\n")
        for i in range(n):
            fh.write(",".join(str(v) for v in X[i]) + f",{y[i]:.6f}\n")
    return X, y


@pytest.fixture
def binary_csv(tmp_path):
    path = tmp_path / "design.csv"
    write_binary_csv(path)
    return path
