"""Shared helpers: counting stub problems, dataset writers and generators."""

from __future__ import annotations

import numpy as np
import pytest

from dszog import BlackBoxProblem


def make_stub_problem(dim=3, n=4, m=5):
    """Cheap deterministic problem for counting and determinism tests."""

    def objective_component(i, w):
        return float((i + 1) * w.sum())

    def constraint(j, w):
        return float(w[j % dim] - 1.0)

    return BlackBoxProblem(dim, n, m, objective_component, constraint, name="stub")


def write_sparse(path, data):
    """Test-only writer for the sparse text format (round-trip partner of
    read_sparse_dataset)."""
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(data.features, data.labels):
            cells = [f"{int(label):+d}"]
            for idx in np.flatnonzero(row):
                cells.append(f"{idx + 1}:{float(row[idx])!r}")
            fh.write(" ".join(cells) + "\n")


def make_a9a_like(n=1000, dim=123, seed=0, pos_fraction=0.24):
    """Synthetic stand-in for a binary-featured sparse dataset: ~14 active
    binary features per row, skewed classes, planted sparse linear rule."""
    rng = np.random.default_rng(seed)
    n_active = min(14, dim)
    n_informative = min(40, dim)
    x = np.zeros((n, dim))
    for row in range(n):
        active = rng.choice(dim, size=n_active, replace=False)
        x[row, active] = 1.0
    w_true = np.zeros(dim)
    informative = rng.choice(dim, size=n_informative, replace=False)
    w_true[informative] = rng.standard_normal(n_informative)
    scores = x @ w_true + 0.6 * rng.standard_normal(n)
    threshold = np.quantile(scores, 1.0 - pos_fraction)
    labels = np.where(scores > threshold, 1.0, -1.0)
    from dszog import Dataset

    return Dataset(features=x, labels=labels)


@pytest.fixture
def stub_problem():
    return make_stub_problem()
