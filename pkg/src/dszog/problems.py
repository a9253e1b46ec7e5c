"""Benchmark problems: pairwise-ranking-constrained and fairness-constrained
linear classification, analytic problems with known optima, and a synthetic
generator for fairness data with multiple sensitive features."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .types import BlackBoxProblem, ConfigError, ContractError, DataError


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with +/-1 labels and optional binary sensitive bits."""

    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), values in {-1, +1}
    sensitive: Optional[np.ndarray] = None  # (n, r), values in {0, 1}

    def __post_init__(self):
        x, y = self.features, self.labels
        if x.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if y.shape != (x.shape[0],):
            raise DataError("labels must have one entry per feature row")
        if x.shape[0] > 0 and not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("labels must be -1 or +1")
        if self.sensitive is not None:
            z = self.sensitive
            if z.ndim != 2 or z.shape[0] != x.shape[0]:
                raise DataError("sensitive matrix must have one row per sample")
            if z.shape[0] > 0 and not np.all(np.isin(z, (0.0, 1.0))):
                raise DataError("sensitive entries must be 0 or 1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for the train/test/validation partition."""

    train: float = 0.5
    test: float = 0.3
    validation: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train, self.test, self.validation)
        if any(not (0.0 < f < 1.0) for f in fracs):
            raise ConfigError("split", "all fractions must lie strictly in (0, 1)")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError("split", f"fractions sum to {sum(fracs)}, expected 1")


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint, exhaustive, seed-deterministic shuffled split."""
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(data.n)
    n_train = round(spec.train * data.n)
    n_test = round(spec.test * data.n)
    parts = (perm[:n_train], perm[n_train : n_train + n_test], perm[n_train + n_test :])
    return tuple(_take(data, idx) for idx in parts)


def _take(data: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(
        features=data.features[idx],
        labels=data.labels[idx],
        sensitive=None if data.sensitive is None else data.sensitive[idx],
    )


def accuracy(w, data: Dataset) -> float:
    """Fraction of rows with sign(x @ w) == y; sign(0) counts as +1."""
    scores = data.features @ np.asarray(w)
    preds = np.where(scores >= 0.0, 1.0, -1.0)
    return float(np.mean(preds == data.labels))


def build_pairwise_problem(data: Dataset, c_loss: float = 1.0) -> BlackBoxProblem:
    """Linear scoring with one ranking constraint per (positive, negative) pair.

    Objective component i is a bounded squared loss pulling the score of
    row i toward its label; constraint k, with k = i*n_neg + j in
    positive-major order, requires score(positive i) >= score(negative j).
    Pairs are enumerated lazily; nothing of size m*d is materialized.
    """
    if not (np.isfinite(c_loss) and c_loss > 0):
        raise ConfigError("c_loss", "must be a positive real")
    x, y = data.features, data.labels
    pos = np.flatnonzero(y > 0)
    neg = np.flatnonzero(y < 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("pairwise constraints need both classes present")
    n_neg = len(neg)
    c_sq = c_loss * c_loss

    def objective_component(i: int, w: np.ndarray) -> float:
        residual = y[i] - x[i] @ w
        return c_sq * (1.0 - np.exp(-(residual * residual) / c_sq))

    def constraint(k: int, w: np.ndarray) -> float:
        i, j = divmod(k, n_neg)
        return x[neg[j]] @ w - x[pos[i]] @ w

    return BlackBoxProblem(
        dim=data.dim,
        n_components=data.n,
        n_constraints=len(pos) * n_neg,
        objective_component=objective_component,
        constraint=constraint,
        name="pairwise",
    )


def build_fairness_problem(data: Dataset, c_cov: float = 1e-3, loss: str = "hinge") -> BlackBoxProblem:
    """Hinge-loss classification with covariance fairness constraints.

    For each sensitive feature there are four constraints: two signed-
    distance functions (one per class's margin violations) times two
    inequality directions, bounding |cov(z_j, g)| <= c_cov. Layout: index
    4*j + 2*g + s, where s=0 is the "<= c" direction and s=1 the ">= -c"
    direction, so consecutive even/odd constraints sum to -2*c_cov.
    Each constraint call makes one pass over the n rows.
    """
    if loss != "hinge":
        raise ConfigError("loss", f"unsupported loss {loss!r}")
    if not (np.isfinite(c_cov) and c_cov > 0):
        raise ConfigError("c_cov", "must be a positive real")
    if data.sensitive is None:
        raise DataError("fairness constraints need sensitive features")
    x, y, z = data.features, data.labels, data.sensitive
    n, r = x.shape[0], z.shape[1]
    z_centered = z - z.mean(axis=0)  # (n, r), mean removed once
    pos_mask = y > 0
    neg_mask = ~pos_mask

    def objective_component(i: int, w: np.ndarray) -> float:
        return max(1.0 - y[i] * (x[i] @ w), 0.0)

    def constraint(k: int, w: np.ndarray) -> float:
        j, rem = divmod(k, 4)
        which_g, direction = divmod(rem, 2)
        h = x @ w
        g = np.where(pos_mask if which_g == 0 else neg_mask, np.minimum(h, 0.0), 0.0)
        cov = (z_centered[:, j] @ g) / n
        return (cov if direction == 0 else -cov) - c_cov

    return BlackBoxProblem(
        dim=data.dim,
        n_components=n,
        n_constraints=4 * r,
        objective_component=objective_component,
        constraint=constraint,
        name="fairness",
    )


def fairness_box_radius(data: Dataset, c_cov: float) -> float:
    """Radius of the largest box [-r, r]^d certified inside the fairness-
    feasible set.

    |cov_j(w)| <= (1/n) sum_i |z_ij - zbar_j| * ||x_i||_1 * ||w||_inf for
    every signed-distance function, so r = c_cov / max_j K_j. This is the
    box a projection-onto-a-simple-set baseline must use if its iterates
    are to honor the covariance constraints; a looser box solves the
    unconstrained problem instead.
    """
    if data.sensitive is None:
        raise DataError("fairness box needs sensitive features")
    if not (np.isfinite(c_cov) and c_cov > 0):
        raise ConfigError("c_cov", "must be a positive real")
    z_centered = np.abs(data.sensitive - data.sensitive.mean(axis=0))
    row_l1 = np.abs(data.features).sum(axis=1)
    lipschitz = float(np.max(z_centered.T @ row_l1) / data.n)
    if lipschitz == 0.0:
        raise DataError("degenerate sensitive features: constraints are vacuous")
    return c_cov / lipschitz


def generate_fairness_dataset(n: int, d: int, r: int, seed: int, rho: float = 0.6) -> Dataset:
    """Two Gaussian class clouds plus label-correlated binary sensitive bits.

    The mixing coefficient rho sets P(z=1 | y) = (1 + rho*y)/2, so with
    rho > 0 the covariance constraints bind at accurate classifiers and the
    benchmark is not vacuous; rho = 0 makes the bits independent of labels.
    """
    if r > d:
        raise ConfigError("r", "cannot exceed the feature dimension")
    if not (-1.0 <= rho <= 1.0):
        raise ConfigError("rho", "must lie in [-1, 1]")
    rng = np.random.default_rng(seed)
    w_sep = rng.standard_normal(d)
    w_sep /= np.linalg.norm(w_sep)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    x = 1.5 * y[:, None] * w_sep[None, :] + rng.standard_normal((n, d))
    z = (rng.random((n, r)) < (1.0 + rho * y[:, None]) / 2.0).astype(np.float64)
    return Dataset(features=x, labels=y, sensitive=z)


@dataclass(frozen=True)
class AnalyticCase:
    """A problem whose constrained optimum is known independently."""

    name: str
    problem: BlackBoxProblem
    optimum: np.ndarray
    tol: float


def _halfspace_projection_case(seed: int = 7, dim: int = 3, k: int = 5) -> AnalyticCase:
    """min ||w - target||^2 over random half-spaces; optimum by exhaustive
    KKT active-set enumeration."""
    rng = np.random.default_rng(seed)
    a_mat = rng.standard_normal((k, dim))
    a_mat /= np.linalg.norm(a_mat, axis=1, keepdims=True)
    margins = rng.uniform(0.1, 0.6, size=k)
    b_vec = margins  # feasible region contains the origin with these margins
    target = 1.5 * a_mat.mean(axis=0) / np.linalg.norm(a_mat.mean(axis=0)) + rng.normal(0, 0.2, size=dim)

    optimum = _project_polytope(target, a_mat, b_vec)

    def objective_component(i: int, w: np.ndarray) -> float:
        diff = w - target
        return float(diff @ diff)

    def constraint(j: int, w: np.ndarray) -> float:
        return float(a_mat[j] @ w - b_vec[j])

    problem = BlackBoxProblem(
        dim=dim,
        n_components=1,
        n_constraints=k,
        objective_component=objective_component,
        constraint=constraint,
        name="halfspace-projection",
    )
    return AnalyticCase("b", problem, optimum, tol=5e-2)


def _project_polytope(target: np.ndarray, a_mat: np.ndarray, b_vec: np.ndarray) -> np.ndarray:
    """Projection of target onto {w : A w <= b} by enumerating active sets."""
    k, dim = a_mat.shape
    best = None
    best_obj = np.inf
    for size in range(0, dim + 1):
        for subset in itertools.combinations(range(k), size):
            if not subset:
                w = target.copy()
                nu = np.zeros(0)
            else:
                sel = np.array(subset)
                gram = a_mat[sel] @ a_mat[sel].T
                try:
                    nu = 2.0 * np.linalg.solve(gram, a_mat[sel] @ target - b_vec[sel])
                except np.linalg.LinAlgError:
                    continue
                if np.any(nu < -1e-10):
                    continue
                w = target - a_mat[sel].T @ nu / 2.0
            if np.any(a_mat @ w - b_vec > 1e-10):
                continue
            obj = float((w - target) @ (w - target))
            if obj < best_obj:
                best_obj = obj
                best = w
    if best is None:
        raise ContractError("polytope projection enumeration found no KKT point")
    return best


def build_analytic_suite() -> list[AnalyticCase]:
    """Problems (a), (b), (c) with independently known optima.

    (a) 1-d: min w^2 s.t. w >= 1 (optimum 1);
    (b) projection onto random half-spaces, optimum by active-set
        enumeration at fixed seed;
    (c) heavily constrained and separable: min ||w||^2 s.t. every
        coordinate >= 1/m, with the m = 10^4 bounds replicated across
        coordinates (optimum 1/m in each).
    """
    cases = []

    def sq_obj(i: int, w: np.ndarray) -> float:
        return float(w @ w)

    cases.append(
        AnalyticCase(
            "a",
            BlackBoxProblem(1, 1, 1, sq_obj, lambda j, w: 1.0 - w[0], name="scalar-bound"),
            np.array([1.0]),
            tol=1e-2,
        )
    )

    cases.append(_halfspace_projection_case())

    m_c, d_c = 10_000, 10
    lower = 1.0 / m_c

    def replicated_bound(j: int, w: np.ndarray) -> float:
        return lower - w[j % d_c]

    cases.append(
        AnalyticCase(
            "c",
            BlackBoxProblem(d_c, 1, m_c, sq_obj, replicated_bound, name="replicated-bounds"),
            np.full(d_c, lower),
            tol=1e-2,
        )
    )
    return cases
