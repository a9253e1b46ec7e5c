"""Stochastic gradient estimators.

For the decision vector w, gradients are estimated from function values
only, via forward differences along Gaussian directions:

    G(w; h, u) = [(h(w + mu*u) - h(w)) / mu] * u,

averaged over a component batch and q directions. Base values h(w) are
evaluated once and reused across all q directions, so a batch of size B
costs B*(q+1) oracle calls. For the constraint distribution p, the exact
stochastic gradient is available in closed form and needs no smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import BlackBoxProblem, ConfigError, ContractError, NumericalError, SimplexPoint


@dataclass(frozen=True)
class GaussianDirections:
    """q i.i.d. standard-normal directions in R^d, one draw per iteration."""

    u: np.ndarray  # shape (q, d)

    def __post_init__(self):
        if self.u.ndim != 2:
            raise ContractError("directions must have shape (q, d)")
        if not np.all(np.isfinite(self.u)):
            raise NumericalError("nonfinite direction entries")

    @property
    def q(self) -> int:
        return self.u.shape[0]

    @property
    def dim(self) -> int:
        return self.u.shape[1]


def draw_directions(rng: np.random.Generator, q: int, dim: int) -> GaussianDirections:
    if q < 1:
        raise ConfigError("q", "must be a positive integer")
    return GaussianDirections(rng.standard_normal((q, dim)))


@dataclass(frozen=True)
class WGradEstimate:
    """Estimated gradient for w plus the exact number of oracle calls spent."""

    g: np.ndarray
    oracle_calls_used: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.g)):
            raise NumericalError("nonfinite gradient estimate for w")


class PGradEstimate:
    """Stochastic gradient for p: a few spikes plus a dense -lam*p part.

    Stored structurally (indices, spike values, lam, p) so that a batch of
    size B never materializes B separate m-vectors; the dense vector ``h``
    is assembled once on demand.
    """

    __slots__ = ("indices", "spike_values", "lam", "p", "_dense")

    def __init__(self, indices: np.ndarray, spike_values: np.ndarray, lam: float, p: np.ndarray):
        if not np.all(np.isfinite(spike_values)):
            raise NumericalError("nonfinite spike values in p-gradient")
        self.indices = indices
        self.spike_values = spike_values
        self.lam = lam
        self.p = p
        self._dense = None

    @property
    def h(self) -> np.ndarray:
        if self._dense is None:
            h = np.zeros_like(self.p)
            np.add.at(h, self.indices, self.spike_values)
            h -= self.lam * self.p
            self._dense = h
        return self._dense


def penalty_value(problem: BlackBoxProblem, j: int, w: np.ndarray) -> float:
    """Squared hinge of constraint j at w: (max{f_j(w), 0})^2. One oracle call."""
    fj = problem.constraint(j, w)
    viol = fj if fj > 0.0 else 0.0
    return viol * viol


def zo_objective_grad(
    problem: BlackBoxProblem,
    w: np.ndarray,
    batch: np.ndarray,
    dirs: GaussianDirections,
    mu: float,
) -> np.ndarray:
    """Forward-difference estimate of the objective gradient at w.

    Averages over the data batch and the q directions; costs |batch|*(q+1)
    objective-oracle calls.
    """
    if not (np.isfinite(mu) and mu > 0):
        raise ConfigError("mu", "must be a positive real")
    if len(batch) == 0:
        raise ContractError("objective batch must be nonempty")
    base = [problem.objective_component(int(i), w) for i in batch]
    q = dirs.q
    coefs = np.empty(q)
    for k in range(q):
        shifted = w + mu * dirs.u[k]
        s = 0.0
        for pos, i in enumerate(batch):
            s += problem.objective_component(int(i), shifted) - base[pos]
        coefs[k] = s / len(batch)
    return (coefs @ dirs.u) / (q * mu)


def zo_penalty_grad(
    problem: BlackBoxProblem,
    w: np.ndarray,
    batch: np.ndarray,
    dirs: GaussianDirections,
    mu: float,
) -> np.ndarray:
    """Forward-difference estimate of the mean sampled-penalty gradient.

    The caller draws ``batch`` from the constraint distribution; the values
    here do not depend on it otherwise. Costs |batch|*(q+1) constraint calls.
    """
    if not (np.isfinite(mu) and mu > 0):
        raise ConfigError("mu", "must be a positive real")
    if len(batch) == 0:
        raise ContractError("constraint batch must be nonempty")
    base = [penalty_value(problem, int(j), w) for j in batch]
    q = dirs.q
    coefs = np.empty(q)
    for k in range(q):
        shifted = w + mu * dirs.u[k]
        s = 0.0
        for pos, j in enumerate(batch):
            s += penalty_value(problem, int(j), shifted) - base[pos]
        coefs[k] = s / len(batch)
    return (coefs @ dirs.u) / (q * mu)


def zo_weighted_penalty_grad(
    problem: BlackBoxProblem,
    w: np.ndarray,
    weights: np.ndarray,
    dirs: GaussianDirections,
    mu: float,
) -> np.ndarray:
    """Exact-weights variant: full constraint sweep with weights (usually p).

    This is the expensive estimator the stochastic constraint batch
    replaces; it costs m*(q+1) constraint calls per invocation.
    """
    if not (np.isfinite(mu) and mu > 0):
        raise ConfigError("mu", "must be a positive real")
    m = problem.n_constraints
    if len(weights) != m:
        raise ContractError("weights length must equal the constraint count")
    base = [penalty_value(problem, j, w) for j in range(m)]
    q = dirs.q
    coefs = np.empty(q)
    for k in range(q):
        shifted = w + mu * dirs.u[k]
        s = 0.0
        for j in range(m):
            s += weights[j] * (penalty_value(problem, j, shifted) - base[j])
        coefs[k] = s
    return (coefs @ dirs.u) / (q * mu)


def zo_full_grad_w(
    problem: BlackBoxProblem,
    w: np.ndarray,
    p: SimplexPoint,
    batch_data: np.ndarray,
    batch_cons: np.ndarray,
    dirs: GaussianDirections,
    mu: float,
    beta: float,
) -> WGradEstimate:
    """Combined estimate of the w-gradient of the penalized objective.

    ``batch_cons`` must be drawn from p by the caller; the distribution
    enters only through that sampling.
    """
    if p.m != problem.n_constraints:
        raise ContractError("distribution size must equal the constraint count")
    before = problem.total_calls
    g = zo_objective_grad(problem, w, batch_data, dirs, mu)
    g = g + beta * zo_penalty_grad(problem, w, batch_cons, dirs, mu)
    return WGradEstimate(g, problem.total_calls - before)


def stoch_grad_p(
    problem: BlackBoxProblem,
    w: np.ndarray,
    p: SimplexPoint,
    batch: np.ndarray,
    beta: float,
    lam: float,
) -> PGradEstimate:
    """Exact stochastic gradient of the penalized objective w.r.t. p.

    (beta*m/|batch|) * sum_{j in batch} e_j * phi_j(w) - lam*p, with the
    batch sampled uniformly by the caller. Costs |batch| constraint calls.
    """
    if len(batch) == 0:
        raise ContractError("constraint batch must be nonempty")
    m = problem.n_constraints
    idx = np.asarray(batch, dtype=np.int64)
    if idx.min() < 0 or idx.max() >= m:
        raise ContractError("constraint batch index out of range")
    phi_vals = np.array([penalty_value(problem, int(j), w) for j in idx])
    scale = beta * m / len(idx)
    return PGradEstimate(idx, scale * phi_vals, lam, p.p)
