"""Stationarity and feasibility diagnostics.

All sweeps here are observability, not part of the solver's query budget,
so they run inside ``problem.uncounted()``. Gradients w.r.t. w are only
ever estimates (the problem is black-box), and are reported together with
a Monte-Carlo standard error; gradients w.r.t. p are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .simplex import argmax_concave_p, project_simplex
from .types import BlackBoxProblem, ConfigError, DszogConfig, SimplexPoint


@dataclass(frozen=True)
class HiAcc:
    """Accuracy knobs for the zeroth-order gradient sweep in reports."""

    q_big: int = 16
    mu_small: float = 1e-5

    def __post_init__(self):
        if self.q_big < 1:
            raise ConfigError("q_big", "must be a positive integer")
        if not (np.isfinite(self.mu_small) and self.mu_small > 0):
            raise ConfigError("mu_small", "must be a positive real")


@dataclass(frozen=True)
class StationarityReport:
    """Approximate-KKT residuals at a point, with recovered multipliers.

    ``eps1_sq`` (the squared norm of the Lagrangian gradient) equals the
    squared w-gradient of the penalized objective when the multipliers are
    recovered as alpha_j = 2*beta*p_j*max{f_j, 0}; it is a Monte-Carlo
    estimate with standard error ``grad_w_mc_se``. ``grad_norm_sq_p`` is
    measured through the projected-gradient mapping (p lives on the
    simplex); the raw squared gradient norm is kept alongside because the
    feasibility consistency bound uses it directly.
    ``grad_norm_sq_w_at_best_p`` re-estimates the w-gradient at the exact
    best-response distribution; it is a surrogate for the gradient of the
    inner-maximized objective, not that gradient itself.
    """

    eps1_sq: float
    eps2_sq: float
    eps3_sq: float
    max_violation: float
    alphas: np.ndarray
    grad_norm_sq_w: float
    grad_norm_sq_p: float
    grad_norm_sq_p_raw: float
    grad_w_mc_se: float
    grad_norm_sq_w_at_best_p: Optional[float] = None


def constraint_sweep(problem: BlackBoxProblem, w: np.ndarray) -> np.ndarray:
    """All m constraint values at w (uncounted diagnostic sweep)."""
    with problem.uncounted():
        return np.array([problem.constraint(j, w) for j in range(problem.n_constraints)])


def objective_value(problem: BlackBoxProblem, w: np.ndarray) -> float:
    """Average of all objective components at w (uncounted)."""
    with problem.uncounted():
        total = 0.0
        for i in range(problem.n_components):
            total += problem.objective_component(i, w)
    return total / problem.n_components


def multipliers_from_values(f_vals: np.ndarray, p: SimplexPoint, beta: float) -> np.ndarray:
    return 2.0 * beta * p.p * np.maximum(f_vals, 0.0)


def recover_multipliers(problem: BlackBoxProblem, w: np.ndarray, p: SimplexPoint, beta: float) -> np.ndarray:
    """Multipliers alpha_j = 2*beta*p_j*max{f_j(w), 0}; one full sweep."""
    return multipliers_from_values(constraint_sweep(problem, w), p, beta)


def feasibility_residuals(problem: BlackBoxProblem, w: np.ndarray) -> tuple[float, float]:
    """(sum of squared violations, max violation) over all constraints."""
    viol = np.maximum(constraint_sweep(problem, w), 0.0)
    return float(viol @ viol), float(viol.max(initial=0.0))


def _zo_grad_of_penalized(
    problem: BlackBoxProblem,
    w: np.ndarray,
    weights: np.ndarray,
    beta: float,
    hi_acc: HiAcc,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """High-accuracy ZO estimate of the w-gradient of f0 + beta*<weights, phi>.

    Full batches, q_big directions, mu_small radius. Returns the mean
    estimate and the Monte-Carlo standard error of its norm (the L2 norm of
    the componentwise standard errors). Streams over directions so memory
    stays O(d).
    """
    n, m, mu = problem.n_components, problem.n_constraints, hi_acc.mu_small
    with problem.uncounted():
        base_obj = np.array([problem.objective_component(i, w) for i in range(n)])
        base_pen = np.empty(m)
        for j in range(m):
            fj = problem.constraint(j, w)
            base_pen[j] = max(fj, 0.0) ** 2
        s1 = np.zeros_like(w)
        s2 = np.zeros_like(w)
        for _ in range(hi_acc.q_big):
            u = rng.standard_normal(w.shape[0])
            shifted = w + mu * u
            diff = -base_obj.sum() / n
            for i in range(n):
                diff += problem.objective_component(i, shifted) / n
            pen = 0.0
            for j in range(m):
                fj = problem.constraint(j, shifted)
                pen += weights[j] * (max(fj, 0.0) ** 2 - base_pen[j])
            coef = (diff + beta * pen) / mu
            g_k = coef * u
            s1 += g_k
            s2 += g_k * g_k
    q = hi_acc.q_big
    g = s1 / q
    if q > 1:
        var = np.maximum(s2 - q * g * g, 0.0) / (q - 1)
        se = float(np.sqrt(var.sum() / q))
    else:
        se = float("inf")
    return g, se


def minimax_residuals(
    problem: BlackBoxProblem,
    w: np.ndarray,
    p: SimplexPoint,
    cfg: DszogConfig,
    hi_acc: HiAcc,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, float]:
    """Squared stationarity residuals of the minimax problem at (w, p).

    The p residual is exact and measured through the projected-gradient
    mapping ||p - P(p + grad_p)||^2; the w residual is a seeded
    Monte-Carlo estimate.
    """
    if rng is None:
        rng = _report_rng(cfg.seed)
    f_vals = constraint_sweep(problem, w)
    grad_p = cfg.beta * np.maximum(f_vals, 0.0) ** 2 - cfg.lam * p.p
    resid = p.p - project_simplex(p.p + grad_p).p
    g_w, _ = _zo_grad_of_penalized(problem, w, p.p, cfg.beta, hi_acc, rng)
    return float(g_w @ g_w), float(resid @ resid)


def _report_rng(seed: int) -> np.random.Generator:
    # dedicated stream so reports never perturb the solver's draws
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(4,)))


def stationarity_report(
    problem: BlackBoxProblem,
    w: np.ndarray,
    p: SimplexPoint,
    cfg: DszogConfig,
    hi_acc: Optional[HiAcc] = None,
    include_best_response: bool = True,
) -> StationarityReport:
    """Full diagnostic report at (w, p): one constraint sweep plus the
    seeded high-accuracy gradient estimate."""
    hi_acc = hi_acc or HiAcc()
    rng = _report_rng(cfg.seed)

    f_vals = constraint_sweep(problem, w)
    viol = np.maximum(f_vals, 0.0)
    alphas = multipliers_from_values(f_vals, p, cfg.beta)
    eps2_sq = float(viol @ viol)
    eps3_sq = float(np.sum((alphas * f_vals) ** 2))
    max_violation = float(viol.max(initial=0.0))

    grad_p = cfg.beta * viol**2 - cfg.lam * p.p
    grad_p_raw_sq = float(grad_p @ grad_p)
    resid = p.p - project_simplex(p.p + grad_p).p
    grad_p_proj_sq = float(resid @ resid)

    g_w, se = _zo_grad_of_penalized(problem, w, p.p, cfg.beta, hi_acc, rng)
    grad_w_sq = float(g_w @ g_w)

    best_sq = None
    if include_best_response:
        p_star = argmax_concave_p(viol**2, cfg.beta, cfg.lam)
        g_best, _ = _zo_grad_of_penalized(problem, w, p_star.p, cfg.beta, hi_acc, rng)
        best_sq = float(g_best @ g_best)

    return StationarityReport(
        eps1_sq=grad_w_sq,
        eps2_sq=eps2_sq,
        eps3_sq=eps3_sq,
        max_violation=max_violation,
        alphas=alphas,
        grad_norm_sq_w=grad_w_sq,
        grad_norm_sq_p=grad_p_proj_sq,
        grad_norm_sq_p_raw=grad_p_raw_sq,
        grad_w_mc_se=se,
        grad_norm_sq_w_at_best_p=best_sq,
    )


def quick_metrics(problem: BlackBoxProblem, w: np.ndarray, p: SimplexPoint) -> tuple[float, float, float, float]:
    """(objective, weighted penalty, max violation, sum sq violation) at w.

    Used for periodic record rows; costs one objective sweep plus one
    constraint sweep, uncounted.
    """
    obj = objective_value(problem, w)
    viol = np.maximum(constraint_sweep(problem, w), 0.0)
    phi = viol**2
    return obj, float(p.p @ phi), float(viol.max(initial=0.0)), float(phi.sum())
