"""Reference methods.

``full_batch_gda_solve`` is the exactness twin of the doubly stochastic
solver: identical loop and adaptive steps, but every sampled quantity is
replaced by its exact full-sweep counterpart, so its per-iteration cost
grows linearly with the number of constraints. ``zopsgd_solve`` is a plain
projected zeroth-order method for problems whose feasible set is simple
(box or simplex); it ignores the constraint oracles entirely and stands in
for projection-based baselines on such sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .metrics import HiAcc, stationarity_report
from .simplex import argmax_concave_p, project_simplex
from .solver import ProgressHook, SolveOutcome, _check_w0, _emit_row, _penalized_solve, _resolve_mu, _stream, _STREAM_DATA, _STREAM_DIRS
from .types import (
    BlackBoxProblem,
    ConfigError,
    DszogConfig,
    DszogState,
    NumericalError,
    RunRecord,
    SimplexPoint,
    StopClock,
    Termination,
    validate_config,
)
from .zo_grad import draw_directions, penalty_value, zo_objective_grad


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo, hi]^d (scalars broadcast across coordinates)."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ConfigError("feasible_set", "box bounds must be finite with lo < hi")


class Simplex:
    """Marker for the probability-simplex feasible set."""

    def __repr__(self):
        return "Simplex()"


FeasibleSet = Union[Box, Simplex]


def full_batch_gda_solve(
    problem: BlackBoxProblem,
    cfg: DszogConfig,
    w0,
    hooks: Optional[ProgressHook] = None,
    *,
    time_budget_s: Optional[float] = None,
    hi_acc: Optional[HiAcc] = None,
) -> SolveOutcome:
    """Penalty descent-ascent with exact full sweeps in place of sampling.

    Per iteration: n*(q+1) objective calls plus m*(q+1) + m constraint
    calls, so the cost of each step is Theta(n + m) oracle sweeps. No
    momentum (the moving average degenerates to the fresh estimate) and no
    distribution interpolation; the one experimental variable versus the
    doubly stochastic solver is stochastic constraint sampling.
    """
    return _penalized_solve(
        problem,
        cfg,
        w0,
        hooks,
        full_batch=True,
        time_budget_s=time_budget_s,
        hi_acc=hi_acc,
        ema_b=None,
    )


def _project_feasible(w: np.ndarray, feasible_set: FeasibleSet) -> np.ndarray:
    if isinstance(feasible_set, Box):
        return np.clip(w, feasible_set.lo, feasible_set.hi)
    if isinstance(feasible_set, Simplex):
        return project_simplex(w).p.copy()
    raise ConfigError("feasible_set", f"unsupported set {feasible_set!r}")


def zopsgd_solve(
    problem: BlackBoxProblem,
    feasible_set: FeasibleSet,
    cfg: DszogConfig,
    w0,
    hooks: Optional[ProgressHook] = None,
    *,
    time_budget_s: Optional[float] = None,
    hi_acc: Optional[HiAcc] = None,
) -> SolveOutcome:
    """Projected zeroth-order gradient descent on the objective alone.

    w <- Proj(w - eta_w * g) with g the batched forward-difference
    objective gradient; constraints of ``problem`` are used only for
    diagnostics. The returned distribution is the best response to the
    final iterate, since this method maintains none of its own.
    """
    validate_config(cfg)
    if not isinstance(feasible_set, (Box, Simplex)):
        raise ConfigError("feasible_set", f"unsupported set {feasible_set!r}")
    w = _project_feasible(_check_w0(problem, w0), feasible_set)
    mu = _resolve_mu(cfg, w)
    n, m, d = problem.n_components, problem.n_constraints, problem.dim
    n_data = min(cfg.batch_data, n)

    rng_dirs = _stream(cfg.seed, _STREAM_DIRS)
    rng_data = _stream(cfg.seed, _STREAM_DATA)

    calls_at_start = problem.total_calls
    clock = StopClock(time_budget_s)

    def best_response(at_w: np.ndarray) -> SimplexPoint:
        with problem.uncounted():
            phi = np.array([penalty_value(problem, j, at_w) for j in range(m)])
        return argmax_concave_p(phi, cfg.beta, cfg.lam)

    state = DszogState(w=w, p=best_response(w), z_w=np.zeros(d), z_p=np.zeros(m), iter=0, oracle_calls=0)
    record = RunRecord()
    _emit_row(record, hooks, problem, state, clock, step_norm=0.0)

    termination = Termination.MAX_ITERS
    emitted_at = 0
    step_norm = 0.0
    for t in range(1, cfg.max_iters + 1):
        try:
            dirs = draw_directions(rng_dirs, cfg.q, d)
            batch = rng_data.choice(n, size=n_data, replace=False)
            g = zo_objective_grad(problem, state.w, batch, dirs, mu)
            w_new = _project_feasible(state.w - cfg.eta_w * g, feasible_set)
            if not np.all(np.isfinite(w_new)):
                raise NumericalError(f"nonfinite iterate w at iteration {t}")
            step_norm = float(np.linalg.norm(w_new - state.w))
            state.w = w_new
            state.z_w = g
            state.iter = t
            state.oracle_calls = problem.total_calls - calls_at_start
        except NumericalError:
            termination = Termination.NUMERICAL_ABORT
            break

        if t % cfg.metric_every == 0:
            state.p = best_response(state.w)
            _emit_row(record, hooks, problem, state, clock, step_norm=step_norm)
            emitted_at = t
        if clock.expired():
            termination = Termination.TIME_BUDGET
            break

    if state.iter > emitted_at:
        state.p = best_response(state.w)
        _emit_row(record, hooks, problem, state, clock, step_norm=step_norm)

    final_p = best_response(state.w)
    report = stationarity_report(problem, state.w, final_p, cfg, hi_acc)
    return SolveOutcome(
        final_w=state.w,
        final_p=final_p,
        record=record,
        stationarity=report,
        termination=termination,
    )
