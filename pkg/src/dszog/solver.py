"""The doubly stochastic zeroth-order solver.

One iteration: descend w along the momentum estimate with an adaptive
step, ascend p through a projected adaptive step interpolated with the
previous distribution, then resample (directions, data batch, constraint
batch from p, uniform constraint batch) and refresh both momentum
estimates at the new point via exponential moving averages. Updates use
the momentum from the previous iteration, matching the update-sample-
estimate-average order of the method.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .metrics import HiAcc, StationarityReport, quick_metrics, stationarity_report
from .simplex import CategoricalSampler, argmax_concave_p, project_simplex, sample_categorical
from .types import (
    BlackBoxProblem,
    ContractError,
    DszogConfig,
    DszogState,
    NumericalError,
    RecordRow,
    RunRecord,
    SimplexPoint,
    StopClock,
    Termination,
    validate_config,
)
from .zo_grad import draw_directions, penalty_value, stoch_grad_p, zo_full_grad_w, zo_weighted_penalty_grad, zo_objective_grad

# Independent child streams per randomness source, so methods that skip a
# source (e.g. full-batch baselines) still see identical direction draws.
_STREAM_DIRS = 0
_STREAM_DATA = 1
_STREAM_CONS_W = 2
_STREAM_CONS_P = 3
# spawn key 4 is reserved for diagnostic reports (see metrics._report_rng)

ProgressHook = Callable[[RecordRow, np.ndarray], None]


@dataclass(frozen=True)
class SolveOutcome:
    final_w: np.ndarray
    final_p: SimplexPoint
    record: RunRecord
    stationarity: StationarityReport
    termination: Termination


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key,)))


def adaptive_step(z: np.ndarray, eta: float, c_eps: float) -> np.ndarray:
    """Step eta * z / (sqrt(||z||_2) + c_eps); the root of the norm, not RMS."""
    if not np.all(np.isfinite(z)):
        raise NumericalError("nonfinite momentum in adaptive step")
    norm = np.linalg.norm(z)
    if not np.isfinite(norm):
        # ||z||^2 overflowed: the momentum magnitude itself is divergence,
        # and silently zeroing the step would hide it
        raise NumericalError("momentum norm overflow in adaptive step")
    return (eta / (np.sqrt(norm) + c_eps)) * z


def ema_update(z_old: np.ndarray, fresh: np.ndarray, b: float) -> np.ndarray:
    """(1-b)*z_old + b*fresh. b=1 degenerates to the fresh estimate."""
    if np.shape(z_old) != np.shape(fresh):
        raise ContractError(f"EMA shape mismatch: {np.shape(z_old)} vs {np.shape(fresh)}")
    return (1.0 - b) * z_old + b * fresh


def _resolve_mu(cfg: DszogConfig, w0: np.ndarray) -> float:
    if cfg.mu is not None:
        return cfg.mu
    return 1e-4 * max(1.0, float(np.linalg.norm(w0)))


def _check_w0(problem: BlackBoxProblem, w0) -> np.ndarray:
    w0 = np.asarray(w0, dtype=np.float64).copy()
    if w0.shape != (problem.dim,):
        raise ContractError(f"w0 has shape {w0.shape}, expected ({problem.dim},)")
    if not np.all(np.isfinite(w0)):
        raise NumericalError("nonfinite initial iterate")
    return w0


def _emit_row(
    record: RunRecord,
    hooks: Optional[ProgressHook],
    problem: BlackBoxProblem,
    state: DszogState,
    clock: StopClock,
    step_norm: float,
) -> None:
    obj, pen, max_viol, sumsq = quick_metrics(problem, state.w, state.p)
    row = RecordRow(
        iter=state.iter,
        wall_s=clock.elapsed(),
        obj=obj,
        penalty=pen,
        max_viol=max_viol,
        sumsq_viol=sumsq,
        step_w=step_norm,
        ema_w=float(np.linalg.norm(state.z_w)),
        ema_p=float(np.linalg.norm(state.z_p)),
    )
    record.append(row)
    if hooks is not None:
        hooks(row, state.w)


def _penalized_solve(
    problem: BlackBoxProblem,
    cfg: DszogConfig,
    w0,
    hooks: Optional[ProgressHook],
    *,
    full_batch: bool,
    time_budget_s: Optional[float],
    hi_acc: Optional[HiAcc],
    ema_b: Optional[float],
) -> SolveOutcome:
    """Shared loop for the doubly stochastic solver and its full-batch twin.

    ``full_batch`` swaps the three sampled batches for exact sweeps (data
    batch = all components, constraint weights = p, uniform batch = all
    constraints) and disables momentum and interpolation; everything else,
    including the adaptive steps and the direction draws, is identical.
    """
    validate_config(cfg)
    w = _check_w0(problem, w0)
    mu = _resolve_mu(cfg, w)
    n, m, d = problem.n_components, problem.n_constraints, problem.dim
    b = 1.0 if full_batch else (cfg.b if ema_b is None else ema_b)
    a = 1.0 if full_batch else cfg.a
    n_data = min(cfg.batch_data, n)
    n_cons_w = min(cfg.batch_cons_w, m)
    n_cons_p = min(cfg.batch_cons_p, m)

    rng_dirs = _stream(cfg.seed, _STREAM_DIRS)
    rng_data = _stream(cfg.seed, _STREAM_DATA)
    rng_cons_w = _stream(cfg.seed, _STREAM_CONS_W)
    rng_cons_p = _stream(cfg.seed, _STREAM_CONS_P)

    calls_at_start = problem.total_calls
    clock = StopClock(time_budget_s)

    # initialization: best-response p from one full (counted) penalty sweep
    phi0 = np.array([penalty_value(problem, j, w) for j in range(m)])
    p = argmax_concave_p(phi0, cfg.beta, cfg.lam)

    def draw_batches(point: SimplexPoint):
        dirs = draw_directions(rng_dirs, cfg.q, d)
        if full_batch:
            return dirs, np.arange(n), None, np.arange(m)
        batch_data = rng_data.choice(n, size=n_data, replace=False)
        batch_cons_w = sample_categorical(CategoricalSampler(point), rng_cons_w, n_cons_w)
        batch_cons_p = rng_cons_p.choice(m, size=n_cons_p, replace=False)
        return dirs, batch_data, batch_cons_w, batch_cons_p

    def grad_w(point: SimplexPoint, at_w, dirs, batch_data, batch_cons_w) -> np.ndarray:
        if full_batch:
            g = zo_objective_grad(problem, at_w, batch_data, dirs, mu)
            return g + cfg.beta * zo_weighted_penalty_grad(problem, at_w, point.p, dirs, mu)
        return zo_full_grad_w(problem, at_w, point, batch_data, batch_cons_w, dirs, mu, cfg.beta).g

    dirs, b_data, b_cw, b_cp = draw_batches(p)
    z_w = grad_w(p, w, dirs, b_data, b_cw)
    z_p = stoch_grad_p(problem, w, p, b_cp, cfg.beta, cfg.lam).h

    state = DszogState(w=w, p=p, z_w=z_w, z_p=z_p, iter=0, oracle_calls=problem.total_calls - calls_at_start)
    state.check_finite()

    record = RunRecord()
    _emit_row(record, hooks, problem, state, clock, step_norm=0.0)

    termination = Termination.MAX_ITERS
    emitted_at = 0
    for t in range(1, cfg.max_iters + 1):
        try:
            step = adaptive_step(state.z_w, cfg.eta_w, cfg.c_eps)
            w_new = state.w - step
            if not np.all(np.isfinite(w_new)):
                raise NumericalError(f"nonfinite iterate w at iteration {t}")
            p_hat = project_simplex(state.p.p + adaptive_step(state.z_p, cfg.eta_p, cfg.c_eps))
            p_new = SimplexPoint((1.0 - a) * state.p.p + a * p_hat.p)

            dirs, b_data, b_cw, b_cp = draw_batches(p_new)
            g = grad_w(p_new, w_new, dirs, b_data, b_cw)
            h = stoch_grad_p(problem, w_new, p_new, b_cp, cfg.beta, cfg.lam).h

            state.w = w_new
            state.p = p_new
            state.z_w = ema_update(state.z_w, g, b)
            state.z_p = ema_update(state.z_p, h, b)
            state.iter = t
            state.oracle_calls = problem.total_calls - calls_at_start
            state.check_finite()
        except NumericalError:
            # keep the last finite iterate; the run ends here
            termination = Termination.NUMERICAL_ABORT
            break

        if t % cfg.metric_every == 0:
            _emit_row(record, hooks, problem, state, clock, step_norm=float(np.linalg.norm(step)))
            emitted_at = t
        if clock.expired():
            termination = Termination.TIME_BUDGET
            break

    if state.iter > emitted_at:
        _emit_row(record, hooks, problem, state, clock, step_norm=float(np.linalg.norm(step)))

    report = stationarity_report(problem, state.w, state.p, cfg, hi_acc)
    return SolveOutcome(
        final_w=state.w,
        final_p=state.p,
        record=record,
        stationarity=report,
        termination=termination,
    )


def dszog_solve(
    problem: BlackBoxProblem,
    cfg: DszogConfig,
    w0,
    hooks: Optional[ProgressHook] = None,
    *,
    time_budget_s: Optional[float] = None,
    hi_acc: Optional[HiAcc] = None,
    _ema_b: Optional[float] = None,
) -> SolveOutcome:
    """Run the doubly stochastic zeroth-order solver.

    Per iteration this touches only |M2|*(q+1) + |M3| of the m constraints
    (plus |M1|*(q+1) objective components), independent of m; the only full
    constraint sweep charged to the solver is the one-off initialization of
    p. Batch sizes are clamped to the population sizes. ``_ema_b`` is an
    internal override used by degenerate-momentum tests; normal callers
    configure ``cfg.b``.
    """
    return _penalized_solve(
        problem,
        cfg,
        w0,
        hooks,
        full_batch=False,
        time_budget_s=time_budget_s,
        hi_acc=hi_acc,
        ema_b=_ema_b,
    )
