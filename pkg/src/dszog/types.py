"""Shared problem, configuration, state and run-record types.

Everything a solver touches goes through these types: problems expose
indexed scalar oracles (so query complexity is directly measurable),
configurations validate on construction, and run records collect the
per-iteration metric stream.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Callable, Optional

import numpy as np


class DszogError(Exception):
    """Base class for all library errors."""


class ConfigError(DszogError):
    """A configuration field violates its documented range."""

    def __init__(self, field_name: str, message: str = ""):
        self.field = field_name
        super().__init__(f"invalid config field '{field_name}'" + (f": {message}" if message else ""))


class NumericalError(DszogError):
    """A NaN/Inf was produced where a finite value is required."""


class ContractError(DszogError):
    """An internal call contract (shape, index range) was violated."""


class DataError(DszogError):
    """A dataset is unusable for the requested operation."""


class ParseError(DszogError):
    """A data file could not be parsed."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class Termination(Enum):
    MAX_ITERS = "MaxIters"
    TIME_BUDGET = "TimeBudget"
    NUMERICAL_ABORT = "NumericalAbort"


class BlackBoxProblem:
    """A problem seen only through indexed scalar value oracles.

    ``objective_component(i, w)`` returns the i-th objective component at w
    (the objective is their average); ``constraint(j, w)`` returns the j-th
    constraint value, feasible iff <= 0. Indices are 0-based. Every oracle
    call increments an evaluation counter; diagnostics that should not be
    charged to the solver's query budget run inside ``uncounted()``.

    Oracles must be pure (identical inputs give identical values) and safe
    to call from multiple workers.
    """

    def __init__(
        self,
        dim: int,
        n_components: int,
        n_constraints: int,
        objective_component: Callable[[int, np.ndarray], float],
        constraint: Callable[[int, np.ndarray], float],
        name: str = "",
    ):
        if dim <= 0:
            raise ConfigError("dim", "must be positive")
        if n_components <= 0:
            raise ConfigError("n_components", "must be positive")
        if n_constraints <= 0:
            raise ConfigError("n_constraints", "must be positive")
        self.dim = int(dim)
        self.n_components = int(n_components)
        self.n_constraints = int(n_constraints)
        self._objective = objective_component
        self._constraint = constraint
        self.name = name
        self.objective_calls = 0
        self.constraint_calls = 0
        self._counting = True

    @property
    def total_calls(self) -> int:
        return self.objective_calls + self.constraint_calls

    def objective_component(self, i: int, w: np.ndarray) -> float:
        if not 0 <= i < self.n_components:
            raise ContractError(f"objective index {i} out of range [0, {self.n_components})")
        if self._counting:
            self.objective_calls += 1
        return float(self._objective(i, w))

    def constraint(self, j: int, w: np.ndarray) -> float:
        if not 0 <= j < self.n_constraints:
            raise ContractError(f"constraint index {j} out of range [0, {self.n_constraints})")
        if self._counting:
            self.constraint_calls += 1
        return float(self._constraint(j, w))

    @contextmanager
    def uncounted(self):
        """Suspend evaluation counting for diagnostic sweeps."""
        previous = self._counting
        self._counting = False
        try:
            yield self
        finally:
            self._counting = previous


class SimplexPoint:
    """A probability vector over the m constraints.

    Entries are nonnegative and sum to one (renormalized to absolute
    tolerance 1e-12 on every construction). The wrapped array is read-only;
    updates build new points.
    """

    __slots__ = ("p",)

    _SUM_SLACK = 1e-6  # how far off the raw sum may be before renormalizing fails
    _NEG_SLACK = -1e-9  # rounding noise below zero that gets clipped

    def __init__(self, values):
        p = np.array(values, dtype=np.float64)
        if p.ndim != 1 or p.shape[0] == 0:
            raise ContractError("simplex point must be a nonempty 1-d vector")
        if not np.all(np.isfinite(p)):
            raise NumericalError("nonfinite entries in simplex point")
        lo = p.min()
        if lo < self._NEG_SLACK:
            raise ContractError(f"negative entry {lo} in simplex point")
        if lo < 0.0:
            p = np.maximum(p, 0.0)
        total = p.sum()
        if abs(total - 1.0) > self._SUM_SLACK:
            raise ContractError(f"simplex point sums to {total}, expected 1")
        if total != 1.0:
            p = p / total
        p.flags.writeable = False
        self.p = p

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @staticmethod
    def uniform(m: int) -> "SimplexPoint":
        return SimplexPoint(np.full(m, 1.0 / m))

    def __repr__(self):
        return f"SimplexPoint({self.p!r})"


@dataclass(frozen=True)
class DszogConfig:
    """Hyperparameters of the doubly stochastic solver.

    ``mu=None`` means "resolve at solve time" to 1e-4 * max(1, ||w0||),
    since a sensible smoothing radius depends on the iterate scale.
    """

    beta: float = 10.0
    lam: float = 1e-6
    mu: Optional[float] = None
    q: int = 2
    batch_data: int = 128
    batch_cons_w: int = 128
    batch_cons_p: int = 128
    eta_w: float = 0.01
    eta_p: float = 0.01
    a: float = 0.5
    b: float = 0.1
    c_eps: float = 1e-8
    max_iters: int = 10_000
    seed: int = 0
    metric_every: int = 100

    def __post_init__(self):
        validate_config(self)


def validate_config(cfg: DszogConfig) -> None:
    """Raise ConfigError naming the first offending field, if any."""
    if not (np.isfinite(cfg.beta) and cfg.beta > 0):
        raise ConfigError("beta", "must be a positive real")
    if not (np.isfinite(cfg.lam) and cfg.lam > 0):
        raise ConfigError("lam", "must be a positive real")
    if cfg.mu is not None and not (np.isfinite(cfg.mu) and cfg.mu > 0):
        raise ConfigError("mu", "must be a positive real (or None for automatic)")
    if cfg.q < 1:
        raise ConfigError("q", "must be a positive integer")
    if cfg.batch_data < 1:
        raise ConfigError("batch_data", "must be a positive integer")
    if cfg.batch_cons_w < 1:
        raise ConfigError("batch_cons_w", "must be a positive integer")
    if cfg.batch_cons_p < 1:
        raise ConfigError("batch_cons_p", "must be a positive integer")
    if not (np.isfinite(cfg.eta_w) and cfg.eta_w > 0):
        raise ConfigError("eta_w", "must be a positive real")
    if not (np.isfinite(cfg.eta_p) and cfg.eta_p > 0):
        raise ConfigError("eta_p", "must be a positive real")
    if not (0.0 < cfg.a <= 1.0):
        raise ConfigError("a", "must lie in (0, 1]")
    if not (0.0 < cfg.b < 1.0):
        raise ConfigError("b", "must lie in (0, 1)")
    if not (np.isfinite(cfg.c_eps) and cfg.c_eps > 0):
        raise ConfigError("c_eps", "must be a positive real")
    if cfg.max_iters < 1:
        raise ConfigError("max_iters", "must be a positive integer")
    if not (0 <= int(cfg.seed) < 2**64):
        raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
    if cfg.metric_every < 1:
        raise ConfigError("metric_every", "must be a positive integer")


def config_fields() -> list[str]:
    """Field names of DszogConfig, in declaration order (manifest keys)."""
    return [f.name for f in fields(DszogConfig)]


@dataclass
class DszogState:
    """Mutable quantities owned by one solver run."""

    w: np.ndarray
    p: SimplexPoint
    z_w: np.ndarray
    z_p: np.ndarray
    iter: int = 0
    oracle_calls: int = 0

    def check_finite(self) -> None:
        """Raise NumericalError if any tracked vector went NaN/Inf."""
        if not np.all(np.isfinite(self.w)):
            raise NumericalError(f"nonfinite iterate w at iteration {self.iter}")
        if not np.all(np.isfinite(self.z_w)):
            raise NumericalError(f"nonfinite momentum z_w at iteration {self.iter}")
        if not np.all(np.isfinite(self.z_p)):
            raise NumericalError(f"nonfinite momentum z_p at iteration {self.iter}")


@dataclass(frozen=True)
class RecordRow:
    iter: int
    wall_s: float
    obj: float
    penalty: float
    max_viol: float
    sumsq_viol: float
    step_w: float
    ema_w: float
    ema_p: float


TRACE_COLUMNS = ("iter", "wall_s", "obj", "penalty", "max_viol", "sumsq_viol", "step_w", "ema_w", "ema_p")


class RunRecord:
    """Append-only stream of per-iteration metric rows."""

    def __init__(self):
        self.rows: list[RecordRow] = []

    def append(self, row: RecordRow) -> None:
        if self.rows:
            last = self.rows[-1]
            if row.iter <= last.iter:
                raise ContractError(f"record iterations must increase: {row.iter} after {last.iter}")
            if row.wall_s < last.wall_s:
                raise ContractError("record wall time must be nondecreasing")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


@dataclass
class StopClock:
    """Wall-clock timer with an optional budget."""

    budget_s: Optional[float] = None
    start: float = field(default_factory=time.perf_counter)

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def expired(self) -> bool:
        return self.budget_s is not None and self.elapsed() >= self.budget_s
