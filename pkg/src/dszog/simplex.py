"""Simplex geometry: Euclidean projection, categorical sampling, and the
closed-form maximizer of the regularized weighted penalty over the simplex."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .types import ConfigError, ContractError, NumericalError, SimplexPoint


def project_simplex(v) -> SimplexPoint:
    """Euclidean projection of v onto the probability simplex.

    Sort-then-threshold, O(m log m); exact up to rounding against the KKT
    characterization of the projection.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] == 0:
        raise NumericalError("projection input must be a nonempty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise NumericalError("nonfinite entries in projection input")
    if v.shape[0] == 1:
        return SimplexPoint(np.ones(1))
    return SimplexPoint(_kernels.simplex_project(v))


class CategoricalSampler:
    """Sampling with replacement from a fixed distribution over [0, m).

    Prefix sums + binary search; rebuilt whenever the distribution changes
    (it changes every iteration anyway, so incremental structures buy
    nothing at the sizes we care about).
    """

    __slots__ = ("cumulative",)

    def __init__(self, point: SimplexPoint):
        cum = np.cumsum(point.p)
        # sequential prefix summation drifts by O(m*eps) even though the
        # point itself sums to 1; rescale by the realized total and pin the
        # last prefix so u < 1 always maps inside the index range
        last = cum[-1]
        if not np.isfinite(last) or abs(last - 1.0) > 1e-9:
            raise NumericalError(f"cumulative sum ends at {last}, expected 1")
        if last != 1.0:
            cum /= last
        cum[-1] = 1.0
        cum.flags.writeable = False
        self.cumulative = cum

    @property
    def m(self) -> int:
        return self.cumulative.shape[0]


def sample_categorical(sampler: CategoricalSampler, rng: np.random.Generator, k: int) -> np.ndarray:
    """Draw k indices i.i.d. from the sampler's distribution (with replacement).

    Consumes exactly k uniforms from ``rng``, so the stream advance does not
    depend on the active kernel backend.
    """
    u = rng.random(k)
    return _kernels.categorical_from_uniforms(sampler.cumulative, u)


def argmax_concave_p(phi, beta: float, lam: float) -> SimplexPoint:
    """Maximize beta * <p, phi> - (lam/2) * ||p||^2 over the simplex.

    The maximizer is the projection of beta*phi/lam onto the simplex; this
    identity is the implementation.
    """
    if not (np.isfinite(lam) and lam > 0):
        raise ConfigError("lam", "must be a positive real")
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise NumericalError("nonfinite penalty values")
    if np.any(phi < 0):
        raise ContractError("penalty values must be nonnegative")
    return project_simplex(beta * phi / lam)
