"""Pure-numpy implementations of the hot kernels.

These are the reference semantics: the compiled extension in ``_core.pyx``
must produce bitwise-identical results for identical inputs (same sort
order, same left-to-right accumulation, same threshold arithmetic).
"""

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def simplex_project(v):
    """Euclidean projection of a float64 vector onto the probability simplex.

    Sort-then-threshold: find the largest support size whose shifted values
    stay positive, then clip below the common shift.
    """
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    thresholds = (css - 1.0) / np.arange(1.0, u.shape[0] + 1.0)
    rho = np.nonzero(u > thresholds)[0][-1]
    return np.maximum(v - thresholds[rho], 0.0)


def categorical_from_uniforms(cum, u):
    """Map uniforms in [0,1) to indices via the inverse CDF ``cum``.

    ``cum`` is a nondecreasing prefix-sum vector whose last entry is 1.
    Index j is selected iff cum[j-1] <= u < cum[j]; zero-probability bins
    are never selected.
    """
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.shape[0] - 1).astype(np.int64, copy=False)


def fnv1a64(data):
    """64-bit FNV-1a hash of a bytes-like object."""
    h = _FNV_OFFSET
    for byte in bytes(data):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h
