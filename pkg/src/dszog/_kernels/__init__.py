"""Hot per-iteration kernels with a compiled core and a pure-numpy fallback.

The compiled extension is built at install time when Cython and a C
compiler are available; otherwise (or when ``DSZOG_PURE_PYTHON`` is set in
the environment) the numpy fallback is used. Both backends are required to
produce bitwise-identical results, so solver trajectories do not depend on
which one is active.
"""

import os

from . import _fallback

if os.environ.get("DSZOG_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

simplex_project = _impl.simplex_project
categorical_from_uniforms = _impl.categorical_from_uniforms
fnv1a64 = _impl.fnv1a64


def load_backend(name):
    """Return the kernel module for ``name``, or None if it is unavailable.

    Used by the equivalence tests and the kernel benchmark; normal code goes
    through the module-level functions above.
    """
    if name == "python":
        return _fallback
    if name == "compiled":
        try:
            from . import _core
        except ImportError:
            return None
        return _core
    raise ValueError(f"unknown kernel backend: {name!r}")
