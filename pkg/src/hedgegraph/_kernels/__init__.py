"""Kernel backend selection.

The compiled extension is preferred when built; the numpy fallback is
behaviourally identical. Set ``HEDGEGRAPH_PURE_PYTHON=1`` to force the
fallback (the benchmark and the backend-equivalence tests use this).
"""

import os

from . import _pykernels

if os.environ.get("HEDGEGRAPH_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

b2_count = _impl.b2_count
neg_degree_totals = _impl.neg_degree_totals


def get_backend(name: str):
    """Return a specific backend module ("cython" or "python") by name.

    Raises ImportError if the compiled backend was requested but not built.
    """
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
