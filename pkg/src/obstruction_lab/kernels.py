"""Backend selection for the per-grid-point kernels.

The compiled extension is used when it imports; otherwise the numpy fallback
is used. Set ``OBSTRUCTION_LAB_BACKEND=numpy`` to force the fallback.
"""

from __future__ import annotations

import contextlib
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"numpy": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_choice = os.environ.get("OBSTRUCTION_LAB_BACKEND", "").strip().lower()
if _choice and _choice not in BACKENDS:
    raise ImportError(f"backend {_choice!r} unavailable; have {sorted(BACKENDS)}")
active = BACKENDS[_choice] if _choice else (_compiled or _kernels_py)


def get(name: str | None = None):
    """Return the backend module ``name`` (default: the active one)."""
    if name is None:
        return active
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


@contextlib.contextmanager
def blas_pinned(threads: int):
    """Pin BLAS to one thread while the compiled kernels run ``threads`` OpenMP workers."""
    if threads <= 1:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # optional; oversubscription only costs speed
        yield
        return
    with threadpool_limits(limits=1, user_api="blas"):
        yield


def default_threads() -> int:
    env = os.environ.get("OBSTRUCTION_LAB_THREADS")
    if env:
        return max(1, int(env))
    return 1
