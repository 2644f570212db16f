"""Kernel backend selection: numba-compiled by default, pure numpy on request.

The environment variable ``BANDIT_PCA_BACKEND`` picks the implementation:

* ``numba`` (default when numba imports cleanly): kernels are wrapped with
  ``@njit(cache=True)`` and compiled on first use.
* ``numpy``: the plain interpreted kernels from ``_kernels`` run as-is.

``use()`` switches at runtime (the benchmark uses this to compare both);
code that wants the active kernel set should call ``active()`` rather than
caching module attributes.
"""

import os
from types import SimpleNamespace

from . import _kernels

ENV_VAR = "BANDIT_PCA_BACKEND"

_cache: dict[str, SimpleNamespace] = {}


def _build(name: str) -> SimpleNamespace:
    if name == "numpy":
        fns = {k: getattr(_kernels, k) for k in _kernels.ALL_KERNELS}
    elif name == "numba":
        from numba import njit

        fns = {
            k: njit(cache=True)(getattr(_kernels, k))
            for k in _kernels.ALL_KERNELS
        }
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    ns = SimpleNamespace(**fns)
    ns.name = name
    return ns


def load_kernels(name: str) -> SimpleNamespace:
    if name not in _cache:
        _cache[name] = _build(name)
    return _cache[name]


def _default_backend() -> str:
    requested = os.environ.get(ENV_VAR, "").strip().lower()
    if requested in ("numba", "numpy"):
        return requested
    if requested:
        raise ValueError(f"{ENV_VAR}={requested!r} not understood; use 'numba' or 'numpy'")
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


_active = load_kernels(_default_backend())


def active() -> SimpleNamespace:
    return _active


def use(name: str) -> SimpleNamespace:
    """Switch the active backend; returns the kernel namespace."""
    global _active
    _active = load_kernels(name)
    return _active
