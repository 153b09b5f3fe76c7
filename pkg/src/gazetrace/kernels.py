"""Backend selection for the per-sample kernels.

The compiled extension is used when it was built; otherwise the pure-Python
module is used. Set ``GAZETRACE_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("compiled", "python") if _ckernels is not None else ("python",)

_forced = os.environ.get("GAZETRACE_BACKEND", "").strip().lower()
if _forced and _forced not in ("compiled", "python"):
    raise ImportError(f"GAZETRACE_BACKEND must be 'compiled' or 'python', got {_forced!r}")
if _forced == "compiled" and _ckernels is None:
    raise ImportError("GAZETRACE_BACKEND=compiled but gazetrace._ckernels is not built")

BACKEND = _forced or BACKENDS[0]


def _pick(backend):
    backend = backend or BACKEND
    if backend == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _ckernels
    if backend == "python":
        return None
    raise ValueError(f"unknown backend {backend!r}")


def velocities(x, y, t, backend=None) -> np.ndarray:
    """Point-to-point velocity in px/s for each consecutive sample pair.

    Zero elapsed time gives ``inf``. A negative elapsed time raises
    ``ValueError`` carrying the index of the offending sample.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.int64)
    mod = _pick(backend)
    if mod is not None:
        return mod.velocities(x, y, t)
    return np.asarray(_pykernels.velocities(x.tolist(), y.tolist(), t.tolist()), dtype=np.float64)


def ivt_labels(vel, v_basic: float, backend=None) -> np.ndarray:
    """0 (fixation) where ``vel <= v_basic``, else 1 (saccade)."""
    vel = np.ascontiguousarray(vel, dtype=np.float64)
    mod = _pick(backend)
    if mod is not None:
        return mod.ivt_labels(vel, float(v_basic))
    return np.asarray(_pykernels.ivt_labels(vel.tolist(), float(v_basic)), dtype=np.int8)


def cluster_starts(x, y, vel, v_advanced: float, tau: float, backend=None) -> np.ndarray:
    """Start indices of the contiguous greedy clusters over a sample stream.

    Sample ``i`` joins the open cluster when the velocity from ``i-1`` is
    below ``v_advanced`` and it lies within ``tau`` of the running centroid;
    otherwise a new cluster opens at ``i``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    vel = np.ascontiguousarray(vel, dtype=np.float64)
    if len(vel) != max(len(x) - 1, 0):
        raise ValueError("need exactly one velocity per consecutive sample pair")
    mod = _pick(backend)
    if mod is not None:
        return mod.cluster_starts(x, y, vel, float(v_advanced), float(tau))
    return np.asarray(
        _pykernels.cluster_starts(x.tolist(), y.tolist(), vel.tolist(), float(v_advanced), float(tau)),
        dtype=np.int64,
    )
