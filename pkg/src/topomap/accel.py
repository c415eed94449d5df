"""Backend selection for the density evaluation kernels.

The compiled extension is preferred when importable; the numpy fallback is
always available. ``TOPOMAP_BACKEND=numpy|cext`` forces a choice (useful for
the backend comparison benchmark and for debugging).
"""

import os

from . import _density_np

_forced = os.environ.get("TOPOMAP_BACKEND", "").strip().lower()

if _forced == "numpy":
    _impl = _density_np
elif _forced == "cext":
    from . import _density_cy as _impl  # ImportError here is intentional: forced but absent
else:
    if _forced:
        raise ValueError(f"TOPOMAP_BACKEND must be 'numpy' or 'cext', got {_forced!r}")
    try:
        from . import _density_cy as _impl
    except ImportError:
        _impl = _density_np

BACKEND = _impl.BACKEND_NAME

eval_amplitude_shared = _impl.eval_amplitude_shared
eval_amplitude_ragged = _impl.eval_amplitude_ragged
eval_eq4_shared = _impl.eval_eq4_shared
eval_eq4_ragged = _impl.eval_eq4_ragged


def worker_count(requested=None):
    """Resolve the rasterizer worker count: argument, else TOPOMAP_THREADS, else 1."""
    if requested is not None:
        n = int(requested)
    else:
        n = int(os.environ.get("TOPOMAP_THREADS", "1") or "1")
    return max(1, n)
