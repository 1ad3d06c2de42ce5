"""Backend selection for the batched dense-layer kernels.

The compiled Cython extension is preferred when it imported cleanly; the
pure-numpy module is the fallback. Set GRADLENS_BACKEND=numpy or =compiled
to force a choice (forcing "compiled" raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import numpy_ref

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"numpy": numpy_ref}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    try:
        return _BACKENDS[name]
    except KeyError:
        available = ", ".join(sorted(_BACKENDS))
        raise ValueError(f"unknown kernel backend {name!r} (available: {available})") from None


def _select() -> str:
    forced = os.environ.get("GRADLENS_BACKEND", "auto").strip().lower()
    if forced in ("", "auto"):
        return "compiled" if _ckernels is not None else "numpy"
    if forced not in _BACKENDS:
        available = ", ".join(sorted(_BACKENDS))
        raise ImportError(
            f"GRADLENS_BACKEND={forced!r} is not usable (available: {available})"
        )
    return forced


BACKEND = _select()
_impl = _BACKENDS[BACKEND]

forward_batch = _impl.forward_batch
backward_batch = _impl.backward_batch

__all__ = ["BACKEND", "forward_batch", "backward_batch", "get_backend"]
