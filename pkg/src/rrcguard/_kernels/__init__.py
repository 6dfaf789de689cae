"""Dense-network kernels with a compiled backend and a numpy fallback.

The Cython extension is used when it was built; otherwise, or when the
environment variable ``RRCGUARD_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is loaded. ``BACKEND`` names
the active one.
"""
import os

from . import _pykernels

_force_python = os.environ.get("RRCGUARD_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
forward_batch = _impl.forward_batch
forward_trace = _impl.forward_trace
train_step = _impl.train_step
distance_batch = _impl.distance_batch
distance_and_grad = _impl.distance_and_grad

__all__ = [
    "BACKEND",
    "forward_batch",
    "forward_trace",
    "train_step",
    "distance_batch",
    "distance_and_grad",
]
