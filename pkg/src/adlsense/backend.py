"""Kernel backend selection: compiled extension vs numpy/Python fallback.

The recursive low-pass filter, the peak scan, and the dense activation /
loss passes dominate the harness runtime. They exist twice: as a Cython
extension (:mod:`adlsense._core`) and as a numpy/Python fallback
(:mod:`adlsense._kernels_py`). At import the compiled one is picked when
present; the ``ADLSENSE_BACKEND`` environment variable (``compiled`` or
``python``) forces a choice, and :func:`use` switches at runtime (the
benchmark script relies on this).

Both backends compute the same quantities; results agree to float rounding,
not bit-for-bit. Within one process the selection is fixed unless ``use``
is called, so seeded runs stay reproducible.
"""

import os

import numpy as np

from . import _kernels_py
from .errors import ConfigError

_IMPLS = {"python": _kernels_py}

try:
    from . import _core

    _IMPLS["compiled"] = _core
except ImportError:
    _core = None


def _initial_choice():
    forced = os.environ.get("ADLSENSE_BACKEND")
    if forced is None:
        return "compiled" if "compiled" in _IMPLS else "python"
    if forced not in ("compiled", "python"):
        raise ConfigError(f"ADLSENSE_BACKEND must be 'compiled' or 'python', got {forced!r}")
    if forced not in _IMPLS:
        raise ConfigError("ADLSENSE_BACKEND=compiled but the extension is not built")
    return forced


_active_name = _initial_choice()
_active = _IMPLS[_active_name]


def available():
    """Names of the selectable backends."""
    return tuple(sorted(_IMPLS))


def active():
    """Name of the backend currently in use."""
    return _active_name


def use(name):
    """Switch backends at runtime; returns the previously active name."""
    global _active, _active_name
    if name not in _IMPLS:
        raise ConfigError(f"unknown backend {name!r}; available: {available()}")
    previous = _active_name
    _active_name = name
    _active = _IMPLS[name]
    return previous


def _as_c1d(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _as_c2d(x):
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    return a


def lowpass(x, alpha):
    return _active.lowpass(_as_c1d(x), float(alpha))


def peak_indices(x):
    return _active.peak_indices(_as_c1d(x))


def sigmoid(z):
    return _active.sigmoid(_as_c2d(z))


def sigmoid_backward(a, upstream):
    return _active.sigmoid_backward(_as_c2d(a), _as_c2d(upstream))


def softmax(z):
    return _active.softmax(_as_c2d(z))


def softmax_xent(logits, labels):
    labels = np.ascontiguousarray(labels, dtype=np.intp)
    return _active.softmax_xent(_as_c2d(logits), labels)
