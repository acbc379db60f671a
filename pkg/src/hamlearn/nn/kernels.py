"""Gate-kernel backend selection.

The forward pass always runs the NumPy implementation: its vectorized
exp/tanh beat scalar libm loops on every box we measured.  The backward
pass, which is transcendental-free and drowns in NumPy temporaries,
prefers the compiled kernel and falls back to NumPy when the extension
is missing.  Set ``HAMLEARN_KERNELS=numpy`` or ``=cython`` to force the
backward choice (forcing cython raises if the extension was not built).
"""

import os

from . import _gates_py

_forced = os.environ.get("HAMLEARN_KERNELS", "").lower()

if _forced == "numpy":
    _backward_impl = _gates_py
    BACKEND = "numpy"
elif _forced in ("", "cython"):
    try:
        from . import _gates_cy as _backward_impl
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _backward_impl = _gates_py
        BACKEND = "numpy"
else:
    raise ValueError(
        f"HAMLEARN_KERNELS must be 'numpy' or 'cython', got {_forced!r}")

pointwise_forward = _gates_py.pointwise_forward
pointwise_backward = _backward_impl.pointwise_backward
