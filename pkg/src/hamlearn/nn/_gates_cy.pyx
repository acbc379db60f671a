# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled twin of the backward gate kernel in ``_gates_py``.

Only the backward pass is compiled: it is pure multiply-add, so one
fused walk over the batch replaces the ~15 NumPy temporaries (measured
about 20x faster).  The forward pass stays in NumPy either way, whose
vectorized exp/tanh beat scalar libm calls.
"""

import numpy as np


def pointwise_backward(double[:, ::1] gates, double[:, ::1] c_prev,
                       double[:, ::1] tanh_c, double[:, :] d_f, d_c):
    """Reverse of ``_gates_py.pointwise_forward``; ``d_c`` may be None.

    Returns (d_z, d_c_prev) with ``d_z`` packed like the gate blocks.
    """
    cdef Py_ssize_t nb = gates.shape[0]
    cdef Py_ssize_t h = gates.shape[1] // 4
    dz_arr = np.empty((nb, 4 * h))
    dcp_arr = np.empty((nb, h))
    cdef double[:, ::1] dz = dz_arr
    cdef double[:, ::1] dcp = dcp_arr
    cdef double[:, :] dcv
    cdef bint has_dc = d_c is not None
    if has_dc:
        dcv = d_c
    else:
        dcv = dcp  # never read; keeps the view initialized
    cdef Py_ssize_t b, j
    cdef double g, i, e, d, t, dc
    with nogil:
        for b in range(nb):
            for j in range(h):
                g = gates[b, j]
                i = gates[b, h + j]
                e = gates[b, 2 * h + j]
                d = gates[b, 3 * h + j]
                t = tanh_c[b, j]
                dc = d_f[b, j] * d * (1.0 - t * t)
                if has_dc:
                    dc = dc + dcv[b, j]
                dz[b, j] = (dc * c_prev[b, j]) * (g * (1.0 - g))
                dz[b, h + j] = (dc * e) * (i * (1.0 - i))
                dz[b, 2 * h + j] = (dc * i) * (1.0 - e * e)
                dz[b, 3 * h + j] = (d_f[b, j] * t) * (d * (1.0 - d))
                dcp[b, j] = dc * g
    return dz_arr, dcp_arr
