# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled periodic stencil kernels.

Any C-contiguous nd-array is viewed as (pre, n, post) with the stencil axis
in the middle, so one pair of loops covers every dimensionality. Wraparound
is only paid at the axis edges; the interior runs stride-1.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef void _diff1_o2(double[:, :, ::1] f, double[:, :, ::1] out, double c1) noexcept nogil:
    cdef Py_ssize_t p, j, q, jm1, jp1
    cdef Py_ssize_t npre = f.shape[0], n = f.shape[1], npost = f.shape[2]
    for p in range(npre):
        for j in range(n):
            jm1 = j - 1 if j > 0 else n - 1
            jp1 = j + 1 if j < n - 1 else 0
            for q in range(npost):
                out[p, j, q] = c1 * (f[p, jp1, q] - f[p, jm1, q])


cdef void _diff1_o4(double[:, :, ::1] f, double[:, :, ::1] out, double c1) noexcept nogil:
    cdef Py_ssize_t p, j, q, jm2, jm1, jp1, jp2
    cdef Py_ssize_t npre = f.shape[0], n = f.shape[1], npost = f.shape[2]
    for p in range(npre):
        for j in range(n):
            if 2 <= j < n - 2:
                jm2 = j - 2; jm1 = j - 1; jp1 = j + 1; jp2 = j + 2
            else:
                jm2 = (j - 2 + n) % n; jm1 = (j - 1 + n) % n
                jp1 = (j + 1) % n; jp2 = (j + 2) % n
            for q in range(npost):
                out[p, j, q] = c1 * (-f[p, jp2, q] + 8.0 * f[p, jp1, q]
                                     - 8.0 * f[p, jm1, q] + f[p, jm2, q])


cdef void _diff2_o2(double[:, :, ::1] f, double[:, :, ::1] out, double c2) noexcept nogil:
    cdef Py_ssize_t p, j, q, jm1, jp1
    cdef Py_ssize_t npre = f.shape[0], n = f.shape[1], npost = f.shape[2]
    for p in range(npre):
        for j in range(n):
            jm1 = j - 1 if j > 0 else n - 1
            jp1 = j + 1 if j < n - 1 else 0
            for q in range(npost):
                out[p, j, q] = c2 * (f[p, jp1, q] - 2.0 * f[p, j, q] + f[p, jm1, q])


cdef void _diff2_o4(double[:, :, ::1] f, double[:, :, ::1] out, double c2) noexcept nogil:
    cdef Py_ssize_t p, j, q, jm2, jm1, jp1, jp2
    cdef Py_ssize_t npre = f.shape[0], n = f.shape[1], npost = f.shape[2]
    for p in range(npre):
        for j in range(n):
            if 2 <= j < n - 2:
                jm2 = j - 2; jm1 = j - 1; jp1 = j + 1; jp2 = j + 2
            else:
                jm2 = (j - 2 + n) % n; jm1 = (j - 1 + n) % n
                jp1 = (j + 1) % n; jp2 = (j + 2) % n
            for q in range(npost):
                out[p, j, q] = c2 * (-f[p, jp2, q] + 16.0 * f[p, jp1, q]
                                     - 30.0 * f[p, j, q]
                                     + 16.0 * f[p, jm1, q] - f[p, jm2, q])


def _as3d(f, axis):
    shape = f.shape
    pre = 1
    for s in shape[:axis]:
        pre *= s
    post = 1
    for s in shape[axis + 1:]:
        post *= s
    f = np.ascontiguousarray(f, dtype=np.float64)
    return f.reshape(pre, shape[axis], post), shape


def diff1_axis(f, axis, h, order):
    """First derivative along `axis` with periodic wrap."""
    f3, shape = _as3d(f, axis)
    out = np.empty_like(f3)
    if order == 2:
        _diff1_o2(f3, out, 0.5 / h)
    elif order == 4:
        _diff1_o4(f3, out, 1.0 / (12.0 * h))
    else:
        raise ValueError(f"unsupported stencil order {order}")
    return out.reshape(shape)


def diff2_axis(f, axis, h, order):
    """Second derivative along `axis` with periodic wrap."""
    f3, shape = _as3d(f, axis)
    out = np.empty_like(f3)
    if order == 2:
        _diff2_o2(f3, out, 1.0 / (h * h))
    elif order == 4:
        _diff2_o4(f3, out, 1.0 / (12.0 * h * h))
    else:
        raise ValueError(f"unsupported stencil order {order}")
    return out.reshape(shape)
