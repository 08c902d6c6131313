# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise kernels: fused bias + scale + activation passes.

Single pass over the matrix, no temporaries. Matrix products stay with BLAS;
these kernels only cover the memory-bound elementwise stages that follow them.
"""

from libc.math cimport exp, fabs, sqrt, tanh

cdef double INV_SQRT_2PI = 0.3989422804014327


cdef inline double _sigmoid(double t) nogil:
    cdef double e
    if t >= 0.0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


def bias_act(double[:, ::1] p, const double[::1] bias, double scale, int act):
    """In place: p <- act(scale * (p + bias)), bias broadcast over rows."""
    cdef Py_ssize_t i, j, n = p.shape[0], m = p.shape[1]
    cdef double t
    if bias.shape[0] != m:
        raise ValueError("bias length does not match column count")
    if act < 0 or act > 4:
        raise ValueError(f"unknown activation code {act}")
    with nogil:
        for i in range(n):
            for j in range(m):
                t = scale * (p[i, j] + bias[j])
                if act == 0:
                    p[i, j] = t
                elif act == 1:
                    p[i, j] = tanh(t)
                elif act == 2:
                    p[i, j] = _sigmoid(t)
                elif act == 3:
                    p[i, j] = t if t > 0.0 else 0.0
                else:
                    p[i, j] = t * _sigmoid(t)


def bn_rbf(double[:, ::1] p, const double[::1] bias, const double[::1] mean,
           const double[::1] var, double eps, int kind):
    """In place: normalize (p + bias) with stored batch statistics, then apply
    the bounded radial activation (0 = gaussian bump, 1 = laplace bump)."""
    cdef Py_ssize_t i, j, n = p.shape[0], m = p.shape[1]
    cdef double t
    if bias.shape[0] != m or mean.shape[0] != m or var.shape[0] != m:
        raise ValueError("per-unit vectors do not match column count")
    if kind != 0 and kind != 1:
        raise ValueError(f"unknown radial kind {kind}")
    with nogil:
        for i in range(n):
            for j in range(m):
                t = (p[i, j] + bias[j] - mean[j]) / sqrt(var[j] + eps)
                if kind == 0:
                    p[i, j] = exp(-0.5 * t * t) * INV_SQRT_2PI
                else:
                    p[i, j] = exp(-fabs(t)) * INV_SQRT_2PI
