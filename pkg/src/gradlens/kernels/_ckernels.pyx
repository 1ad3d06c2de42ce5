# cython: language_level=3
"""Compiled dense-layer kernels.

Same contract as gradlens.kernels.numpy_ref, with the elementwise work
(bias add, ReLU, mask gating, ReLU derivative) fused into single passes
around BLAS dgemm calls, avoiding the intermediate arrays the numpy
backend allocates per layer.
"""

import numpy as np

from scipy.linalg.cython_blas cimport dgemm


cdef void _gemm_rm(bint ta, bint tb, int m, int n, int k,
                   double alpha, const double* a, int lda,
                   const double* b, int ldb,
                   double beta, double* c, int ldc) noexcept nogil:
    # Row-major C(m,n) = alpha * op(A) @ op(B) + beta * C, expressed through
    # Fortran dgemm by computing the transposed product in column-major view.
    cdef char fa = b'T' if tb else b'N'
    cdef char fb = b'T' if ta else b'N'
    dgemm(&fa, &fb, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef inline void _check_positive(Py_ssize_t batch, Py_ssize_t n_in, Py_ssize_t n_out):
    if batch < 1 or n_in < 1 or n_out < 1:
        raise ValueError("kernel inputs must have at least one row and column")


def forward_batch(const double[:, ::1] x, const double[:, ::1] weights,
                  const double[::1] bias, bint relu):
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t n_in = x.shape[1]
    cdef Py_ssize_t n_out = weights.shape[0]
    _check_positive(batch, n_in, n_out)
    if weights.shape[1] != n_in:
        raise ValueError("weights/input width mismatch")
    if bias.shape[0] != n_out:
        raise ValueError("bias length mismatch")

    z_arr = np.empty((batch, n_out), dtype=np.float64)
    a_arr = np.empty((batch, n_out), dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] a = a_arr
    cdef Py_ssize_t i, j
    cdef double v

    with nogil:
        # z = x @ weights.T
        _gemm_rm(0, 1, <int>batch, <int>n_out, <int>n_in, 1.0,
                 &x[0, 0], <int>n_in, &weights[0, 0], <int>n_in,
                 0.0, &z[0, 0], <int>n_out)
        for i in range(batch):
            for j in range(n_out):
                v = z[i, j] + bias[j]
                z[i, j] = v
                a[i, j] = 0.0 if (relu and v <= 0.0) else v
    return z_arr, a_arr


def backward_batch(const double[:, ::1] x, const double[:, ::1] weights,
                   const double[:, ::1] z, const double[:, ::1] grad_a,
                   mask, bint relu, double scale):
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t n_in = x.shape[1]
    cdef Py_ssize_t n_out = weights.shape[0]
    _check_positive(batch, n_in, n_out)
    if weights.shape[1] != n_in:
        raise ValueError("weights/input width mismatch")
    if z.shape[0] != batch or z.shape[1] != n_out:
        raise ValueError("pre-activation shape mismatch")
    if grad_a.shape[0] != batch or grad_a.shape[1] != n_out:
        raise ValueError("gradient shape mismatch")

    cdef const double[::1] m = None
    cdef bint has_mask = mask is not None
    if has_mask:
        m = np.ascontiguousarray(mask, dtype=np.float64)
        if m.shape[0] != n_out:
            raise ValueError("mask length mismatch")

    delta_arr = np.empty((batch, n_out), dtype=np.float64)
    gw_arr = np.empty((n_out, n_in), dtype=np.float64)
    gb_arr = np.zeros(n_out, dtype=np.float64)
    gx_arr = np.empty((batch, n_in), dtype=np.float64)
    cdef double[:, ::1] delta = delta_arr
    cdef double[:, ::1] gw = gw_arr
    cdef double[::1] gb = gb_arr
    cdef double[:, ::1] gx = gx_arr
    cdef Py_ssize_t i, j
    cdef double d

    with nogil:
        for i in range(batch):
            for j in range(n_out):
                d = grad_a[i, j]
                if has_mask:
                    d = d * m[j]
                if relu and z[i, j] <= 0.0:
                    d = d * 0.0
                delta[i, j] = d
                gb[j] += d
        if scale != 1.0:
            for j in range(n_out):
                gb[j] *= scale
        # gw = scale * delta.T @ x ; gx = delta @ weights
        _gemm_rm(1, 0, <int>n_out, <int>n_in, <int>batch, scale,
                 &delta[0, 0], <int>n_out, &x[0, 0], <int>n_in,
                 0.0, &gw[0, 0], <int>n_in)
        _gemm_rm(0, 0, <int>batch, <int>n_in, <int>n_out, 1.0,
                 &delta[0, 0], <int>n_out, &weights[0, 0], <int>n_in,
                 0.0, &gx[0, 0], <int>n_in)
    return gw_arr, gb_arr, gx_arr
