# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused C implementations of the per-step hot kernels.

Semantics match wavekin._accel.fallback; see that module for the contract
documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

DEF TWO_PI = 6.283185307179586


def gaussian_kernel(const double[::1] args, double eps, double[::1] out):
    cdef Py_ssize_t i, n = args.shape[0]
    cdef double inv_eps = 1.0 / eps
    cdef double norm = 1.0 / (eps * sqrt(TWO_PI))
    cdef double t
    for i in range(n):
        t = args[i] * inv_eps
        out[i] = norm * exp(-0.5 * t * t)


def diffusion_fields(
    const long long[::1] indptr,
    const long long[::1] indices,
    const double[::1] data,
    const double[::1] c1,
    const double[::1] c2,
    const double[::1] c3,
    const double[::1] xx,
    const double[::1] xy,
    const double[::1] xz,
    const double[::1] yy,
    const double[::1] yz,
    const double[::1] zz,
    Py_ssize_t n_p,
    double[::1] out11,
    double[::1] out12,
    double[::1] out22,
):
    cdef Py_ssize_t row, k, col, ij
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef double s1, s2, s3, w
    for row in range(n_rows):
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        for k in range(indptr[row], indptr[row + 1]):
            col = indices[k]
            w = data[k]
            s1 += w * c1[col]
            s2 += w * c2[col]
            s3 += w * c3[col]
        ij = row % n_p
        out11[row] = xx[ij] * s1
        out12[row] = xy[ij] * s2 - xz[ij] * s1
        out22[row] = yy[ij] * s3 - 2.0 * (yz[ij] * s2) + zz[ij] * s1


def bundle_rates(
    const long long[::1] indptr,
    const long long[::1] indices,
    const double[::1] data,
    const double[::1] f1,
    const double[::1] f2,
    const double[::1] f3,
    double[::1] out1,
    double[::1] out2,
    double[::1] out3,
):
    cdef Py_ssize_t row, k, col
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef double a, b, c, w
    out1[:] = 0.0
    out2[:] = 0.0
    out3[:] = 0.0
    for row in range(n_rows):
        a = f1[row]
        b = f2[row]
        c = f3[row]
        if a == 0.0 and b == 0.0 and c == 0.0:
            continue
        for k in range(indptr[row], indptr[row + 1]):
            col = indices[k]
            w = data[k]
            out1[col] += w * a
            out2[col] += w * b
            out3[col] += w * c
