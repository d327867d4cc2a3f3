# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled chain inner loops; see _purepy.py for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from scipy.linalg.cython_blas cimport dgemv

NAME = "cython"


def pcn_dense_chain(
    double[:, ::1] W, double[::1] c, double[::1] g, double[::1] s,
    double inv_sigma2, double beta,
    double[::1] z, double[::1] b,
    double[:, ::1] normals, double[::1] log_unifs,
    double[::1] out_loglam, cnp.uint8_t[::1] out_accept,
):
    cdef Py_ssize_t M = b.shape[0]
    cdef Py_ssize_t k = z.shape[0]
    cdef Py_ssize_t n_iter = log_unifs.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double keep = (1.0 - beta * beta) ** 0.5
    cdef double rnorm2 = 0.0, rnorm2_new, log_alpha, r, lam, gss = 0.0, bs
    cdef double one = 1.0
    cdef int n_acc = 0, im = <int> M, ik = <int> k, inc = 1
    cdef double[::1] z_new = np.empty(k)
    cdef double[::1] b_new = np.empty(M)

    for i in range(M):
        r = g[i] - b[i]
        rnorm2 += r * r
        gss += (g[i] - 0.5 * s[i]) * s[i]
    bs = 0.0
    for i in range(M):
        bs += b[i] * s[i]

    for t in range(n_iter):
        for j in range(k):
            z_new[j] = keep * z[j] + beta * normals[t, j]
        for i in range(M):
            b_new[i] = c[i]
        # row-major W (M, k) is column-major (k, M); 'T' gives b_new += W @ z_new
        dgemv("T", &ik, &im, &one, &W[0, 0], &ik, &z_new[0], &inc, &one, &b_new[0], &inc)
        rnorm2_new = 0.0
        for i in range(M):
            r = g[i] - b_new[i]
            rnorm2_new += r * r
        log_alpha = 0.5 * inv_sigma2 * (rnorm2 - rnorm2_new)
        if log_alpha > 0.0:
            log_alpha = 0.0
        if log_unifs[t] < log_alpha:
            for j in range(k):
                z[j] = z_new[j]
            bs = 0.0
            for i in range(M):
                b[i] = b_new[i]
                bs += b[i] * s[i]
            rnorm2 = rnorm2_new
            out_accept[t] = 1
            n_acc += 1
        else:
            out_accept[t] = 0
        out_loglam[t] = inv_sigma2 * (gss - bs)
    return n_acc


def lumpy_walk_chain(
    double[:, ::1] centers, double[::1] b, double[::1] g, double[::1] s,
    double[::1] xs, double[::1] ys,
    double pref, double inv2we2, double inv_sigma2,
    double fov_x, double fov_y,
    long[::1] lump_idx, double[:, ::1] steps, double[::1] log_unifs,
    double[::1] out_loglam, cnp.uint8_t[::1] out_accept,
):
    cdef Py_ssize_t nx = xs.shape[0]
    cdef Py_ssize_t ny = ys.shape[0]
    cdef Py_ssize_t M = b.shape[0]
    cdef Py_ssize_t n_iter = log_unifs.shape[0]
    cdef Py_ssize_t t, i, ix, iy, m
    cdef long li
    cdef double cx, cy, px, py, rnorm2 = 0.0, rnorm2_new, log_alpha, r, lam, d
    cdef int n_acc = 0
    cdef double[::1] b_new = np.empty(M)
    cdef double[::1] ex_old = np.empty(nx)
    cdef double[::1] ey_old = np.empty(ny)
    cdef double[::1] ex_new = np.empty(nx)
    cdef double[::1] ey_new = np.empty(ny)

    for m in range(M):
        r = g[m] - b[m]
        rnorm2 += r * r

    for t in range(n_iter):
        li = lump_idx[t]
        cx = centers[li, 0]
        cy = centers[li, 1]
        px = cx + steps[t, 0]
        py = cy + steps[t, 1]
        if 0.0 <= px <= fov_x and 0.0 <= py <= fov_y:
            for ix in range(nx):
                d = xs[ix] - cx
                ex_old[ix] = exp(-d * d * inv2we2)
                d = xs[ix] - px
                ex_new[ix] = exp(-d * d * inv2we2)
            for iy in range(ny):
                d = ys[iy] - cy
                ey_old[iy] = exp(-d * d * inv2we2)
                d = ys[iy] - py
                ey_new[iy] = exp(-d * d * inv2we2)
            rnorm2_new = 0.0
            m = 0
            for ix in range(nx):
                for iy in range(ny):
                    b_new[m] = b[m] + pref * (ex_new[ix] * ey_new[iy] - ex_old[ix] * ey_old[iy])
                    r = g[m] - b_new[m]
                    rnorm2_new += r * r
                    m += 1
            log_alpha = 0.5 * inv_sigma2 * (rnorm2 - rnorm2_new)
            if log_alpha > 0.0:
                log_alpha = 0.0
            if log_unifs[t] < log_alpha:
                centers[li, 0] = px
                centers[li, 1] = py
                for m in range(M):
                    b[m] = b_new[m]
                rnorm2 = rnorm2_new
                out_accept[t] = 1
                n_acc += 1
            else:
                out_accept[t] = 0
        else:
            out_accept[t] = 0
        lam = 0.0
        for m in range(M):
            lam += (g[m] - 0.5 * s[m] - b[m]) * s[m]
        out_loglam[t] = inv_sigma2 * lam
    return n_acc
