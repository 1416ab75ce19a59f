# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _pykernels for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport copysign, fabs, floor, fmax, sqrt

cnp.import_array()


cdef inline double _shrink(double v, double a) nogil:
    # branch-free so random signs do not stall the pipeline
    return copysign(fmax(fabs(v) - a, 0.0), v)


def soft_threshold(v, double alpha):
    src_arr = np.ascontiguousarray(np.ravel(v), dtype=np.float64)
    out_arr = np.empty_like(src_arr)
    cdef double[::1] src = src_arr
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(src.shape[0]):
            out[i] = _shrink(src[i], alpha)
    return out_arr.reshape(np.shape(v))


def thresholded_iteration(A, y, thetas, bint record=False):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(thetas, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1], J = th.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double acc
    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    cdef double[::1] r = np.empty(m)
    cdef double[::1] v = np.empty(n)
    iterates = np.zeros((J + 1, n)) if record else None
    cdef double[:, ::1] it
    if record:
        it = iterates
    with nogil:
        for k in range(J):
            for i in range(m):
                acc = yv[i]
                for j in range(n):
                    acc = acc - a[i, j] * x[j]
                r[i] = acc
            for j in range(n):
                v[j] = x[j]
            for i in range(m):
                acc = r[i]
                if acc != 0.0:
                    for j in range(n):
                        v[j] = v[j] + a[i, j] * acc
            for j in range(n):
                x[j] = _shrink(v[j], th[k])
            if record:
                for j in range(n):
                    it[k + 1, j] = x[j]
    return x_arr, iterates


def coherence_scan(A):
    cdef double[:, ::1] a = np.ascontiguousarray(np.asarray(A, dtype=np.float64).T)
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double best = 0.0, dot, c
    if n < 2:
        return 0.0
    norms_arr = np.empty(n)
    cdef double[::1] norms = norms_arr
    with nogil:
        for i in range(n):
            dot = 0.0
            for t in range(m):
                dot = dot + a[i, t] * a[i, t]
            norms[i] = sqrt(dot)
        for i in range(n):
            for j in range(i + 1, n):
                dot = 0.0
                for t in range(m):
                    dot = dot + a[i, t] * a[j, t]
                c = fabs(dot) / (norms[i] * norms[j])
                if c > best:
                    best = c
    return min(best, 1.0)


cdef inline double _bump(double x, double center, double n_cells) nogil:
    cdef double h = 2.0 - 3.0 * n_cells * fabs(x - center)
    if h >= 1.0:
        return 1.0
    if h <= 0.0:
        return 0.0
    return h


def bump(x, centers, n_cells):
    return np.clip(2.0 - 3.0 * n_cells * np.abs(np.asarray(x) - centers), 0.0, 1.0)


def taylor_eval_r0(points, int n_cells, table):
    cdef double[:, ::1] p = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    cdef double[::1] tab = np.ascontiguousarray(table, dtype=np.float64)
    cdef Py_ssize_t P = p.shape[0], d = p.shape[1]
    cdef Py_ssize_t q, a, combo, idx, mi, stride
    cdef double w, total, nc = n_cells
    out_arr = np.zeros(P)
    cdef double[::1] out = out_arr
    lo_arr = np.zeros(d, dtype=np.int64)
    cdef long long[::1] lo = lo_arr
    cdef bint ok
    with nogil:
        for q in range(P):
            for a in range(d):
                mi = <Py_ssize_t> floor((p[q, a] + 0.5) * nc)
                if mi < 0:
                    mi = 0
                if mi > n_cells:
                    mi = n_cells
                lo[a] = mi
            total = 0.0
            for combo in range(1 << d):
                w = 1.0
                idx = 0
                ok = True
                for a in range(d):
                    mi = lo[a] + ((combo >> a) & 1)
                    if mi > n_cells:
                        ok = False
                        break
                    w = w * _bump(p[q, a], -0.5 + mi / nc, nc)
                    if w == 0.0:
                        ok = False
                        break
                    idx = idx * (n_cells + 1) + mi
                if ok:
                    total = total + w * tab[idx]
            out[q] = total
    return out_arr
