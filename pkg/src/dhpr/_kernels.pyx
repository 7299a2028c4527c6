# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-iteration kernels.  See ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sqrt

cnp.import_array()


def soft_threshold(X, thresh):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(np.broadcast_to(
        np.asarray(thresh, dtype=np.float64).ravel(), (x.shape[0],)))
    out_arr = np.zeros((x.shape[0], x.shape[1]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double v, ti
    for i in range(x.shape[0]):
        ti = t[i]
        for j in range(x.shape[1]):
            v = x[i, j]
            if v > ti:
                out[i, j] = v - ti
            elif v < -ti:
                out[i, j] = v + ti
    return out_arr


def group_shrink(Y, group_ptr, thresh):
    out_arr = np.array(Y, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] y = out_arr
    cdef const long[::1] ptr = np.ascontiguousarray(group_ptr, dtype=np.int_)
    cdef const double[:, ::1] th = np.ascontiguousarray(thresh, dtype=np.float64)
    cdef Py_ssize_t i, l, j
    cdef double nrm, scale
    for i in range(y.shape[0]):
        for l in range(ptr.shape[0] - 1):
            nrm = 0.0
            for j in range(ptr[l], ptr[l + 1]):
                nrm += y[i, j] * y[i, j]
            nrm = sqrt(nrm)
            if nrm > th[i, l]:
                scale = 1.0 - th[i, l] / nrm
            else:
                scale = 0.0
            for j in range(ptr[l], ptr[l + 1]):
                y[i, j] = y[i, j] * scale
    return out_arr


cdef inline double _sigmoid(double u) nogil:
    cdef double e
    if u >= 0:
        return 1.0 / (1.0 + exp(-u))
    e = exp(u)
    return e / (1.0 + e)


def logistic_prox(xi, t, b, double tol=1e-12, int max_iter=200):
    cdef const double[:, ::1] x = np.ascontiguousarray(xi, dtype=np.float64)
    cdef const double[:, ::1] lab = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] tt = np.ascontiguousarray(np.broadcast_to(
        np.asarray(t, dtype=np.float64).ravel(), (x.shape[0],)))
    out_arr = np.empty((x.shape[0], x.shape[1]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int it
    cdef double lo, hi, y, s, g, gp, step, ti, bj, xj, dx, dxold
    for i in range(x.shape[0]):
        ti = tt[i]
        for j in range(x.shape[1]):
            xj = x[i, j]
            bj = lab[i, j]
            lo = xj - ti
            hi = xj + ti
            y = xj
            dx = hi - lo
            dxold = dx
            for it in range(max_iter):
                s = _sigmoid(-bj * y)
                g = y - xj - ti * bj * s
                if fabs(g) <= tol:
                    break
                gp = 1.0 + ti * s * (1.0 - s)
                if g > 0:
                    hi = y
                else:
                    lo = y
                step = y - g / gp
                dxold = dx
                # bisect when Newton leaves the bracket or fails to halve the step
                if not (step > lo and step < hi) or fabs(2.0 * g) > fabs(dxold * gp):
                    dx = 0.5 * (hi - lo)
                    y = lo + dx
                else:
                    dx = g / gp
                    y = step
            out[i, j] = y
    return out_arr


def neighbor_mix(indptr, indices, weights, X):
    cdef const long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int_)
    cdef const long[::1] ix = np.ascontiguousarray(indices, dtype=np.int_)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    out_arr = np.zeros((x.shape[0], x.shape[1]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, q, c, jj
    cdef double wq
    for i in range(x.shape[0]):
        for q in range(ip[i], ip[i + 1]):
            jj = ix[q]
            wq = w[q]
            for c in range(x.shape[1]):
                out[i, c] = out[i, c] + wq * x[jj, c]
    return out_arr
