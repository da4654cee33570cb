# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops in :mod:`rankone_lyap._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, sqrt, INFINITY

cnp.import_array()


cdef double _qform_counts(const double[:, ::1] S, const long[::1] c, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, row
    for i in range(n):
        if c[i] == 0:
            continue
        row = 0.0
        for j in range(n):
            row += S[i, j] * c[j]
        acc += c[i] * row
    return acc


def grid_search(S, long k):
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef Py_ssize_t n = Sv.shape[0]
    cdef long[::1] c = np.zeros(n, dtype=np.int64)
    cdef long[::1] best = np.zeros(n, dtype=np.int64)
    cdef double kk = <double>k * <double>k
    cdef double val, best_val = INFINITY
    cdef long count = 0
    cdef Py_ssize_t i, j
    cdef long rest
    if n == 1:
        return np.array([k], dtype=np.int64), float(Sv[0, 0]), 1
    # first composition in lexicographic order: (0, ..., 0, k)
    c[n - 1] = k
    with nogil:
        while True:
            val = _qform_counts(Sv, c, n) / kk
            count += 1
            if val < best_val:
                best_val = val
                for i in range(n):
                    best[i] = c[i]
            # successor: rightmost i < n-1 with mass in c[i+1:]; move one
            # unit into c[i] and collect the remaining tail in c[n-1]
            i = n - 2
            rest = c[n - 1]
            while i >= 0 and rest == 0:
                rest += c[i]
                i -= 1
            if i < 0:
                break
            c[i] += 1
            for j in range(i + 1, n):
                c[j] = 0
            c[n - 1] = rest - 1
    return np.asarray(best).copy(), best_val, count


cdef void _project(double* y, double* out, double* work, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j, rho = 0
    cdef double tmp, css = 0.0, css_rho = 0.0, theta
    for i in range(n):
        work[i] = y[i]
    # insertion sort, descending
    for i in range(1, n):
        tmp = work[i]
        j = i - 1
        while j >= 0 and work[j] < tmp:
            work[j + 1] = work[j]
            j -= 1
        work[j + 1] = tmp
    for i in range(n):
        css += work[i]
        if work[i] - (css - 1.0) / (i + 1) > 0:
            rho = i
            css_rho = css
    theta = (css_rho - 1.0) / (rho + 1)
    for i in range(n):
        tmp = y[i] - theta
        out[i] = tmp if tmp > 0 else 0.0


cdef double _qform(const double[:, ::1] S, double* p, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, row
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += S[i, j] * p[j]
        acc += p[i] * row
    return acc


def projected_gradient(S, p0, long max_iters, double tol):
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef Py_ssize_t n = Sv.shape[0]
    cdef double[::1] p = np.array(p0, dtype=np.float64)
    cdef double[::1] g = np.empty(n)
    cdef double[::1] q = np.empty(n)
    cdef double[::1] y = np.empty(n)
    cdef double[::1] work = np.empty(n)
    cdef double f, fq, t, r, dec
    cdef long it = 0
    cdef Py_ssize_t i, j
    cdef bint stalled = False
    f = _qform(Sv, &p[0], n)
    with nogil:
        while it < max_iters:
            for i in range(n):
                g[i] = 0.0
                for j in range(n):
                    g[i] += Sv[i, j] * p[j]
                g[i] *= 2.0
            for i in range(n):
                y[i] = p[i] - g[i]
            _project(&y[0], &q[0], &work[0], n)
            r = 0.0
            for i in range(n):
                r += (p[i] - q[i]) * (p[i] - q[i])
            if sqrt(r) < tol:
                break
            t = 1.0
            while True:
                for i in range(n):
                    y[i] = p[i] - t * g[i]
                _project(&y[0], &q[0], &work[0], n)
                fq = _qform(Sv, &q[0], n)
                dec = 0.0
                for i in range(n):
                    dec += g[i] * (q[i] - p[i])
                if fq <= f + 0.5 * dec:
                    break
                t *= 0.5
                if t < 1e-20:
                    stalled = True
                    break
            if stalled:
                break
            for i in range(n):
                p[i] = q[i]
            f = fq
            it += 1
    return np.asarray(p).copy(), f, it


def dense_products(A, idx):
    cdef const double[:, :, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef const long[:, ::1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t trials = iv.shape[0], k = iv.shape[1], d = Av.shape[1]
    out_P = np.zeros((trials, d, d))
    cdef double[:, :, ::1] Pv = out_P
    logs_arr = np.zeros(trials)
    cdef double[::1] logs = logs_arr
    cdef double[:, ::1] P = np.empty((d, d))
    cdef double[:, ::1] T = np.empty((d, d))
    cdef Py_ssize_t tr, step, a, b, c
    cdef long s
    cdef double m, acc, x
    with nogil:
        for tr in range(trials):
            for a in range(d):
                for b in range(d):
                    P[a, b] = 1.0 if a == b else 0.0
            acc = 0.0
            for step in range(k):
                s = iv[tr, step]
                m = 0.0
                for a in range(d):
                    for b in range(d):
                        x = 0.0
                        for c in range(d):
                            x += Av[s, a, c] * P[c, b]
                        T[a, b] = x
                        if fabs(x) > m:
                            m = fabs(x)
                if m == 0.0:
                    acc = -INFINITY
                    for a in range(d):
                        for b in range(d):
                            P[a, b] = 0.0
                    break
                acc += log(m)
                for a in range(d):
                    for b in range(d):
                        P[a, b] = T[a, b] / m
            logs[tr] = acc
            for a in range(d):
                for b in range(d):
                    Pv[tr, a, b] = P[a, b]
    return logs_arr, out_P


def markov_paths(cum, starts, uniforms):
    cdef const double[:, ::1] cv = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const long[::1] sv = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const double[:, ::1] uv = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t trials = uv.shape[0], steps = uv.shape[1], n = cv.shape[1]
    paths = np.empty((trials, steps + 1), dtype=np.int64)
    cdef long[:, ::1] pv = paths
    cdef Py_ssize_t tr, j
    cdef long s, nxt
    cdef double u
    with nogil:
        for tr in range(trials):
            s = sv[tr]
            pv[tr, 0] = s
            for j in range(steps):
                u = uv[tr, j]
                nxt = 0
                while nxt < n and cv[s, nxt] <= u:
                    nxt += 1
                s = nxt
                pv[tr, j + 1] = s
    return paths
