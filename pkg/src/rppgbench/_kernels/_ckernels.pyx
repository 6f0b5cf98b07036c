# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of ``_pykernels``. Same signatures, same semantics."""
from libc.math cimport sqrt, cos, M_PI
from libc.stdlib cimport malloc, free

import numpy as np

cdef double SIGMA_EPS = 1e-12


def box_means(const unsigned char[:, :, :, ::1] frames, boxes):
    cdef const Py_ssize_t[:, ::1] bx = np.ascontiguousarray(boxes, dtype=np.intp)
    cdef Py_ssize_t n = frames.shape[0]
    out_arr = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, y, x, x0, y0, x1, y1
    cdef unsigned long long sr, sg, sb
    cdef double area
    with nogil:
        for t in range(n):
            x0 = bx[t, 0]
            y0 = bx[t, 1]
            x1 = bx[t, 2]
            y1 = bx[t, 3]
            sr = 0
            sg = 0
            sb = 0
            for y in range(y0, y1):
                for x in range(x0, x1):
                    sr += frames[t, y, x, 0]
                    sg += frames[t, y, x, 1]
                    sb += frames[t, y, x, 2]
            area = <double>((x1 - x0) * (y1 - y0))
            out[t, 0] = sr / area
            out[t, 1] = sg / area
            out[t, 2] = sb / area
    return out_arr


def box_mean_frame(const unsigned char[:, :, ::1] frame, box):
    cdef Py_ssize_t x0 = box[0], y0 = box[1], x1 = box[2], y1 = box[3]
    cdef Py_ssize_t y, x
    cdef unsigned long long sr = 0, sg = 0, sb = 0
    with nogil:
        for y in range(y0, y1):
            for x in range(x0, x1):
                sr += frame[y, x, 0]
                sg += frame[y, x, 1]
                sb += frame[y, x, 2]
    cdef double area = <double>((x1 - x0) * (y1 - y0))
    return np.array([sr / area, sg / area, sb / area])


cdef inline double _mean(const double* v, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += v[i]
    return s / n


cdef inline double _std(const double* v, Py_ssize_t n, double m) noexcept nogil:
    cdef double s = 0.0, d
    cdef Py_ssize_t i
    for i in range(n):
        d = v[i] - m
        s += d * d
    return sqrt(s / n)


cdef int _normalize(const double[:, ::1] rgb, Py_ssize_t start, Py_ssize_t L,
                    double* r, double* g, double* b) noexcept nogil:
    """Fill r/g/b with the window divided by its channel means; 0 if a mean is zero."""
    cdef Py_ssize_t i
    cdef double mr = 0.0, mg = 0.0, mb = 0.0
    for i in range(L):
        r[i] = rgb[start + i, 0]
        g[i] = rgb[start + i, 1]
        b[i] = rgb[start + i, 2]
    mr = _mean(r, L)
    mg = _mean(g, L)
    mb = _mean(b, L)
    if mr == 0.0 or mg == 0.0 or mb == 0.0:
        return 0
    for i in range(L):
        r[i] = r[i] / mr
        g[i] = g[i] / mg
        b[i] = b[i] / mb
    return 1


def pos_overlap_add(rgb_in, Py_ssize_t L):
    cdef const double[:, ::1] rgb = np.ascontiguousarray(rgb_in, dtype=np.float64)
    cdef Py_ssize_t T = rgb.shape[0]
    out_arr = np.zeros(T, dtype=np.float64)
    if L < 1 or T < L:
        return out_arr
    cdef double[::1] out = out_arr
    cdef double* buf = <double*>malloc(5 * L * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* r = buf
    cdef double* g = buf + L
    cdef double* b = buf + 2 * L
    cdef double* s1 = buf + 3 * L
    cdef double* s2 = buf + 4 * L
    cdef Py_ssize_t start, i
    cdef double m1, m2, sd1, sd2, alpha, mh
    try:
        with nogil:
            for start in range(T - L + 1):
                if not _normalize(rgb, start, L, r, g, b):
                    continue
                for i in range(L):
                    s1[i] = g[i] - b[i]
                    s2[i] = g[i] + b[i] - 2.0 * r[i]
                m1 = _mean(s1, L)
                m2 = _mean(s2, L)
                sd1 = _std(s1, L, m1)
                sd2 = _std(s2, L, m2)
                if sd2 < SIGMA_EPS:
                    continue
                alpha = sd1 / sd2
                for i in range(L):
                    s1[i] = s1[i] + alpha * s2[i]
                mh = _mean(s1, L)
                for i in range(L):
                    out[start + i] += s1[i] - mh
    finally:
        free(buf)
    return out_arr


def chrom_overlap_add(rgb_in, Py_ssize_t L):
    cdef const double[:, ::1] rgb = np.ascontiguousarray(rgb_in, dtype=np.float64)
    cdef Py_ssize_t T = rgb.shape[0]
    out_arr = np.zeros(T, dtype=np.float64)
    if L < 2 or T < L:
        return out_arr
    cdef double[::1] out = out_arr
    cdef Py_ssize_t hop = L // 2
    cdef double* buf = <double*>malloc(6 * L * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* r = buf
    cdef double* g = buf + L
    cdef double* b = buf + 2 * L
    cdef double* x = buf + 3 * L
    cdef double* y = buf + 4 * L
    cdef double* w = buf + 5 * L
    cdef Py_ssize_t start, i
    cdef double mx, my, sdx, sdy, alpha, ms
    try:
        with nogil:
            for i in range(L):
                w[i] = 0.5 - 0.5 * cos(2.0 * M_PI * i / L)
            start = 0
            while start + L <= T:
                if _normalize(rgb, start, L, r, g, b):
                    for i in range(L):
                        x[i] = 3.0 * r[i] - 2.0 * g[i]
                        y[i] = 1.5 * r[i] + g[i] - 1.5 * b[i]
                    mx = _mean(x, L)
                    my = _mean(y, L)
                    sdx = _std(x, L, mx)
                    sdy = _std(y, L, my)
                    if sdy >= SIGMA_EPS:
                        alpha = sdx / sdy
                        for i in range(L):
                            x[i] = x[i] - alpha * y[i]
                        ms = _mean(x, L)
                        for i in range(L):
                            out[start + i] += (x[i] - ms) * w[i]
                start += hop
    finally:
        free(buf)
    return out_arr
