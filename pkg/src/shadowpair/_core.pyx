# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Quickshift density, parent links, nearest-center assignment."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY
from libc.float cimport DBL_MAX

cnp.import_array()


def density_rows(const double[:, :, ::1] feat, double sigma, int radius,
                 Py_ssize_t y0, Py_ssize_t y1, double[:, ::1] out):
    cdef Py_ssize_t H = feat.shape[0], W = feat.shape[1], C = feat.shape[2]
    cdef Py_ssize_t y, x, c, yy, xx, ylo, yhi, xlo, xhi
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef double s, d, t, dy2
    cdef const double* base = &feat[0, 0, 0]
    cdef const double* p
    cdef const double* q
    with nogil:
        for y in range(y0, y1):
            ylo = y - radius if y >= radius else 0
            yhi = y + radius if y + radius < H else H - 1
            for x in range(W):
                xlo = x - radius if x >= radius else 0
                xhi = x + radius if x + radius < W else W - 1
                p = base + (y * W + x) * C
                s = 0.0
                for yy in range(ylo, yhi + 1):
                    dy2 = <double>((yy - y) * (yy - y))
                    q = base + (yy * W + xlo) * C
                    for xx in range(xlo, xhi + 1):
                        d = <double>((xx - x) * (xx - x)) + dy2
                        for c in range(C):
                            t = q[c] - p[c]
                            d = d + t * t
                        s = s + exp(-d * inv)
                        q = q + C
                out[y, x] = s


def parent_rows(const double[:, :, ::1] feat, const double[:, ::1] dens, double max_dist,
                Py_ssize_t y0, Py_ssize_t y1, cnp.int64_t[:, ::1] out):
    cdef Py_ssize_t H = feat.shape[0], W = feat.shape[1], C = feat.shape[2]
    cdef Py_ssize_t y, x, yy, xx, c, o
    cdef cnp.int64_t i, j, best_j
    cdef int R = <int>max_dist
    cdef double lim = max_dist * max_dist
    cdef double d, t, best_d, di, dj, sp
    # offsets by increasing spatial distance: once the spatial part alone
    # exceeds the best full distance, no later offset can win
    offs = [(dy * dy + dx * dx, dy, dx) for dy in range(-R, R + 1) for dx in range(-R, R + 1)
            if dy * dy + dx * dx <= lim]
    offs.sort()
    cdef Py_ssize_t n_off = len(offs)
    cdef cnp.int64_t[::1] ody = np.array([o_[1] for o_ in offs], dtype=np.int64)
    cdef cnp.int64_t[::1] odx = np.array([o_[2] for o_ in offs], dtype=np.int64)
    cdef double[::1] osp = np.array([o_[0] for o_ in offs], dtype=np.float64)
    with nogil:
        for y in range(y0, y1):
            for x in range(W):
                i = y * W + x
                di = dens[y, x]
                best_d = DBL_MAX
                best_j = i
                for o in range(n_off):
                    sp = osp[o]
                    if sp > best_d:
                        break
                    yy = y + ody[o]
                    xx = x + odx[o]
                    if yy < 0 or yy >= H or xx < 0 or xx >= W:
                        continue
                    j = yy * W + xx
                    dj = dens[yy, xx]
                    if not (dj > di or (dj == di and j < i)):
                        continue
                    d = sp
                    for c in range(C):
                        t = feat[yy, xx, c] - feat[y, x, c]
                        d = d + t * t
                    if d > lim:
                        continue
                    if d < best_d or (d == best_d and j < best_j):
                        best_d = d
                        best_j = j
                out[y, x] = best_j


def nearest_center(const double[:, ::1] X, const double[:, ::1] centers):
    cdef Py_ssize_t n = X.shape[0], k = centers.shape[0], dim = X.shape[1]
    cdef Py_ssize_t i, c, f
    cdef double d, t, best
    cdef cnp.int64_t arg
    labels = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] lab = labels
    with nogil:
        for i in range(n):
            best = INFINITY
            arg = 0
            for c in range(k):
                d = 0.0
                for f in range(dim):
                    t = X[i, f] - centers[c, f]
                    d = d + t * t
                if d < best:
                    best = d
                    arg = c
            lab[i] = arg
    return labels
