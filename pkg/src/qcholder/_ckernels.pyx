# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels`` (same signatures)."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport log, exp, sqrt, floor, ceil, fabs, hypot, fmax

cnp.import_array()

BACKEND = "cython"


def _prep(y, log_r, log_sigma):
    y, lr, ls = np.broadcast_arrays(np.asarray(y, dtype=complex),
                                    np.asarray(log_r, dtype=np.float64),
                                    np.asarray(log_sigma, dtype=np.float64))
    shape = y.shape
    # complex input viewed as interleaved (re, im) doubles
    return (shape, np.ascontiguousarray(y).ravel().view(np.float64),
            np.ascontiguousarray(lr).ravel(), np.ascontiguousarray(ls).ravel())


cdef void _scale(const double[::1] Y, const double[::1] LR, const double[::1] LS, double K,
                 bint inverse, double[::1] O) noexcept nogil:
    cdef Py_ssize_t i, n = LR.shape[0]
    cdef double x, y, L, e
    cdef double a = (K - 1.0) if inverse else (1.0 / K - 1.0)
    cdef double kin = 1.0 if inverse else K
    cdef double kc = (K - 1.0) if inverse else (1.0 - K)
    for i in range(n):
        x = Y[2 * i]
        y = Y[2 * i + 1]
        L = 0.5 * log(x * x + y * y) - LR[i]
        if L < kin * LS[i]:
            e = exp(kc * LS[i])
        elif L <= 0.0:
            e = exp(a * L)
        else:
            e = 1.0
        O[2 * i] = x * e
        O[2 * i + 1] = y * e


def stretch_offsets(y, log_r, log_sigma, double K):
    shape, yv, lrv, lsv = _prep(y, log_r, log_sigma)
    out = np.empty(lrv.shape[0], dtype=complex)
    cdef double[::1] O = out.view(np.float64)
    cdef const double[::1] Y = yv, LR = lrv, LS = lsv
    with nogil:
        _scale(Y, LR, LS, K, False, O)
    return out.reshape(shape)


def unstretch_offsets(w, log_r, log_sigma, double K):
    shape, yv, lrv, lsv = _prep(w, log_r, log_sigma)
    out = np.empty(lrv.shape[0], dtype=complex)
    cdef double[::1] O = out.view(np.float64)
    cdef const double[::1] Y = yv, LR = lrv, LS = lsv
    with nogil:
        _scale(Y, LR, LS, K, True, O)
    return out.reshape(shape)


def stretch_log_jacobian(y, log_r, log_sigma, double K):
    shape, yv, lrv, lsv = _prep(y, log_r, log_sigma)
    cdef const double[::1] Y = yv
    cdef const double[::1] LR = lrv
    cdef const double[::1] LS = lsv
    out = np.empty(LR.shape[0], dtype=np.float64)
    cdef double[::1] O = out
    cdef Py_ssize_t i
    cdef double L
    cdef double lk = log(K)
    with nogil:
        for i in range(LR.shape[0]):
            L = 0.5 * log(Y[2 * i] * Y[2 * i] + Y[2 * i + 1] * Y[2 * i + 1]) - LR[i]
            if L < K * LS[i]:
                O[i] = 2.0 * (1.0 - K) * LS[i]
            elif L <= 0.0:
                O[i] = -lk + 2.0 * (1.0 / K - 1.0) * L
            else:
                O[i] = 0.0
    return out.reshape(shape)


cdef inline bint _interior(long long ix, long long iy, double delta, double ox, double oy) nogil:
    cdef double a = ox + <double>ix * delta
    cdef double b = oy + <double>iy * delta
    cdef double xm = fmax(fabs(a), fabs(a + delta))
    cdef double ym = fmax(fabs(b), fabs(b + delta))
    return xm * xm + ym * ym < 1.0


cdef long long _column_count(long long ix, double delta, double off_x, double off_y) nogil:
    cdef double a = off_x + <double>ix * delta
    cdef double xm = fmax(fabs(a), fabs(a + delta))
    cdef double H
    cdef long long lo, hi
    cdef int it
    if xm >= 1.0:
        return 0
    H = sqrt(1.0 - xm * xm)
    lo = <long long>(floor((-H - off_y) / delta) + 1.0)
    hi = <long long>(ceil((H - off_y) / delta) - 2.0)
    for it in range(2):
        if _interior(ix, lo - 1, delta, off_x, off_y):
            lo -= 1
        if lo <= hi and not _interior(ix, lo, delta, off_x, off_y):
            lo += 1
        if _interior(ix, hi + 1, delta, off_x, off_y):
            hi += 1
        if lo <= hi and not _interior(ix, hi, delta, off_x, off_y):
            hi -= 1
    if hi >= lo:
        return hi - lo + 1
    return 0


def count_interior_tiles(double delta, double off_x, double off_y, int threads=0):
    cdef long long ix_lo = <long long>floor((-1.0 - off_x) / delta)
    cdef long long ix_hi = <long long>floor((1.0 - off_x) / delta)
    cdef long long ix, total = 0
    cdef int nt = threads if threads > 0 else 1
    for ix in prange(ix_lo, ix_hi + 1, nogil=True, num_threads=nt, schedule="static"):
        total += _column_count(ix, delta, off_x, off_y)
    return int(total)


def pattern_locate(wx, wy, int P, prim_keys, prim_level_start, double shrink_radius):
    cdef double[::1] X = np.array(wx, dtype=np.float64).ravel()
    cdef double[::1] Y = np.array(wy, dtype=np.float64).ravel()
    cdef Py_ssize_t n = X.shape[0]
    cdef int depth = P // 3 + 1
    cdef int nq = len(prim_keys)
    sizes = np.array([k.size for k in prim_keys], dtype=np.int64)
    offs_a = np.zeros(nq + 1, dtype=np.int64)
    offs_a[1:] = np.cumsum(sizes)
    cdef long long[::1] offs = offs_a
    cdef long long[::1] keys = (np.concatenate(prim_keys).astype(np.int64) if offs_a[nq] > 0
                                else np.zeros(1, dtype=np.int64))
    cdef long long[::1] lstart = np.asarray(prim_level_start, dtype=np.int64)
    chain_a = np.full((n, depth), -1, dtype=np.int64)
    level_a = np.zeros(n, dtype=np.int64)
    found_a = np.zeros(n, dtype=np.uint8)
    cx_a = np.empty(n)
    cy_a = np.empty(n)
    cdef long long[:, ::1] chain = chain_a
    cdef long long[::1] level = level_a
    cdef unsigned char[::1] found = found_a
    cdef double[::1] CX = cx_a
    cdef double[::1] CY = cy_a
    cdef double r2 = shrink_radius * shrink_radius
    cdef Py_ssize_t i, lo_i, hi_i, mid
    cdef int step, q, rem
    cdef long long m, kx, ky, key
    cdef double x, y, ox, oy, sc
    cdef bint moved
    with nogil:
        for i in range(n):
            x = X[i]
            y = Y[i]
            ox = 0.0
            oy = 0.0
            sc = 1.0
            rem = P
            for step in range(depth):
                if (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) <= r2:
                    found[i] = 1
                    break
                moved = False
                for q in range(3, nq):
                    if q > rem or offs[q + 1] == offs[q]:
                        continue
                    m = (<long long>1) << q
                    kx = <long long>floor(x * m)
                    ky = <long long>floor(y * m)
                    if kx > m - 1:
                        kx = m - 1
                    if ky > m - 1:
                        ky = m - 1
                    key = kx * m + ky
                    lo_i = offs[q]
                    hi_i = offs[q + 1]
                    while lo_i < hi_i:
                        mid = (lo_i + hi_i) // 2
                        if keys[mid] < key:
                            lo_i = mid + 1
                        else:
                            hi_i = mid
                    if lo_i < offs[q + 1] and keys[lo_i] == key:
                        chain[i, step] = lstart[q] + (lo_i - offs[q])
                        ox += sc * kx / <double>m
                        oy += sc * ky / <double>m
                        sc /= m
                        level[i] += q
                        rem -= q
                        x = x * m - kx
                        y = y * m - ky
                        moved = True
                        break
                if not moved:
                    break
            CX[i] = ox + 0.5 * sc
            CY[i] = oy + 0.5 * sc
    return found_a.astype(bool), level_a, chain_a, cx_a, cy_a


cdef int _column_bad(long long ix, double delta, double off_x, double off_y) nogil:
    cdef double a = off_x + <double>ix * delta
    cdef double xm = fmax(fabs(a), fabs(a + delta))
    cdef double H
    cdef long long lo, hi
    cdef int it
    if xm >= 1.0:
        return 0
    H = sqrt(1.0 - xm * xm)
    lo = <long long>(floor((-H - off_y) / delta) + 1.0)
    hi = <long long>(ceil((H - off_y) / delta) - 2.0)
    for it in range(2):
        if _interior(ix, lo - 1, delta, off_x, off_y):
            lo -= 1
        if lo <= hi and not _interior(ix, lo, delta, off_x, off_y):
            lo += 1
        if _interior(ix, hi + 1, delta, off_x, off_y):
            hi += 1
        if lo <= hi and not _interior(ix, hi, delta, off_x, off_y):
            hi -= 1
    if hi < lo:
        return 0
    if not (_interior(ix, lo, delta, off_x, off_y) and _interior(ix, hi, delta, off_x, off_y)):
        return 1
    return 0


def column_violations(double delta, double off_x, double off_y, int threads=0):
    cdef long long ix_lo = <long long>floor((-1.0 - off_x) / delta)
    cdef long long ix_hi = <long long>floor((1.0 - off_x) / delta)
    cdef long long ix, total = 0
    cdef int nt = threads if threads > 0 else 1
    for ix in prange(ix_lo, ix_hi + 1, nogil=True, num_threads=nt, schedule="static"):
        total += _column_bad(ix, delta, off_x, off_y)
    return int(total)
