# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels in ``blocksdp._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + 0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def pair_uniforms(seed, lo, hi):
    cdef uint64_t[::1] lo_v = np.ascontiguousarray(lo, dtype=np.uint64).ravel()
    cdef uint64_t[::1] hi_v = np.ascontiguousarray(hi, dtype=np.uint64).ravel()
    cdef Py_ssize_t m = lo_v.shape[0], k
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t s = _mix(<uint64_t>seed)
    cdef uint64_t h
    with nogil:
        for k in range(m):
            h = _mix(s ^ lo_v[k])
            h = _mix(h ^ hi_v[k])
            o[k] = <double>(h >> 11) * (1.0 / 9007199254740992.0)
    return out.reshape(np.shape(lo))


cdef double TIE_RTOL = 1e-12


def best_labeling(C):
    cdef double[:, :, :, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], K = c.shape[2], i, j, pos
    cdef int64_t[::1] z = np.zeros(n, dtype=np.int64)
    best = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] b = best
    cdef double val, best_val = -np.inf
    cdef bint done = False, first = True
    with nogil:
        while not done:
            val = 0.0
            for i in range(n):
                for j in range(n):
                    val = val + c[i, j, z[i], z[j]]
            if first or val > best_val + TIE_RTOL * (1.0 + fabs(best_val)):
                first = False
                best_val = val
                for i in range(n):
                    b[i] = z[i]
            # odometer increment, last digit fastest (lexicographic order)
            pos = n - 1
            while pos >= 0:
                z[pos] += 1
                if z[pos] < K:
                    break
                z[pos] = 0
                pos -= 1
            if pos < 0:
                done = True
    return best, best_val


def nonneg_dual_update(X, U, W_prev, weights):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] u = U
    cdef double[:, ::1] wp = np.ascontiguousarray(W_prev, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    W = np.empty_like(X, dtype=np.float64)
    cdef double[:, ::1] out = W
    cdef Py_ssize_t r, k, R = x.shape[0], N = x.shape[1]
    cdef double t, d, s, prim = 0.0, dual = 0.0, rp, rd
    with nogil:
        for r in range(R):
            rp = 0.0
            rd = 0.0
            for k in range(N):
                t = x[r, k] + u[r, k]
                if t < 0.0:
                    t = 0.0
                out[r, k] = t
                d = x[r, k] - t
                u[r, k] = u[r, k] + d
                rp = rp + d * d
                s = t - wp[r, k]
                rd = rd + s * s
            prim = prim + w[r] * rp
            dual = dual + w[r] * rd
    return W, prim, dual
