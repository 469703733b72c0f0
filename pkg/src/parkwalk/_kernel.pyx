# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled walk kernel; same stream and semantics as _kernel_py."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t, int8_t
from libc.stdlib cimport calloc, free

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t trial, uint64_t car) nogil:
    cdef uint64_t k = mix64(seed + GOLDEN)
    k = mix64(k + (trial + 1) * GOLDEN)
    return mix64(k + car * GOLDEN)


cdef int walk_car(uint64_t key, int64_t start, char* occ, int64_t n, double p,
                  int unbounded, int64_t step_cap, int64_t margin,
                  int64_t* spot_out, int64_t* steps_out) nogil:
    cdef int64_t pos = start, t = 0, lo = n + 1, hi = 0, s
    cdef double u
    spot_out[0] = 0
    if not occ[start]:
        spot_out[0] = start
        steps_out[0] = 0
        return 0
    if unbounded:
        for s in range(1, n + 1):
            if not occ[s]:
                if s < lo:
                    lo = s
                hi = s
    while True:
        u = <double>(mix64(key + <uint64_t>(t + 1) * GOLDEN) >> 11) * INV_2_53
        if u < p:
            pos += 1
        else:
            pos -= 1
        t += 1
        if 1 <= pos <= n:
            if not occ[pos]:
                spot_out[0] = pos
                steps_out[0] = t
                return 0
        elif not unbounded:
            steps_out[0] = t
            return 1
        if unbounded:
            if p < 0.5 and pos <= lo - margin:
                steps_out[0] = t
                return 1
            if p > 0.5 and pos >= hi + margin:
                steps_out[0] = t
                return 1
        if t >= step_cap:
            steps_out[0] = t
            return 2


def simulate_block(alpha, int64_t n, double p, int unbounded, int64_t step_cap,
                   int64_t margin, seed, int64_t trial_start, int64_t count):
    cdef cnp.ndarray[int64_t, ndim=1] a = np.ascontiguousarray(alpha, dtype=np.int64)
    spots_arr = np.zeros((count, n), dtype=np.int32)
    status_arr = np.full((count, n), 3, dtype=np.int8)
    steps_arr = np.zeros(count, dtype=np.int64)
    cdef int32_t[:, ::1] spots = spots_arr
    cdef int8_t[:, ::1] status = status_arr
    cdef int64_t[::1] steps = steps_arr
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef char* occ = <char*>calloc(n + 2, 1)
    cdef int64_t r, car, total, spot, t, s
    cdef int st
    if occ == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(count):
                for s in range(n + 2):
                    occ[s] = 0
                total = 0
                for car in range(1, n + 1):
                    st = walk_car(stream_key(useed, <uint64_t>(trial_start + r), <uint64_t>car),
                                  a[car - 1], occ, n, p, unbounded, step_cap, margin, &spot, &t)
                    total += t
                    status[r, car - 1] = st
                    if st == 0:
                        occ[spot] = 1
                        spots[r, car - 1] = <int32_t>spot
                    elif st == 2 or unbounded:
                        break
                steps[r] = total
    finally:
        free(occ)
    return spots_arr, status_arr, steps_arr
