# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay behaviour-identical to _kernels_py.py."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, calloc, free

ctypedef cnp.int64_t i64


def tile_counts(const i64[::1] row_starts, const i64[::1] col_indices,
                i64 rows, i64 cols, i64 range_r, i64 range_c):
    cdef i64 n_tr = (rows + range_r - 1) // range_r
    cdef i64 n_tc = (cols + range_c - 1) // range_c
    out = np.zeros(n_tr * n_tc, dtype=np.int64)
    cdef i64[::1] o = out
    cdef i64 r, p, base
    with nogil:
        for r in range(rows):
            base = (r // range_r) * n_tc
            for p in range(row_starts[r], row_starts[r + 1]):
                o[base + col_indices[p] // range_c] += 1
    return out


cdef inline i64 _lower_bound(const i64[::1] ci, i64 lo, i64 hi, i64 target) nogil:
    cdef i64 mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if ci[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    return lo


def window_counts(const i64[::1] row_starts, const i64[::1] col_indices,
                  row_lo, row_hi, col_lo, col_hi):
    cdef i64[::1] rl = np.ascontiguousarray(row_lo, dtype=np.int64)
    cdef i64[::1] rh = np.ascontiguousarray(row_hi, dtype=np.int64)
    cdef i64[::1] cl = np.ascontiguousarray(col_lo, dtype=np.int64)
    cdef i64[::1] ch = np.ascontiguousarray(col_hi, dtype=np.int64)
    cdef Py_ssize_t n = rl.shape[0]
    out = np.zeros(n, dtype=np.int64)
    cdef i64[::1] o = out
    cdef Py_ssize_t w
    cdef i64 r, acc
    with nogil:
        for w in range(n):
            acc = 0
            for r in range(rl[w], rh[w]):
                acc += (_lower_bound(col_indices, row_starts[r], row_starts[r + 1], ch[w])
                        - _lower_bound(col_indices, row_starts[r], row_starts[r + 1], cl[w]))
            o[w] = acc
    return out


def scan_replay(i64 O, i64 C, i64 F, i64 T, bint tailor, bint shortcut=True):
    """Per-access replay of ``T`` in-order scans; see _kernels_py.scan_replay."""
    if O <= 0 or T <= 0:
        return 0, 0, 0
    cdef i64 fetches = 0, hits = 0, f0, h0, left
    cdef i64 p, i, j, occupancy = 0, lo = 0, hi = 0
    cdef i64 fifo_start = 0, fifo_len = 0
    cdef i64 prev_len = -1, prev_occ = -1, prev_lo = -1, prev_hi = -1
    cdef bint over = False, prev_over = False, same
    cdef char* resident = NULL
    cdef i64* fifo = NULL
    cdef i64* prev = NULL
    if tailor:
        resident = <char*> calloc(O, sizeof(char))
        fifo = <i64*> malloc(max(F, 1) * sizeof(i64))
        prev = <i64*> malloc(max(F, 1) * sizeof(i64))
        if resident == NULL or fifo == NULL or prev == NULL:
            free(resident)
            free(fifo)
            free(prev)
            raise MemoryError()
        with nogil:
            p = 0
            while p < T:
                f0 = fetches
                h0 = hits
                for i in range(O):
                    if resident[i]:
                        if p > 0:
                            hits += 1
                        continue
                    fetches += 1
                    if not over and occupancy < C:
                        resident[i] = 1
                        occupancy += 1
                    elif not over:
                        # first overwriting fill: the tail region becomes the FIFO
                        for j in range(C - F, C):
                            resident[j] = 0
                        over = True
                        fifo[0] = i
                        fifo_start = 0
                        fifo_len = 1
                        resident[i] = 1
                    else:
                        if fifo_len == F:
                            resident[fifo[fifo_start]] = 0
                            fifo_start = (fifo_start + 1) % F
                            fifo_len -= 1
                        fifo[(fifo_start + fifo_len) % F] = i
                        fifo_len += 1
                        resident[i] = 1
                p += 1
                if shortcut:
                    same = p >= 2 and over == prev_over and occupancy == prev_occ and fifo_len == prev_len
                    if same:
                        for j in range(fifo_len):
                            if fifo[(fifo_start + j) % F] != prev[j]:
                                same = False
                                break
                    if same:
                        left = T - p
                        fetches += left * (fetches - f0)
                        hits += left * (hits - h0)
                        break
                    prev_over = over
                    prev_occ = occupancy
                    prev_len = fifo_len
                    for j in range(fifo_len):
                        prev[j] = fifo[(fifo_start + j) % F]
        free(resident)
        free(fifo)
        free(prev)
    else:
        with nogil:
            p = 0
            while p < T:
                f0 = fetches
                h0 = hits
                for i in range(O):
                    if lo <= i < hi:
                        if p > 0:
                            hits += 1
                        continue
                    fetches += 1
                    if i == hi and hi - lo < C:
                        hi += 1
                    else:
                        # only the head can be freed: drop the window, restart at i
                        lo = i
                        hi = i + 1
                p += 1
                if shortcut:
                    if p >= 2 and lo == prev_lo and hi == prev_hi:
                        left = T - p
                        fetches += left * (fetches - f0)
                        hits += left * (hits - h0)
                        break
                    prev_lo = lo
                    prev_hi = hi
    return fetches, hits, (T - 1) * O
