"""Pure-Python/numpy versions of the hot kernels.

Semantics are identical to ``_kernels.pyx``; the test-suite checks both against
each other when the compiled module is importable.
"""

from collections import deque

import numpy as np


def tile_counts(row_starts, col_indices, rows, cols, range_r, range_c):
    """Occupancy of every tile of a uniform grid, row-major tile order."""
    n_tr = -(-rows // range_r)
    n_tc = -(-cols // range_c)
    r = np.repeat(np.arange(rows, dtype=np.int64), np.diff(row_starts))
    tid = (r // range_r) * n_tc + np.asarray(col_indices, dtype=np.int64) // range_c
    return np.bincount(tid, minlength=n_tr * n_tc).astype(np.int64)


def _lower_bound(ci, lo, hi, target):
    # vectorised bisection, one independent search per segment [lo, hi)
    lo = lo.copy()
    hi = hi.copy()
    n = ci.size
    while True:
        active = lo < hi
        if not active.any():
            return lo
        mid = (lo + hi) // 2
        probe = ci[np.minimum(mid, n - 1)] if n else np.zeros_like(mid)
        right = active & (probe < target)
        left = active & ~right
        lo = np.where(right, mid + 1, lo)
        hi = np.where(left, mid, hi)


def window_counts(row_starts, col_indices, row_lo, row_hi, col_lo, col_hi):
    """Nonzero count for each half-open window; per-row binary search."""
    row_lo = np.asarray(row_lo, dtype=np.int64)
    row_hi = np.asarray(row_hi, dtype=np.int64)
    col_lo = np.asarray(col_lo, dtype=np.int64)
    col_hi = np.asarray(col_hi, dtype=np.int64)
    heights = np.maximum(row_hi - row_lo, 0)
    out = np.zeros(row_lo.size, dtype=np.int64)
    total = int(heights.sum())
    if total == 0:
        return out
    win = np.repeat(np.arange(row_lo.size), heights)
    first = np.cumsum(heights) - heights
    r = row_lo[win] + (np.arange(total) - first[win])
    seg_lo = row_starts[r]
    seg_hi = row_starts[r + 1]
    a = _lower_bound(col_indices, seg_lo, seg_hi, col_lo[win])
    b = _lower_bound(col_indices, seg_lo, seg_hi, col_hi[win])
    np.add.at(out, win, b - a)
    return out


def _tailor_pass(O, C, F, state, count_rereads):
    # state: [overbooked, fifo(deque), resident(bytearray), occupancy]
    resident = state[2]
    fifo = state[1]
    fetches = hits = 0
    for i in range(O):
        if resident[i]:
            hits += 1
            continue
        fetches += 1
        if not state[0] and state[3] < C:
            resident[i] = 1
            state[3] += 1
        elif not state[0]:
            # first overwriting fill: clear the tail region, open the FIFO
            for j in range(C - F, C):
                resident[j] = 0
            state[0] = True
            fifo.append(i)
            resident[i] = 1
        else:
            if len(fifo) == F:
                resident[fifo.popleft()] = 0
            fifo.append(i)
            resident[i] = 1
    return fetches, (hits if count_rereads else 0)


def _buffet_pass(O, C, state, count_rereads):
    # state: [window_lo, window_hi]
    fetches = hits = 0
    lo, hi = state
    for i in range(O):
        if lo <= i < hi:
            hits += 1
            continue
        fetches += 1
        if i == hi and hi - lo < C:
            hi += 1
        else:
            # only the head can be freed: drop the whole window and restart at i
            lo, hi = i, i + 1
    state[0], state[1] = lo, hi
    return fetches, (hits if count_rereads else 0)


def _snapshot(state, tailor):
    if tailor:
        return (state[0], tuple(state[1]), state[3])
    return tuple(state)


def scan_replay(O, C, F, T, tailor, shortcut=True):
    """Replay ``T`` in-order scans of an ``O``-element tile through one buffer.

    Returns ``(parent_fetches, reread_hits, rereads)``; rereads are the reads
    made after the first traversal. With ``shortcut`` the loop stops once a
    full pass leaves the buffer state unchanged and extrapolates that pass.
    """
    if O <= 0 or T <= 0:
        return 0, 0, 0
    if tailor:
        state = [False, deque(), bytearray(O), 0]
    else:
        state = [0, 0]
    fetches = hits = 0
    prev = None
    p = 0
    while p < T:
        if tailor:
            f, h = _tailor_pass(O, C, F, state, p > 0)
        else:
            f, h = _buffet_pass(O, C, state, p > 0)
        fetches += f
        hits += h
        p += 1
        if shortcut and p >= 2:
            snap = _snapshot(state, tailor)
            if snap == prev:
                left = T - p
                fetches += left * f
                hits += left * h
                break
            prev = snap
        elif shortcut:
            prev = _snapshot(state, tailor)
    return fetches, hits, (T - 1) * O
