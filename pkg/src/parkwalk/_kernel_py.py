"""Pure-Python walk kernel. Reference semantics for the compiled one."""

import numpy as np

from ._rng import stream_key, uniform

PARKED, ESCAPED, CAP_EXCEEDED, NOT_STARTED = 0, 1, 2, 3


def walk_car(key, start, occ, n, p, unbounded, step_cap, margin, trace=None):
    """Walk one car from `start` over occupancy `occ` (list, index 1..n).

    Returns (status, spot, steps). `trace`, when a list, receives positions.
    """
    if trace is not None:
        trace.append(start)
    if not occ[start]:
        return PARKED, start, 0
    lo = hi = 0
    if unbounded:
        free = [s for s in range(1, n + 1) if not occ[s]]
        if not free:
            lo, hi = n + 1, 0
        else:
            lo, hi = free[0], free[-1]
    pos = start
    t = 0
    while True:
        if uniform(key, t) < p:
            pos += 1
        else:
            pos -= 1
        t += 1
        if trace is not None:
            trace.append(pos)
        if 1 <= pos <= n:
            if not occ[pos]:
                return PARKED, pos, t
        elif not unbounded:
            return ESCAPED, 0, t
        if unbounded:
            if p < 0.5 and pos <= lo - margin:
                return ESCAPED, 0, t
            if p > 0.5 and pos >= hi + margin:
                return ESCAPED, 0, t
        if t >= step_cap:
            return CAP_EXCEEDED, 0, t


def simulate_block(alpha, n, p, unbounded, step_cap, margin, seed, trial_start, count):
    alpha = [int(a) for a in alpha]
    spots = np.zeros((count, n), dtype=np.int32)
    status = np.full((count, n), NOT_STARTED, dtype=np.int8)
    steps = np.zeros(count, dtype=np.int64)
    for r in range(count):
        trial = trial_start + r
        occ = [0] * (n + 2)
        total = 0
        for car in range(1, n + 1):
            key = stream_key(seed, trial, car)
            st, spot, t = walk_car(key, alpha[car - 1], occ, n, p, unbounded, step_cap, margin)
            total += t
            status[r, car - 1] = st
            if st == PARKED:
                occ[spot] = 1
                spots[r, car - 1] = spot
            elif st == CAP_EXCEEDED or unbounded:
                break
        steps[r] = total
    return spots, status, steps
