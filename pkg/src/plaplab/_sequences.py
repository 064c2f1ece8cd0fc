"""Sequence acceleration for limits sampled along dyadic radii.

One Richardson pass with a locally estimated power-law rate, then Aitken
delta-squared.  Rate-agnostic on purpose: the existence results being
checked come with no convergence rates.
"""

from __future__ import annotations

import math

import numpy as np


def richardson_pass(values):
    """Extrapolate assuming error ~ C rho^k with rho estimated locally."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        return x.copy()
    d = np.diff(x)
    out = []
    for k in range(1, d.size):
        if d[k] != 0.0 and d[k - 1] != 0.0:
            ratio = d[k - 1] / d[k]
            if ratio > 1.0:
                out.append(x[k + 1] + d[k] / (ratio - 1.0))
                continue
        out.append(x[k + 1])
    return np.asarray(out)


def aitken_pass(values):
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        return x.copy()
    out = []
    for k in range(x.size - 2):
        d2 = x[k + 2] - 2.0 * x[k + 1] + x[k]
        if d2 != 0.0:
            out.append(x[k + 2] - (x[k + 2] - x[k + 1]) ** 2 / d2)
        else:
            out.append(x[k + 2])
    return np.asarray(out)


def _tail_converged(accel, rtol, scale_floor):
    if accel.size < 3:
        return False
    tail = accel[-3:]
    span = float(np.max(tail) - np.min(tail))
    tol = rtol * max(float(np.max(np.abs(tail))), scale_floor)
    return span <= tol and all(math.isfinite(t) for t in tail)


def accelerate_dyadic(values, rtol=1e-6, scale_floor=0.0, max_aitken=3):
    """Accelerate a dyadic-radius sample sequence toward its limit.

    One Richardson pass, then Aitken passes iterated (up to max_aitken)
    until the last three accelerated values agree to rtol relative, with
    an absolute floor of rtol * scale_floor for limits at or near zero.
    Returns (limit, accelerated sequence, converged).
    """
    accel = richardson_pass(values)
    if accel.size == 0:
        accel = np.asarray(values, dtype=float)
    converged = False
    for _ in range(max_aitken):
        nxt = aitken_pass(accel)
        if nxt.size == 0 or not np.all(np.isfinite(nxt)):
            break
        accel = nxt
        if _tail_converged(accel, rtol, scale_floor):
            converged = True
            break
        if accel.size < 5:
            break
    return float(accel[-1]), accel, converged


def dyadic_radii(r_near, r_far, max_count=60):
    """Radii r_far, r_far/2, ... down to r_near (ascending order returned).

    ``r_near`` is the end closest to the singular point when it is the
    smaller radius; for a singularity at infinity call with the roles
    swapped and reverse the result."""
    if not (0.0 < r_near < r_far):
        raise ValueError("need 0 < r_near < r_far")
    n = int(math.floor(math.log2(r_far / r_near))) + 1
    n = min(n, max_count)
    return [r_far * 2.0 ** (-k) for k in range(n)][::-1]
