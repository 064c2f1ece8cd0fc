"""Pure-Python adaptive integrator for the radial flux system.

This is the reference twin of the compiled extension ``_stepper``.  Both
implement exactly the same Cash-Karp 4(5) scheme for

    dv/ds = exp(a* s) * sgnpow(w, 1/(p-1))
    dw/ds = sigma(s) * exp((d-p) s) * g(e^s) * sgnpow(v, p-1)

in the log-radius coordinate s = log r, where a* = (p-d)/(p-1), the flux is
w = r^(d-1) |v'|^(p-2) v', and the potential is V(r) = sigma * g(r) / r^p.
Keeping the two backends expression-for-expression identical is what makes
the fallback safe; edit them in lockstep.
"""

from __future__ import annotations

import math

# termination status codes (shared contract with the compiled twin)
OK = 0
POSITIVITY_LOST = 1
STEP_FAILURE = 2
NONFINITE = 3
MAX_STEPS_EXCEEDED = 4

# potential family codes
FAM_ZERO = 0
FAM_POWER = 1
FAM_LOG_POWER = 2
FAM_CONSTANT = 3
FAM_TABULATED = 4

# sign rule codes
SGN_PLUS = 0
SGN_MINUS = 1
SGN_OSCILLATING = 2


def _sgnpow(x, e):
    if x > 0.0:
        return x**e
    if x < 0.0:
        return -((-x) ** e)
    return 0.0


def _eval_g(fam, c1, tab_s, tab_lg, s):
    """g(e^s) for the supported families; tabulated uses log-log linear
    interpolation with straight-line extension beyond the knots."""
    if fam == FAM_ZERO:
        return 0.0
    if fam == FAM_POWER:
        return math.exp(c1 * s)
    if fam == FAM_LOG_POWER:
        return (1.0 + abs(s)) ** (-c1)
    if fam == FAM_CONSTANT:
        return c1
    # FAM_TABULATED
    n = len(tab_s)
    if n == 1:
        return math.exp(tab_lg[0])
    if s <= tab_s[0]:
        i = 0
    elif s >= tab_s[n - 2]:
        i = n - 2
    else:
        lo, hi = 0, n - 2
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if tab_s[mid] <= s:
                lo = mid
            else:
                hi = mid - 1
        i = lo
    t = (s - tab_s[i]) / (tab_s[i + 1] - tab_s[i])
    return math.exp(tab_lg[i] + t * (tab_lg[i + 1] - tab_lg[i]))


def _rhs(p, d, fam, sgn, c1, tab_s, tab_lg, s, v, w):
    a_star = (p - d) / (p - 1.0)
    dv = math.exp(a_star * s) * _sgnpow(w, 1.0 / (p - 1.0))
    if fam == FAM_ZERO:
        return dv, 0.0
    g = _eval_g(fam, c1, tab_s, tab_lg, s)
    if sgn == SGN_PLUS:
        sigma = 1.0
    elif sgn == SGN_MINUS:
        sigma = -1.0
    else:
        sigma = math.cos(s)
    dw = sigma * math.exp((d - p) * s) * g * _sgnpow(v, p - 1.0)
    return dv, dw


def integrate_radial(
    p,
    d,
    fam,
    sgn,
    c1,
    tab_s,
    tab_lg,
    s0,
    s1,
    v0,
    w0,
    rtol,
    atol,
    max_step,
    max_steps,
    checkpoints,
):
    """Integrate from s0 to s1 (either direction), landing exactly on each
    checkpoint.  Checkpoints must be sorted in the direction of integration
    and lie strictly inside (s0, s1).

    Returns (status, s_list, v_list, w_list, err_list, nsteps, nrejected);
    the lists contain every accepted node including s0, checkpoints and s1,
    and err_list holds the local embedded error estimate of the step that
    produced each node (0 for the initial node).
    """
    direction = 1.0 if s1 >= s0 else -1.0
    span = abs(s1 - s0)

    s = s0
    v = float(v0)
    w = float(w0)

    out_s = [s]
    out_v = [v]
    out_w = [w]
    out_e = [0.0]

    if span == 0.0:
        return OK, out_s, out_v, out_w, out_e, 0, 0

    h = min(max_step, span / 10.0)
    if h <= 0.0:
        h = span / 10.0

    icp = 0
    ncp = len(checkpoints)
    nsteps = 0
    nrejected = 0
    hmin = 1e-14 * max(1.0, span)

    while direction * (s1 - s) > 0.0:
        if nsteps + nrejected > max_steps:
            return MAX_STEPS_EXCEEDED, out_s, out_v, out_w, out_e, nsteps, nrejected

        # clamp the step to the next checkpoint / final endpoint
        target = s1
        if icp < ncp:
            target = checkpoints[icp]
        rem = direction * (target - s)
        hs = h
        clamped = False
        if hs >= rem:
            hs = rem
            clamped = True
        hh = direction * hs

        k1v, k1w = _rhs(p, d, fam, sgn, c1, tab_s, tab_lg, s, v, w)
        k2v, k2w = _rhs(
            p, d, fam, sgn, c1, tab_s, tab_lg,
            s + 0.2 * hh, v + hh * 0.2 * k1v, w + hh * 0.2 * k1w,
        )
        k3v, k3w = _rhs(
            p, d, fam, sgn, c1, tab_s, tab_lg,
            s + 0.3 * hh,
            v + hh * (0.075 * k1v + 0.225 * k2v),
            w + hh * (0.075 * k1w + 0.225 * k2w),
        )
        k4v, k4w = _rhs(
            p, d, fam, sgn, c1, tab_s, tab_lg,
            s + 0.6 * hh,
            v + hh * (0.3 * k1v - 0.9 * k2v + 1.2 * k3v),
            w + hh * (0.3 * k1w - 0.9 * k2w + 1.2 * k3w),
        )
        k5v, k5w = _rhs(
            p, d, fam, sgn, c1, tab_s, tab_lg,
            s + hh,
            v + hh * (-11.0 / 54.0 * k1v + 2.5 * k2v - 70.0 / 27.0 * k3v + 35.0 / 27.0 * k4v),
            w + hh * (-11.0 / 54.0 * k1w + 2.5 * k2w - 70.0 / 27.0 * k3w + 35.0 / 27.0 * k4w),
        )
        k6v, k6w = _rhs(
            p, d, fam, sgn, c1, tab_s, tab_lg,
            s + 0.875 * hh,
            v + hh * (
                1631.0 / 55296.0 * k1v
                + 175.0 / 512.0 * k2v
                + 575.0 / 13824.0 * k3v
                + 44275.0 / 110592.0 * k4v
                + 253.0 / 4096.0 * k5v
            ),
            w + hh * (
                1631.0 / 55296.0 * k1w
                + 175.0 / 512.0 * k2w
                + 575.0 / 13824.0 * k3w
                + 44275.0 / 110592.0 * k4w
                + 253.0 / 4096.0 * k5w
            ),
        )

        v5 = v + hh * (
            37.0 / 378.0 * k1v + 250.0 / 621.0 * k3v + 125.0 / 594.0 * k4v + 512.0 / 1771.0 * k6v
        )
        w5 = w + hh * (
            37.0 / 378.0 * k1w + 250.0 / 621.0 * k3w + 125.0 / 594.0 * k4w + 512.0 / 1771.0 * k6w
        )
        v4 = v + hh * (
            2825.0 / 27648.0 * k1v
            + 18575.0 / 48384.0 * k3v
            + 13525.0 / 55296.0 * k4v
            + 277.0 / 14336.0 * k5v
            + 0.25 * k6v
        )
        w4 = w + hh * (
            2825.0 / 27648.0 * k1w
            + 18575.0 / 48384.0 * k3w
            + 13525.0 / 55296.0 * k4w
            + 277.0 / 14336.0 * k5w
            + 0.25 * k6w
        )

        if not (math.isfinite(v5) and math.isfinite(w5)):
            return NONFINITE, out_s, out_v, out_w, out_e, nsteps, nrejected

        ev = v5 - v4
        ew = w5 - w4
        scv = atol + rtol * max(abs(v), abs(v5))
        scw = atol + rtol * max(abs(w), abs(w5))
        en = math.sqrt(0.5 * ((ev / scv) ** 2 + (ew / scw) ** 2))

        if en <= 1.0:
            if v5 <= 0.0:
                # locate the loss of positivity by shrinking the step
                if hs <= hmin:
                    return POSITIVITY_LOST, out_s, out_v, out_w, out_e, nsteps, nrejected
                h = hs * 0.5
                nrejected += 1
                continue
            # land exactly on the clamp target so the checkpoint equality
            # below cannot be lost to rounding
            s = target if clamped else s + hh
            v = v5
            w = w5
            nsteps += 1
            out_s.append(s)
            out_v.append(v)
            out_w.append(w)
            out_e.append(en * min(scv, scw))
            if icp < ncp and s == checkpoints[icp]:
                icp += 1
            if en == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * en**-0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h = min(max_step, hs * fac)
        else:
            nrejected += 1
            fac = 0.9 * en**-0.2
            if fac < 0.2:
                fac = 0.2
            h = hs * fac
            if h <= hmin:
                return STEP_FAILURE, out_s, out_v, out_w, out_e, nsteps, nrejected

    return OK, out_s, out_v, out_w, out_e, nsteps, nrejected
