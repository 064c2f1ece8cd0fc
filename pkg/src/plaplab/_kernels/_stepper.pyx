# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_stepper_py``.

Same Cash-Karp 4(5) scheme for the radial flux system in s = log r; keep the
two backends expression-for-expression identical (see _stepper_py docstring).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, isfinite, pow, sqrt

cnp.import_array()

OK = 0
POSITIVITY_LOST = 1
STEP_FAILURE = 2
NONFINITE = 3
MAX_STEPS_EXCEEDED = 4

FAM_ZERO = 0
FAM_POWER = 1
FAM_LOG_POWER = 2
FAM_CONSTANT = 3
FAM_TABULATED = 4

SGN_PLUS = 0
SGN_MINUS = 1
SGN_OSCILLATING = 2


cdef inline double _sgnpow(double x, double e) noexcept nogil:
    if x > 0.0:
        return pow(x, e)
    if x < 0.0:
        return -pow(-x, e)
    return 0.0


cdef inline double _eval_g(int fam, double c1, const double[::1] tab_s,
                           const double[::1] tab_lg, double s) noexcept nogil:
    cdef Py_ssize_t n, lo, hi, mid, i
    cdef double t
    if fam == 0:
        return 0.0
    if fam == 1:
        return exp(c1 * s)
    if fam == 2:
        return pow(1.0 + fabs(s), -c1)
    if fam == 3:
        return c1
    n = tab_s.shape[0]
    if n == 1:
        return exp(tab_lg[0])
    if s <= tab_s[0]:
        i = 0
    elif s >= tab_s[n - 2]:
        i = n - 2
    else:
        lo = 0
        hi = n - 2
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if tab_s[mid] <= s:
                lo = mid
            else:
                hi = mid - 1
        i = lo
    t = (s - tab_s[i]) / (tab_s[i + 1] - tab_s[i])
    return exp(tab_lg[i] + t * (tab_lg[i + 1] - tab_lg[i]))


cdef inline void _rhs(double p, double d, int fam, int sgn, double c1,
                      const double[::1] tab_s, const double[::1] tab_lg,
                      double s, double v, double w,
                      double* dv, double* dw) noexcept nogil:
    cdef double a_star = (p - d) / (p - 1.0)
    cdef double g, sigma
    dv[0] = exp(a_star * s) * _sgnpow(w, 1.0 / (p - 1.0))
    if fam == 0:
        dw[0] = 0.0
        return
    g = _eval_g(fam, c1, tab_s, tab_lg, s)
    if sgn == 0:
        sigma = 1.0
    elif sgn == 1:
        sigma = -1.0
    else:
        sigma = cos(s)
    dw[0] = sigma * exp((d - p) * s) * g * _sgnpow(v, p - 1.0)


def integrate_radial(double p, double d, int fam, int sgn, double c1,
                     const double[::1] tab_s, const double[::1] tab_lg,
                     double s0, double s1, double v0, double w0,
                     double rtol, double atol, double max_step,
                     long max_steps, const double[::1] checkpoints):
    """See ``_stepper_py.integrate_radial``; identical contract."""
    cdef double direction = 1.0 if s1 >= s0 else -1.0
    cdef double span = fabs(s1 - s0)
    cdef double s = s0, v = v0, w = w0
    cdef double h, hs, hh, rem, target, hmin, fac, en
    cdef double k1v, k1w, k2v, k2w, k3v, k3w, k4v, k4w, k5v, k5w, k6v, k6w
    cdef double v5, w5, v4, w4, ev, ew, scv, scw
    cdef Py_ssize_t icp = 0, ncp = checkpoints.shape[0]
    cdef long nsteps = 0, nrejected = 0
    cdef int status = OK
    cdef int clamped = 0

    cdef list out_s = [s]
    cdef list out_v = [v]
    cdef list out_w = [w]
    cdef list out_e = [0.0]

    if span == 0.0:
        return OK, out_s, out_v, out_w, out_e, 0, 0

    h = min(max_step, span / 10.0)
    if h <= 0.0:
        h = span / 10.0
    hmin = 1e-14 * max(1.0, span)

    while direction * (s1 - s) > 0.0:
        if nsteps + nrejected > max_steps:
            return MAX_STEPS_EXCEEDED, out_s, out_v, out_w, out_e, nsteps, nrejected

        target = s1
        if icp < ncp:
            target = checkpoints[icp]
        rem = direction * (target - s)
        hs = h
        clamped = 0
        if hs >= rem:
            hs = rem
            clamped = 1
        hh = direction * hs

        _rhs(p, d, fam, sgn, c1, tab_s, tab_lg, s, v, w, &k1v, &k1w)
        _rhs(p, d, fam, sgn, c1, tab_s, tab_lg,
             s + 0.2 * hh, v + hh * 0.2 * k1v, w + hh * 0.2 * k1w, &k2v, &k2w)
        _rhs(p, d, fam, sgn, c1, tab_s, tab_lg,
             s + 0.3 * hh,
             v + hh * (0.075 * k1v + 0.225 * k2v),
             w + hh * (0.075 * k1w + 0.225 * k2w), &k3v, &k3w)
        _rhs(p, d, fam, sgn, c1, tab_s, tab_lg,
             s + 0.6 * hh,
             v + hh * (0.3 * k1v - 0.9 * k2v + 1.2 * k3v),
             w + hh * (0.3 * k1w - 0.9 * k2w + 1.2 * k3w), &k4v, &k4w)
        _rhs(p, d, fam, sgn, c1, tab_s, tab_lg,
             s + hh,
             v + hh * (-11.0 / 54.0 * k1v + 2.5 * k2v - 70.0 / 27.0 * k3v + 35.0 / 27.0 * k4v),
             w + hh * (-11.0 / 54.0 * k1w + 2.5 * k2w - 70.0 / 27.0 * k3w + 35.0 / 27.0 * k4w),
             &k5v, &k5w)
        _rhs(p, d, fam, sgn, c1, tab_s, tab_lg,
             s + 0.875 * hh,
             v + hh * (1631.0 / 55296.0 * k1v + 175.0 / 512.0 * k2v
                       + 575.0 / 13824.0 * k3v + 44275.0 / 110592.0 * k4v
                       + 253.0 / 4096.0 * k5v),
             w + hh * (1631.0 / 55296.0 * k1w + 175.0 / 512.0 * k2w
                       + 575.0 / 13824.0 * k3w + 44275.0 / 110592.0 * k4w
                       + 253.0 / 4096.0 * k5w),
             &k6v, &k6w)

        v5 = v + hh * (37.0 / 378.0 * k1v + 250.0 / 621.0 * k3v
                       + 125.0 / 594.0 * k4v + 512.0 / 1771.0 * k6v)
        w5 = w + hh * (37.0 / 378.0 * k1w + 250.0 / 621.0 * k3w
                       + 125.0 / 594.0 * k4w + 512.0 / 1771.0 * k6w)
        v4 = v + hh * (2825.0 / 27648.0 * k1v + 18575.0 / 48384.0 * k3v
                       + 13525.0 / 55296.0 * k4v + 277.0 / 14336.0 * k5v + 0.25 * k6v)
        w4 = w + hh * (2825.0 / 27648.0 * k1w + 18575.0 / 48384.0 * k3w
                       + 13525.0 / 55296.0 * k4w + 277.0 / 14336.0 * k5w + 0.25 * k6w)

        if not (isfinite(v5) and isfinite(w5)):
            return NONFINITE, out_s, out_v, out_w, out_e, nsteps, nrejected

        ev = v5 - v4
        ew = w5 - w4
        scv = atol + rtol * max(fabs(v), fabs(v5))
        scw = atol + rtol * max(fabs(w), fabs(w5))
        en = sqrt(0.5 * ((ev / scv) ** 2 + (ew / scw) ** 2))

        if en <= 1.0:
            if v5 <= 0.0:
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
                fac = 0.9 * pow(en, -0.2)
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h = min(max_step, hs * fac)
        else:
            nrejected += 1
            fac = 0.9 * pow(en, -0.2)
            if fac < 0.2:
                fac = 0.2
            h = hs * fac
            if h <= hmin:
                return STEP_FAILURE, out_s, out_v, out_w, out_e, nsteps, nrejected

    return OK, out_s, out_v, out_w, out_e, nsteps, nrejected
