"""Adaptive quadrature helpers in the log-radius coordinate.

Improper endpoints at the singular point are handled by the substitution
s = e^u (u = log s): toward 0 or infinity the transformed integrand decays
exponentially for the potential classes of interest, and scipy's adaptive
Gauss-Kronrod panels integrate it reliably.
"""

from __future__ import annotations

import bisect
import math
import warnings

from scipy import integrate

_INF = float("inf")

# gaps wider than this get a cached breakpoint so later lookups stay local
_BREAKPOINT_GAP = 0.5


def quad_log(f, u_lo, u_hi, epsabs=1e-14, epsrel=1e-11):
    """Integrate f(e^u) e^u du over [u_lo, u_hi] (either may be infinite).

    Returns (value, abs error estimate)."""

    def fe(u):
        if u > 709.0:
            # radius overflows; tails of the integrable envelopes vanish there
            return 0.0
        s = math.exp(u)
        if s == 0.0:
            # QUADPACK's infinite-interval transform probes u values whose
            # radius underflows; the measure factor kills that end.
            return 0.0
        return f(s) * s

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fe, u_lo, u_hi, epsabs=epsabs, epsrel=epsrel, limit=200)
    return val, err


def quad_plain(f, a, b, epsabs=1e-14, epsrel=1e-11):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=200)
    return val, err


class CumulativeLogIntegral:
    """F(r) = integral from ``anchor`` to r of f(s) ds, evaluated lazily.

    Values are cached at breakpoints in u = log r.  A query is answered
    from the nearest cached breakpoint lying BETWEEN the anchor and the
    query (so increments of a nonnegative integrand only ever add, never
    cancel); when no such breakpoint exists the value is seeded fresh from
    the anchor with relative error control.  This keeps F relatively
    accurate even where it is many orders of magnitude below its peak.
    ``anchor`` may be 0, inf, or a positive radius.
    """

    def __init__(self, f, anchor, epsabs=1e-14, epsrel=1e-11, transformed=False):
        """With ``transformed`` the integrand is already expressed in the
        log coordinate: f(u) = (original integrand)(e^u) * e^u, giving the
        caller control over overflow-safe evaluation."""
        self.f = f
        self.anchor = float(anchor)
        self.epsabs = epsabs
        self.epsrel = epsrel
        self.transformed = transformed
        if self.anchor == 0.0:
            self._anchor_u = -_INF
        elif math.isinf(self.anchor):
            self._anchor_u = _INF
        else:
            self._anchor_u = math.log(self.anchor)
        self._us: list[float] = []
        self._Fs: list[float] = []
        self._Es: list[float] = []
        self._frozen = False

    def freeze(self):
        """Stop caching new breakpoints: reads become side-effect free, so
        a frozen integral is safe to share across threads (construction is
        single-writer)."""
        self._frozen = True

    def _quad(self, u_lo, u_hi):
        if self.transformed:
            return quad_plain(self.f, u_lo, u_hi, self.epsabs, self.epsrel)
        return quad_log(self.f, u_lo, u_hi, self.epsabs, self.epsrel)

    def _improper(self, u, toward):
        """Tail integral from u toward +/-inf by growing windows, stopping
        once increments are relatively negligible.  Unlike a global
        infinite-interval transform this never probes depths the integrand
        representation cannot reach."""
        if not self.transformed:
            if toward < 0:
                return quad_log(self.f, -_INF, u, self.epsabs, self.epsrel)
            return quad_log(self.f, u, _INF, self.epsabs, self.epsrel)
        total = 0.0
        err = 0.0
        width = math.log(2.0)
        lo = u
        quiet = 0
        for k in range(600):
            hi = lo + toward * width
            a, b = (hi, lo) if toward < 0 else (lo, hi)
            val, e = quad_plain(self.f, a, b, self.epsabs, self.epsrel)
            total += val
            err += e
            if abs(val) <= max(1e-300, 1e-14 * abs(total)):
                quiet += 1
                if quiet >= 3 and k >= 5:
                    break
            else:
                quiet = 0
            if k >= 8:
                width *= 1.3
            lo = hi
        return total, err

    def _seed(self, u):
        """Fresh quadrature from the anchor to u."""
        if self._anchor_u == -_INF:
            val, err = self._improper(u, -1)
        elif self._anchor_u == _INF:
            val, err = self._improper(u, +1)
            val = -val
        else:
            val, err = self._quad(self._anchor_u, u)
        return val, err

    def _remember(self, u, F, E):
        if self._frozen:
            return
        j = bisect.bisect_left(self._us, u)
        self._us.insert(j, u)
        self._Fs.insert(j, F)
        self._Es.insert(j, E)

    def _base_index(self, u):
        """Index of the nearest breakpoint between the anchor and u."""
        i = bisect.bisect_left(self._us, u)
        if self._anchor_u <= u:
            # largest breakpoint in [anchor_u, u]
            return i - 1 if i > 0 and self._us[i - 1] >= self._anchor_u else None
        # smallest breakpoint in [u, anchor_u]
        if i < len(self._us) and self._us[i] <= self._anchor_u:
            return i
        return None

    def value_with_error(self, r):
        if r <= 0.0:
            raise ValueError("radius must be positive")
        return self.value_with_error_log(math.log(r))

    def value_with_error_log(self, u):
        i = bisect.bisect_left(self._us, u)
        if i < len(self._us) and self._us[i] == u:
            return self._Fs[i], self._Es[i]

        k = self._base_index(u)
        if k is None:
            F, E = self._seed(u)
            self._remember(u, F, E)
            return F, E

        base_u, base_F, base_E = self._us[k], self._Fs[k], self._Es[k]
        dval, derr = self._quad(base_u, u)
        F = base_F + dval
        E = base_E + derr
        if abs(u - base_u) > _BREAKPOINT_GAP:
            self._remember(u, F, E)
        return F, E

    def __call__(self, r):
        return self.value_with_error(r)[0]
