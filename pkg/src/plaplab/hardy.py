"""The scale-invariant borderline family V = -lam / r^p.

Radial power profiles r^gamma solve the equation exactly when gamma is a
root of the transcendental equation

    f(gamma) := -gamma |gamma|^(p-2) [ gamma (p-1) + d - p ] = lam.

f is unimodal with maximum c_H = |(p-d)/p|^p attained at
gamma_* = (p-d)/p: below the critical constant there are two roots
straddling gamma_*, at it a double root, above it none.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ProblemParams, power_function, radial_p_laplacian

_MAX_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class HardyExponents:
    """Roots of the exponent equation for a given coupling lam."""

    lam: float
    critical_constant: float
    gamma_star: float
    gamma_minus: float | None
    gamma_plus: float | None
    double_root: bool
    near_critical: bool
    bracket_minus: tuple[float, float] | None = None
    bracket_plus: tuple[float, float] | None = None

    @property
    def has_roots(self) -> bool:
        return self.gamma_minus is not None


def hardy_constant(params: ProblemParams) -> float:
    """Critical coupling |(p-d)/p|^p; zero when p = d."""
    if params.is_critical_dimension:
        return 0.0
    return abs((params.p - params.d) / params.p) ** params.p


def gamma_star(params: ProblemParams) -> float:
    return (params.p - params.d) / params.p


def exponent_equation(params: ProblemParams, gamma: float) -> float:
    """f(gamma) = -gamma |gamma|^(p-2) [gamma (p-1) + d - p]."""
    p, d = params.p, params.d
    if gamma == 0.0:
        return 0.0
    return -gamma * abs(gamma) ** (p - 2.0) * (gamma * (p - 1.0) + d - p)


def _bisect(f, lo, hi, tol, max_iter=200):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, (lo, hi)
    if fhi == 0.0:
        return hi, (lo, hi)
    if flo * fhi > 0.0:
        raise ValueError("bisection bracket does not straddle a root")
    bracket = (lo, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or (hi - lo) <= tol:
            return mid, bracket
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi), bracket


def hardy_exponents(params: ProblemParams, lam: float, tol: float = 1e-14) -> HardyExponents:
    """Find the exponent roots for coupling lam.

    lam > c_H: no roots (no positive power solution).  lam within tol of
    c_H: reported as the double root gamma_* with a proximity flag.
    Otherwise bisection on each side of gamma_*, with brackets expanding
    outward from gamma_*; f is monotone on each side, so plain bisection
    is robust even though f' vanishes at the peak.
    """
    c_h = hardy_constant(params)
    g_star = gamma_star(params)
    f = lambda g: exponent_equation(params, g)  # noqa: E731

    if lam > c_h + tol:
        return HardyExponents(lam=lam, critical_constant=c_h, gamma_star=g_star,
                              gamma_minus=None, gamma_plus=None,
                              double_root=False, near_critical=False)
    if lam >= c_h - tol:
        return HardyExponents(lam=lam, critical_constant=c_h, gamma_star=g_star,
                              gamma_minus=g_star, gamma_plus=g_star,
                              double_root=True, near_critical=(lam != c_h))

    target = lambda g: f(g) - lam  # noqa: E731
    roots = []
    brackets = []
    for direction in (-1.0, 1.0):
        step = max(abs(g_star), 1.0) * 2.0**-10
        lo = g_star
        hi = None
        for _ in range(_MAX_BRACKET_DOUBLINGS):
            probe = g_star + direction * step
            if target(probe) < 0.0:
                hi = probe
                break
            lo = probe
            step *= 2.0
        if hi is None:
            raise ValueError("failed to bracket the exponent root")
        a, b = (hi, lo) if direction < 0 else (lo, hi)
        root, bracket = _bisect(target, a, b, tol)
        roots.append(root)
        brackets.append(bracket)
    return HardyExponents(lam=lam, critical_constant=c_h, gamma_star=g_star,
                          gamma_minus=roots[0], gamma_plus=roots[1],
                          double_root=False, near_critical=False,
                          bracket_minus=brackets[0], bracket_plus=brackets[1])


def verify_hardy_solution(params: ProblemParams, lam: float, gamma: float,
                          radii) -> dict:
    """Residual of -Lap_p(r^gamma) - lam r^(gamma(p-1)-p) at each radius.

    Reported relative to the magnitudes of the operator's ingredients (not
    just the two near-canceling totals), so an exact solution scores at
    rounding level instead of ~1."""
    profile = power_function(1.0, gamma)
    p, d = params.p, params.d
    worst = 0.0
    residuals = []
    ingredient = (
        abs(gamma) ** (p - 1.0) * ((p - 1.0) * abs(gamma - 1.0) + (d - 1.0))
    )
    for r in radii:
        r = float(r)
        if gamma == 0.0:
            lap = 0.0  # constant profile: the operator vanishes identically
        else:
            lap = radial_p_laplacian(profile, params, r)
        potential_term = lam * r ** (gamma * (p - 1.0) - p)
        res = lap - potential_term
        scale = max(abs(lap), abs(potential_term),
                    ingredient * r ** (gamma * (p - 1.0) - p), 1e-300)
        residuals.append(res / scale)
        worst = max(worst, abs(res) / scale)
    return {"max_rel_residual": worst, "residuals": residuals}
