"""Problem parameters, case classification and closed-form reference
solutions of the unperturbed radial p-Laplace equation.

The equation under study is

    -div(|grad u|^(p-2) grad u) + V |u|^(p-2) u = 0

restricted to radial functions near an isolated singular point zeta, which
is either the origin or infinity.  For a radial v(r),

    -Lap_p(v) = -|v'|^(p-2) [ (p-1) v'' + (d-1) v'/r ].

All radii live on (0, inf); grids are handled internally in s = log r so
that both singular points become s -> -/+ inf and powers become lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import DegenerateGradientError

_INF = float("inf")


class Zeta(str, Enum):
    """Location of the isolated singular point."""

    ORIGIN = "origin"
    INFINITY = "infinity"


class CaseKind(str, Enum):
    CLASSICAL = "classical"
    NONCLASSICAL = "nonclassical"


class XtFamily(str, Enum):
    """Shape of the shell X_t entering the d-dimensional Wolff integral."""

    BALL = "ball"                      # B_t
    UNIT_MINUS_BALL = "unit_minus_ball"  # B_1 \ B_t
    BALL_MINUS_UNIT = "ball_minus_unit"  # B_t \ B_1
    EXTERIOR = "exterior"              # complement of B_t


@dataclass(frozen=True)
class ProblemParams:
    """Exponent p in (1, inf), dimension d >= 2 and the singular point."""

    p: float
    d: int
    zeta: Zeta = Zeta.ORIGIN

    def __post_init__(self):
        if not (1.0 < self.p < _INF):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "d", int(self.d))
        if not isinstance(self.zeta, Zeta):
            object.__setattr__(self, "zeta", Zeta(self.zeta))

    @property
    def alpha_star(self) -> float:
        """Homogeneity exponent (p-d)/(p-1) of the fundamental solution."""
        return (self.p - self.d) / (self.p - 1.0)

    @property
    def conjugate(self) -> float:
        """Hoelder conjugate q = p/(p-1); phi_q inverts phi_p."""
        return self.p / (self.p - 1.0)

    @property
    def is_critical_dimension(self) -> bool:
        return self.p == self.d


@dataclass(frozen=True)
class CaseInfo:
    """Classification of (p, d, zeta) with the lower limits a, b and the
    shell family used by the one-dimensional potential integrals.

    ``a`` and ``b`` are extended reals (0, 1 or inf); ``b`` is undefined
    when p = d, signalled by ``b_defined``.
    """

    kind: CaseKind
    a: float
    b: float
    b_defined: bool
    xt_family: XtFamily


def alpha_star(params: ProblemParams) -> float:
    """(p - d)/(p - 1); zero when p = d."""
    return params.alpha_star


def classify_case(params: ProblemParams) -> CaseInfo:
    """Classical/nonclassical tag plus the integral limits a, b and X_t.

    Classical means (zeta=0, p<=d) or (zeta=inf, p>=d): exactly the cases
    in which the fundamental solution blows up at zeta.
    """
    p, d, zeta = params.p, params.d, params.zeta
    at_origin = zeta is Zeta.ORIGIN
    if at_origin:
        kind = CaseKind.CLASSICAL if p <= d else CaseKind.NONCLASSICAL
    else:
        kind = CaseKind.CLASSICAL if p >= d else CaseKind.NONCLASSICAL

    if at_origin:
        if p < d:
            a, xt = 0.0, XtFamily.BALL
        elif p > d:
            a, xt = 1.0, XtFamily.UNIT_MINUS_BALL
        else:
            a, xt = 0.0, XtFamily.BALL
    else:
        if p < d:
            a, xt = 1.0, XtFamily.BALL_MINUS_UNIT
        elif p > d:
            a, xt = _INF, XtFamily.EXTERIOR
        else:
            a, xt = _INF, XtFamily.EXTERIOR

    if p == d:
        b, b_defined = math.nan, False
    elif at_origin:
        b, b_defined = (1.0, True) if p < d else (0.0, True)
    else:
        b, b_defined = (0.0, True) if p < d else (1.0, True)

    return CaseInfo(kind=kind, a=a, b=b, b_defined=b_defined, xt_family=xt)


@dataclass(frozen=True)
class RadialFunction:
    """Scalar function of the radius with optional analytic derivatives.

    Derivative rules, when absent, are replaced by order-h^2 centered
    differences with h = max(1e-6, 1e-4 * r); when only the first
    derivative rule is present, the second derivative differences it.
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float] | None = None
    second_derivative: Callable[[float], float] | None = None
    domain: tuple[float, float] = (0.0, _INF)
    label: str = ""

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty radial domain {self.domain}")

    def __call__(self, r: float) -> float:
        return self.value(r)

    def prime(self, r: float) -> float:
        if self.derivative is not None:
            return self.derivative(r)
        h = _fd_step(r)
        return (self.value(r + h) - self.value(r - h)) / (2.0 * h)

    def second(self, r: float) -> float:
        if self.second_derivative is not None:
            return self.second_derivative(r)
        h = _fd_step(r)
        if self.derivative is not None:
            return (self.derivative(r + h) - self.derivative(r - h)) / (2.0 * h)
        return (self.value(r + h) - 2.0 * self.value(r) + self.value(r - h)) / (h * h)


def _fd_step(r: float) -> float:
    # clipped to r/2 so probes stay at positive radii
    return min(max(1e-6, 1e-4 * r), 0.5 * r)


def constant_function(c: float) -> RadialFunction:
    return RadialFunction(
        value=lambda r, c=c: c,
        derivative=lambda r: 0.0,
        second_derivative=lambda r: 0.0,
        label=f"const {c:g}",
    )


def power_function(coefficient: float, exponent: float) -> RadialFunction:
    """coefficient * r**exponent with exact derivative rules."""
    a, m = float(coefficient), float(exponent)
    return RadialFunction(
        value=lambda r: a * r**m,
        derivative=lambda r: a * m * r ** (m - 1.0),
        second_derivative=lambda r: a * m * (m - 1.0) * r ** (m - 2.0),
        label=f"{a:g} r^{m:g}",
    )


def fundamental_solution(params: ProblemParams) -> RadialFunction:
    """r^alpha* for p != d, |log r| for p = d, with exact derivatives."""
    if params.is_critical_dimension:
        return RadialFunction(
            value=lambda r: abs(math.log(r)),
            derivative=lambda r: math.copysign(1.0, math.log(r)) / r,
            second_derivative=lambda r: -math.copysign(1.0, math.log(r)) / (r * r),
            label="|log r|",
        )
    return power_function(1.0, params.alpha_star)


def affine_combination(
    offset: float, scale: float, f: RadialFunction, label: str = ""
) -> RadialFunction:
    """offset + scale * f, propagating whatever derivative rules f has."""
    deriv = None
    second = None
    if f.derivative is not None:
        deriv = lambda r: scale * f.derivative(r)  # noqa: E731
    if f.second_derivative is not None:
        second = lambda r: scale * f.second_derivative(r)  # noqa: E731
    return RadialFunction(
        value=lambda r: offset + scale * f.value(r),
        derivative=deriv,
        second_derivative=second,
        domain=f.domain,
        label=label or f"{offset:g} + {scale:g}*({f.label})",
    )


def phi(p: float, y: float) -> float:
    """Odd power map phi_p(y) = |y|^(p-2) y (0 at 0 for every p > 1)."""
    if y > 0.0:
        return y ** (p - 1.0)
    if y < 0.0:
        return -((-y) ** (p - 1.0))
    return 0.0


def radial_p_laplacian(v: RadialFunction, params: ProblemParams, r: float) -> float:
    """-Lap_p v at radius r via -|v'|^(p-2) [ (p-1) v'' + (d-1) v'/r ].

    Uses analytic derivative rules when the function carries them and
    centered differences otherwise.  Raises DegenerateGradientError when
    v'(r) = 0 with p < 2, where the formula is singular.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    p, d = params.p, params.d
    v1 = v.prime(r)
    if v1 == 0.0:
        if p < 2.0:
            raise DegenerateGradientError(
                f"v'({r}) = 0 with p = {p} < 2: |v'|^(p-2) is singular"
            )
        if p > 2.0:
            return 0.0
        # p = 2: |v'|^0 = 1
        return -(v.second(r) + (d - 1.0) * v1 / r)
    v2 = v.second(r)
    return -abs(v1) ** (p - 2.0) * ((p - 1.0) * v2 + (d - 1.0) * v1 / r)


def power_p_laplacian(alpha: float, params: ProblemParams, r: float) -> float:
    """Closed form of -Lap_p(r^alpha) for alpha != 0:

        -|alpha|^(p-2) alpha [ alpha (p-1) + d - p ] r^(alpha(p-1) - p).
    """
    p, d = params.p, params.d
    return -phi(p, alpha) * (alpha * (p - 1.0) + d - p) * r ** (alpha * (p - 1.0) - p)
