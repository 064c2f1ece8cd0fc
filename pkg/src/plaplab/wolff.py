"""Wolff-type potential of an envelope G = g(r)/r^p around the singular
point, and the companion potential driving the fundamental-solution
envelopes.

The radial Wolff potential is the iterated integral

    W(r) = | int_zeta^r  t^(a*-1) | int_a^t g(s) s^(d-1-p) ds |^(1/(p-1)) dt |

with the case-table lower limit a.  It vanishes at zeta, is monotone
toward zeta, and solves  -Lap_p W = -G  in the classical cases and  +G  in
the nonclassical ones.  The companion potential U is the double integral
of g/s (log-weighted when p = d) against the fundamental solution; it
grows strictly slower than the fundamental solution toward zeta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import CumulativeLogIntegral
from ._sequences import accelerate_dyadic, dyadic_radii
from .core import (
    CaseInfo,
    CaseKind,
    ProblemParams,
    RadialFunction,
    Zeta,
    classify_case,
    fundamental_solution,
    radial_p_laplacian,
)
from .errors import ConditionViolationError, NotApplicableError, QuadratureFailureError
from .potentials import (
    ConditionStatus,
    PotentialSpec,
    _g_log,
    check_dini_condition,
    check_kato_condition,
)

_NODE_ERROR_TARGET = 1e-9


def _format_float(x):
    return f"{x:.17g}"


class _WolffEvaluator:
    """Exact-on-demand evaluator for W, its slope, and the inner integral."""

    def __init__(self, spec: PotentialSpec, params: ProblemParams, case: CaseInfo):
        self.spec = spec
        self.params = params
        self.case = case
        p, d = params.p, params.d
        a_star = params.alpha_star
        expo = 1.0 / (p - 1.0)

        def inner_fe(u):
            # g(e^u) e^{u(d-p)} with combined exponents: the separate power
            # of s would overflow long before the product does
            g = _g_log(spec, u)
            if g == 0.0:
                return 0.0
            lx = (d - p) * u + math.log(g)
            if lx < -745.0:
                return 0.0
            return math.exp(lx)

        self.inner = CumulativeLogIntegral(inner_fe, anchor=case.a,
                                           epsabs=1e-16, epsrel=1e-12,
                                           transformed=True)
        anchor = 0.0 if spec.zeta is Zeta.ORIGIN else math.inf
        self._sign = 1.0 if spec.zeta is Zeta.ORIGIN else -1.0

        def outer_fe(u):
            # t^(a*-1) |I(t)|^(1/(p-1)) * t in log space; the inner integral
            # carries a t^(d-p) scaling that nearly cancels the outer power,
            # so combining exponents keeps deep improper-tail probes finite.
            inner_val, _ = self.inner.value_with_error_log(u)
            if inner_val == 0.0:
                return 0.0
            lx = a_star * u + expo * math.log(abs(inner_val))
            if lx < -745.0:
                return 0.0
            return math.exp(lx)

        self.outer = CumulativeLogIntegral(outer_fe, anchor=anchor,
                                           epsabs=1e-16, epsrel=1e-12,
                                           transformed=True)
        self._outer_fe = outer_fe

    def value_with_error(self, r):
        val, err = self.outer.value_with_error(r)
        return abs(val), err

    def value(self, r):
        return self.value_with_error(r)[0]

    def slope(self, r):
        """dW/dr: positive toward a singularity at 0, negative toward inf."""
        return self._sign * self._outer_fe(math.log(r)) / r


@dataclass(frozen=True)
class WolffTable:
    """Samples of the radial Wolff potential on a radius grid."""

    radii: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    errors: np.ndarray
    case: CaseInfo
    spec: PotentialSpec
    params: ProblemParams
    evaluator: _WolffEvaluator = field(repr=False)

    def to_radial_function(self) -> RadialFunction:
        return RadialFunction(
            value=self.evaluator.value,
            derivative=self.evaluator.slope,
            label="wolff potential",
        )

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,W,dW_dr,err_estimate\n")
            for r, w, dw, e in zip(self.radii, self.values, self.slopes, self.errors):
                fh.write(",".join(_format_float(x) for x in (r, w, dw, e)) + "\n")


@dataclass(frozen=True)
class UTable:
    """Samples of the companion potential U and its derivatives with
    respect to the fundamental solution."""

    radii: np.ndarray
    values: np.ndarray
    d_dv: np.ndarray
    d2_dv2: np.ndarray
    errors: np.ndarray
    case: CaseInfo
    spec: PotentialSpec
    params: ProblemParams
    branch_note: str
    evaluator: object = field(repr=False)

    def to_radial_function(self) -> RadialFunction:
        return RadialFunction(
            value=self.evaluator.value,
            derivative=self.evaluator.slope,
            label="companion potential",
        )

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,U,dU_dv,d2U_dv2\n")
            for r, u, du, d2u in zip(self.radii, self.values, self.d_dv, self.d2_dv2):
                fh.write(",".join(_format_float(x) for x in (r, u, du, d2u)) + "\n")


def _require_condition(verdict, which, override):
    if verdict.status is ConditionStatus.FINITE or override:
        return
    raise ConditionViolationError(
        f"potential fails the {which} condition ({verdict.status.value}); "
        "pass allow_unverified=True to build the table anyway"
    )


def wolff_potential(spec: PotentialSpec, params: ProblemParams, radii,
                    allow_unverified: bool = False,
                    _evaluator: "_WolffEvaluator | None" = None) -> WolffTable:
    """Tabulate the Wolff potential of the potential's envelope at the
    given radii.

    Requires a finite Kato-condition verdict (override with
    allow_unverified).  Per-node quadrature error is kept below 1e-9
    absolute; QuadratureFailureError otherwise.  ``_evaluator`` lets
    callers reuse the quadrature caches across several tables.
    """
    if spec.zeta is not params.zeta:
        raise ValueError("spec and params must share the singular point")
    if _evaluator is None:
        _require_condition(check_kato_condition(spec, params), "Kato", allow_unverified)
    case = classify_case(params)
    ev = _evaluator if _evaluator is not None else _WolffEvaluator(spec, params, case)
    rs = np.sort(np.asarray(radii, dtype=float))
    if rs.size == 0 or rs[0] <= 0.0:
        raise ValueError("radii must be positive and nonempty")
    vals = np.empty(rs.size)
    slopes = np.empty(rs.size)
    errs = np.empty(rs.size)
    # walk from the zeta side so cumulative breakpoints build up once
    order = range(rs.size) if spec.zeta is Zeta.ORIGIN else range(rs.size - 1, -1, -1)
    for i in order:
        v, e = ev.value_with_error(float(rs[i]))
        vals[i] = v
        errs[i] = e
        slopes[i] = ev.slope(float(rs[i]))
        if e > _NODE_ERROR_TARGET and e > 1e-9 * max(1.0, v):
            raise QuadratureFailureError(
                f"Wolff node error {e:.3e} at r={rs[i]:g} exceeds the 1e-9 target"
            )
    if np.any(vals < 0.0):
        raise QuadratureFailureError("Wolff potential came out negative")
    if _evaluator is None:
        # freeze the caches: the completed table is then safe to share
        ev.inner.freeze()
        ev.outer.freeze()
    table = WolffTable(radii=rs, values=vals, slopes=slopes, errors=errs,
                       case=case, spec=spec, params=params, evaluator=ev)
    _validate_wolff_monotone(table)
    return table


def _validate_wolff_monotone(table: WolffTable):
    if table.is_zero:
        return
    dv = np.diff(table.values)
    if table.spec.zeta is Zeta.ORIGIN:
        ok = np.all(dv > -1e-12 * np.abs(table.values[1:]))
        direction = "increasing"
    else:
        ok = np.all(dv < 1e-12 * np.abs(table.values[1:]))
        direction = "decreasing"
    if not ok:
        raise QuadratureFailureError(f"Wolff potential not {direction} in r")


class _UEvaluatorPower:
    """U for p != d:  U(r) = a*^2 int_{rho_b}^r J(rho) rho^(a*-1) drho,
    with J the running Dini integral from zeta."""

    def __init__(self, spec, params, case):
        p, d = params.p, params.d
        a_star = params.alpha_star
        g = lambda s: spec.g_value(s, extend_table=True)  # noqa: E731
        zeta_anchor = 0.0 if spec.zeta is Zeta.ORIGIN else math.inf
        self.J = CumulativeLogIntegral(lambda s: g(s) / s, anchor=zeta_anchor,
                                       epsabs=1e-16, epsrel=1e-12)
        if case.b == 1.0:
            rho_b = 1.0
        else:
            rho_b = zeta_anchor
        self._a_star = a_star
        self.outer = CumulativeLogIntegral(
            lambda rho: a_star * a_star * self.J(rho) * rho ** (a_star - 1.0),
            anchor=rho_b, epsabs=1e-16, epsrel=1e-12,
        )
        self.value = self.outer.__call__
        self.d_dv = lambda r: a_star * self.J(r)
        self.d2_dv2_closed = lambda r: g(r) * r ** (-a_star)

    def value_with_error(self, r):
        return self.outer.value_with_error(r)

    def slope(self, r):
        # dU/dr = dU/dv * dv/dr
        return self._a_star * self._a_star * self.J(r) * r ** (self._a_star - 1.0)


class _UEvaluatorLog:
    """U for p = d:  U(r) = -/+ int_{e^{-/+1}}^r J_d(rho) drho/rho with the
    log-weighted Dini integral J_d; the inverse of |log r| is fixed on the
    zeta side of r = 1."""

    def __init__(self, spec, params, case):
        d = params.d
        g = lambda s: spec.g_value(s, extend_table=True)  # noqa: E731
        at_origin = spec.zeta is Zeta.ORIGIN
        zeta_anchor = 0.0 if at_origin else math.inf
        self.J = CumulativeLogIntegral(
            lambda s: g(s) / s * abs(math.log(s)) ** (d - 1.0),
            anchor=zeta_anchor, epsabs=1e-16, epsrel=1e-12,
        )
        self._at_origin = at_origin
        anchor = math.exp(-1.0) if at_origin else math.e
        sign = -1.0 if at_origin else 1.0
        self.outer = CumulativeLogIntegral(
            lambda rho: sign * self.J(rho) / rho, anchor=anchor,
            epsabs=1e-16, epsrel=1e-12,
        )
        self.value = self.outer.__call__
        self.d_dv = self.J.__call__
        self.d2_dv2_closed = (
            (lambda r: -g(r) * abs(math.log(r)) ** (d - 1.0))
            if at_origin
            else (lambda r: g(r) * abs(math.log(r)) ** (d - 1.0))
        )

    def value_with_error(self, r):
        return self.outer.value_with_error(r)

    def slope(self, r):
        sign = -1.0 if self._at_origin else 1.0
        return sign * self.J(r) / r


def u_potential(spec: PotentialSpec, params: ProblemParams, radii,
                allow_unverified: bool = False, _evaluator=None) -> UTable:
    """Tabulate the companion potential U at the given radii.

    Requires a finite Dini-condition verdict (override with
    allow_unverified)."""
    if spec.zeta is not params.zeta:
        raise ValueError("spec and params must share the singular point")
    if _evaluator is None:
        _require_condition(check_dini_condition(spec, params), "Dini", allow_unverified)
    case = classify_case(params)
    if _evaluator is not None:
        ev = _evaluator
        branch = getattr(ev, "branch_note", "reused evaluator")
    elif params.is_critical_dimension:
        ev = _UEvaluatorLog(spec, params, case)
        branch = ("inverse of |log r| taken as exp(-tau), the origin side of r=1"
                  if spec.zeta is Zeta.ORIGIN
                  else "inverse of |log r| taken as exp(tau), the infinity side of r=1")
    else:
        ev = _UEvaluatorPower(spec, params, case)
        branch = "power branch (p != d)"
    ev.branch_note = branch
    rs = np.sort(np.asarray(radii, dtype=float))
    if rs.size == 0 or rs[0] <= 0.0:
        raise ValueError("radii must be positive and nonempty")
    vals = np.empty(rs.size)
    errs = np.empty(rs.size)
    d_dv = np.empty(rs.size)
    d2 = np.empty(rs.size)
    order = range(rs.size) if spec.zeta is Zeta.ORIGIN else range(rs.size - 1, -1, -1)
    for i in order:
        r = float(rs[i])
        vals[i], errs[i] = ev.value_with_error(r)
        d_dv[i] = ev.d_dv(r)
        d2[i] = ev.d2_dv2_closed(r)
    if _evaluator is None:
        ev.J.freeze()
        ev.outer.freeze()
    return UTable(radii=rs, values=vals, d_dv=d_dv, d2_dv2=d2, errors=errs,
                  case=case, spec=spec, params=params, branch_note=branch,
                  evaluator=ev)


def u_second_derivative_check(table: UTable, rel_tol: float = 1e-6) -> dict:
    """Differentiate the stored dU/dv rule numerically and compare with the
    closed form; a consistency check of the two quadrature routes."""
    params = table.params
    v = fundamental_solution(params)
    worst = 0.0
    for r in table.radii:
        r = float(r)
        h = 1e-4 * r
        num = (table.evaluator.d_dv(r + h) - table.evaluator.d_dv(r - h)) / (v(r + h) - v(r - h))
        closed = table.evaluator.d2_dv2_closed(r)
        scale = max(abs(closed), 1e-300)
        worst = max(worst, abs(num - closed) / scale)
    return {"max_rel_deviation": worst, "passes": worst <= rel_tol, "rel_tol": rel_tol}


def verify_wolff_equation(table: WolffTable, spec: PotentialSpec,
                          params: ProblemParams) -> dict:
    """Apply the radial p-Laplacian to the tabulated potential and compare
    with -G (classical) or +G (nonclassical) at interior nodes."""
    if table.is_zero:
        return {"max_rel_residual": 0.0, "sign_matches": True,
                "expected_sign": 0.0, "n_nodes": 0}
    f = table.to_radial_function()
    expected_sign = -1.0 if table.case.kind is CaseKind.CLASSICAL else 1.0
    worst = 0.0
    signs_ok = True
    n = 0
    for r in table.radii[1:-1]:
        r = float(r)
        G = spec.g_value(r, extend_table=True) * r ** (-params.p)
        if G == 0.0:
            continue
        lhs = radial_p_laplacian(f, params, r)
        target = expected_sign * G
        worst = max(worst, abs(lhs - target) / abs(target))
        signs_ok = signs_ok and (math.copysign(1.0, lhs) == expected_sign)
        n += 1
    return {"max_rel_residual": worst, "sign_matches": signs_ok,
            "expected_sign": expected_sign, "n_nodes": n}


def wolff_vs_fundamental(table: WolffTable, params: ProblemParams,
                         rtol: float = 1e-6) -> dict:
    """Extrapolated limit of W / v_fund toward zeta (nonclassical cases
    with an integrable envelope; the ratio then has a positive limit)."""
    if table.case.kind is not CaseKind.NONCLASSICAL:
        raise NotApplicableError("the ratio limit applies to nonclassical cases only")
    if table.is_zero:
        return {"limit": 0.0, "converged": True, "samples": []}
    if not table.spec.is_integrable_near_zeta(params):
        raise NotApplicableError("envelope is not integrable near the singular point")
    v = fundamental_solution(params)
    r_lo, r_hi = float(table.radii[0]), float(table.radii[-1])
    if params.zeta is Zeta.ORIGIN:
        radii = dyadic_radii(r_lo, r_hi)[::-1]  # toward 0
    else:
        radii = [1.0 / r for r in dyadic_radii(1.0 / r_hi, 1.0 / r_lo)[::-1]]
    samples = [table.evaluator.value(r) / v(r) for r in radii]
    limit, accel, converged = accelerate_dyadic(samples, rtol=rtol)
    return {"limit": limit, "converged": converged, "samples": samples,
            "accelerated": list(accel)}
