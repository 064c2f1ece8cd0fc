"""Potential families V(x) = sign * g(|x|)/|x|^p and the decision
procedures for the Fuchsian bound, the Kato condition and the Dini
condition near the singular point.

The envelope function g is positive, bounded and continuous.  Built-in
families (r toward zeta means r -> 0 or r -> infinity):

  zero            g = 0
  power_law       g = r^eps toward 0, r^(-eps) toward infinity (eps > 0)
  log_power       g = (1 + |log r|)^(-beta), the bounded log-power envelope
  hardy_constant  g = lam, scale-invariant (the borderline Fuchsian family)
  tabulated       g from a two-column table, log-log linear in between

The Kato condition asks for finiteness of the iterated integral

  | int_zeta^1  t^(a*) | int_a^t g(s) s^(d-1-p) ds |^(1/(p-1)) dt/t |

with the case-table lower limit a; the Dini condition for finiteness of
| int_zeta^1 g(s)/s ds | (weighted by |log s|^(d-1) when p = d).  Both are
decided by summing quadrature windows toward zeta and testing the decay of
the increments, with an Inconclusive escape hatch when the tail is too
slow to classify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import _kernels
from ._quadrature import quad_plain
from .core import ProblemParams, Zeta, classify_case
from .errors import OutOfTableError

_INF = float("inf")
_LOG2 = math.log(2.0)


class Family(str, Enum):
    ZERO = "zero"
    POWER_LAW = "power_law"
    LOG_POWER = "log_power"
    HARDY_CONSTANT = "hardy_constant"
    TABULATED = "tabulated"


class SignRule(str, Enum):
    """Sign of V relative to the envelope G = g/r^p.

    OSCILLATING multiplies by cos(log r): a genuinely sign-changing
    potential still dominated by G.
    """

    PLUS = "plus"
    MINUS = "minus"
    OSCILLATING = "oscillating"


class ConditionStatus(str, Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ConditionVerdict:
    """Outcome of a Kato/Dini decision with its quadrature diagnostics."""

    status: ConditionStatus
    value: float
    error_estimate: float
    tolerance: float
    increments: tuple[float, ...] = ()
    windows: tuple[tuple[float, float], ...] = ()
    widened: bool = False
    tabulated_extension: bool = False

    @property
    def is_finite(self) -> bool:
        return self.status is ConditionStatus.FINITE

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "value": self.value,
            "error_estimate": self.error_estimate,
            "tolerance": self.tolerance,
            "n_windows": len(self.increments),
            "widened": self.widened,
            "tabulated_extension": self.tabulated_extension,
        }


@dataclass(frozen=True)
class PotentialSpec:
    family: Family
    zeta: Zeta
    sign: SignRule = SignRule.MINUS
    epsilon: float | None = None
    beta: float | None = None
    lam: float | None = None
    radii: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family is Family.POWER_LAW:
            if self.epsilon is None or self.epsilon <= 0.0:
                raise ValueError("power_law requires epsilon > 0 (decay toward zeta)")
        elif self.family is Family.LOG_POWER:
            if self.beta is None or self.beta <= 0.0:
                raise ValueError("log_power requires beta > 0")
        elif self.family is Family.HARDY_CONSTANT:
            if self.lam is None or self.lam < 0.0:
                raise ValueError("hardy_constant requires lam >= 0 (sign is separate)")
        elif self.family is Family.TABULATED:
            r = np.asarray(self.radii, dtype=float)
            g = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != g.shape or r.size < 2:
                raise ValueError("tabulated potential needs matching 1-d radius/value columns")
            if not np.all(np.isfinite(r)) or not np.all(np.isfinite(g)):
                raise ValueError("tabulated potential values must be finite")
            if np.any(np.diff(r) <= 0.0) or r[0] <= 0.0:
                raise ValueError("tabulated radii must be positive and strictly increasing")
            if np.any(g <= 0.0):
                raise ValueError("tabulated envelope values must be positive")
            object.__setattr__(self, "radii", tuple(float(x) for x in r))
            object.__setattr__(self, "values", tuple(float(x) for x in g))

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(zeta: Zeta = Zeta.ORIGIN) -> "PotentialSpec":
        return PotentialSpec(Family.ZERO, Zeta(zeta))

    @staticmethod
    def power_law(epsilon: float, zeta: Zeta = Zeta.ORIGIN,
                  sign: SignRule = SignRule.MINUS) -> "PotentialSpec":
        return PotentialSpec(Family.POWER_LAW, Zeta(zeta), SignRule(sign), epsilon=float(epsilon))

    @staticmethod
    def log_power(beta: float, zeta: Zeta = Zeta.ORIGIN,
                  sign: SignRule = SignRule.MINUS) -> "PotentialSpec":
        return PotentialSpec(Family.LOG_POWER, Zeta(zeta), SignRule(sign), beta=float(beta))

    @staticmethod
    def hardy(lam: float, zeta: Zeta = Zeta.ORIGIN,
              sign: SignRule = SignRule.MINUS) -> "PotentialSpec":
        return PotentialSpec(Family.HARDY_CONSTANT, Zeta(zeta), SignRule(sign), lam=float(lam))

    @staticmethod
    def tabulated(radii, values, zeta: Zeta = Zeta.ORIGIN,
                  sign: SignRule = SignRule.MINUS) -> "PotentialSpec":
        return PotentialSpec(Family.TABULATED, Zeta(zeta), SignRule(sign),
                             radii=tuple(radii), values=tuple(values))

    @staticmethod
    def from_file(path, zeta: Zeta = Zeta.ORIGIN,
                  sign: SignRule = SignRule.MINUS) -> "PotentialSpec":
        radii, values = load_tabulated(path)
        return PotentialSpec.tabulated(radii, values, zeta, sign)

    # -- evaluation ------------------------------------------------------

    @property
    def signed_power_exponent(self) -> float:
        """Exponent e with g = r^e for the power family (sign follows zeta)."""
        if self.family is not Family.POWER_LAW:
            raise ValueError("only power_law has a power exponent")
        return self.epsilon if self.zeta is Zeta.ORIGIN else -self.epsilon

    def g_value(self, r: float, extend_table: bool = False) -> float:
        """Envelope g(r); tabulated queries outside the grid raise
        OutOfTableError unless extend_table, which continues the edge
        slope in log-log coordinates (used for tail estimation)."""
        if r <= 0.0:
            raise ValueError("radius must be positive")
        fam = self.family
        if fam is Family.ZERO:
            return 0.0
        if fam is Family.POWER_LAW:
            return math.exp(self.signed_power_exponent * math.log(r))
        if fam is Family.LOG_POWER:
            return (1.0 + abs(math.log(r))) ** (-self.beta)
        if fam is Family.HARDY_CONSTANT:
            return self.lam
        radii = self.radii
        if not extend_table and not (radii[0] <= r <= radii[-1]):
            raise OutOfTableError(
                f"radius {r:g} outside tabulated range [{radii[0]:g}, {radii[-1]:g}]"
            )
        tab_s, tab_lg = self._table_logs()
        return _kernels._stepper_py._eval_g(
            _kernels.FAM_TABULATED, 0.0, tab_s, tab_lg, math.log(r)
        )

    def _table_logs(self):
        return (
            np.log(np.asarray(self.radii, dtype=float)),
            np.log(np.asarray(self.values, dtype=float)),
        )

    def sign_factor(self, r: float) -> float:
        if self.sign is SignRule.PLUS:
            return 1.0
        if self.sign is SignRule.MINUS:
            return -1.0
        return math.cos(math.log(r))

    def kernel_args(self):
        """(family_code, sign_code, scalar, tab_s, tab_lg) for the stepper."""
        empty = np.empty(0)
        sgn = {SignRule.PLUS: _kernels.SGN_PLUS,
               SignRule.MINUS: _kernels.SGN_MINUS,
               SignRule.OSCILLATING: _kernels.SGN_OSCILLATING}[self.sign]
        fam = self.family
        if fam is Family.ZERO:
            return _kernels.FAM_ZERO, sgn, 0.0, empty, empty
        if fam is Family.POWER_LAW:
            return _kernels.FAM_POWER, sgn, self.signed_power_exponent, empty, empty
        if fam is Family.LOG_POWER:
            return _kernels.FAM_LOG_POWER, sgn, self.beta, empty, empty
        if fam is Family.HARDY_CONSTANT:
            return _kernels.FAM_CONSTANT, sgn, self.lam, empty, empty
        tab_s, tab_lg = self._table_logs()
        return _kernels.FAM_TABULATED, sgn, 0.0, tab_s, tab_lg

    def is_integrable_near_zeta(self, params: ProblemParams) -> bool:
        """Whether G(|x|) = g/|x|^p is integrable over a neighborhood of
        zeta in R^d, i.e. int g(s) s^(d-1-p) ds converges at zeta."""
        p, d = params.p, params.d
        fam = self.family
        toward_zero = self.zeta is Zeta.ORIGIN
        if fam is Family.ZERO:
            return True
        if fam is Family.POWER_LAW:
            k = self.signed_power_exponent + d - p
            return k > 0.0 if toward_zero else k < 0.0
        if fam is Family.LOG_POWER:
            if p < d:
                return toward_zero
            if p > d:
                return not toward_zero
            return self.beta > 1.0
        if fam is Family.HARDY_CONSTANT:
            if self.lam == 0.0:
                return True
            return (p < d) if toward_zero else (p > d)
        # tabulated: continue the edge power-law slope toward zeta
        e_edge = self._edge_exponent()
        k = e_edge + d - p
        return k > 0.0 if toward_zero else k < 0.0

    def _edge_exponent(self) -> float:
        tab_s, tab_lg = self._table_logs()
        if self.zeta is Zeta.ORIGIN:
            return (tab_lg[1] - tab_lg[0]) / (tab_s[1] - tab_s[0])
        return (tab_lg[-1] - tab_lg[-2]) / (tab_s[-1] - tab_s[-2])

    def label(self) -> str:
        fam = self.family
        if fam is Family.ZERO:
            return "zero"
        if fam is Family.POWER_LAW:
            return f"power_law(eps={self.epsilon:g}, {self.sign.value})"
        if fam is Family.LOG_POWER:
            return f"log_power(beta={self.beta:g}, {self.sign.value})"
        if fam is Family.HARDY_CONSTANT:
            return f"hardy({self.lam:g}, {self.sign.value})"
        return f"tabulated({len(self.radii)} pts, {self.sign.value})"


def load_tabulated(path):
    """Read a two-column (radius, value) text table; '#' starts a comment."""
    radii, values = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
        radii.append(float(parts[0]))
        values.append(float(parts[1]))
    return radii, values


def eval_potential(spec: PotentialSpec, params: ProblemParams, r: float,
                   envelope: bool = False) -> float:
    """V(r) = sign * g(r)/r^p, or the envelope G(r) = g(r)/r^p."""
    g = spec.g_value(r)
    G = g * r ** (-params.p)
    if envelope:
        return G
    return spec.sign_factor(r) * G


def check_fuchsian(spec: PotentialSpec, params: ProblemParams,
                   probe_decades: int = 6) -> dict:
    """sup of r^p |V(r)| over a geometric probe grid approaching zeta.

    ``holds`` reports whether the running sup stabilized: it did not move
    over the last quarter of the probe decades."""
    if probe_decades < 2:
        raise ValueError("need at least 2 probe decades")
    per_decade = 8
    n = probe_decades * per_decade + 1
    js = np.arange(n)
    if spec.zeta is Zeta.ORIGIN:
        radii = 10.0 ** (-js / per_decade)
    else:
        radii = 10.0 ** (js / per_decade)
    sups = []
    sup = 0.0
    for r in radii:
        # r^p |V(r)| <= g(r); equality for the plus/minus sign rules
        val = spec.g_value(float(r), extend_table=True)
        sup = max(sup, val)
        sups.append(sup)
    quarter = max(1, n // 4)
    stabilized = sups[-1] <= sups[-quarter - 1] * (1.0 + 1e-9) + 1e-300
    return {"bound": sup, "holds": bool(stabilized), "probes": len(radii)}


def rescaled_potential_norm(spec: PotentialSpec, params: ProblemParams,
                            R: float, annulus=(1.0, 2.0)) -> float:
    """max over x in [r_lo, r_hi] of |R^p V(R x)| = max g(R x)/x^p.

    For weakened-Fuchsian potentials this decays along R -> zeta."""
    r_lo, r_hi = annulus
    if not (0.0 < r_lo < r_hi):
        raise ValueError("annulus must satisfy 0 < r_lo < r_hi")
    xs = np.geomspace(r_lo, r_hi, 513)
    best = 0.0
    for x in xs:
        g = spec.g_value(float(R * x), extend_table=True)
        best = max(best, g * float(x) ** (-params.p))
    return best


# -- Kato / Dini decision procedure --------------------------------------

_MAX_WINDOWS = 400
_PHASE1_WINDOWS = 10
_WIDEN_FACTOR = 2.0
_ESCALATE_AFTER = 10
_ESCALATE_FACTOR = 1.2
_Y_GUARD = 1e15


def _windowed_decision(integrand_y, tol, y_guard=_Y_GUARD):
    """Sum quadrature windows of integrand_y over [0, inf) and classify.

    Windows start with width log 2 (dyadic in the radius).  Once the
    increments decay subgeometrically the windows widen geometrically (and
    escalate further if needed), so that slowly decaying log-power type
    tails still settle.  Classification: five consecutive increment ratios
    >= 1.1 with a geometric tail bound below tol -> finite; a plateau of
    increments (or growth before any widening) -> divergent; otherwise
    inconclusive once the window budget is exhausted.  Tails within ~2% of
    the convergence borderline can land in the wrong conclusive bucket;
    prototypes of interest sit far from it.
    """
    increments = []
    windows = []
    total = 0.0
    err_total = 0.0
    widened = False
    widened_count = 0
    widen_factor = _WIDEN_FACTOR
    y = 0.0
    width = _LOG2

    for _ in range(_MAX_WINDOWS):
        y_next = y + width
        if y_next > y_guard:
            break
        try:
            val, err = quad_plain(integrand_y, y, y_next,
                                  epsabs=min(1e-14, tol * 1e-4), epsrel=1e-10)
        except (OverflowError, ValueError):
            break
        if not math.isfinite(val):
            break
        increments.append(val)
        windows.append((y, y_next))
        total += val
        err_total += err
        y = y_next

        n = len(increments)
        if n >= 6 and all(inc == 0.0 for inc in increments):
            return (ConditionStatus.FINITE, total, err_total, increments, windows, widened)
        if n >= 6:
            last = increments[-5:]
            prev = increments[-6:-1]
            if all(b > 0.0 for b in last):
                ratios = [a / b for a, b in zip(prev, last)]
                trustworthy = increments[-1] > max(1e-300, err_total)
                if all(rho >= 1.1 for rho in ratios):
                    rho_min = min(ratios)
                    tail = increments[-1] / (rho_min - 1.0)
                    if tail + err_total < tol:
                        return (ConditionStatus.FINITE, total + tail,
                                max(err_total, tail), increments, windows, widened)
                elif n >= 8 and trustworthy:
                    # A plateau of increments means the tail keeps contributing
                    # at a fixed rate; before widening, growth toward zeta is
                    # just as conclusive.  (Widened windows grow geometrically,
                    # so there a growth transient is expected and ignored;
                    # divergence then shows as a persistent quasi-plateau.)
                    plateau = all(0.98 <= rho <= 1.02 for rho in ratios)
                    growing = all(rho <= 1.02 for rho in ratios)
                    if plateau or (growing and not widened):
                        return (ConditionStatus.DIVERGENT, math.inf, math.inf,
                                increments, windows, widened)
                    if widened and n >= 11:
                        long_ratios = [increments[-j - 1] / increments[-j]
                                       for j in range(1, 11)]
                        if all(0.9 <= rho <= 1.02 for rho in long_ratios):
                            return (ConditionStatus.DIVERGENT, math.inf, math.inf,
                                    increments, windows, widened)
                if (not widened and n >= _PHASE1_WINDOWS
                        and all(rho > 1.0 for rho in ratios)
                        and min(ratios) < 1.35):
                    widened = True
            if widened:
                widened_count += 1
                if widened_count > _ESCALATE_AFTER:
                    widen_factor *= _ESCALATE_FACTOR
                width *= widen_factor

    return (ConditionStatus.INCONCLUSIVE, total, err_total, increments, windows, widened)


def _condition_verdict(decision, tol, extension_flag):
    status, value, err, increments, windows, widened = decision
    return ConditionVerdict(
        status=status,
        value=value,
        error_estimate=err,
        tolerance=tol,
        increments=tuple(increments),
        windows=tuple(windows),
        widened=widened,
        tabulated_extension=extension_flag,
    )


def _extension_flag(spec: PotentialSpec, windows) -> bool:
    if spec.family is not Family.TABULATED or not windows:
        return False
    y_reach = windows[-1][1]
    if spec.zeta is Zeta.ORIGIN:
        return -y_reach < math.log(spec.radii[0])
    return y_reach > math.log(spec.radii[-1])


def _g_log(spec: PotentialSpec, u: float) -> float:
    """g(e^u) computed directly from u = log r, stable for huge |u|."""
    fam = spec.family
    if fam is Family.ZERO:
        return 0.0
    if fam is Family.POWER_LAW:
        x = spec.signed_power_exponent * u
        if x < -745.0:
            return 0.0
        return math.exp(x)
    if fam is Family.LOG_POWER:
        return (1.0 + abs(u)) ** (-spec.beta)
    if fam is Family.HARDY_CONSTANT:
        return spec.lam
    tab_s, tab_lg = spec._table_logs()
    return _kernels._stepper_py._eval_g(_kernels.FAM_TABULATED, 0.0, tab_s, tab_lg, u)


def check_kato_condition(spec: PotentialSpec, params: ProblemParams,
                         tol: float = 1e-8) -> ConditionVerdict:
    """Kato condition: iterated integral with the case-table lower limit a.

    The outer integrand is evaluated in log coordinates, where the outer
    power of t cancels the inner integral's t^(d-p) scaling exactly:

        t^(a*) |I(t)|^(1/(p-1)) = N(t)^(1/(p-1)),
        N(t) = int_0^X g(t e^(-/+x)) e^(-/+(d-p) x) dx,

    with x running from t toward the lower limit a (X = |log(a/t)|, which
    is infinite when a sits at zeta).  N stays on the scale of g, so the
    decision procedure can follow the tail arbitrarily far toward zeta.
    """
    if spec.zeta is not params.zeta:
        raise ValueError("spec and params must share the singular point")
    case = classify_case(params)
    a = case.a
    p, d = params.p, params.d
    expo = 1.0 / (p - 1.0)
    toward_zero = spec.zeta is Zeta.ORIGIN
    # u_t = log t = -/+y; the inner variable walks from t toward the anchor
    anchor_below = (a == 0.0) or (a == 1.0 and not toward_zero)
    # direction of s = t e^{dx * x}: toward a
    dxs = -1.0 if anchor_below else 1.0
    wexp = dxs * (d - p)

    def integrand_y(y):
        u_t = -y if toward_zero else y
        if math.isinf(a):
            x_hi = _INF
        elif a == 0.0:
            x_hi = _INF
        else:
            x_hi = abs(u_t)  # |log(a/t)| with a = 1

        def inner_x(x):
            wx = wexp * x
            if wx < -745.0:
                w = 0.0
            else:
                w = math.exp(wx)
            return _g_log(spec, u_t + dxs * x) * w

        if x_hi == 0.0:
            return 0.0
        val, _ = quad_plain(inner_x, 0.0, x_hi, epsabs=1e-15, epsrel=1e-11)
        return abs(val) ** expo

    decision = _windowed_decision(integrand_y, tol)
    return _condition_verdict(decision, tol, _extension_flag(spec, decision[4]))


def check_dini_condition(spec: PotentialSpec, params: ProblemParams,
                       tol: float = 1e-8) -> ConditionVerdict:
    """Dini condition: int g(s)/s toward zeta, log-weighted when p = d."""
    if spec.zeta is not params.zeta:
        raise ValueError("spec and params must share the singular point")
    critical = params.is_critical_dimension
    dm1 = params.d - 1.0
    toward_zero = spec.zeta is Zeta.ORIGIN

    def integrand_y(y):
        val = _g_log(spec, -y if toward_zero else y)
        if critical:
            val *= y**dm1
        return val

    decision = _windowed_decision(integrand_y, tol)
    return _condition_verdict(decision, tol, _extension_flag(spec, decision[4]))
