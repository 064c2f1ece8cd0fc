"""Asymptotic diagnostics near the singular point: accelerated limits,
exponent fits, ratio limits, the three-spheres inequality checker, the
singularity classifier, and the radial minimal-growth profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._sequences import accelerate_dyadic, dyadic_radii
from .core import CaseKind, ProblemParams, RadialFunction, Zeta, classify_case
from .errors import DomainTooShortError, NotApplicableError, WindowNotFoundError
from .potentials import PotentialSpec
from .radial_ode import RadialSolution, solve_ivp
from .wolff import WolffTable

_ESCAPE_THRESHOLD = 1e12
_MIN_DYADIC_SAMPLES = 6


class LimitStatus(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class LimitEstimate:
    """Accelerated limit along dyadic radii toward the singular point."""

    value: float
    status: LimitStatus
    radii: tuple[float, ...]
    samples: tuple[float, ...]
    accelerated: tuple[float, ...]
    rtol: float

    @property
    def is_finite(self) -> bool:
        return self.status is LimitStatus.CONVERGED

    def summary(self) -> dict:
        return {"value": self.value, "status": self.status.value,
                "n_samples": len(self.samples), "rtol": self.rtol}


def _profile_eval(profile, r: float) -> float:
    if isinstance(profile, RadialSolution):
        return profile.value_at(r)
    return float(profile(r))


def _profile_domain(profile) -> tuple[float, float]:
    if isinstance(profile, RadialSolution):
        return profile.domain
    return profile.domain


def _tail_radii(profile, params: ProblemParams, max_count=60):
    """Dyadic radii ordered toward the singular point."""
    lo, hi = _profile_domain(profile)
    if not (0.0 < lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainTooShortError("profile domain does not support a dyadic tail")
    if params.zeta is Zeta.ORIGIN:
        return dyadic_radii(lo, hi, max_count)[::-1]  # descending toward 0
    return [hi / r * lo for r in dyadic_radii(lo, hi, max_count)[::-1]]  # ascending


def estimate_limit(profile, params: ProblemParams, rtol: float = 1e-6) -> LimitEstimate:
    """Limit of the profile at the singular point.

    Samples along dyadic radii toward zeta, applies the Richardson+Aitken
    acceleration, and reports: a converged finite value, a divergence tag
    (raw values past 1e12 and still increasing three times in a row), or
    inconclusive.
    """
    radii = _tail_radii(profile, params)
    if len(radii) < _MIN_DYADIC_SAMPLES:
        raise DomainTooShortError(
            f"only {len(radii)} dyadic samples available; need {_MIN_DYADIC_SAMPLES}"
        )
    samples = [_profile_eval(profile, float(r)) for r in radii]
    tail = samples[-3:]
    if samples[-1] > _ESCAPE_THRESHOLD and tail[0] < tail[1] < tail[2]:
        return LimitEstimate(value=math.inf, status=LimitStatus.DIVERGED,
                             radii=tuple(radii), samples=tuple(samples),
                             accelerated=(), rtol=rtol)
    scale_floor = max(abs(x) for x in samples)
    # mixed correction scales can defeat acceleration on the full window;
    # deeper sub-tails are dominated by a single scale, so retry there
    n = len(samples)
    limit, accel, converged = math.nan, np.asarray(samples), False
    for start in (0, n // 3, n // 2):
        sub = samples[start:]
        if len(sub) < _MIN_DYADIC_SAMPLES:
            break
        limit, accel, converged = accelerate_dyadic(sub, rtol=rtol,
                                                    scale_floor=rtol * scale_floor)
        if converged:
            break
    if converged:
        # acceleration annihilates pure geometric growth too; trust the
        # value only if the raw tail actually approaches it
        dev = [abs(x - limit) for x in samples[-5:]]
        drifting = all(b > a for a, b in zip(dev, dev[1:]))
        if drifting and dev[-1] > 10.0 * rtol * scale_floor:
            converged = False
    if not converged:
        # an unconverged extrapolation can be wild; report a value inside
        # the sampled range instead
        span = max(samples) - min(samples)
        if not (min(samples) - span <= limit <= max(samples) + span):
            limit = samples[-1]
    status = LimitStatus.CONVERGED if converged else LimitStatus.INCONCLUSIVE
    return LimitEstimate(value=limit, status=status, radii=tuple(radii),
                         samples=tuple(samples), accelerated=tuple(accel),
                         rtol=rtol)


@dataclass(frozen=True)
class ExponentFit:
    rate: float
    intercept: float
    r_squared: float
    n_points: int
    mode: str  # "power" (log u vs log r) or "log" (u vs |log r|)


def fit_exponent(profile, params: ProblemParams, decades: int = 2) -> ExponentFit:
    """Least-squares tail rate toward zeta: the slope of log u against
    log r for p != d, or the coefficient of |log r| when p = d."""
    if decades < 1:
        raise ValueError("need at least one decade")
    lo, hi = _profile_domain(profile)
    span_decades = math.log10(hi / lo)
    if span_decades < decades:
        raise DomainTooShortError(
            f"domain spans {span_decades:.2f} decades; need {decades}"
        )
    if params.zeta is Zeta.ORIGIN:
        window = (lo, lo * 10.0**decades)
    else:
        window = (hi / 10.0**decades, hi)
    radii = np.geomspace(window[0], window[1], 24 * decades + 1)
    values = np.asarray([_profile_eval(profile, float(r)) for r in radii])
    if np.any(values <= 0.0):
        raise ValueError("exponent fit needs positive tail values")
    if params.is_critical_dimension:
        x = np.abs(np.log(radii))
        y = values
        mode = "log"
    else:
        x = np.log(radii)
        y = np.log(values)
        mode = "power"
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return ExponentFit(rate=float(slope), intercept=float(intercept),
                       r_squared=r2, n_points=radii.size, mode=mode)


def ratio_limit(u, v, params: ProblemParams, rtol: float = 1e-6) -> LimitEstimate:
    """Accelerated limit of u/v toward zeta on the common tail domain."""
    ulo, uhi = _profile_domain(u)
    vlo, vhi = _profile_domain(v)
    lo, hi = max(ulo, vlo), min(uhi, vhi)
    if not lo < hi:
        raise DomainTooShortError("profiles share no radius window")

    ratio = RadialFunction(
        value=lambda r: _profile_eval(u, r) / _profile_eval(v, r),
        domain=(lo, hi),
        label="ratio",
    )
    return estimate_limit(ratio, params, rtol=rtol)


def monotone_tail(profile, params: ProblemParams, n_samples: int = 48) -> dict:
    """Eventual monotonicity of the profile along the tail toward zeta.

    Reports whether the values are monotone from some index onward, the
    direction (with respect to increasing radius), and the first index of
    the monotone regime."""
    lo, hi = _profile_domain(profile)
    radii = np.geomspace(lo, hi, n_samples)
    values = np.asarray([_profile_eval(profile, float(r)) for r in radii])
    diffs = np.diff(values)
    signs = np.sign(diffs)
    # walk backward from the zeta side to find the monotone stretch
    order = range(len(signs)) if params.zeta is Zeta.ORIGIN else range(len(signs) - 1, -1, -1)
    idx = list(order)
    ref = signs[idx[0]]
    first_break = None
    for j in idx[1:]:
        if signs[j] != ref and signs[j] != 0.0:
            first_break = j
            break
    monotone = first_break is None
    direction = "increasing" if ref > 0 else ("decreasing" if ref < 0 else "flat")
    return {"monotone": bool(monotone), "direction": direction,
            "first_break_index": first_break, "n_samples": int(n_samples)}


# -- three-spheres checker --------------------------------------------------

_CASE_TABLE = {
    # case -> (zeta, p_relation, limit_at_zeta, profile_role)
    "1.1": (Zeta.ORIGIN, "p>d", "zero", "subsolution"),
    "1.2": (Zeta.ORIGIN, "p<=d", "infinity", "subsolution"),
    "1.3": (Zeta.INFINITY, "p>=d", "infinity", "subsolution"),
    "1.4": (Zeta.INFINITY, "p<d", "zero", "subsolution"),
    "2.1": (Zeta.ORIGIN, "p>d", "infinity", "supersolution"),
    "2.2": (Zeta.ORIGIN, "p<=d", "zero", "supersolution"),
    "2.3": (Zeta.INFINITY, "p>=d", "zero", "supersolution"),
    "2.4": (Zeta.INFINITY, "p<d", "infinity", "supersolution"),
}


def _p_relation_holds(rel: str, p: float, d: int) -> bool:
    return {"p>d": p > d, "p<d": p < d, "p>=d": p >= d, "p<=d": p <= d}[rel]


class TriplesStatus(str, Enum):
    PASS = "PASS"
    FAILED = "FAILED"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class TriplesReport:
    mode: str
    case: str
    status: TriplesStatus
    triples: tuple[tuple[float, float, float], ...]
    chord: tuple[float, ...]
    center: tuple[float, ...]
    slack: tuple[float, ...]
    scale: tuple[float, ...]
    worst_slack: float
    n_valid: int
    n_pass: int
    witnesses: tuple[int, ...]
    seed: int
    slack_tol: float
    notes: str = ""

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "case": self.case,
            "status": self.status.value,
            "n_valid": self.n_valid,
            "n_pass": self.n_pass,
            "worst_slack": self.worst_slack,
            "seed": self.seed,
            "slack_tol": self.slack_tol,
            "witnesses": list(self.witnesses),
            "notes": self.notes,
        }

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r1,r3,r2,center,chord,slack,scale\n")
            for (ra, rm, rb), c, h, s, sc in zip(
                self.triples, self.center, self.chord, self.slack, self.scale
            ):
                fh.write(",".join(f"{x:.17g}" for x in (ra, rm, rb, c, h, s, sc)) + "\n")


def check_three_spheres(profile, wolff: WolffTable, mode: str, case: str,
                        n_triples: int = 200, seed: int = 0,
                        slack_tol: float = 1e-9) -> TriplesReport:
    """Sample ordered radius triples and test the three-spheres inequality
    of the matching case row.

    A triple is admitted only where the proof's hypotheses hold
    numerically: the Wolff potential at the far radius is at most 1/2, the
    profile doubles (or halves) from the zeta-side radius to the far one
    according to the row's limit, and the interpolation slope dominates
    the profile (the comparison-function certificate).  On the admitted
    triples the convex rows require the profile at the middle radius to
    sit below the chord in the Wolff variable, the concave rows above it.
    """
    if mode not in ("convex", "concave"):
        raise ValueError("mode must be 'convex' or 'concave'")
    if case not in _CASE_TABLE:
        raise ValueError(f"unknown case row {case!r}")
    zeta_row, prel, limit_kind, role = _CASE_TABLE[case]
    params = wolff.params
    if params.zeta is not zeta_row:
        raise ValueError(f"case {case} applies to zeta={zeta_row.value}")
    if not _p_relation_holds(prel, params.p, params.d):
        raise ValueError(f"case {case} requires {prel}")
    expected_mode = "convex" if role == "subsolution" else "concave"
    if mode != expected_mode:
        raise ValueError(f"case {case} pairs with the {expected_mode} inequality")

    lo, hi = _profile_domain(profile)
    radii = [float(r) for r in wolff.radii if lo <= r <= hi]
    if isinstance(profile, RadialSolution):
        radii = sorted(set(radii).union(
            float(r) for r in profile.radii
            if wolff.radii[0] <= r <= wolff.radii[-1] and lo <= r <= hi
        ))
    if len(radii) < 3:
        raise WindowNotFoundError("fewer than three usable radii")

    wvals = {r: wolff.evaluator.value(r) for r in radii}
    uvals = {r: _profile_eval(profile, r) for r in radii}
    w_span = max(wvals.values()) - min(wvals.values())
    if w_span <= 1e-13 * max(1.0, max(wvals.values())):
        return TriplesReport(mode=mode, case=case, status=TriplesStatus.NOT_APPLICABLE,
                             triples=(), chord=(), center=(), slack=(), scale=(),
                             worst_slack=0.0, n_valid=0, n_pass=0, witnesses=(),
                             seed=seed, slack_tol=slack_tol,
                             notes="degenerate Wolff potential (zero envelope)")

    toward_zero = params.zeta is Zeta.ORIGIN
    rng = np.random.default_rng(seed)
    n = len(radii)
    accepted = []
    seen = set()
    attempts = 200 * n_triples
    for _ in range(attempts):
        if len(accepted) >= n_triples:
            break
        i, j, k = sorted(rng.choice(n, size=3, replace=False))
        if (i, j, k) in seen:
            continue
        seen.add((i, j, k))
        ra, rm, rb = radii[i], radii[j], radii[k]
        near, far = (ra, rb) if toward_zero else (rb, ra)
        u_near, u_far = uvals[near], uvals[far]
        if wvals[far] > 0.5:
            continue
        if limit_kind == "infinity":
            if not u_near > 2.0 * u_far:
                continue
        else:
            if not u_near < 0.5 * u_far:
                continue
        dw = wvals[rb] - wvals[ra]
        if dw == 0.0:
            continue
        slope = (uvals[rb] - uvals[ra]) / dw
        if not abs(slope) >= max(u_near, u_far):
            continue  # comparison-function certificate fails
        accepted.append((ra, rm, rb))

    if not accepted:
        raise WindowNotFoundError(
            "no radius triple satisfies the three-spheres window conditions"
        )

    chords, centers, slacks, scales, witnesses = [], [], [], [], []
    for idx, (ra, rm, rb) in enumerate(accepted):
        wa, wm, wb = wvals[ra], wvals[rm], wvals[rb]
        ua, um, ub = uvals[ra], uvals[rm], uvals[rb]
        chord = ua * (wb - wm) / (wb - wa) + ub * (wm - wa) / (wb - wa)
        slack = (chord - um) if mode == "convex" else (um - chord)
        scale = max(abs(ua), abs(um), abs(ub))
        chords.append(chord)
        centers.append(um)
        slacks.append(slack)
        scales.append(scale)
        if slack < -slack_tol * scale:
            witnesses.append(idx)

    status = TriplesStatus.PASS if not witnesses else TriplesStatus.FAILED
    return TriplesReport(
        mode=mode, case=case, status=status,
        triples=tuple(accepted), chord=tuple(chords), center=tuple(centers),
        slack=tuple(slacks), scale=tuple(scales),
        worst_slack=float(min(s / max(sc, 1e-300) for s, sc in zip(slacks, scales))),
        n_valid=len(accepted), n_pass=len(accepted) - len(witnesses),
        witnesses=tuple(witnesses), seed=seed, slack_tol=slack_tol,
    )


# -- singularity classification ---------------------------------------------


class SingularityTag(str, Enum):
    REMOVABLE = "removable"
    FINITE_POSITIVE_LIMIT = "finite_positive_limit"
    ZERO_LIMIT_FUNDAMENTAL_RATE = "zero_limit_fundamental_rate"
    INFINITE_FUNDAMENTAL_RATE = "infinite_limit_fundamental_rate"
    INFINITE_LOG_RATE = "infinite_limit_log_rate"


@dataclass(frozen=True)
class SingularityClass:
    tag: SingularityTag | None
    conclusive: bool
    limit: LimitEstimate
    fit: ExponentFit | None
    notes: str = ""

    def to_json_dict(self) -> dict:
        return {
            "tag": self.tag.value if self.tag else None,
            "conclusive": self.conclusive,
            "limit": self.limit.summary(),
            "rate": self.fit.rate if self.fit else None,
            "r_squared": self.fit.r_squared if self.fit else None,
            "notes": self.notes,
        }


def _growth_toward_zeta(fit: ExponentFit, params: ProblemParams) -> str:
    """'infinity', 'zero' or 'flat' from the fitted tail rate."""
    if fit.mode == "log":
        if fit.rate > 0.05:
            return "infinity"
        return "flat"
    slope = fit.rate
    if params.zeta is Zeta.ORIGIN:
        slope = -slope  # r decreasing toward zeta flips the reading
    if slope > 0.05:
        return "infinity"
    if slope < -0.05:
        return "zero"
    return "flat"


def classify_singularity(u, spec: PotentialSpec, params: ProblemParams,
                         rtol: float = 1e-6) -> SingularityClass:
    """Combine the accelerated limit and the tail fit into the singularity
    dichotomies: classical cases split into removable versus a
    fundamental-solution (or log) rate; nonclassical cases into a finite
    positive limit versus decay at the fundamental rate."""
    classical = classify_case(params).kind is CaseKind.CLASSICAL
    limit = estimate_limit(u, params, rtol=rtol)
    try:
        fit = fit_exponent(u, params)
    except (DomainTooShortError, ValueError):
        fit = None

    zero_floor = rtol * max(abs(x) for x in limit.samples)

    if limit.status is LimitStatus.CONVERGED:
        if classical:
            if limit.value <= zero_floor:
                return SingularityClass(None, False, limit, fit,
                                        "classical profile converged to zero; "
                                        "no dichotomy branch matches")
            return SingularityClass(SingularityTag.REMOVABLE, True, limit, fit)
        if limit.value <= zero_floor:
            notes = ""
            if fit is not None and spec.is_integrable_near_zeta(params):
                a = params.alpha_star
                if abs(fit.rate - a) > 0.05 * max(1.0, abs(a)):
                    notes = (f"fitted rate {fit.rate:.4f} deviates from the "
                             f"fundamental exponent {a:.4f}")
            return SingularityClass(SingularityTag.ZERO_LIMIT_FUNDAMENTAL_RATE,
                                    True, limit, fit, notes)
        return SingularityClass(SingularityTag.FINITE_POSITIVE_LIMIT, True, limit, fit)

    growth = _growth_toward_zeta(fit, params) if fit is not None else "unknown"
    if limit.status is LimitStatus.DIVERGED or growth == "infinity":
        if not classical:
            return SingularityClass(None, False, limit, fit,
                                    "profile grows toward zeta in a nonclassical "
                                    "case, contradicting the finite-limit theory")
        tag = (SingularityTag.INFINITE_LOG_RATE if params.is_critical_dimension
               else SingularityTag.INFINITE_FUNDAMENTAL_RATE)
        return SingularityClass(tag, True, limit, fit)
    if growth == "zero" and not classical:
        return SingularityClass(SingularityTag.ZERO_LIMIT_FUNDAMENTAL_RATE,
                                True, limit, fit)
    return SingularityClass(None, False, limit, fit, "limit inconclusive")


def minimal_growth_profile(spec: PotentialSpec, params: ProblemParams,
                           ball_radius: float, r_min: float = 1e-12,
                           rtol: float = 1e-9) -> tuple[RadialSolution, LimitEstimate]:
    """Radial profile vanishing on the outer sphere of the ball, followed
    inward to r_min, with its limit at the origin (p > d only: the origin
    carries capacity and the limit is a positive constant).

    With no potential the profile is exactly R^(a*) - r^(a*) under the
    flux normalization w(R) = -(a*)^(p-1)."""
    if params.zeta is not Zeta.ORIGIN or params.p <= params.d:
        raise NotApplicableError("minimal-growth profile needs p > d at the origin")
    R = float(ball_radius)
    if not 0.0 < r_min < R:
        raise ValueError("need 0 < r_min < ball_radius")
    a = params.alpha_star
    # start a hair inside the rim: v(R) = 0 exactly is outside the
    # positive-solution contract, and the offset is exact when V = 0
    delta = 1e-8
    r_start = R * (1.0 - delta)
    v_start = R**a - r_start**a
    w_start = -((a) ** (params.p - 1.0))
    cps = dyadic_radii(r_min * 1.0000001, r_start * 0.999, 60)
    sol = solve_ivp(spec, params, r_start, v_start, w_start, r_min,
                    rtol=rtol, atol=rtol, checkpoints=cps)
    limit = estimate_limit(sol, params)
    return sol, limit
