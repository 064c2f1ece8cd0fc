import math

import numpy as np
import pytest

from plaplab.analysis import (
    LimitStatus,
    SingularityTag,
    TriplesStatus,
    check_three_spheres,
    classify_singularity,
    estimate_limit,
    fit_exponent,
    minimal_growth_profile,
    monotone_tail,
    ratio_limit,
)
from plaplab.core import ProblemParams, RadialFunction, Zeta
from plaplab.errors import DomainTooShortError, NotApplicableError, WindowNotFoundError
from plaplab.potentials import PotentialSpec, SignRule
from plaplab.radial_ode import construct_extremal, solve_bvp
from plaplab.wolff import wolff_potential

P23 = ProblemParams(2.0, 3, Zeta.ORIGIN)
P42 = ProblemParams(4.0, 2, Zeta.ORIGIN)
ZERO = PotentialSpec.zero()


def radial(fn, domain):
    return RadialFunction(value=fn, domain=domain)


class TestEstimateLimit:
    def test_constant(self):
        lim = estimate_limit(radial(lambda r: 1.0, (1e-6, 1.0)), P23)
        assert lim.is_finite and lim.value == pytest.approx(1.0, abs=1e-12)

    def test_power_decay_to_zero(self):
        lim = estimate_limit(radial(lambda r: r**0.5, (1e-8, 1.0)), P23)
        assert lim.is_finite
        assert abs(lim.value) < 1e-8

    def test_slowly_converging_offset(self):
        lim = estimate_limit(radial(lambda r: 2.0 + r**0.25, (1e-10, 1.0)), P23)
        assert lim.is_finite
        assert lim.value == pytest.approx(2.0, rel=1e-6)

    def test_growth_not_reported_finite(self):
        lim = estimate_limit(radial(lambda r: 1.0 / r, (1e-8, 1.0)), P23)
        assert lim.status is not LimitStatus.CONVERGED

    def test_escape_threshold_tag(self):
        lim = estimate_limit(radial(lambda r: 1.0 / r, (1e-14, 1.0)), P23)
        assert lim.status is LimitStatus.DIVERGED
        assert lim.value == math.inf

    def test_domain_too_short(self):
        with pytest.raises(DomainTooShortError):
            estimate_limit(radial(lambda r: 1.0, (0.3, 1.0)), P23)

    def test_infinity_side(self):
        params = ProblemParams(2.0, 3, Zeta.INFINITY)
        lim = estimate_limit(radial(lambda r: 3.0 + 1.0 / r, (1.0, 1e8)), params)
        assert lim.is_finite
        assert lim.value == pytest.approx(3.0, rel=1e-6)


class TestFitExponent:
    def test_exact_power(self):
        fit = fit_exponent(radial(lambda r: r**-1.0, (1e-6, 1.0)), P23)
        assert fit.rate == pytest.approx(-1.0, abs=1e-10)
        assert fit.r_squared > 1 - 1e-12

    def test_log_mode_at_critical_dimension(self):
        params = ProblemParams(3.0, 3, Zeta.ORIGIN)
        fit = fit_exponent(radial(lambda r: 2.0 * abs(math.log(r)), (1e-6, 0.5)), params)
        assert fit.mode == "log"
        assert fit.rate == pytest.approx(2.0, rel=1e-10)

    def test_too_short_domain(self):
        with pytest.raises(DomainTooShortError):
            fit_exponent(radial(lambda r: r, (0.5, 1.0)), P23)


class TestRatioLimit:
    def test_identical_profiles(self):
        u = radial(lambda r: 1.0 + r, (1e-6, 1.0))
        lim = ratio_limit(u, u, P23)
        assert lim.is_finite and lim.value == pytest.approx(1.0, abs=1e-12)

    def test_proportional_bvp_solutions(self):
        a = solve_bvp(ZERO, P23, 0.001, 1.0, 3.0 / 0.001, 3.0)
        b = solve_bvp(ZERO, P23, 0.001, 1.0, 1.0 / 0.001, 1.0)
        lim = ratio_limit(a, b, P23)
        assert lim.is_finite
        assert lim.value == pytest.approx(3.0, rel=1e-6)

    def test_symmetry_product_is_one(self):
        u = radial(lambda r: 2.0 + r**0.5, (1e-8, 1.0))
        v = radial(lambda r: 0.5 + r, (1e-8, 1.0))
        ab = ratio_limit(u, v, P23)
        ba = ratio_limit(v, u, P23)
        assert ab.value * ba.value == pytest.approx(1.0, rel=1e-6)

    def test_small_over_large_vanishes(self):
        small, _ = construct_extremal(ZERO, P23, "small", (1e-6, 0.5))
        large, _ = construct_extremal(ZERO, P23, "large", (1e-6, 0.5))
        lim = ratio_limit(small, large, P23)
        assert lim.is_finite
        assert abs(lim.value) < 1e-10


class TestMonotoneTail:
    def test_power_profile(self):
        rep = monotone_tail(radial(lambda r: r**0.5, (1e-6, 1.0)), P42)
        assert rep["monotone"] and rep["direction"] == "increasing"

    def test_noisy_profile_detected(self):
        wiggle = radial(lambda r: 1.0 + 0.5 * math.sin(3.0 * math.log(r)), (1e-6, 1.0))
        rep = monotone_tail(wiggle, P23)
        assert not rep["monotone"]
        assert rep["first_break_index"] is not None


class TestThreeSpheres:
    def _wolff_21(self):
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        radii = np.geomspace(1e-5, 4e-3, 90)
        return spec, wolff_potential(spec, P42, radii)

    def test_interpolant_zero_slack(self):
        spec, W = self._wolff_21()
        w_hi = W.evaluator.value(4e-3)
        prof = radial(lambda r: 10.0 - (9.0 / w_hi) * W.evaluator.value(r), (1e-5, 4e-3))
        rep = check_three_spheres(prof, W, "concave", "2.1", n_triples=200, seed=7)
        assert rep.status is TriplesStatus.PASS
        assert rep.n_valid == 200
        assert all(abs(s) <= 1e-9 * sc for s, sc in zip(rep.slack, rep.scale))

    def test_ode_solution_case_21(self):
        spec, W = self._wolff_21()
        sol = solve_bvp(spec, P42, 1e-5, 4e-3, 4.0, 1.0)
        rep = check_three_spheres(sol, W, "concave", "2.1", n_triples=200, seed=1)
        assert rep.status is TriplesStatus.PASS
        assert rep.n_valid >= 100

    def test_ode_solution_case_14(self):
        params = ProblemParams(2.0, 3, Zeta.INFINITY)
        spec = PotentialSpec.power_law(0.5, Zeta.INFINITY, SignRule.MINUS)
        radii = np.geomspace(100.0, 1e4, 90)
        W = wolff_potential(spec, params, radii)
        sol = solve_bvp(spec, params, 100.0, 1e4, 1.0, 0.01)
        rep = check_three_spheres(sol, W, "convex", "1.4", n_triples=200, seed=1)
        assert rep.status is TriplesStatus.PASS
        assert rep.n_valid >= 100

    def test_mode_case_consistency_enforced(self):
        spec, W = self._wolff_21()
        prof = radial(lambda r: 1.0, (1e-5, 4e-3))
        with pytest.raises(ValueError):
            check_three_spheres(prof, W, "convex", "2.1")
        with pytest.raises(ValueError):
            check_three_spheres(prof, W, "concave", "1.4")  # wrong zeta

    def test_zero_envelope_not_applicable(self):
        W = wolff_potential(ZERO, P42, np.geomspace(1e-4, 1e-2, 20))
        prof = radial(lambda r: 1.0, (1e-4, 1e-2))
        rep = check_three_spheres(prof, W, "concave", "2.1")
        assert rep.status is TriplesStatus.NOT_APPLICABLE

    def test_window_not_found_for_flat_profile(self):
        spec, W = self._wolff_21()
        prof = radial(lambda r: 1.0, (1e-5, 4e-3))  # never doubles
        with pytest.raises(WindowNotFoundError):
            check_three_spheres(prof, W, "concave", "2.1", n_triples=50, seed=3)

    def test_counterexample_profile_fails(self):
        # r^-0.4 blows up at 0 but is convex in the Wolff variable:
        # the concave inequality must report the witnesses
        spec, W = self._wolff_21()
        prof = radial(lambda r: r**-0.4, (1e-5, 4e-3))
        rep = check_three_spheres(prof, W, "concave", "2.1", n_triples=100, seed=5)
        assert rep.status is TriplesStatus.FAILED
        assert len(rep.witnesses) > 0

    def test_report_serialization(self, tmp_path):
        spec, W = self._wolff_21()
        sol = solve_bvp(spec, P42, 1e-5, 4e-3, 4.0, 1.0)
        rep = check_three_spheres(sol, W, "concave", "2.1", n_triples=50, seed=2)
        d = rep.to_json_dict()
        assert d["status"] == "PASS" and d["case"] == "2.1"
        path = tmp_path / "triples.csv"
        rep.to_csv(path)
        assert path.read_text().splitlines()[0] == "r1,r3,r2,center,chord,slack,scale"


class TestClassify:
    def test_zero_potential_quadrants(self):
        small23, _ = construct_extremal(ZERO, P23, "small", (1e-6, 0.5))
        assert classify_singularity(small23, ZERO, P23).tag is SingularityTag.REMOVABLE
        large23, _ = construct_extremal(ZERO, P23, "large", (1e-6, 0.5))
        assert (classify_singularity(large23, ZERO, P23).tag
                is SingularityTag.INFINITE_FUNDAMENTAL_RATE)
        small42, _ = construct_extremal(ZERO, P42, "small", (1e-6, 0.5))
        assert (classify_singularity(small42, ZERO, P42).tag
                is SingularityTag.ZERO_LIMIT_FUNDAMENTAL_RATE)
        large42, _ = construct_extremal(ZERO, P42, "large", (1e-6, 0.5))
        assert (classify_singularity(large42, ZERO, P42).tag
                is SingularityTag.FINITE_POSITIVE_LIMIT)

    def test_critical_dimension_log_rate(self):
        params = ProblemParams(3.0, 3, Zeta.ORIGIN)
        large, _ = construct_extremal(ZERO, params, "large", (1e-6, 0.5))
        cls = classify_singularity(large, ZERO, params)
        assert cls.tag is SingularityTag.INFINITE_LOG_RATE
        assert cls.fit.mode == "log"

    def test_never_removable_in_nonclassical(self):
        # a bounded profile with positive limit in the nonclassical case
        prof = radial(lambda r: 1.0 + r, (1e-8, 1.0))
        cls = classify_singularity(prof, ZERO, P42)
        assert cls.tag is not SingularityTag.REMOVABLE
        assert cls.tag is SingularityTag.FINITE_POSITIVE_LIMIT

    def test_dichotomy_zero_vs_positive(self):
        cls = classify_singularity(radial(lambda r: r**0.5, (1e-8, 1.0)), ZERO, P42)
        assert cls.tag is SingularityTag.ZERO_LIMIT_FUNDAMENTAL_RATE
        # FinitePositiveLimit never carries a zero value
        cls2 = classify_singularity(radial(lambda r: 0.7 + r, (1e-8, 1.0)), ZERO, P42)
        assert cls2.tag is SingularityTag.FINITE_POSITIVE_LIMIT
        assert cls2.limit.value > 0.0


class TestMinimalGrowth:
    def test_zero_potential_closed_form(self):
        sol, lim = minimal_growth_profile(ZERO, P42, 1.0)
        mask = sol.radii < 0.9
        exact = 1.0 - sol.radii ** (2.0 / 3.0)
        rel = np.abs(sol.v - exact)[mask] / exact[mask]
        assert np.max(rel) <= 1e-6
        assert lim.is_finite and lim.value == pytest.approx(1.0, rel=1e-9)

    def test_general_radius(self):
        sol, lim = minimal_growth_profile(ZERO, P42, 2.0, r_min=1e-10)
        assert lim.value == pytest.approx(2.0 ** (2.0 / 3.0), rel=1e-8)

    def test_perturbed_limit_positive(self):
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        sol, lim = minimal_growth_profile(spec, P42, 1.0)
        assert lim.is_finite
        assert lim.value > 0.0

    def test_requires_nonclassical_origin(self):
        with pytest.raises(NotApplicableError):
            minimal_growth_profile(ZERO, P23, 1.0)
