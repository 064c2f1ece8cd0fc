import math

import numpy as np
import pytest

from plaplab.core import ProblemParams, Zeta, fundamental_solution
from plaplab.errors import PositivityLostError
from plaplab.hardy import hardy_exponents
from plaplab.potentials import PotentialSpec, SignRule
from plaplab.radial_ode import (
    build_envelopes,
    chain_identity_residual,
    construct_extremal,
    envelope_kind_for,
    flux_from_derivative,
    fundamental_flux,
    solve_bvp,
    solve_ivp,
)

ZERO = PotentialSpec.zero()


class TestIVP:
    def test_fundamental_family_reproduced(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        A, B = 0.5, 0.5
        sol = solve_ivp(ZERO, params, 1.0, A + B, fundamental_flux(params, A), 1e-4)
        exact = A / sol.radii + B
        assert np.max(np.abs(sol.v - exact) / exact) < 1e-8

    def test_constant_is_solution(self):
        params = ProblemParams(3.0, 2, Zeta.ORIGIN)
        sol = solve_ivp(ZERO, params, 1.0, 1.0, 0.0, 1e-3)
        np.testing.assert_allclose(sol.v, 1.0, rtol=0, atol=0)

    def test_flux_conserved_without_potential(self):
        params = ProblemParams(4.0, 2, Zeta.ORIGIN)
        sol = solve_ivp(ZERO, params, 1.0, 1.0, fundamental_flux(params, 1.0), 1e-5)
        assert np.ptp(sol.w) <= 1e-10 * abs(sol.w[0])

    def test_hardy_power_solution(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        lam = 0.1
        gamma = hardy_exponents(params, lam).gamma_plus
        spec = PotentialSpec.hardy(lam, sign=SignRule.MINUS)
        w0 = flux_from_derivative(params, 1.0, gamma)
        sol = solve_ivp(spec, params, 1.0, 1.0, w0, 1e-3)
        exact = sol.radii**gamma
        assert np.max(np.abs(sol.v - exact) / exact) < 1e-6

    def test_positivity_loss_detected(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        # v = 1.1 - 1/r crosses zero at r = 1/1.1 on the way down
        with pytest.raises(PositivityLostError) as err:
            solve_ivp(ZERO, params, 1.0, 0.1, fundamental_flux(params, -1.0), 0.5)
        partial = err.value.partial
        assert partial is not None
        assert np.all(partial.v > 0.0)

    def test_checkpoints_landed_exactly(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        marks = [0.3, 0.07, 0.011]
        sol = solve_ivp(ZERO, params, 1.0, 1.0, -0.5, 1e-3, checkpoints=marks)
        for r in marks:
            assert np.any(sol.s == math.log(r))

    def test_backend_metadata(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        sol = solve_ivp(ZERO, params, 1.0, 1.0, -0.5, 0.5)
        assert sol.metadata["backend"] in ("compiled", "python")
        assert sol.metadata["steps"] > 0


class TestBVP:
    def test_harmonic_profile(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        sol = solve_bvp(ZERO, params, 1.0, 2.0, 1.0, 0.5)
        np.testing.assert_allclose(sol.v, 1.0 / sol.radii, rtol=1e-7)

    def test_fundamental_profile_p_above_d(self):
        params = ProblemParams(4.0, 2, Zeta.ORIGIN)
        a = params.alpha_star
        sol = solve_bvp(ZERO, params, 0.01, 1.0, 0.01**a, 1.0)
        np.testing.assert_allclose(sol.v, sol.radii**a, rtol=1e-7)

    def test_endpoint_matched_to_tolerance(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        sol = solve_bvp(spec, params, 0.1, 1.0, 2.0, 1.0, tol=1e-9)
        assert abs(sol.metadata["endpoint_mismatch"]) <= 1e-9 * 1.0 * 1.01

    def test_mismatch_monotone_in_flux(self):
        params = ProblemParams(3.0, 2, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(0.5, sign=SignRule.MINUS)
        sol = solve_bvp(spec, params, 0.5, 2.0, 1.0, 1.5)
        assert sol.metadata["mismatch_monotone_in_flux"]

    def test_solution_between_envelopes(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        pair = build_envelopes(spec, params, "unit", (1e-3, 0.25))
        r_lo, r_hi = pair.domain
        data = [math.sqrt(pair.lower(r) * pair.upper(r)) for r in (r_lo, r_hi)]
        sol = solve_bvp(spec, params, r_lo, r_hi, data[0], data[1])
        for i, r in enumerate(sol.radii):
            assert pair.lower(float(r)) * (1 - 1e-6) <= sol.v[i] <= pair.upper(float(r)) * (1 + 1e-6)

    def test_gradient_bound_stable_under_refinement(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        coarse = solve_bvp(spec, params, 0.01, 1.0, 100.0, 1.0, max_step=0.05)
        fine = solve_bvp(spec, params, 0.01, 1.0, 100.0, 1.0, max_step=0.025)
        b1, b2 = coarse.gradient_bound(), fine.gradient_bound()
        assert abs(b1 - b2) <= 0.05 * max(b1, b2)
        assert math.isfinite(b1)


class TestEnvelopes:
    @pytest.mark.parametrize("p,d,zeta", [
        (2.0, 3, Zeta.ORIGIN), (4.0, 2, Zeta.ORIGIN),
        (2.0, 3, Zeta.INFINITY), (4.0, 2, Zeta.INFINITY),
    ])
    @pytest.mark.parametrize("kind", ["unit", "fundamental"])
    def test_certified_in_all_quadrants(self, p, d, zeta, kind):
        params = ProblemParams(p, d, zeta)
        spec = PotentialSpec.power_law(1.0, zeta, SignRule.MINUS)
        domain = (1e-4, 0.5) if zeta is Zeta.ORIGIN else (2.0, 1e4)
        pair = build_envelopes(spec, params, kind, domain)
        assert pair.certified
        for r in pair.check_radii:
            assert 0.0 < pair.lower(float(r)) <= pair.upper(float(r)) * (1 + 1e-12)

    def test_zero_potential_unit_envelopes_are_one(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        pair = build_envelopes(ZERO, params, "unit", (1e-3, 0.5))
        assert pair.certified
        for r in (1e-3, 0.03, 0.5):
            assert pair.lower(r) == pytest.approx(1.0, rel=1e-9)
            assert pair.upper(r) == pytest.approx(1.0, rel=1e-9)

    def test_fundamental_envelopes_hug_fundamental_solution(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        pair = build_envelopes(spec, params, "fundamental", (1e-6, 0.1))
        fund = fundamental_solution(params)
        # raw profiles approach v_fund toward the singular point
        r_small, r_big = pair.domain[0], math.sqrt(pair.domain[0] * pair.domain[1])
        for fn in (pair.sub, pair.sup):
            assert fn(r_small) / fund(r_small) == pytest.approx(1.0, abs=2e-3)


class TestExtremal:
    def test_kind_selection(self):
        assert envelope_kind_for(ProblemParams(2.0, 3, Zeta.ORIGIN), "small") == "unit"
        assert envelope_kind_for(ProblemParams(4.0, 2, Zeta.ORIGIN), "small") == "fundamental"
        assert envelope_kind_for(ProblemParams(4.0, 2, Zeta.INFINITY), "large") == "fundamental"

    def test_zero_potential_small_and_large(self):
        # classical: small ~ 1, large ~ fundamental
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        small, _ = construct_extremal(ZERO, params, "small", (1e-6, 0.5))
        np.testing.assert_allclose(small.v, 1.0, rtol=1e-8)
        large, _ = construct_extremal(ZERO, params, "large", (1e-6, 0.5))
        np.testing.assert_allclose(large.v * large.radii, large.radii[0] * large.v[0],
                                   rtol=1e-7)

    def test_small_over_large_vanishes(self):
        params = ProblemParams(4.0, 2, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        small, _ = construct_extremal(spec, params, "small", (1e-6, 0.5))
        large, _ = construct_extremal(spec, params, "large", (1e-6, 0.5))
        r_probe = max(small.domain[0], large.domain[0]) * 1.0000001
        ratios = []
        for r in [r_probe, r_probe * 10, r_probe * 100]:
            ratios.append(small.value_at(r) / large.value_at(r))
        assert ratios[0] < ratios[-1] < 0.2  # ratio shrinks toward zeta

    def test_envelope_bracketing_recorded(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        sol, pair = construct_extremal(spec, params, "small", (1e-5, 0.5))
        assert sol.metadata["envelope_bracketed"]
        assert sol.metadata["envelope_kind"] == "unit"


class TestChainIdentity:
    def test_identity_map_is_exact(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        sol = solve_bvp(spec, params, 0.01, 1.0, 100.0, 1.0, max_step=0.005)
        rep = chain_identity_residual(sol, "power", spec, params, beta=1.0)
        assert rep["max_rel_mismatch"] <= 1e-5

    @pytest.mark.parametrize("kind,beta", [("power", 2.0), ("exp", None), ("log", None)])
    def test_solved_profile(self, kind, beta):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.MINUS)
        sol = solve_bvp(spec, params, 0.01, 1.0, 100.0, 1.0, max_step=0.01)
        rep = chain_identity_residual(sol, kind, spec, params, beta=beta)
        assert rep["max_rel_mismatch"] <= 1e-5

    def test_degenerate_exponent_bvp(self):
        # p = 3 profile via scale-invariant data: one-signed flux
        params = ProblemParams(3.0, 2, Zeta.ORIGIN)
        lam = 0.02
        gamma = hardy_exponents(params, lam).gamma_plus
        spec = PotentialSpec.hardy(lam, sign=SignRule.MINUS)
        sol = solve_bvp(spec, params, 0.5, 2.0, 0.5**gamma, 2.0**gamma, max_step=0.01)
        rep = chain_identity_residual(sol, "exp", spec, params)
        assert rep["max_rel_mismatch"] <= 1e-5

    def test_power_map_requires_positive_beta(self):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        sol = solve_bvp(ZERO, params, 1.0, 2.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            chain_identity_residual(sol, "power", ZERO, params, beta=-1.0)


class TestExports:
    def test_solution_csv_and_metadata(self, tmp_path):
        params = ProblemParams(2.0, 3, Zeta.ORIGIN)
        sol = solve_bvp(ZERO, params, 1.0, 2.0, 1.0, 0.5)
        path = tmp_path / "sol.csv"
        sol.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "r,v,w,residual"
        assert "steps" in sol.metadata and "rtol" in sol.metadata
