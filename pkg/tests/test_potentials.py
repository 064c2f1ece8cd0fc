import math

import numpy as np
import pytest

from plaplab.core import ProblemParams, Zeta
from plaplab.errors import OutOfTableError
from plaplab.potentials import (
    ConditionStatus,
    Family,
    PotentialSpec,
    SignRule,
    check_dini_condition,
    check_fuchsian,
    check_kato_condition,
    eval_potential,
    load_tabulated,
    rescaled_potential_norm,
)

P23 = ProblemParams(2.0, 3, Zeta.ORIGIN)


def c1_power_closed_form(p, d, eps):
    # int_0^1 t^(a*) (t^k / k)^(1/(p-1)) dt/t with k = eps + d - p, for p < d
    k = eps + d - p
    return k ** (-1.0 / (p - 1.0)) * (p - 1.0) / eps


class TestEval:
    def test_zero(self):
        spec = PotentialSpec.zero()
        assert eval_potential(spec, P23, 0.123) == 0.0

    def test_hardy_minus_sign(self):
        spec = PotentialSpec.hardy(1.0, sign=SignRule.MINUS)
        assert eval_potential(spec, P23, 2.0) == pytest.approx(-0.25, abs=0)

    def test_power_law_value(self):
        # g(r) = r with p=3: |V| = r^(1-p) = r^-2
        params = ProblemParams(3.0, 4, Zeta.ORIGIN)
        spec = PotentialSpec.power_law(1.0, sign=SignRule.PLUS)
        assert eval_potential(spec, params, 0.1) == pytest.approx(100.0, rel=1e-13)
        assert eval_potential(spec, params, 0.1, envelope=True) == pytest.approx(100.0, rel=1e-13)

    def test_oscillating_sign_bounded_by_envelope(self):
        spec = PotentialSpec.power_law(1.0, sign=SignRule.OSCILLATING)
        for r in np.geomspace(1e-3, 1.0, 40):
            v = eval_potential(spec, P23, float(r))
            env = eval_potential(spec, P23, float(r), envelope=True)
            assert abs(v) <= env + 1e-300

    def test_tabulated_out_of_range(self):
        spec = PotentialSpec.tabulated([0.1, 1.0], [1.0, 2.0])
        with pytest.raises(OutOfTableError):
            eval_potential(spec, P23, 0.01)

    def test_tabulated_loglog_interpolation(self):
        rr = np.geomspace(1e-2, 1.0, 9)
        spec = PotentialSpec.tabulated(rr, rr**1.5)
        # exact on a power law
        assert spec.g_value(0.05) == pytest.approx(0.05**1.5, rel=1e-12)

    def test_tabulated_validation(self):
        with pytest.raises(ValueError):
            PotentialSpec.tabulated([1.0, 0.5], [1.0, 1.0])
        with pytest.raises(ValueError):
            PotentialSpec.tabulated([0.5, 1.0], [1.0, -1.0])
        with pytest.raises(ValueError):
            PotentialSpec.tabulated([0.5, 1.0], [1.0, math.nan])


class TestFuchsian:
    def test_zero(self):
        rep = check_fuchsian(PotentialSpec.zero(), P23)
        assert rep["bound"] == 0.0 and rep["holds"]

    def test_hardy_bound_exact(self):
        rep = check_fuchsian(PotentialSpec.hardy(0.7), P23)
        assert rep["holds"]
        assert rep["bound"] == pytest.approx(0.7, abs=1e-12)

    def test_misoriented_tail_grows(self):
        rr = np.geomspace(1e-4, 1.0, 30)
        spec = PotentialSpec.tabulated(rr, 1.0 / rr)  # g ~ r^-1 toward 0
        rep = check_fuchsian(spec, P23, probe_decades=8)
        assert not rep["holds"]

    def test_probe_decades_validated(self):
        with pytest.raises(ValueError):
            check_fuchsian(PotentialSpec.zero(), P23, probe_decades=1)


class TestKato:
    @pytest.mark.parametrize("p,d,eps", [(2.0, 3, 1.0), (2.0, 3, 0.5), (3.0, 5, 2.0), (1.5, 2, 1.0)])
    def test_classical_power_closed_form(self, p, d, eps):
        params = ProblemParams(p, d, Zeta.ORIGIN)
        verdict = check_kato_condition(PotentialSpec.power_law(eps), params, tol=1e-8)
        assert verdict.is_finite
        assert verdict.value == pytest.approx(c1_power_closed_form(p, d, eps), rel=1e-7)

    @pytest.mark.parametrize("p,d,eps", [(4.0, 2, 1.0), (4.0, 2, 3.0), (3.0, 2, 0.5)])
    def test_nonclassical_power_finite(self, p, d, eps):
        params = ProblemParams(p, d, Zeta.ORIGIN)
        verdict = check_kato_condition(PotentialSpec.power_law(eps), params, tol=1e-8)
        assert verdict.is_finite

    def test_infinity_classical_closed_form(self):
        # mirrored closed form at infinity for p >= d
        p, d, eps = 4.0, 2, 1.0
        params = ProblemParams(p, d, Zeta.INFINITY)
        spec = PotentialSpec.power_law(eps, Zeta.INFINITY)
        verdict = check_kato_condition(spec, params, tol=1e-8)
        want = (eps + p - d) ** (-1.0 / (p - 1.0)) * (p - 1.0) / eps
        assert verdict.is_finite
        assert verdict.value == pytest.approx(want, rel=1e-7)

    @pytest.mark.parametrize("p,d,beta", [(2.0, 3, 3.0), (4.0, 2, 4.0), (3.0, 3, 5.0)])
    def test_log_power_prototype_finite(self, p, d, beta):
        params = ProblemParams(p, d, Zeta.ORIGIN)
        spec = PotentialSpec.log_power(beta)
        assert check_kato_condition(spec, params, tol=1e-4).is_finite

    def test_hardy_envelope_divergent(self):
        verdict = check_kato_condition(PotentialSpec.hardy(1.0), P23)
        assert verdict.status is ConditionStatus.DIVERGENT

    def test_zero_finite(self):
        verdict = check_kato_condition(PotentialSpec.zero(), P23)
        assert verdict.is_finite and verdict.value == 0.0

    def test_zeta_mismatch_rejected(self):
        spec = PotentialSpec.power_law(1.0, Zeta.INFINITY)
        with pytest.raises(ValueError):
            check_kato_condition(spec, P23)


class TestDini:
    def test_power_closed_form(self):
        # int_0^1 r^eps / r dr = 1/eps
        verdict = check_dini_condition(PotentialSpec.power_law(0.5), P23, tol=1e-8)
        assert verdict.is_finite
        assert verdict.value == pytest.approx(2.0, rel=1e-8)

    def test_log_power_closed_form(self):
        # int (1 - log s)^-3 ds/s over (0, 1) = 1/2
        verdict = check_dini_condition(PotentialSpec.log_power(3.0), P23, tol=1e-4)
        assert verdict.is_finite
        assert verdict.value == pytest.approx(0.5, rel=1e-3)

    def test_critical_dimension_weight(self):
        # p = d: the |log|^(d-1) weight shifts the threshold to beta > p
        params = ProblemParams(3.0, 3, Zeta.ORIGIN)
        assert check_dini_condition(PotentialSpec.log_power(5.0), params, tol=1e-4).is_finite
        low = check_dini_condition(PotentialSpec.log_power(2.0), params)
        assert low.status is ConditionStatus.DIVERGENT

    def test_hardy_divergent(self):
        verdict = check_dini_condition(PotentialSpec.hardy(1.0), P23)
        assert verdict.status is ConditionStatus.DIVERGENT

    def test_infinity_side(self):
        params = ProblemParams(2.0, 3, Zeta.INFINITY)
        spec = PotentialSpec.power_law(0.5, Zeta.INFINITY)
        verdict = check_dini_condition(spec, params, tol=1e-8)
        assert verdict.is_finite
        assert verdict.value == pytest.approx(2.0, rel=1e-8)


class TestPrototypeInvariant:
    """Every prototype family passes both conditions; g = 1 fails both."""

    @pytest.mark.parametrize("p,d", [(2.0, 3), (4.0, 2), (3.0, 3)])
    @pytest.mark.parametrize("zeta", list(Zeta))
    def test_prototypes_finite(self, p, d, zeta):
        params = ProblemParams(p, d, zeta)
        specs = [PotentialSpec.power_law(1.0, zeta)]
        beta = p + 2.0 if p == d else 2.0 * p
        specs.append(PotentialSpec.log_power(beta, zeta))
        for spec in specs:
            assert check_kato_condition(spec, params, tol=1e-4).is_finite, spec.label()
            assert check_dini_condition(spec, params, tol=1e-4).is_finite, spec.label()

    @pytest.mark.parametrize("zeta", list(Zeta))
    def test_constant_envelope_divergent(self, zeta):
        params = ProblemParams(2.0, 3, zeta)
        spec = PotentialSpec.hardy(1.0, zeta)
        assert check_kato_condition(spec, params).status is ConditionStatus.DIVERGENT
        assert check_dini_condition(spec, params).status is ConditionStatus.DIVERGENT


class TestRescaling:
    def test_zero(self):
        assert rescaled_potential_norm(PotentialSpec.zero(), P23, 0.5) == 0.0

    def test_power_law_decays_dyadically(self):
        spec = PotentialSpec.power_law(1.0)
        values = [rescaled_potential_norm(spec, P23, 2.0**-k) for k in range(1, 12)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_hardy_scale_invariant(self):
        spec = PotentialSpec.hardy(0.3)
        v1 = rescaled_potential_norm(spec, P23, 1e-2, (1.0, 2.0))
        v2 = rescaled_potential_norm(spec, P23, 1e-8, (1.0, 2.0))
        assert v1 == pytest.approx(0.3, rel=1e-12)
        assert v2 == pytest.approx(v1, rel=1e-12)

    def test_matches_analytic_power_maximum(self):
        # sup over [1,2] of R^eps x^(eps-p) is attained at x = 1 for eps < p
        spec = PotentialSpec.power_law(1.0)
        got = rescaled_potential_norm(spec, P23, 2.0**-5, (1.0, 2.0))
        assert got == pytest.approx(2.0**-5, rel=1e-12)


class TestTableIO:
    def test_load_tabulated_roundtrip(self, tmp_path):
        path = tmp_path / "table.txt"
        path.write_text("# radius value\n0.1 2.0\n0.5 1.0  # inline note\n\n1.0 0.5\n")
        radii, values = load_tabulated(path)
        assert radii == [0.1, 0.5, 1.0]
        assert values == [2.0, 1.0, 0.5]
        spec = PotentialSpec.from_file(path)
        assert spec.family is Family.TABULATED
        assert spec.g_value(0.5) == pytest.approx(1.0)

    def test_malformed_table_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0.1 1.0 extra\n")
        with pytest.raises(ValueError):
            load_tabulated(path)

    def test_tabulated_condition_flags_extension(self):
        rr = np.geomspace(1e-3, 1.0, 15)
        spec = PotentialSpec.tabulated(rr, rr)  # behaves like g = r
        verdict = check_kato_condition(spec, P23, tol=1e-8)
        assert verdict.is_finite
        assert verdict.tabulated_extension
        assert verdict.value == pytest.approx(c1_power_closed_form(2.0, 3, 1.0), rel=1e-4)


class TestIntegrability:
    def test_power_law_origin(self):
        assert PotentialSpec.power_law(1.5).is_integrable_near_zeta(ProblemParams(4.0, 2)) is False
        assert PotentialSpec.power_law(3.0).is_integrable_near_zeta(ProblemParams(4.0, 2)) is True
        assert PotentialSpec.power_law(1.0).is_integrable_near_zeta(P23) is True

    def test_power_law_infinity(self):
        params = ProblemParams(2.0, 3, Zeta.INFINITY)
        assert PotentialSpec.power_law(2.0, Zeta.INFINITY).is_integrable_near_zeta(params) is True
        assert PotentialSpec.power_law(0.5, Zeta.INFINITY).is_integrable_near_zeta(params) is False
