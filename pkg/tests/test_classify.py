import math

import numpy as np
import pytest

from fppe.classify import (
    Regime,
    V,
    blowup_time_lower,
    blowup_time_upper,
    classify,
    decay_bounds,
    decay_constants,
    eta_alpha2,
    growth_constants,
    rate_envelopes,
)
from fppe.domain import SpectralField
from fppe.errors import BracketError


def test_regimes(domain, disc, constants, phi0):
    rep = classify(0.5 * phi0, constants, domain, disc=disc)
    assert rep.regime is Regime.GLOBAL_DECAY and rep.I0 > 0 and rep.J0 < rep.d
    rep = classify(1.5 * phi0, constants, domain, disc=disc)
    assert rep.regime is Regime.BLOW_UP and rep.I0 < 0 and rep.J0 < rep.d
    rep = classify(3.0 * phi0, constants, domain, disc=disc)
    assert rep.regime is Regime.BLOW_UP and rep.J0 < 0
    assert rep.K == 3.0 and rep.script_J0 == -rep.J0
    assert rep.eta is None and rep.alpha2 is None


def test_indeterminate(domain, disc, constants, phi0):
    assert classify(SpectralField.zeros(64), constants, domain, disc=disc).regime is Regime.INDETERMINATE
    # phi0 itself sits at J = d
    assert classify(phi0, constants, domain, disc=disc).regime is Regime.INDETERMINATE


def test_report_serializes(domain, disc, constants, phi0):
    doc = classify(1.5 * phi0, constants, domain, disc=disc).as_dict()
    assert doc["regime"] == "BlowUp"
    assert doc["T_lower"] <= doc["T_upper"]


class TestDecayConstants:
    def test_limits(self, constants):
        Cs, d = constants.hardy_C_star, constants.depth_d
        assert decay_constants(d * (1 - 1e-12), d, Cs, 3.0).delta < 1e-5
        assert decay_constants(1e-300, d, Cs, 3.0).delta == pytest.approx(2 / (1 + Cs), rel=1e-12)

    def test_quarter_depth(self, constants):
        Cs, d = constants.hardy_C_star, constants.depth_d
        dc = decay_constants(d / 4, d, Cs, 3.0)
        assert dc.delta == pytest.approx(1 / (1 + Cs), rel=1e-14)
        delta = dc.delta
        assert dc.kappa_statement == pytest.approx(12 * delta / (2 * delta + 1), rel=1e-14)
        assert dc.kappa_proof == pytest.approx(6 * delta / (delta + 1), rel=1e-14)

    def test_rejects_above_depth(self):
        with pytest.raises(ValueError):
            decay_constants(1.0, 1.0, 1.0, 3.0)


class TestEtaAlpha2:
    def test_zero_energy(self, constants):
        eta, a2 = eta_alpha2(0.0, constants, 3.0)
        assert eta == pytest.approx(1.5, rel=1e-14)
        assert abs(V(a2, constants.embedding_C, 3.0)) <= 1e-12

    def test_zero_energy_p4(self, constants):
        import dataclasses
        c4 = dataclasses.replace(constants, alpha1=constants.embedding_C ** (2 / (2 - 4.0)))
        eta, _ = eta_alpha2(0.0, c4, 4.0)
        assert eta == pytest.approx(math.sqrt(2), rel=1e-14)

    @pytest.mark.parametrize("frac", [0.0, 0.1, 0.5, 0.9, 0.999])
    def test_root_replay(self, constants, frac):
        J0 = frac * constants.depth_d
        eta, a2 = eta_alpha2(J0, constants, 3.0)
        assert abs(V(a2, constants.embedding_C, 3.0) - J0) <= 1e-12
        assert a2 > constants.alpha1
        assert a2 / constants.alpha1 >= eta - 1e-9

    def test_no_bracket_at_depth(self, constants):
        with pytest.raises(BracketError):
            eta_alpha2(1.01 * constants.depth_d_from_embedding, constants, 3.0)


class TestGrowthConstants:
    def test_negative_branch(self):
        assert growth_constants(-0.7, 0.5, None, 3.0) == (3.0, 0.7)

    def test_K_decreases_toward_two(self, constants):
        d = constants.depth_d
        Ks = [growth_constants(f * d, d, eta_alpha2(f * d, constants, 3.0)[0], 3.0)[0]
              for f in np.linspace(0, 0.99, 12)]
        assert np.all(np.diff(Ks) < 0)
        assert Ks[0] == pytest.approx(2 + (1.5 ** 3 - 1) / 1.5 ** 3)
        assert 2 < Ks[-1]


class TestTimeBounds:
    def test_upper_linear_in_gap(self):
        assert blowup_time_upper(2.0, 3.0, 1.0) == pytest.approx(2 * blowup_time_upper(2.0, 3.0, 2.0))
        with pytest.raises(ValueError):
            blowup_time_upper(2.0, 3.0, 0.0)

    def test_lower_decreasing_in_mass(self):
        assert blowup_time_lower(4.0, 0.8, 3.0) < blowup_time_lower(2.0, 0.8, 3.0)
        with pytest.raises(ValueError):
            blowup_time_lower(0.0, 0.8, 3.0)

    def test_sandwich_sweep(self, domain, disc, constants, phi0):
        for mu in np.linspace(1.05, 4.0, 10):
            rep = classify(mu * phi0, constants, domain, disc=disc)
            assert rep.regime is Regime.BLOW_UP
            assert math.isfinite(rep.T_upper) and rep.T_lower <= rep.T_upper

    def test_pinned_values(self, domain, disc, constants, phi0):
        rep = classify(1.5 * phi0, constants, domain, disc=disc)
        assert rep.eta == pytest.approx(1.5, rel=1e-6)
        assert rep.K == pytest.approx(2.7037, abs=1e-3)
        rep3 = classify(3.0 * phi0, constants, domain, disc=disc)
        assert rep3.T_lower == pytest.approx(0.25678, rel=1e-3)
        assert rep3.T_upper == pytest.approx(1.12339, rel=1e-3)


class TestEnvelopes:
    def test_limits(self, domain, disc, constants, phi0):
        rep = classify(3.0 * phi0, constants, domain, disc=disc)
        lo_far, hi_far = rate_envelopes(0.0, 1.0, rep)
        lo_near, hi_near = rate_envelopes(1.0 - 1e-8, 1.0, rep)
        assert hi_near > 1e6 * hi_far
        # exponent 2/(2-p) is negative for p > 2, so the lower envelope grows too
        assert rep.lower_rate_exponent == pytest.approx(-2.0)
        assert lo_near > 1e6 * lo_far
        with pytest.raises(ValueError):
            rate_envelopes(1.0, 1.0, rep)

    def test_overflow_becomes_infinite(self, domain, disc, constants, phi0):
        rep = classify(1.05 * phi0, constants, domain, disc=disc)
        _, hi = rate_envelopes(0.0, 1e-200, rep)
        assert hi == math.inf

    def test_coefficients_closed_form(self, domain, disc, constants, phi0):
        rep = classify(3.0 * phi0, constants, domain, disc=disc)
        K, C, p = rep.K, rep.C, 3.0
        up = ((rep.two_S0 ** (K / 2)) / (K * (K - 2) * rep.script_J0)) ** (2 / (K - 2))
        lo = C ** (2 * p / (2 - p)) * (p - 2) ** (2 / (2 - p))
        assert rep.upper_rate_coefficient == pytest.approx(up, rel=1e-12)
        assert rep.lower_rate_coefficient == pytest.approx(lo, rel=1e-12)


def test_decay_bounds_at_zero(domain, disc, constants, phi0):
    rep = classify(0.5 * phi0, constants, domain, disc=disc)
    b = decay_bounds(0.0, rep)
    assert b["two_S_proof"] == rep.two_S0
    assert b["J_proof"] == pytest.approx(rep.J0 + rep.two_S0)
    assert b["J_corrected"] == b["J_proof"]
