import math

import pytest

from bagrisk.fixed_point import tv_of
from bagrisk.risk_theory import (B_lam, C_lam, RiskComponents, V_lam,
                                 combine_M, optimal_ridge_risk_isotropic,
                                 optimize_phis, risk_splag, risk_subag,
                                 theory_risk, wor_correction)
from bagrisk.spectrum import make_isotropic, make_isotropic_signal


class TestComponentFormulas:
    def test_bias_frozen_value(self, iso_H, iso_G):
        # tv = 1.1/2.9, tc = 1/4: B = (1 + 1.1/2.9)/4 = 1/2.9
        assert B_lam(0.0, 1.1, 2.0, iso_G, iso_H, 1.0) == pytest.approx(
            1.0 / 2.9, abs=1e-12)

    @pytest.mark.parametrize("theta", [1.5, 2.0, 5.0])
    def test_single_fit_identities_on_identity_covariance(self, iso_H, iso_G,
                                                          theta):
        # classical ridgeless formulas: V = sigma_sq/(theta-1),
        # B = rho_sq*(theta-1)/theta
        assert V_lam(0.0, theta, theta, iso_H, 1.0) == pytest.approx(
            1.0 / (theta - 1.0), rel=1e-11)
        assert B_lam(0.0, theta, theta, iso_G, iso_H, 1.0) == pytest.approx(
            (theta - 1.0) / theta, rel=1e-11)

    def test_variance_uses_overlap_ratio(self, iso_H):
        # V(0; phi, phi_s) = sigma_sq * phi/(phi_s^2 - phi) on the identity
        assert V_lam(0.0, 0.7, 1.6, iso_H, 2.0) == pytest.approx(
            2.0 * 0.7 / (1.6**2 - 0.7), rel=1e-11)

    def test_zero_noise_kills_variance_even_at_the_pole(self, iso_H):
        assert V_lam(0.0, 1.0, 1.0, iso_H, 0.0) == 0.0
        assert V_lam(0.0, 1.0, 1.0, iso_H, 1.0) == math.inf

    def test_zero_signal_kills_bias(self, iso_H, iso_G):
        assert B_lam(0.5, 1.0, 2.0, iso_G, iso_H, 0.0) == 0.0
        assert C_lam(0.5, 2.0, iso_G, iso_H, 0.0) == 0.0

    def test_cross_bias_frozen_value(self, iso_H, iso_G):
        assert C_lam(0.0, 2.0, iso_G, iso_H, 1.0) == pytest.approx(0.25,
                                                                   abs=1e-12)

    def test_interpolation_regime_has_no_bias(self, iso_H, iso_G):
        assert B_lam(0.0, 0.5, 0.8, iso_G, iso_H, 1.0) == 0.0


class TestCombineM:
    def test_recovers_endpoints(self):
        assert combine_M(3.0, 2.0, 1) == pytest.approx(3.0)
        assert combine_M(3.0, 2.0, 2) == pytest.approx(2.0)

    def test_infinite_bags(self):
        assert combine_M(3.0, 2.0, math.inf) == pytest.approx(1.0)

    def test_matches_ensemble_formula_componentwise(self, iso_H, iso_G):
        for lam, phi, phi_s in [(0.0, 0.5, 1.7), (0.1, 1.2, 3.0)]:
            r1 = risk_subag(lam, 1, phi, phi_s, iso_G, iso_H, 1.0, 1.0)
            r2 = risk_subag(lam, 2, phi, phi_s, iso_G, iso_H, 1.0, 1.0)
            for M in (3, 5, 17, math.inf):
                rM = risk_subag(lam, M, phi, phi_s, iso_G, iso_H, 1.0, 1.0)
                assert rM.bias == pytest.approx(
                    combine_M(r1.bias, r2.bias, M), rel=1e-12)
                assert rM.variance == pytest.approx(
                    combine_M(r1.variance, r2.variance, M), rel=1e-12)

    def test_rejects_fractional_bags(self):
        with pytest.raises(ValueError):
            combine_M(1.0, 1.0, 2.5)


class TestWorCorrection:
    def test_frozen_value(self):
        assert wor_correction(10, 3) == pytest.approx(7.0 / 9.0)

    def test_single_draw_is_uncorrected(self):
        assert wor_correction(7, 1) == 1.0

    def test_exhausted_pool_clamps_to_zero(self):
        assert wor_correction(5, 5) == 0.0
        assert wor_correction(5, 7) == 0.0

    def test_rejects_degenerate_pool(self):
        with pytest.raises(ValueError):
            wor_correction(1, 1)


class TestSubag:
    def test_frozen_two_bag_point(self, iso_H, iso_G):
        r = risk_subag(0.0, 2, 1.1, 2.0, iso_G, iso_H, 1.0, 1.0)
        assert r.bias == pytest.approx(0.4224137931034483, abs=1e-10)
        assert r.variance == pytest.approx(0.6896551724137931, abs=1e-10)
        assert r.total == pytest.approx(2.1120689655172414, abs=1e-10)

    def test_single_bag_reduces_to_plain_fit(self, iso_H, iso_G):
        r = risk_subag(0.0, 1, 1.1, 2.0, iso_G, iso_H, 1.0, 1.0)
        assert r.bias == pytest.approx(0.5, rel=1e-11)       # (theta-1)/theta
        assert r.variance == pytest.approx(1.0, rel=1e-11)   # 1/(theta-1)
        assert r.total == pytest.approx(2.5, rel=1e-11)

    def test_full_sample_equals_any_bag_count(self, iso_H, iso_G):
        # phi_s = phi: every subsample is the whole sample
        a = risk_subag(0.2, 1, 1.5, 1.5, iso_G, iso_H, 1.0, 1.0)
        b = risk_subag(0.2, 40, 1.5, 1.5, iso_G, iso_H, 1.0, 1.0)
        assert a.total == pytest.approx(b.total, rel=1e-12)

    def test_infinite_subsample_ratio_is_the_null_risk(self, ar1_spectra):
        H, G = ar1_spectra
        for M in (1, 7, math.inf):
            r = risk_subag(0.3, M, 0.5, math.inf, G, H, G.rho_sq, 1.0)
            assert r.bias == pytest.approx(G.rho_sq * G.mean, rel=1e-12)
            assert r.variance == 0.0

    def test_interpolation_threshold_blows_up_variance(self, iso_H, iso_G):
        r = risk_subag(0.0, 3, 1.0, 1.0, iso_G, iso_H, 1.0, 1.0)
        assert r.variance == math.inf
        assert r.total == math.inf

    def test_noiseless_interpolation_threshold_is_finite(self, iso_H, iso_G):
        r = risk_subag(0.0, 3, 1.0, 1.0, iso_G, iso_H, 1.0, 0.0)
        assert r.variance == 0.0
        assert r.total == pytest.approx(r.bias)


class TestSplag:
    def test_frozen_four_block_point(self, iso_H, iso_G):
        r = risk_splag(0.0, 4, 0.5, 2.0, iso_G, iso_H, 1.0, 1.0)
        assert r.bias == pytest.approx(0.3125, abs=1e-11)
        assert r.variance == pytest.approx(0.25, abs=1e-11)
        assert r.total == pytest.approx(1.5625, abs=1e-11)

    def test_single_block_ignores_data_ratio(self, iso_H, iso_G):
        a = risk_splag(0.3, 1, 0.2, 2.0, iso_G, iso_H, 1.0, 1.0)
        b = risk_splag(0.3, 1, 0.9, 2.0, iso_G, iso_H, 1.0, 1.0)
        assert a == b

    def test_block_count_clamps_at_the_budget(self, iso_H, iso_G):
        capped = risk_splag(0.0, 100, 0.5, 2.0, iso_G, iso_H, 1.0, 1.0)
        at_cap = risk_splag(0.0, 4, 0.5, 2.0, iso_G, iso_H, 1.0, 1.0)
        limit = risk_splag(0.0, math.inf, 0.5, 2.0, iso_G, iso_H, 1.0, 1.0)
        assert capped == at_cap == limit

    def test_cap_survives_float_quotient_noise(self, iso_H, iso_G):
        # 0.6/0.2 rounds below 3; the cap must still be 3 blocks
        r = risk_splag(0.4, 3, 0.2, 0.6, iso_G, iso_H, 1.0, 1.0)
        v_term = V_lam(0.4, 0.6, 0.6, iso_H, 1.0)
        assert r.variance == pytest.approx(v_term / 3.0, rel=1e-12)

    def test_infinite_subsample_ratio_is_the_null_risk(self, iso_H, iso_G):
        for M in (1, 5, math.inf):
            r = risk_splag(0.1, M, 0.5, math.inf, iso_G, iso_H, 1.0, 1.0)
            assert r.bias == pytest.approx(1.0, rel=1e-12)
            assert r.variance == 0.0


class TestValidation:
    def test_subsample_ratio_below_data_ratio_rejected(self, iso_H, iso_G):
        with pytest.raises(ValueError, match="at least"):
            risk_subag(0.1, 2, 2.0, 1.0, iso_G, iso_H, 1.0, 1.0)

    @pytest.mark.parametrize("lam", [-0.1, math.inf])
    def test_bad_penalty_rejected(self, iso_H, iso_G, lam):
        with pytest.raises(ValueError):
            risk_subag(lam, 2, 1.0, 2.0, iso_G, iso_H, 1.0, 1.0)

    @pytest.mark.parametrize("M", [0, -3, 2.5])
    def test_bad_bag_count_rejected(self, iso_H, iso_G, M):
        with pytest.raises(ValueError):
            risk_subag(0.1, M, 1.0, 2.0, iso_G, iso_H, 1.0, 1.0)

    def test_unknown_strategy_rejected(self, iso_H, iso_G):
        with pytest.raises(ValueError, match="strategy"):
            theory_risk("bagging", 0.1, 2, 1.0, 2.0, iso_G, iso_H, 1.0, 1.0)

    def test_dispatch_matches_direct_calls(self, iso_H, iso_G):
        args = (0.1, 3, 0.5, 2.0, iso_G, iso_H, 1.0, 1.0)
        assert theory_risk("subag", *args) == risk_subag(*args)
        assert theory_risk("splag", *args) == risk_splag(*args)


class TestOptimize:
    def test_isotropic_golden_point(self, iso_H, iso_G):
        x, comps = optimize_phis(0.0, "subag", 1.0, iso_G, iso_H, 1.0, 1.0)
        assert x == pytest.approx(2.618033988749895, abs=1e-6)
        assert comps.total == pytest.approx((1 + math.sqrt(5.0)) / 2, abs=1e-8)

    def test_pure_noise_prefers_no_subsampling_information(self, iso_H):
        G = make_isotropic_signal(1.0, rho_sq=0.0)
        x, comps = optimize_phis(0.0, "subag", 0.5, G, iso_H, 0.0, 1.0)
        assert x == math.inf
        assert comps.total == pytest.approx(1.0)

    def test_grid_override_restricts_the_search(self, iso_H, iso_G):
        x, _ = optimize_phis(0.0, "subag", 1.0, iso_G, iso_H, 1.0, 1.0,
                             grid_spec=(5.0, 6.0, 10))
        assert x == pytest.approx(5.0, abs=1e-6)

    def test_matches_tuned_ridge_on_identity_covariance(self, iso_H):
        # subsample-tuned ridgeless and penalty-tuned ridge agree at optimum
        for phi, snr in [(2.0, 4.0), (0.3, 0.5)]:
            G = make_isotropic_signal(1.0, rho_sq=snr)
            _, comps = optimize_phis(0.0, "subag", phi, G, iso_H, snr, 1.0)
            ridge = optimal_ridge_risk_isotropic(phi, snr, 1.0)
            assert comps.total == pytest.approx(ridge, abs=1e-8)

    def test_splag_optimum_never_beats_subag(self, iso_H, iso_G):
        for phi in (0.4, 1.0, 3.0):
            _, sub = optimize_phis(0.0, "subag", phi, iso_G, iso_H, 1.0, 1.0)
            _, spl = optimize_phis(0.0, "splag", phi, iso_G, iso_H, 1.0, 1.0)
            assert sub.total <= spl.total + 1e-12

    def test_ridge_oracle_rejects_zero_signal(self):
        with pytest.raises(ValueError, match="rho_sq"):
            optimal_ridge_risk_isotropic(1.0, 0.0, 1.0)


def test_components_total_is_additive():
    r = RiskComponents(sigma_sq=1.0, bias=0.25, variance=0.5)
    assert r.total == 1.75


def test_components_total_propagates_infinity():
    assert RiskComponents(1.0, 0.0, math.inf).total == math.inf
