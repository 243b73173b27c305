import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from nsopt.core import OptimizerState, sign_tilde
from nsopt.optim import (VARIANTS, AfmConfig, DivergenceError, ScalingRule,
                         rho, step, u_selection, v_update, validate_config)
from nsopt.verification import STEP_ORACLE


def oracle_start():
    return OptimizerState(np.array([1.0, -1.0, 0.5]),
                          np.array([0.2, 0.0, -0.3]),
                          np.array([0.04, 0.01, 2.0]))


ORACLE_G = np.array([1.0, -1.0, 0.25])


class TestStepOracle:
    """Single-step values frozen from a straight-line reimplementation of
    the update formulas (tools/step_oracle.py)."""

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_matches_frozen_values(self, variant):
        alpha = 0.1 if variant == "nadam" else 0.0
        cfg = AfmConfig(variant=variant, alpha=alpha)
        out = step(oracle_start(), ORACLE_G, 0.1, cfg)
        assert np.max(np.abs(out.m - STEP_ORACLE["m1"])) <= 1e-12
        assert np.max(np.abs(out.v - STEP_ORACLE[variant]["v1"])) <= 1e-12
        assert np.max(np.abs(out.x - STEP_ORACLE[variant]["x1"])) <= 1e-12

    def test_counter_advances(self):
        out = step(oracle_start(), ORACLE_G, 0.1, AfmConfig(variant="adam"))
        assert out.k == 1

    def test_input_state_unchanged(self):
        st_ = oracle_start()
        x, m, v = st_.x.copy(), st_.m.copy(), st_.v.copy()
        step(st_, ORACLE_G, 0.1, AfmConfig(variant="adam"))
        assert np.array_equal(st_.x, x)
        assert np.array_equal(st_.m, m)
        assert np.array_equal(st_.v, v)


class TestPreconditions:
    def test_tau1_eta_over_one_rejected(self):
        with pytest.raises(ValueError):
            step(oracle_start(), ORACLE_G, 1.5, AfmConfig(variant="adam"))

    def test_tau2_eta_over_one_rejected_for_ema_variants(self):
        cfg = AfmConfig(variant="adam", tau1=0.1, tau2=3.0)
        with pytest.raises(ValueError):
            step(oracle_start(), ORACLE_G, 0.5, cfg)

    def test_amsgrad_exempt_from_tau2_bound(self):
        cfg = AfmConfig(variant="amsgrad", tau1=0.1, tau2=3.0)
        step(oracle_start(), ORACLE_G, 0.5, cfg)  # must not raise

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            AfmConfig(variant="adamw")

    def test_divergence_guard(self):
        # gamma = 0 disables the preconditioner, so the step length is the
        # raw momentum and one huge uphill gradient crosses the bound
        st_ = OptimizerState.fresh(np.full(2, 9.99e7))
        cfg = AfmConfig(variant="adam", gamma=0.0)
        with pytest.raises(DivergenceError) as err:
            step(st_, np.full(2, -2e6), 1.0, cfg)
        assert err.value.x_inf > 1e8


class TestValidateConfig:
    def test_boundary_tau_pair_clean(self):
        rep = validate_config(AfmConfig(variant="adam", tau1=1.0, tau2=4.0))
        assert rep.ok and not rep.warnings

    def test_beyond_boundary_warns(self):
        rep = validate_config(AfmConfig(variant="adam", tau1=1.0, tau2=5.0))
        assert not rep.ok and rep.warnings

    def test_amsgrad_accepts_any_pair(self):
        rep = validate_config(AfmConfig(variant="amsgrad", tau1=0.01,
                                        tau2=100.0))
        assert rep.ok and not rep.warnings

    @pytest.mark.parametrize("kw", [{"tau1": 0.0}, {"tau2": -1.0},
                                    {"epsilon": 0.0}, {"alpha": -0.1},
                                    {"gamma": -0.5}])
    def test_hard_errors(self, kw):
        with pytest.raises(ValueError):
            validate_config(AfmConfig(variant="adam", **kw))


class TestRho:
    # running product at constant tau*eta = 0.1, frozen from the closed
    # form 1 / (1 - 0.9^k)
    FROZEN = {1: 10.000000000000002, 2: 5.263157894736843,
              3: 3.690036900369005, 10: 1.5353399327876296,
              100: 1.0000265621044142}

    def test_frozen_sequence(self):
        s = ScalingRule(mode="bias_correction")
        for k in range(1, 101):
            val = rho(s, 0.1, 1.0)
            if k in self.FROZEN:
                assert val == pytest.approx(self.FROZEN[k], abs=1e-12)

    def test_underflow_reaches_exactly_one(self):
        s = ScalingRule(mode="bias_correction")
        for _ in range(2000):
            last = rho(s, 0.9, 1.0)
        assert last == 1.0

    def test_none_mode(self):
        assert rho(ScalingRule(mode="none"), 0.5, 1.0) == 1.0

    def test_reset(self):
        s = ScalingRule(mode="bias_correction")
        first = rho(s, 0.1, 1.0)
        rho(s, 0.1, 1.0)
        s.reset()
        assert rho(s, 0.1, 1.0) == first

    def test_moments_tracked_separately(self):
        s = ScalingRule(mode="bias_correction")
        rho(s, 0.1, 1.0, moment="m")
        assert rho(s, 0.1, 1.0, moment="v") == pytest.approx(10.0, abs=1e-9)


class TestVUpdate:
    def test_amsgrad_is_running_max(self):
        v = np.array([0.5, 2.0])
        out = v_update("amsgrad", v, np.array([1.0, 1.0]), None, 0.1, 1.0)
        assert np.array_equal(out, np.array([1.0, 2.0]))

    def test_yogi_signed_move(self):
        # v < g^2 pushes v up, v > g^2 pushes it down, by tau2*eta*g^2
        v = np.array([0.0, 4.0])
        g = np.array([1.0, 1.0])
        out = v_update("yogi", v, g, None, 0.1, 1.0)
        assert np.allclose(out, [0.1, 3.9], rtol=0.0, atol=1e-15)

    def test_adabelief_uses_residual(self):
        v = np.zeros(1)
        out = v_update("adabelief", v, np.array([2.0]), np.array([0.5]),
                       0.1, 1.0)
        assert out[0] == pytest.approx(0.1 * 2.25, abs=1e-15)


class TestUSelection:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_compatibility_condition(self, variant):
        rng = np.random.default_rng(8)
        kappa = 1.0 if variant == "amsgrad" else 0.0
        for _ in range(100):
            v = np.abs(rng.normal(size=6))
            v[rng.random(6) < 0.2] = 0.0
            grads = rng.normal(size=(4, 6))
            u = u_selection(variant, v, grads, rng.normal(size=6))
            slack = 1e-12 * (1.0 + np.abs(v))
            assert np.all(sign_tilde(v) * u >= kappa * np.abs(v) - slack)

    def test_adam_form(self):
        v = np.array([1.0, -2.0, 0.0])
        grads = np.array([[1.0, 2.0, 3.0], [3.0, 0.0, 1.0]])
        u = u_selection("adam", v, grads)
        want = np.sign(v) * np.mean(grads**2, axis=0)
        assert np.array_equal(u, want)


class TestMomentumBoundProperty:
    @given(st.sampled_from(VARIANTS),
           hnp.arrays(np.float64, 5,
                      elements=st.floats(-100.0, 100.0, allow_nan=False)),
           hnp.arrays(np.float64, 5,
                      elements=st.floats(-100.0, 100.0, allow_nan=False)),
           hnp.arrays(np.float64, 5,
                      elements=st.floats(0.0, 100.0, allow_nan=False)),
           st.floats(min_value=1e-4, max_value=1.0))
    def test_m_convex_combination_bound(self, variant, m, g, v, eta):
        # |m'|_inf <= max(|m|_inf, |g|_inf) for any inputs meeting the
        # stepsize preconditions; at an exact tie (m == g) the two
        # roundings in (1-w)m + w g may land one ulp above the bound
        cfg = AfmConfig(variant=variant)
        st_ = OptimizerState(np.zeros(5), m, v)
        out = step(st_, g, eta, cfg)
        bound = max(np.max(np.abs(m)), np.max(np.abs(g)))
        assert np.max(np.abs(out.m)) <= np.nextafter(bound, np.inf)
        assert np.all(out.v >= 0.0)
