import numpy as np
import pytest
from hypothesis import given, strategies as st

from nsopt.schedules_noise import (ClipSchedule, NoiseModel, StepSchedule,
                                   TwoTimescale, clip_radius, eta,
                                   sample_noise, theta, validate_schedules)


class TestStepSchedule:
    def test_power_formula(self):
        sch = StepSchedule("power", 0.1, 0.5)
        assert eta(sch, 0) == 0.1
        assert eta(sch, 3) == pytest.approx(0.05, abs=1e-15)

    def test_sqrt_epoch_steps(self):
        sch = StepSchedule("sqrt_epoch", 0.4, steps_per_epoch=100)
        assert eta(sch, 0) == 0.4
        assert eta(sch, 99) == 0.4
        assert eta(sch, 100) == pytest.approx(0.4 / np.sqrt(2.0), abs=1e-15)
        assert eta(sch, 350) == pytest.approx(0.2, abs=1e-15)

    def test_constant(self):
        sch = StepSchedule("constant", 0.25)
        assert eta(sch, 0) == eta(sch, 10**6) == 0.25

    def test_vector_evaluation(self):
        sch = StepSchedule("power", 0.1, 0.7)
        ks = np.array([0, 10, 1000])
        out = eta(sch, ks)
        assert out.shape == (3,)
        assert np.allclose(out, [eta(sch, int(k)) for k in ks],
                           rtol=1e-14, atol=0.0)

    def test_negative_iteration_rejected(self):
        with pytest.raises(ValueError):
            eta(StepSchedule("power", 0.1, 0.5), -1)

    @pytest.mark.parametrize("kw", [
        {"family": "exponential"}, {"eta0": 0.0}, {"eta0": -1.0},
        {"family": "power", "p": 0.0},
    ])
    def test_bad_configs_rejected(self, kw):
        with pytest.raises(ValueError):
            StepSchedule(**{"family": "power", "eta0": 0.1, "p": 0.5, **kw})

    @given(st.floats(min_value=0.05, max_value=3.0),
           st.integers(min_value=0, max_value=10**6))
    def test_power_decreasing(self, p, k):
        sch = StepSchedule("power", 1.0, p)
        assert eta(sch, k + 1) < eta(sch, k)


class TestDerivedSchedules:
    def test_theta_formula(self):
        sch = StepSchedule("power", 0.1, 0.6)
        tt = TwoTimescale(s=0.25)
        k = 1000
        e = eta(sch, k)
        want = e * (e * np.log(k + 2.0)) ** -0.25
        assert theta(tt, sch, k) == pytest.approx(want, rel=1e-15)

    def test_clip_radius_formula(self):
        sch = StepSchedule("power", 0.1, 0.6)
        cs = ClipSchedule(c0=2.0)
        k = 1000
        want = 2.0 * (eta(sch, k) * np.log(k + 2.0)) ** (-1.0 / 3.0)
        assert clip_radius(cs, sch, k) == pytest.approx(want, rel=1e-15)

    def test_clip_radius_grows(self):
        sch = StepSchedule("power", 0.1, 0.6)
        cs = ClipSchedule()
        radii = [clip_radius(cs, sch, k) for k in (10, 10**3, 10**5)]
        assert radii[0] < radii[1] < radii[2]

    @pytest.mark.parametrize("s", [0.0, 0.5, -0.1, 0.9])
    def test_timescale_exponent_range(self, s):
        with pytest.raises(ValueError):
            TwoTimescale(s=s)

    def test_clip_c0_positive(self):
        with pytest.raises(ValueError):
            ClipSchedule(c0=0.0)


class TestValidateSchedules:
    def test_power_family_passes(self):
        for p in (0.6, 1.0):
            rep = validate_schedules(StepSchedule("power", 0.1, p),
                                     TwoTimescale(), ClipSchedule())
            assert rep.ok, rep.failures

    def test_constant_fails_vanishing(self):
        rep = validate_schedules(StepSchedule("constant", 0.1),
                                 TwoTimescale(), ClipSchedule())
        assert not rep.ok
        assert any("vanish" in f for f in rep.failures)

    def test_fast_decay_fails_divergence(self):
        rep = validate_schedules(StepSchedule("power", 0.1, 2.0),
                                 TwoTimescale(), ClipSchedule())
        assert not rep.ok
        assert any("diverge" in f for f in rep.failures)

    def test_blocks_are_optional(self):
        rep = validate_schedules(StepSchedule("power", 0.1, 0.6))
        assert rep.ok
        assert "theta_sq_over_eta_log" not in rep.values

    def test_values_recorded_for_reporting(self):
        rep = validate_schedules(StepSchedule("power", 0.1, 0.6),
                                 TwoTimescale(), ClipSchedule())
        assert set(rep.values) >= {"k", "eta_log", "partial_sums",
                                   "clip_radius"}


class TestNoise:
    def test_none_kind_is_zero(self):
        out = sample_noise(NoiseModel(), np.random.default_rng(0), 5)
        assert np.array_equal(out, np.zeros(5))

    def test_streams_reproducible(self):
        models = [NoiseModel(kind="gaussian", sigma=2.0),
                  NoiseModel(kind="uniform", bound=0.5),
                  NoiseModel(kind="stable", alpha=1.5, beta=0.3, scale=1.0)]
        for model in models:
            a = sample_noise(model, np.random.default_rng([1, 2]), 100)
            b = sample_noise(model, np.random.default_rng([1, 2]), 100)
            assert np.array_equal(a, b)

    def test_uniform_respects_bound(self):
        out = sample_noise(NoiseModel(kind="uniform", bound=0.25),
                           np.random.default_rng(3), 10**4)
        assert np.max(np.abs(out)) <= 0.25

    def test_gaussian_moments(self):
        out = sample_noise(NoiseModel(kind="gaussian", sigma=2.0),
                           np.random.default_rng(4), 10**5)
        assert abs(np.mean(out)) < 0.03
        assert np.std(out) == pytest.approx(2.0, rel=0.02)

    def test_stable_alpha_two_is_gaussian_variance(self):
        out = sample_noise(NoiseModel(kind="stable", alpha=2.0, beta=0.0,
                                      scale=1.5),
                           np.random.default_rng(5), 10**5)
        assert np.var(out) == pytest.approx(2.0 * 1.5**2, rel=0.05)

    def test_stable_symmetric_median_near_zero(self):
        out = sample_noise(NoiseModel(kind="stable", alpha=1.5, beta=0.0,
                                      scale=1.0),
                           np.random.default_rng(6), 10**6)
        assert abs(np.median(out)) < 0.01

    def test_stable_heavy_tail_present(self):
        # alpha = 1.2 tail: max of 1e5 draws is far beyond any gaussian range
        out = sample_noise(NoiseModel(kind="stable", alpha=1.2, beta=0.0,
                                      scale=1.0),
                           np.random.default_rng(7), 10**5)
        assert np.max(np.abs(out)) > 100.0

    @pytest.mark.parametrize("kw", [
        {"kind": "levy"}, {"kind": "gaussian", "sigma": 0.0},
        {"kind": "uniform", "bound": -1.0},
        {"kind": "stable", "alpha": 1.0}, {"kind": "stable", "alpha": 2.1},
        {"kind": "stable", "alpha": 1.5, "beta": 1.5},
        {"kind": "stable", "alpha": 1.5, "scale": 0.0},
    ])
    def test_bad_models_rejected(self, kw):
        with pytest.raises(ValueError):
            NoiseModel(**kw)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            sample_noise(NoiseModel(kind="gaussian"),
                         np.random.default_rng(0), -1)
