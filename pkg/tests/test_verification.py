"""Sanity checks on the check battery itself: a deliberately broken
implementation must come back as a FAIL result, never as a crash."""

import numpy as np
import pytest

from nsopt.core import OptimizerState
from nsopt.optim import step
from nsopt.clip import BALL
from nsopt.verification import (ACCEPTANCE_CHECKS, INVARIANT_CHECKS,
                                CheckResult, _check, check_clip_properties,
                                check_momentum_v_bounds, run_checks)


class TestCheckWrapper:
    def test_pass_line(self):
        res = _check("demo", lambda: "fine")
        assert res.passed and res.detail == "fine"
        assert res.line() == "PASS demo: fine"
        assert res.elapsed >= 0.0

    def test_assertion_becomes_fail(self):
        def body():
            assert False, "broke the bound"
        res = _check("demo", body)
        assert not res.passed
        assert res.line().startswith("FAIL demo:")
        assert "broke the bound" in res.detail

    def test_crash_becomes_fail_naming_the_error(self):
        def body():
            raise RuntimeError("kaboom")
        res = _check("demo", body)
        assert not res.passed
        assert "RuntimeError" in res.detail and "kaboom" in res.detail


def never_clips(g, c, region=BALL):
    if np.isnan(c) or not c > 0.0:
        raise ValueError("bad radius")
    return np.asarray(g, dtype=float)


def soft_clip(g, c, region=BALL):
    if np.isnan(c) or not c > 0.0:
        raise ValueError("bad radius")
    arr = np.asarray(g, dtype=float)
    flat = np.atleast_2d(arr)
    norms = np.linalg.norm(flat, axis=1, keepdims=True)
    return (flat / (1.0 + norms / c)).reshape(arr.shape)


class TestMutants:
    """Each mutant preserves the interface but breaks one property the
    battery claims to test; the battery has to catch every one."""

    @pytest.mark.parametrize("mutant", [never_clips, soft_clip])
    def test_broken_clip_caught(self, mutant):
        res = check_clip_properties(clip_fn=mutant)
        assert isinstance(res, CheckResult)
        assert not res.passed

    def test_inflated_momentum_caught(self):
        def mutant(st, g, e, cfg):
            out = step(st, g, e, cfg)
            return OptimizerState(out.x, out.m * 1.1, out.v, out.k)
        res = check_momentum_v_bounds(step_fn=mutant)
        assert not res.passed
        assert "momentum bound" in res.detail

    def test_leaking_v_caught(self):
        def mutant(st, g, e, cfg):
            out = step(st, g, e, cfg)
            return OptimizerState(out.x, out.m, out.v * 1.05, out.k)
        res = check_momentum_v_bounds(step_fn=mutant)
        assert not res.passed

    def test_real_implementations_pass(self):
        assert check_clip_properties().passed
        assert check_momentum_v_bounds().passed


class TestBatteries:
    def test_registries_are_disjoint_and_named(self):
        inv = [f.__name__ for f in INVARIANT_CHECKS]
        acc = [f.__name__ for f in ACCEPTANCE_CHECKS]
        assert len(set(inv)) == len(inv)
        assert len(set(acc)) == len(acc)
        assert not set(inv) & set(acc)
        assert len(acc) == 9

    def test_unknown_battery_rejected(self):
        with pytest.raises(ValueError):
            run_checks("everything")
