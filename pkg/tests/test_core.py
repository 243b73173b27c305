import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from nsopt.core import (NumericOverflowError, OptimizerState, SignSelection,
                        as_vector, hadamard, shifted_power, sign_tilde)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def vec(n=None):
    shape = st.integers(1, 30) if n is None else n
    return hnp.arrays(np.float64, shape, elements=finite)


class TestAsVector:
    def test_list_becomes_float64(self):
        v = as_vector([1, 2, 3])
        assert v.dtype == np.float64
        assert v.shape == (3,)

    def test_scalar_becomes_length_one(self):
        assert as_vector(2.5).shape == (1,)

    def test_column_is_squeezed(self):
        assert as_vector(np.ones((4, 1))).shape == (4,)

    def test_matrix_rejected(self):
        with pytest.raises(ValueError):
            as_vector(np.ones((2, 3)))

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(NumericOverflowError):
            as_vector([1.0, bad])


class TestHadamard:
    def test_values(self):
        got = hadamard(np.array([2.0, -3.0]), np.array([4.0, 0.5]))
        assert np.array_equal(got, np.array([8.0, -1.5]))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hadamard(np.ones(3), np.ones(4))

    def test_overflow_raises(self):
        with np.errstate(over="ignore"), pytest.raises(NumericOverflowError):
            hadamard(np.array([1e308]), np.array([1e308]))

    @given(vec())
    def test_ones_identity(self, a):
        assert np.array_equal(hadamard(a, np.ones_like(a)), a)


class TestShiftedPower:
    def test_worked_example(self):
        got = shifted_power(np.array([3.0, -3.0]), 1.0, -0.5)
        assert np.array_equal(got, np.array([0.5, 0.5]))

    def test_exponent_zero_gives_ones(self):
        assert np.array_equal(shifted_power(np.array([-7.0, 0.0, 2.0]), 0.3, 0.0),
                              np.ones(3))

    def test_zero_shift_rejected(self):
        with pytest.raises(ValueError):
            shifted_power(np.ones(2), 0.0, -0.5)

    def test_overflow_raises(self):
        with np.errstate(over="ignore"), pytest.raises(NumericOverflowError):
            shifted_power(np.array([1e300]), 1.0, 2.0)

    @given(vec(), st.floats(min_value=1e-8, max_value=10.0),
           st.floats(min_value=-2.0, max_value=2.0))
    def test_always_positive(self, v, shift, expo):
        assert np.all(shifted_power(v, shift, expo) > 0.0)


class TestSignSelection:
    def test_sign_tilde_values(self):
        got = sign_tilde(np.array([-3.0, 0.0, 0.25]))
        assert np.array_equal(got, np.array([-1.0, 0.0, 1.0]))

    def test_at_zero_honored(self):
        sel = SignSelection(at_zero=-0.5)
        got = sel(np.array([-1.0, 0.0, 2.0]))
        assert np.array_equal(got, np.array([-1.0, -0.5, 1.0]))

    @pytest.mark.parametrize("bad", [-1.5, 1.01])
    def test_out_of_range_rejected(self, bad):
        with pytest.raises(ValueError):
            SignSelection(at_zero=bad)

    @given(vec(), st.floats(min_value=-1.0, max_value=1.0))
    def test_product_identity(self, x, at_zero):
        # any selection collapses to sign_tilde^2 under the sign product,
        # including at exact zeros
        x[::3] = 0.0
        sel = SignSelection(at_zero=at_zero)
        assert np.array_equal(hadamard(sign_tilde(x), sel(x)),
                              hadamard(sign_tilde(x), sign_tilde(x)))


class TestOptimizerState:
    def test_casts_to_float64(self):
        st_ = OptimizerState([1, 2], [0, 0], [0, 0])
        assert st_.x.dtype == st_.m.dtype == st_.v.dtype == np.float64

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            OptimizerState(np.ones(2), np.ones(3), np.ones(2))

    def test_negative_counter_rejected(self):
        with pytest.raises(ValueError):
            OptimizerState(np.ones(2), np.ones(2), np.ones(2), k=-1)

    def test_fresh_defaults(self):
        st_ = OptimizerState.fresh([1.0, -2.0])
        assert np.array_equal(st_.m, np.zeros(2))
        assert np.array_equal(st_.v, np.zeros(2))
        assert st_.k == 0

    def test_fresh_v0_length_checked(self):
        with pytest.raises(ValueError):
            OptimizerState.fresh([1.0, 2.0], v0=[1.0])

    def test_copy_is_independent(self):
        a = OptimizerState.fresh([1.0, 2.0])
        b = a.copy()
        b.x[0] = 99.0
        b.k = 5
        assert a.x[0] == 1.0 and a.k == 0
