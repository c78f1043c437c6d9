"""test_quadrature.py — exact integrals of piecewise-linear functions.

Every expected value here is worked out by hand; the integrals are exact so tolerances are at
rounding level.
"""

import numpy as np
import pytest

from congestlab.app.errors import InputError
from congestlab.app.quadrature import (
    PiecewiseLinear,
    lp_distance_pow,
    lp_distance_pow_adaptive,
    product_integral,
    sup_abs_difference,
)


def _ramp() -> PiecewiseLinear:
    """s on [0, 1]."""
    return PiecewiseLinear.continuous([0.0, 1.0], [0.0, 1.0])


# ── construction / evaluation ─────────────────────────────────────────────────
def test_rejects_decreasing_knots():
    with pytest.raises(InputError):
        PiecewiseLinear.constant_cells([0.0, 1.0, 0.5], [1.0, 2.0])


def test_rejects_mismatched_values():
    with pytest.raises(InputError):
        PiecewiseLinear([0.0, 1.0], [1.0, 2.0], [1.0])


def test_point_values_left_and_right_continuous():
    f = PiecewiseLinear.constant_cells([0.0, 0.5, 1.0], [1.0, 2.0])
    assert f(0.5) == 1.0
    assert f(0.5, right_continuous=True) == 2.0
    assert f(np.array([0.25, 0.75])) == pytest.approx([1.0, 2.0])
    assert f(2.0) == 0.0  # zero outside the knots


def test_slopes_ignore_zero_width_cells():
    f = PiecewiseLinear([0.0, 1.0, 1.0, 3.0], [0.0, 5.0, 1.0], [2.0, 7.0, 2.0])
    assert f.slopes() == pytest.approx([2.0, 0.0, 0.5])


def test_integral_and_monotonicity():
    f = PiecewiseLinear.continuous([0.0, 1.0, 3.0], [0.0, 1.0, 1.0])
    assert f.integral() == pytest.approx(2.5)
    assert f.is_monotone()
    g = PiecewiseLinear.constant_cells([0.0, 1.0, 2.0], [1.0, 0.0])
    assert not g.is_monotone()


# ── distances ─────────────────────────────────────────────────────────────────
def test_l1_distance_of_step_against_ramp():
    step = PiecewiseLinear.constant_cells([0.0, 0.5, 1.0], [0.5, 1.0])
    # each cell contributes ∫_0^{1/2} u du = 1/8
    assert lp_distance_pow(step, _ramp(), 1) == pytest.approx(0.25)


def test_l1_handles_sign_change_inside_a_cell():
    zero = PiecewiseLinear.constant_cells([0.0, 1.0], [0.5])
    # |s - 1/2| integrates to 1/4
    assert lp_distance_pow(_ramp(), zero, 1) == pytest.approx(0.25)


def test_l2_distance_squared():
    zero = PiecewiseLinear.constant_cells([0.0, 1.0], [0.0])
    assert lp_distance_pow(_ramp(), zero, 2) == pytest.approx(1.0 / 3.0)


def test_unsupported_exact_order():
    with pytest.raises(InputError):
        lp_distance_pow(_ramp(), _ramp(), 3)


def test_adaptive_matches_exact_and_handles_p3():
    zero = PiecewiseLinear.constant_cells([0.0, 1.0], [0.0])
    assert lp_distance_pow_adaptive(_ramp(), zero, 2) == pytest.approx(1.0 / 3.0, rel=1e-10)
    assert lp_distance_pow_adaptive(_ramp(), zero, 3) == pytest.approx(0.25, rel=1e-10)


def test_product_integral_is_exact_for_quadratics():
    assert product_integral(_ramp(), _ramp()) == pytest.approx(1.0 / 3.0)
    half = PiecewiseLinear.constant_cells([0.5, 1.0], [2.0])
    # 2 ∫_{1/2}^1 s ds
    assert product_integral(_ramp(), half) == pytest.approx(0.75)


def test_sup_abs_difference_uses_one_sided_limits():
    step = PiecewiseLinear.constant_cells([0.0, 0.5, 1.0], [0.0, 1.0])
    assert sup_abs_difference(step, _ramp()) == pytest.approx(0.5)
