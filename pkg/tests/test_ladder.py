import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaladder import BracketError, DomainError, hl_main_term, sigma_balasubramanian, sigma_moser, solve_phi
from zetaladder.ladder import (
    extrapolate_to_zero,
    integral_equation_residual,
    ladder_table,
    solve_ladder_parameter,
    tka_check,
    tka_rhs_main,
)
from zetaladder.quad import z2_prefix
from zetaladder.zeta_core import EULER_GAMMA


def test_main_term_values():
    assert hl_main_term(2.0) == pytest.approx(EULER_GAMMA - math.log(2 * math.pi))
    assert hl_main_term(2 * math.e, c0=1.5) == pytest.approx(math.e + (EULER_GAMMA - math.log(2 * math.pi)) * math.e + 1.5)
    with pytest.raises(DomainError):
        hl_main_term(1.0)


@settings(max_examples=50, deadline=None)
@given(phi=st.floats(6.0, 1e7), c0=st.floats(-5.0, 5.0))
def test_round_trip(phi, c0):
    i2 = hl_main_term(phi, c0)
    pt = solve_phi(phi, i2, c0)
    assert abs(pt.phi - phi) <= 1e-9 * phi


def test_below_range_raises_bracket_error():
    with pytest.raises(BracketError):
        solve_phi(3.0, -1.0)


def test_sigma_balasubramanian():
    # ln T + 2c - 1 - ln 2pi
    assert sigma_balasubramanian(1e4) == pytest.approx(7.5268946, abs=1e-6)
    assert sigma_balasubramanian(math.e) == pytest.approx(2 * EULER_GAMMA - math.log(2 * math.pi))
    with pytest.raises(DomainError):
        sigma_balasubramanian(1.0)


def test_sigma_moser_equals_i2_over_t():
    i2 = 75272.115
    pt = solve_phi(1e4, i2)
    assert sigma_moser(pt) == pytest.approx(i2 / 1e4, rel=1e-11)
    assert pt.sigma == pytest.approx(sigma_moser(pt), rel=1e-14)


def test_phi_against_two_t():
    pts = ladder_table([1e2, 1e3])
    ratios = [p.phi / (2 * p.T) for p in pts]
    assert 0.8 < ratios[0] < ratios[1] < 1.2
    assert all(p.solve_residual <= 1e-9 * p.i2 for p in pts)


def test_integral_equation_residual_sign():
    T = 200.0
    i2 = z2_prefix(T)[0].value
    phi = solve_phi(T, i2).phi
    lo = integral_equation_residual(T, 0.5 * phi, 7 * 0.5 * phi * math.log(0.5 * phi), i2=i2)
    hi = integral_equation_residual(T, 2.0 * phi, 14 * phi * math.log(2 * phi), i2=i2)
    assert lo < 0 < hi
    assert integral_equation_residual(T, phi, 0.0, i2=i2) == -i2
    with pytest.raises(DomainError):
        integral_equation_residual(T, -1.0, 1.0, i2=i2)


def test_ladder_parameter_close_to_phi():
    lp = solve_ladder_parameter(300.0)
    assert abs(lp.residual) < 1e-6 * z2_prefix(300.0)[0].value
    assert lp.x / lp.phi == pytest.approx(1.0, abs=0.02)
    assert lp.mu == pytest.approx(7 * lp.x * math.log(lp.x))


def test_tka_rhs_and_extrapolation():
    d = 0.01
    assert tka_rhs_main(d) == pytest.approx((EULER_GAMMA - math.log(4 * math.pi * d)) / (2 * math.sin(d)))
    assert extrapolate_to_zero(1.0, 3.0, 2.0, 5.0) == pytest.approx(1.0)


def test_tka_coarse_deltas():
    reps = tka_check([0.08, 0.04])
    assert [r.delta for r in reps] == [0.08, 0.04]
    for r in reps:
        # the difference is the constant term plus O(delta)
        assert 2.9 < r.diff < 3.2
        assert r.lhs_error < 1e-4 * r.lhs
    assert reps[0].c0_estimate == pytest.approx(3.15, abs=0.1)
    with pytest.raises(DomainError):
        tka_check([0.0])
