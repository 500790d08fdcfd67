import json
import math

import numpy as np
import pytest

from zetaladder import (
    DegenerateSetError,
    DomainError,
    area_balance_report,
    areas,
    conditional_diagnostics,
    decompose_sign_sets,
    eta_values,
    fourth_moment_check,
    reconstruct_areas_via_eta,
    sigma_balasubramanian,
)
from zetaladder.oscillation import fourth_moment_main, parse_mode, sample_grid
from zetaladder.zeta_core import z_values

PI = math.pi


def sin2(t):
    return np.sin(t) ** 2


@pytest.fixture(scope="module")
def synthetic():
    return area_balance_report(2 * PI, 0.5, integrand=sin2)


@pytest.fixture(scope="module")
def report500():
    return area_balance_report(500.0)


def test_synthetic_crossings(synthetic):
    dec = decompose_sign_sets(2 * PI, 0.5, integrand=sin2)
    expected = np.array([PI / 4, 3 * PI / 4, 5 * PI / 4, 7 * PI / 4])
    assert np.max(np.abs(dec.crossings - expected)) < 1e-9
    assert [s for _, _, s in dec.intervals] == ["-", "+", "-", "+", "-"]
    assert synthetic.crossings == 4


def test_synthetic_areas_and_eta(synthetic):
    # closed forms: eta1 = 1 + pi/8, eta2 = 1 - pi/8
    assert synthetic.m_plus == pytest.approx(1.0, abs=1e-9)
    assert synthetic.m_minus == pytest.approx(1.0, abs=1e-9)
    assert synthetic.eta1 == pytest.approx(1 + PI / 8, abs=1e-9)
    assert synthetic.eta2 == pytest.approx(1 - PI / 8, abs=1e-9)
    assert synthetic.i2 == pytest.approx(PI, abs=1e-12)
    assert synthetic.i4 == pytest.approx(3 * PI / 4, abs=1e-12)
    assert synthetic.m_plus_hat == pytest.approx(1.0, abs=1e-9)


def test_intervals_tile_zero_to_t():
    dec = decompose_sign_sets(300.0, 3.0)
    iv = dec.intervals
    assert iv[0][0] == 0.0 and iv[-1][1] == 300.0
    assert all(a[1] == b[0] for a, b in zip(iv, iv[1:]))
    assert all(a[2] != b[2] for a, b in zip(iv, iv[1:]))
    assert all(lo < hi for lo, hi, _ in iv)


def test_interval_signs_at_midpoints():
    dec = decompose_sign_sets(300.0, 3.0)
    e = dec.edges
    mid = 0.5 * (e[:-1] + e[1:])
    g = z_values(mid) ** 2 - 3.0
    assert np.all(np.sign(g) == dec.signs)


def test_crossings_match_fine_grid_recount():
    T, s = 2000.0, 5.0
    dec = decompose_sign_sets(T, s)
    t = np.linspace(0.0, T, 4_000_001)
    g = z_values(t) ** 2 - s
    fine = np.count_nonzero((g[1:] >= 0) != (g[:-1] >= 0))
    assert dec.crossings.size == fine
    assert np.max(np.abs(z_values(dec.crossings) ** 2 - s)) < 1e-6


def test_identities_at_500(report500):
    r = report500
    res = r.identity_residuals
    assert abs(res["area_balance"]) <= 1e-9 * r.i2
    assert abs(res["eta_moment"]) <= 1e-9 * r.i4
    assert abs(res["reconstruction_plus"]) <= 1e-6 * r.m_plus
    assert res["clamp_plus"] == 0.0 and res["clamp_minus"] == 0.0
    assert r.identity_ok()
    assert r.measure_plus + r.measure_minus == pytest.approx(500.0, rel=1e-13)


def test_eta_bounds(report500):
    r = report500
    assert r.eta2 <= 2 * r.sigma_level <= r.eta1
    assert r.eta1 <= r.max_z2_sampled * 1.01 + r.sigma_level
    assert r.eta2 >= r.sigma_level


def test_report_is_json_serialisable(report500):
    d = json.loads(json.dumps(report500.to_dict()))
    for key in ("m_plus", "m_minus", "diff", "eta1", "eta2", "identity_residuals", "phi", "near_tangency_count"):
        assert key in d


def test_log_level_mode_diff_is_identity():
    r = area_balance_report(300.0, "balasubramanian")
    assert r.sigma_level == sigma_balasubramanian(300.0)
    assert r.diff == pytest.approx(r.i2 - 300.0 * r.sigma_level, abs=1e-7 * r.i2)


def test_degenerate_level():
    dec = decompose_sign_sets(100.0, 1e6)
    assert dec.crossings.size == 0 and list(dec.signs) == [-1]
    mp, mm = areas(dec)
    assert mp == 0.0 and mm > 0
    with pytest.raises(DegenerateSetError):
        eta_values(dec, mp, mm)
    r = area_balance_report(100.0, 1e6)
    assert r.eta1 is None and r.identity_residuals["eta_moment"] is None


def test_reconstruct_singular_system():
    with pytest.raises(DegenerateSetError):
        reconstruct_areas_via_eta(0.0, 2.0, 2.0, 10.0, 1.0, 1.0)
    mp, mm = reconstruct_areas_via_eta(0.0, 1 + PI / 8, 1 - PI / 8, 2 * PI, 3 * PI / 4, 0.5)
    assert mp == pytest.approx(1.0) and mm == pytest.approx(1.0)


def test_parse_mode():
    assert parse_mode("Moser") == ("moser", None)
    assert parse_mode("level=2.5") == ("level", 2.5)
    assert parse_mode(3) == ("level", 3.0)
    with pytest.raises(DomainError):
        parse_mode("median")
    with pytest.raises(DomainError):
        decompose_sign_sets(10.0, 0.0)


def test_sample_grid():
    g = sample_grid(1000.0)
    assert g[0] == 0.0 and g[-1] == 1000.0
    assert np.all(np.diff(g) > 0)
    assert np.diff(g).max() <= 0.25 + 1e-12


def test_fourth_moment_constant_integrand():
    T = 1000.0
    assert fourth_moment_check(T, integrand=lambda t: np.full_like(t, 4.0)) == pytest.approx(4 * T / fourth_moment_main(T))


def test_conditional_diagnostics_are_reported(report500):
    d = conditional_diagnostics(500.0, report500)
    assert len(d) == 6
    assert all(math.isfinite(v) and v > 0 for v in d.values())
