import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from faddeev_lab.coefficients import (
    CoefficientId as C,
    SeriesSwitch,
    decay_margin,
    default_u_grid,
    derivative,
    h,
    h_stable,
    h_tilde,
    I,
    I_inverse,
    phi,
    phi_stable,
)
from faddeev_lab.errors import DomainError

# Suprema of |d^j h_tilde| <u>^k located by golden-section search on
# 40-digit mpmath derivatives of the closed forms (independent of the
# finite-difference path used by decay_margin).
ORACLE_SUP = {
    (C.H1, 0): 1.98694518878932, (C.H1, 1): 2.92003408031570,
    (C.H1, 2): 4.69557634810851, (C.H1, 3): 8.17116072737766,
    (C.H2, 0): 1.48652796341538, (C.H2, 1): 3.72887180169846,
    (C.H2, 2): 4.57153218692498, (C.H2, 3): 6.31218554355963,
    (C.H3, 0): 1.12290610985079, (C.H3, 1): 1.84025090424727,
    (C.H3, 2): 2.94520551699338, (C.H3, 3): 4.80016910097057,
    (C.H4, 0): 1.0, (C.H4, 1): 1.33295362145214,
    (C.H4, 2): 2.23061353835604, (C.H4, 3): 4.04063133703250,
}

mp.mp.dps = 40
CLOSED = {
    C.H1: lambda u: 2 * mp.sin(u) * (mp.sin(u) - u * mp.cos(u)) / u**3,
    C.H2: lambda u: (mp.sin(2 * u) - 2 * u) / (2 * u**3),
    C.H3: lambda u: mp.sin(u) * (mp.sin(u) - u * mp.cos(u)) / u**4,
    C.H4: lambda u: mp.sin(2 * u) / (2 * u),
}


def test_limits_at_zero():
    assert h_tilde(C.H2, 0.0) == pytest.approx(-2 / 3, abs=1e-15)
    assert h_tilde(C.H3, 0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert h_tilde(C.H4, 0.0) == 1.0
    assert h_tilde(C.H1, 0.0) == 0.0
    eps = 1e-7
    assert h_tilde(C.H1, eps) / eps == pytest.approx(2 / 3, rel=1e-10)


@pytest.mark.parametrize("cid", list(C))
def test_matches_high_precision_closed_form(cid):
    for u in [1e-9, 1e-4, 0.1, 0.3, 0.49, 0.51, 1.0, 3.0, 17.5, 1234.5]:
        ref = float(CLOSED[cid](mp.mpf(u)))
        assert h_tilde(cid, u) == pytest.approx(ref, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("cid", list(C))
def test_series_and_closed_form_agree_near_switch(cid):
    sw = SeriesSwitch()
    u = np.linspace(sw.u_threshold / 2, 2 * sw.u_threshold, 101)
    series = h_tilde(cid, u, SeriesSwitch(u_threshold=10.0, series_order=30))
    closed = h_tilde(cid, u, SeriesSwitch(u_threshold=1e-300))
    np.testing.assert_allclose(series, closed, rtol=1e-12, atol=1e-15)


def test_switch_validation():
    with pytest.raises(ValueError):
        SeriesSwitch(u_threshold=0.0)
    with pytest.raises(ValueError):
        SeriesSwitch(series_order=4)


def test_phi_values_and_domain():
    assert phi(1.0, 0.0) == 1.0
    assert phi(1.0, np.pi / 2) == pytest.approx(2.0, rel=1e-15)
    assert phi_stable(3.0, 1e-9) == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(DomainError):
        phi(0.0, 1.0)
    with pytest.raises(DomainError):
        h(C.H1, -1.0, 0.3)


@given(st.floats(1e-3, 50), st.floats(-20, 20))
def test_phi_at_least_one_and_stable_overload(r, u):
    assert phi(r, u) >= 1.0
    assert phi_stable(u / r, u) == pytest.approx(phi(r, u), rel=1e-12)


def test_h_examples():
    for r in [0.1, 1.0, 7.0]:
        assert h(C.H4, r, 0.0) == 1.0
    assert h(C.H2, 1.0, np.pi / 2) == pytest.approx(-2 / np.pi**2, rel=1e-14)
    rng = np.random.default_rng(0)
    r = rng.uniform(0.05, 5, 200)
    u = rng.uniform(-6, 6, 200)
    for cid in C:
        np.testing.assert_allclose(h(cid, r, u), h_tilde(cid, u) / phi(r, u), rtol=1e-12)
        np.testing.assert_allclose(h_stable(cid, u / r, u), h(cid, r, u), rtol=1e-12)


@pytest.mark.parametrize("cid", list(C))
@pytest.mark.parametrize("j", [1, 2, 3])
def test_numerical_derivative_against_mpmath(cid, j):
    for u in [0.0, 0.2, 0.7, 2.5, 40.0]:
        val, err = derivative(cid, j, u)
        with mp.workdps(150):
            ref = float(mp.diff(CLOSED[cid], mp.mpf(u) if u else mp.mpf("1e-30"), j))
        assert val == pytest.approx(ref, abs=1e-7)
        assert err < 1e-5


def test_decay_margin_examples():
    assert decay_margin(C.H4, 0, [0.0]).max == 1.0
    assert decay_margin(C.H3, 0, [0.0]).max == pytest.approx(1 / 3, rel=1e-14)
    tail = np.linspace(100.0, 1000.0, 5000)
    assert np.isfinite(decay_margin(C.H2, 0, tail).max)


@pytest.mark.parametrize("key", sorted(ORACLE_SUP, key=lambda k: (k[0].value, k[1])))
def test_decay_margin_matches_oracle_sup(key):
    cid, j = key
    rep = decay_margin(cid, j, default_u_grid(), regression_constant=ORACLE_SUP[key])
    assert rep.max == pytest.approx(ORACLE_SUP[key], rel=1e-2)
    assert rep.max <= ORACLE_SUP[key] * (1 + 1e-6)


def test_decay_margin_stable_under_grid_doubling():
    coarse = default_u_grid(u_max=200.0)
    fine = default_u_grid(u_max=200.0, dense_step=0.0025, tail_step=0.025)
    for cid in C:
        for j in range(4):
            a = decay_margin(cid, j, coarse).max
            b = decay_margin(cid, j, fine).max
            assert abs(a - b) / b < 0.01


def test_I_values():
    assert I(0.0) == 0.0
    assert I(np.pi) == pytest.approx(2.0, abs=1e-15)
    assert I(2 * np.pi) == pytest.approx(4.0, abs=1e-15)
    assert I(np.pi / 2) == pytest.approx(1.0, abs=1e-15)


def test_I_properties():
    z = np.linspace(0, 1e3, 200001)
    iz = I(z)
    assert np.all(np.diff(iz) >= 0)
    np.testing.assert_allclose(I(-z), -iz)
    np.testing.assert_allclose(I(z + np.pi), iz + 2.0, rtol=0, atol=1e-12)
    assert np.all(iz[1:] > 0)
    assert iz[-1] > 600


def test_I_matches_integral_of_abs_sin():
    from scipy.integrate import quad

    for z in [0.3, 2.0, 7.7, 20.0]:
        kinks = [k * np.pi for k in range(1, int(z / np.pi) + 1)]
        ref, _ = quad(lambda s: abs(np.sin(s)), 0, z, points=kinks or None, limit=200)
        assert I(z) == pytest.approx(ref, rel=1e-12)


@given(st.floats(-500, 500))
@settings(max_examples=200)
def test_I_inverse_round_trip(z):
    assert I_inverse(I(z)) == pytest.approx(z, abs=1e-7)
