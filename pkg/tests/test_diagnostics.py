import csv

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from faddeev_lab.coefficients import I_inverse
from faddeev_lab.diagnostics import (
    Probe,
    Verdict,
    bump_family,
    energy,
    inequality_probe,
    nullform_identity_fd,
    nullform_residual,
    pointwise_bound_check,
    scaling_covariance_check,
    scattering_fit,
    single_band_family,
    smeq_operator,
    spacetime_symbols,
    time_series,
    write_time_series,
    y_norm,
)
from faddeev_lab.evolution import Family, FieldState, Form, SolverConfig, Status, evolve, initial_data
from faddeev_lab.radial import RadialGrid, RadialProfile

# ----------------------------------------------------------------- energy


def test_energy_of_zero_state():
    rep = energy(FieldState.zeros(Form.U_FORM, 10.0, 64))
    assert rep.E == 0.0 and rep.kinetic == 0.0 and rep.gradient == 0.0 and rep.potential == 0.0


def _static_energy_oracle(delta):
    def integrand(r):
        u = delta * r * np.exp(-r * r)
        ur = delta * (1 - 2 * r * r) * np.exp(-r * r)
        return ((1 + np.sin(u) ** 2 / r**2) * ur**2 / 2 + np.sin(u) ** 2 / (2 * r**2)) * r
    val, _ = quad(integrand, 0, 12, epsabs=0, epsrel=1e-13, limit=200)
    return val


def test_static_energy_matches_quadrature_oracle():
    delta = 0.1
    g = RadialGrid.uniform(2, 12.0, 8000)
    u = delta * g.nodes * np.exp(-g.nodes**2)
    st = FieldState(0.0, Form.U_FORM, RadialProfile(g, u), RadialProfile(g, np.zeros(g.N)))
    assert energy(st).E == pytest.approx(_static_energy_oracle(delta), rel=1e-8)


def test_energy_parts_nonnegative_and_additive():
    st = initial_data(Family.TWO_BUMP, 0.4, R=20.0, N=512, velocity="outgoing")
    rep = energy(st)
    assert min(rep.kinetic, rep.gradient, rep.potential) >= 0
    assert rep.E == pytest.approx(rep.kinetic + rep.gradient + rep.potential, rel=1e-14)
    # v-form input gives the same numbers
    assert energy(st.to_form(Form.V_FORM)).E == pytest.approx(rep.E, rel=1e-14)


# -------------------------------------------------------- pointwise bound


def test_pointwise_chain_zero_state():
    rep = pointwise_bound_check(FieldState.zeros(Form.U_FORM, 10.0, 64))
    assert rep.chain_holds and rep.max_u == 0 and rep.implied_bound == 0 and rep.energy == 0


@pytest.fixture(scope="module")
def sweep():
    out = []
    for d in (0.05, 0.1, 0.2, 0.4):
        st = initial_data(Family.GAUSS_BUMP, d, R=20.0, N=512)
        out.append((d, evolve(st, SolverConfig.from_grid(20.0, 512, 8.0, snapshot_stride=64))))
    return out


def test_chain_holds_on_every_snapshot(sweep):
    for _, traj in sweep:
        assert traj.status is Status.COMPLETED
        for s in traj.snapshots:
            rep = pointwise_bound_check(s)
            assert rep.chain_holds
            assert rep.max_chain_ratio <= 1.0 + 1e-12
            assert rep.energy_bounds_hold
            assert rep.path_error < 1e-4


def test_max_u_below_implied_bound_and_monotone(sweep):
    bounds = []
    for _, traj in sweep:
        E0 = energy(traj.snapshots[0]).E
        bound = float(I_inverse(2 * E0))
        peak = max(np.max(np.abs(s.f.samples)) for s in traj.snapshots)
        assert peak <= bound + 1e-3
        bounds.append(bound)
    assert np.all(np.diff(bounds) > 0)


# ------------------------------------------------------------- null form


def test_nullform_constant_field_exact():
    r = (np.arange(100) + 0.5) * 0.05
    res = nullform_identity_fd(lambda t, r: 0.7 + 0 * r, 0.3, r, 0.05, 0.05)
    assert np.max(np.abs(res)) == 0.0


@pytest.mark.parametrize("field", [
    lambda t, r: np.exp(-(r * r + t * t)),
    lambda t, r: r * np.exp(-r * r) * np.cos(t),
    lambda t, r: np.cos(2 * t) / (1 + r * r) ** 2,
])
def test_nullform_order_two(field):
    rep = nullform_residual(field, 0.02, 0.02, levels=3)
    assert rep.order == pytest.approx(2.0, abs=0.2), rep.orders


def test_nullform_parity_ghost():
    # the same even field given only for r >= 0 plus an even reflection
    rep = nullform_residual(lambda t, r: np.exp(-(r * r + t * t)) * (r >= 0), 0.02, 0.02, levels=3, parity="even")
    assert rep.order == pytest.approx(2.0, abs=0.2)


# --------------------------------------------------------------- scaling


@pytest.mark.parametrize("lam", [0.25, 1.0, 2.0, 8.0])
def test_scaling_covariance(lam):
    T, R = spacetime_symbols()
    for u in (R * sp.exp(-R**2 - T**2), R * sp.cos(T) / (1 + R**2)):
        rep = scaling_covariance_check(u, lam)
        assert rep.errors[0] < 1e-10


def test_scaling_check_detects_broken_covariance():
    T, R = spacetime_symbols()
    u = R * sp.exp(-R**2 - T**2)
    good = scaling_covariance_check(u, 2.0).errors[0]
    bad = scaling_covariance_check(u + R**3 * sp.exp(-R**2), 2.0).errors[0]
    assert good < 1e-10 and bad < 1e-10  # covariance holds for any field
    lhs = sp.lambdify((T, R), smeq_operator(u.subs(R, R / 2)), "numpy")(0.3, 0.7)
    rhs = sp.lambdify((T, R), smeq_operator(u), "numpy")(0.3, 0.35) / 2
    assert abs(lhs - rhs) > 1e-3  # omitting the amplitude factor breaks it


# ------------------------------------------------------------ scattering


def test_free_evolution_has_negligible_defect():
    st = initial_data(Family.GAUSS_BUMP, 0.05, R=30.0, N=512, form=Form.V_FORM)
    traj = evolve(st, SolverConfig.from_grid(30.0, 512, 20.0, snapshot_stride=64, nonlinear=False))
    rep = scattering_fit(traj)
    assert max(rep.defect) < 1e-6 * st.data_norm()


@pytest.fixture(scope="module")
def small_run():
    st = initial_data(Family.GAUSS_BUMP, 0.01, R=40.0, N=1024, form=Form.V_FORM)
    return evolve(st, SolverConfig.from_grid(40.0, 1024, 30.0, snapshot_stride=64))


def test_small_data_scatters(small_run):
    rep = scattering_fit(small_run)
    assert rep.verdict == Verdict.DECAYING.value
    assert rep.final_over_peak < 0.1
    assert rep.warning is None
    assert all(d >= 0 for d in rep.defect)
    assert small_run.final.t not in rep.times


def test_short_run_is_flat_with_warning():
    st = initial_data(Family.GAUSS_BUMP, 0.01, R=40.0, N=256, form=Form.V_FORM)
    traj = evolve(st, SolverConfig.from_grid(40.0, 256, 1.0, snapshot_stride=16))
    rep = scattering_fit(traj)
    assert rep.verdict == Verdict.FLAT.value and rep.warning


def test_time_series_csv(small_run, tmp_path):
    rep = scattering_fit(small_run)
    rows = time_series(small_run, rep)
    assert len(rows) == len(small_run.snapshots)
    assert rows[-1]["defect"] is None and rows[0]["defect"] is not None
    path = tmp_path / "series.csv"
    write_time_series(path, rows, header="cfg=abc")
    with open(path) as fh:
        assert fh.readline().startswith("# cfg=abc")
        data = list(csv.DictReader(fh))
    assert list(data[0]) == ["t", "E", "max_abs_u", "defect", "besov_B1_21", "besov_B0_21"]
    E = np.array([float(d["E"]) for d in data])
    assert np.ptp(E) / E[0] < 1e-5


# ---------------------------------------------------------------- probes


@pytest.fixture(scope="module")
def family():
    return bump_family()


def test_probe_skips_zero_members(family):
    z = family[0].with_samples(np.zeros(family[0].grid.N))
    rep = inequality_probe(Probe.SOB, [z, family[1]])
    assert rep.skipped == 1 and len(rep.ratios) == 1
    rep = inequality_probe(Probe.ALGEBRA_Y, [(z, family[1]), (family[2], family[3])])
    assert rep.skipped == 1


def test_sobolev_probe_stable(family):
    rep = inequality_probe(Probe.SOB, family, regression_constant=0.0855)
    assert len(rep.ratios) == 50
    assert rep.max / rep.min < 2.0
    assert rep.within_constant


@pytest.mark.parametrize("probe,const", [
    (Probe.PROD, 0.367),
    (Probe.ALGEBRA_Y, 0.075),
    (Probe.R_WEIGHT, 0.0686),
])
def test_pair_probes_below_regression_constant(family, probe, const):
    pairs = list(zip(family[::2], family[1::2]))
    rep = inequality_probe(probe, pairs, regression_constant=const)
    assert len(rep.ratios) == 25
    assert all(np.isfinite(rep.ratios)) and rep.min > 0
    assert rep.within_constant


@pytest.mark.parametrize("k,const", [(1, 0.0786), (2, 4.6e-4)])
def test_sin_power_probe(k, const):
    fam = bump_family(N=2048)
    small = [f.with_samples(f.samples * 0.5 / y_norm(f)) for f in fam]
    rep = inequality_probe(Probe.SIN_POWER, small, regression_constant=const, k=k)
    assert rep.within_constant


def test_sin_power_rejects_large_members(family):
    big = family[0].with_samples(family[0].samples * 2.0 / y_norm(family[0]))
    with pytest.raises(ValueError):
        inequality_probe(Probe.SIN_POWER, [big])


def test_radial_sobolev_exponent_one():
    lams = 2.0 ** np.arange(-4, 5)
    rep = inequality_probe(Probe.RAD_SOB, single_band_family(lams), regression_constant=0.1323)
    assert rep.extras["raw_slope"] == pytest.approx(1.0, abs=0.05)
    assert rep.within_constant
    assert rep.max / rep.min < 1.1
