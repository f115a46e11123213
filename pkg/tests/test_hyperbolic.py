import json
import math

import numpy as np
import pytest

from faddeev_lab.errors import BandError, ResolutionError
from faddeev_lab.hyperbolic import (
    ConeBand,
    PacketGrid,
    SpacetimeField,
    a_band,
    b_band,
    bilinear_probe,
    box_f_surrogate,
    composite_X_norm,
    default_bands,
    f_norm_surrogate,
    free_wave_band,
    free_wave_family,
    gaussian_packet,
    mixed_lebesgue,
    modulation_masses,
    mu_bands,
    packet_triples,
    sin_composition_probe,
    st_inverse,
    st_transform,
    strichartz_admissible,
    strichartz_probe,
    trilinear_probe,
    x_half_norm,
    y_norm,
)
from faddeev_lab.radial import radial_kernel
from faddeev_lab.reports import loglog_slope

SMALL = PacketGrid(T=24.0, Nt=240, R=16.0, Nr=160)


def _gauss_field(taper=0.1):
    return SpacetimeField.from_function(lambda t, r: np.exp(-((t - 10) ** 2)) * np.exp(-r * r / 2),
                                        20.0, 257, 12.0, 96, taper)


# -------------------------------------------------------------- transform


def test_zero_field_transforms_to_zero():
    w = SpacetimeField.from_function(lambda t, r: 0 * t * r, 10.0, 64, 8.0, 32)
    assert not np.any(st_transform(w).values)


def test_separable_gaussian_matches_analytic_transform():
    S = st_transform(_gauss_field())
    tt, rr = S.tau[:, None], S.rho[None, :]
    exact = (math.sqrt(math.pi) * np.exp(-tt**2 / 4) * np.exp(-10j * tt)
             * (2 * np.pi) ** 2 * np.exp(-rr**2 / 2))
    assert np.max(np.abs(S.values - exact)) / np.max(np.abs(exact)) < 1e-6


def test_round_trip_on_tapered_field():
    w = SpacetimeField.from_function(lambda t, r: np.cos(t) * np.exp(-r * r / 4) * (1 + 0.1 * t), 20.0, 400,
                                     16.0, 128)
    back = st_inverse(st_transform(w))
    assert np.max(np.abs(back.samples - w.windowed())) < 1e-8 * np.max(np.abs(w.samples))


def test_unresolved_field_raises():
    # oscillation at the temporal Nyquist rate
    w = SpacetimeField.from_function(lambda t, r: np.cos(np.pi * t / (20.0 / 199)) * np.exp(-r * r), 20.0, 200,
                                     8.0, 64, taper=0.0)
    with pytest.raises(ResolutionError):
        st_transform(w)


def test_taper_window_and_plancherel():
    w = _gauss_field()
    assert w.taper_mass_fraction() < 1e-12
    assert np.all(w.window[w.interior] == 1.0) and w.window[0] == 0.0
    S = st_transform(w)
    assert S.l2() == pytest.approx(w.l2(), rel=1e-10)


# ------------------------------------------------------------ multipliers


def test_frequency_bands_partition_unity():
    w = _gauss_field()
    S = st_transform(w)
    total = sum(a_band(S, lam).values for lam in default_bands(S))
    assert np.max(np.abs(total - S.values)) / np.max(np.abs(S.values)) < 1e-6


def test_band_outside_grid_rejected():
    with pytest.raises(BandError):
        a_band(_gauss_field(), 2.0**12)
    with pytest.raises(BandError):
        ConeBand(1.0, 8.0)
    assert ConeBand(1.0, 4.0).mu == 4.0


def test_a_and_b_bands_commute():
    w = gaussian_packet(SMALL, 1.0, angle=0.9)
    ab = b_band(a_band(w, 1.0), 0.25)
    ba = a_band(b_band(w, 0.25), 1.0)
    assert np.max(np.abs(ab.samples - ba.samples)) < 1e-10 * np.max(np.abs(w.samples))


def test_free_wave_mass_sits_near_the_cone():
    lam = 1.0
    w = free_wave_band(lam, T0=160.0, Nt=1536, R0=216.0, Nr=540)
    mus, m = modulation_masses(w, lam)
    assert m[mus <= lam / 8].sum() / m.sum() > 0.95


def test_standing_field_modulation():
    # cos(sigma t) times a narrow spatial shell at k
    pg = PacketGrid(T=60.0, Nt=600, R=60.0, Nr=480)
    sigma, k = 2.0, 1.0
    t = pg.times()
    kr = k * pg.radial.nodes
    g = np.exp(-0.5 * (kr / 8.0) ** 2) * radial_kernel(1, kr)
    w = SpacetimeField(t, pg.radial, np.cos(sigma * t)[:, None] * g[None, :])
    S = st_transform(w)
    p = S.weights * np.abs(S.values) ** 2
    mean_mod = np.sum(p * S.modulation) / p.sum()
    expected = abs(sigma**2 - k**2) / math.hypot(sigma, k)
    assert mean_mod == pytest.approx(expected, rel=0.05)


# ------------------------------------------------------------ band norms


def test_zero_band_norms():
    w = SpacetimeField.from_function(lambda t, r: 0 * t * r, 10.0, 64, 8.0, 32)
    assert x_half_norm(w, 1.0) == 0 and y_norm(w, 1.0) == 0
    assert f_norm_surrogate(w, 1.0)[0] == 0 and box_f_surrogate(w, 1.0)[0] == 0
    rep = composite_X_norm(w)
    assert rep.X == 0 and rep.bands == ()


@pytest.fixture(scope="module")
def wave():
    return free_wave_band(1.0)


def test_free_wave_y_norm_matches_data(wave):
    y = y_norm(wave, 1.0)
    data = math.sqrt(np.sum(wave.grid.weights * wave.samples[0] ** 2))
    assert y == pytest.approx(data, rel=0.05)
    # the box term is negligible for a free wave
    S = st_transform(wave)
    assert y - mixed_lebesgue(wave, math.inf, 2) < 1e-3 * y
    assert S.l2() > 0


def test_free_wave_surrogate_is_the_y_norm(wave):
    F, mu0 = f_norm_surrogate(wave, 1.0)
    assert F == pytest.approx(y_norm(wave, 1.0), rel=1e-12)
    assert mu0 <= 2.0**-10


def test_single_modulation_packet_x_norm():
    w = gaussian_packet(SMALL, 1.0, angle=1.2)
    for mu in (0.25, 0.5):
        piece = b_band(w, mu)
        x = x_half_norm(piece, 1.0)
        ratio = x / (math.sqrt(mu) * piece.l2())
        assert 0.5 < ratio < 2.0


def test_high_modulation_packet_goes_to_x():
    # a long standing packet: box w is large, so the split keeps it in X
    pg = PacketGrid(T=40.0, Nt=400, R=24.0, Nr=240)
    w = gaussian_packet(pg, 2.0, angle=1.45, width=8.0)
    F, mu0 = f_norm_surrogate(w, 2.0)
    x = x_half_norm(w, 2.0)
    assert x < y_norm(w, 2.0)
    assert F == pytest.approx(x, rel=0.1) and mu0 >= 1.0


@pytest.mark.parametrize("lam,angle", [(1.0, 0.4), (1.0, 1.2), (2.0, 0.8)])
def test_surrogate_below_pure_splits(lam, angle):
    w = gaussian_packet(SMALL, lam, angle=angle)
    F, _ = f_norm_surrogate(w, lam)
    assert F <= min(x_half_norm(w, lam), y_norm(w, lam)) * (1 + 1e-12)


def test_surrogates_absolutely_homogeneous():
    w = gaussian_packet(SMALL, 1.0, angle=0.7)
    for c in (-3.0, 0.01, 250.0):
        cw = w.scaled(c)
        assert f_norm_surrogate(cw, 1.0)[0] == pytest.approx(abs(c) * f_norm_surrogate(w, 1.0)[0], rel=1e-10)
        assert box_f_surrogate(cw, 1.0)[0] == pytest.approx(abs(c) * box_f_surrogate(w, 1.0)[0], rel=1e-10)
        assert composite_X_norm(cw).X == pytest.approx(abs(c) * composite_X_norm(w).X, rel=1e-10)


def test_surrogate_triangle_inequality():
    a = gaussian_packet(SMALL, 1.0, angle=0.5)
    b = gaussian_packet(SMALL, 1.0, angle=1.1, phase=1.0)
    for lam in (1.0,):
        s = a.with_samples(a.samples + b.samples)
        assert f_norm_surrogate(s, lam)[0] <= 2 * (f_norm_surrogate(a, lam)[0] + f_norm_surrogate(b, lam)[0])
    assert composite_X_norm(a.with_samples(a.samples - b.samples)).X <= 2 * (composite_X_norm(a).X
                                                                             + composite_X_norm(b).X)


def test_mu_bands_floor():
    mus = mu_bands(4.0)
    assert mus[0] == 4.0 * 2.0**-10 and mus[-1] == 16.0


# -------------------------------------------------------------- composite


def test_single_band_composite():
    w = gaussian_packet(SMALL, 2.0)
    rep = composite_X_norm(w, bands=[2.0])
    F, _ = f_norm_surrogate(a_band(w, 2.0), 2.0)
    assert rep.X == pytest.approx((4.0 + 2.0) * F, rel=1e-12)
    for F_l, x, y in zip(rep.F_lambda, rep.x_half, rep.y):
        assert F_l <= min(x, y) * (1 + 1e-12)


def test_composite_dilation_weights():
    # w_s(t, r) = w(s t, s r): F part is dilation invariant, |grad|F part scales as 1/s
    base = dict(T=24.0, Nt=240, R=16.0, Nr=160)
    reps = []
    scales = (0.5, 1.0, 2.0, 4.0)
    for s in scales:
        pg = PacketGrid(T=base["T"] / s, Nt=base["Nt"], R=base["R"] / s, Nr=base["Nr"])
        reps.append(composite_X_norm(gaussian_packet(pg, s, angle=0.7)))
    assert loglog_slope(scales, [r.F for r in reps]) == pytest.approx(0.0, abs=1e-6)
    assert loglog_slope(scales, [r.grad_F for r in reps]) == pytest.approx(-1.0, abs=1e-6)


def test_report_serializes():
    rep = composite_X_norm(gaussian_packet(SMALL, 1.0))
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["kind"] == "SurrogateNormReport" and d["X"] == pytest.approx(rep.X)
    assert len(d["mu0"]) == len(rep.bands)


# ----------------------------------------------------------------- probes


def test_admissibility():
    assert strichartz_admissible(math.inf, 2)[0]
    assert strichartz_admissible(2, 6)[0]
    assert strichartz_admissible(2, 5)[0]  # radial range only
    ok, why = strichartz_admissible(2, 3)
    assert not ok and "2/q" in why
    with pytest.raises(ValueError, match="inadmissible"):
        strichartz_probe(2, 3, [])
    with pytest.raises(ValueError):
        strichartz_probe(2, None, [], radial_weight=True)


@pytest.fixture(scope="module")
def waves():
    return free_wave_family(2.0 ** np.arange(-3, 4))


def test_energy_pair_ratio_near_one(waves):
    rep = strichartz_probe(math.inf, 2, waves)
    assert 0.5 <= rep.min and rep.max <= 2.0


def test_strichartz_2_6_scale_invariant(waves):
    rep = strichartz_probe(2, 6, waves)
    assert rep.extras["slope"] == pytest.approx(0.0, abs=0.1)
    assert all(np.isfinite(rep.ratios))


def test_weighted_estimate_exponent(waves):
    rep = strichartz_probe(4, None, waves, radial_weight=True)
    assert rep.extras["raw_slope"] == pytest.approx(0.75, abs=0.05)


@pytest.fixture(scope="module")
def small_triples():
    pg = PacketGrid(T=48.0, Nt=320, R=32.0, Nr=200)
    return packet_triples(separations=(1.0, 2.0, 4.0), per_separation=2, nu=0.5, pg=pg, pool=2)


def test_trilinear_skips_zero_and_is_symmetric(small_triples):
    u, v, w, s = small_triples[-1]
    z = u.scaled(0.0)
    rep = trilinear_probe([(z, v, w, s), (u, v, w, s), (w, u, v, s), (v, w, u, s)])
    assert rep.skipped == 1
    r = np.array(rep.ratios)
    assert np.max(np.abs(r - r[0])) < 1e-10 * r[0]


def test_trilinear_small_sweep_finite(small_triples):
    rep = trilinear_probe(small_triples)
    assert len(rep.ratios) == 6 and all(np.isfinite(rep.ratios)) and rep.min > 0
    assert rep.extras["separations"] == [1.0, 2.0, 4.0]


def test_bilinear_probe_is_exploratory(small_triples):
    pairs = [(u, w, s) for u, _, w, s in small_triples]
    rep = bilinear_probe(pairs)
    assert rep.extras["exploratory"] is True and rep.regression_constant is None
    assert all(np.isfinite(rep.ratios))


def test_sin_composition_series_limit():
    p = gaussian_packet(SMALL, 1.0, angle=0.8)
    base = p.scaled(1.0 / composite_X_norm(p).X)
    devs = []
    for eps in (0.02, 0.01):
        rep = sin_composition_probe([base.scaled(eps)], alpha=1.0)
        devs.append(abs(rep.ratios[0] - 1.0))
    assert devs[0] < 1e-2
    assert devs[0] / devs[1] == pytest.approx(4.0, rel=0.1)


def test_sin_composition_alpha_two_and_rejection():
    p = gaussian_packet(SMALL, 1.0, angle=0.8)
    base = p.scaled(1.0 / composite_X_norm(p).X)
    rep = sin_composition_probe([base.scaled(0.02), base.scaled(0.0)], alpha=2.0)
    assert rep.skipped == 1 and np.isfinite(rep.ratios[0])
    assert rep.extras["growth_constant"] > 0
    with pytest.raises(ValueError, match="amplitude"):
        sin_composition_probe([base.scaled(1e3)], alpha=1.0)
