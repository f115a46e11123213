import json

import numpy as np
import pytest

from faddeev_lab.plots import emit_plots
from faddeev_lab.reports import RatioReport, ScatteringReport


def test_empty_report_set_writes_nothing(tmp_path):
    res = emit_plots({}, tmp_path / "plots")
    assert res.written == [] and res.skipped == []
    assert not (tmp_path / "plots").exists()


def test_energy_report_two_columns(tmp_path):
    rep = {"kind": "EnergySeries", "t": [0.0, 0.5, 1.0], "E": [1.0, 1.0, 0.999]}
    res = emit_plots({"energy": rep}, tmp_path, config_hash="abc")
    assert res.written == ["energy.dat", "energy.gp"]
    lines = (tmp_path / "energy.dat").read_text().splitlines()
    assert lines[0] == "# config_hash=abc"
    data = [l.split() for l in lines if not l.startswith("#")]
    assert all(len(row) == 2 for row in data)
    assert [float(r[1]) for r in data] == rep["E"]
    assert "energy.dat" in (tmp_path / "energy.gp").read_text()


def test_ratio_report_loglog_with_fitted_slope(tmp_path):
    lam = 2.0 ** np.arange(-3, 4)
    rng = np.random.default_rng(1)
    ratio = 0.3 * lam**0.75 * np.exp(rng.normal(0, 0.01, lam.size))
    oracle = np.polyfit(np.log10(lam), np.log10(ratio), 1)[0]  # base-independent slope
    rep = RatioReport("a", "b", tuple(ratio), parameters=tuple(lam))
    emit_plots({"ratio": rep}, tmp_path)
    text = (tmp_path / "ratio.dat").read_text()
    slope = float(next(l for l in text.splitlines() if "fitted slope" in l).split("=")[1])
    assert slope == pytest.approx(oracle, rel=1e-12)
    cols = np.loadtxt(tmp_path / "ratio.dat")
    assert np.allclose(cols[:, 0], np.log10(lam)) and np.allclose(cols[:, 1], np.log10(ratio))


def test_defect_and_missing_reports(tmp_path):
    sc = ScatteringReport(10.0, (1.0, 2.0, 3.0), (1e-3, 1e-4, 1e-5), "DECAYING", -2.0)
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(sc.to_dict()))
    res = emit_plots({"defect": path, "gone": tmp_path / "nope.json", "none": None,
                      "odd": {"kind": "Unknown"}}, tmp_path / "p")
    assert res.written == ["defect.dat", "defect.gp"]
    assert sorted(n for n, _ in res.skipped) == ["gone", "none", "odd"]
    assert np.loadtxt(tmp_path / "p" / "defect.dat").shape == (3, 2)
