import csv
import json
from pathlib import Path

import numpy as np
import pytest

from faddeev_lab.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main, run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _read_csv(path):
    with open(path) as fh:
        first = fh.readline()
        return first, list(csv.DictReader(fh))


def _outputs(d: Path) -> dict[str, bytes]:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file() and p.name != "timings.json"}


def test_simulate_zero_amplitude(tmp_path):
    assert main(["simulate", "--config", str(CONFIGS / "simulate_zero.toml"), "--out", str(tmp_path)]) == EXIT_OK
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["status"] == "ok" and not m["partial"] and m["schema_version"] == 1
    assert m["summary"]["trajectory_status"] == "COMPLETED"
    assert "timings" not in m and (tmp_path / "timings.json").exists()
    _, rows = _read_csv(tmp_path / "series.csv")
    assert len(rows) == m["summary"]["snapshots"]
    assert all(float(r["E"]) == 0.0 and float(r["max_abs_u"]) == 0.0 for r in rows)
    for snap in sorted((tmp_path / "trajectory").glob("snapshot_*.csv")):
        data = np.loadtxt(snap, delimiter=",", comments="#", skiprows=3)
        assert not np.any(data[:, 1:])


def test_every_output_names_config_hash(tmp_path):
    assert run("simulate", CONFIGS / "simulate_gauss.toml", tmp_path) == EXIT_OK
    h = json.loads((tmp_path / "manifest.json").read_text())["config_hash"]
    files = [p for p in tmp_path.rglob("*") if p.is_file()]
    assert any(p.suffix == ".dat" for p in files) and any(p.suffix == ".gp" for p in files)
    for p in files:
        text = p.read_text()
        if p.suffix == ".json":
            assert json.loads(text)["config_hash"] == h, p
        else:
            assert text.splitlines()[0] == f"# config_hash={h}", p


def test_config_error_exit_code(tmp_path, capsys):
    assert run("simulate", tmp_path / "missing.toml", tmp_path / "o") == EXIT_CONFIG
    bad = tmp_path / "bad.toml"
    bad.write_text('[grid]\nR = 10.0\n[solver]\nT = 1.0\n[data]\nfamily = "gauss_bump"\ndelta = 0.1\n')
    assert run("simulate", bad, tmp_path / "o") == EXIT_CONFIG
    assert "grid.N: required" in capsys.readouterr().err
    assert main(["simulate", "--config", str(CONFIGS / "simulate_zero.toml"), "--out", str(tmp_path / "o"),
                 "--threads", "0"]) == EXIT_CONFIG


def test_numerical_failure_keeps_flagged_partial_artifacts(tmp_path):
    cfg = {"grid": {"R": 10.0, "N": 64}, "solver": {"T": 2.0}, "data": {"family": "gauss_bump", "delta": 30.0}}
    assert run("simulate", cfg, tmp_path) == EXIT_NUMERICAL
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["partial"] and m["status"] == "numerical_failure" and "ResolutionError" in m["error"]
    assert m["artifacts"] and all((tmp_path / a).exists() for a in m["artifacts"])


def test_hnorm_resolution_failure(tmp_path):
    cfg = {"hnorm": {"mode": "composite", "lam": 8.0, "window": {"T": 24.0, "Nt": 64, "R": 16.0, "Nr": 40}}}
    assert run("hnorm", cfg, tmp_path) == EXIT_NUMERICAL


def test_verify_bundled_config_orders(tmp_path):
    assert run("verify", CONFIGS / "verify_mms.toml", tmp_path) == EXIT_OK
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["all_pass"]
    orders = {k: v["orders"][-1] for k, v in rep["reports"].items() if v["kind"] == "ConvergenceReport"}
    assert set(orders) >= {"rhs_u", "rhs_v", "consistency", "nullform_0", "nullform_1", "nullform_2"}
    for k, order in orders.items():
        assert order == pytest.approx(2.0, abs=0.2), k


@pytest.fixture(scope="module")
def sweep_dirs(tmp_path_factory):
    a, b = tmp_path_factory.mktemp("sweep1"), tmp_path_factory.mktemp("sweep2")
    assert run("sweep", CONFIGS / "sweep_delta.toml", a, threads=1) == EXIT_OK
    assert run("sweep", CONFIGS / "sweep_delta.toml", b, threads=3) == EXIT_OK
    return a, b


def test_sweep_summary_monotone(sweep_dirs):
    first, rows = _read_csv(sweep_dirs[0] / "summary.csv")
    assert first.startswith("# config_hash=")
    deltas = [float(r["delta"]) for r in rows]
    assert deltas == sorted([0.2, 0.1, 0.05, 0.02, 0.01])
    peaks = np.array([float(r["max_abs_u"]) for r in rows])
    assert np.all(np.diff(peaks) > 0)
    assert all(r["chain_holds"] == "true" and r["bound_holds"] == "true" for r in rows)


def test_sweep_parallel_matches_serial(sweep_dirs):
    a, b = (_outputs(d) for d in sweep_dirs)
    assert a.keys() == b.keys()
    assert a == b
    ta = json.loads((sweep_dirs[1] / "timings.json").read_text())
    assert ta["threads"] == 3


def test_repeated_runs_byte_identical(tmp_path):
    for sub, name in (("probe", "probe_rad_sob.toml"), ("hnorm", "hnorm_composite.toml"), ("norms", "norms_gauss.toml")):
        a, b = tmp_path / f"{sub}1", tmp_path / f"{sub}2"
        assert run(sub, CONFIGS / name, a) == EXIT_OK
        assert run(sub, CONFIGS / name, b) == EXIT_OK
        assert _outputs(a) == _outputs(b)


def test_seed_flag_changes_family_and_hash(tmp_path):
    assert main(["hnorm", "--config", str(CONFIGS / "hnorm_strichartz.toml"), "--out", str(tmp_path / "a")]) == 0
    assert main(["hnorm", "--config", str(CONFIGS / "hnorm_strichartz.toml"), "--out", str(tmp_path / "b"),
                 "--seed", "5"]) == 0
    ra = json.loads((tmp_path / "a" / "hnorm.json").read_text())
    rb = json.loads((tmp_path / "b" / "hnorm.json").read_text())
    assert ra["config_hash"] != rb["config_hash"] and ra["ratios"] != rb["ratios"]
    assert rb["extras"]["slope"] == pytest.approx(0.0, abs=0.1)


def test_bundled_configs_validate():
    from faddeev_lab.config import load_config

    for p in sorted(CONFIGS.glob("*.toml")):
        load_config(p)
