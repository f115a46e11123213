import pytest

from faddeev_lab.config import ExperimentConfig, load_config, parse_config
from faddeev_lab.errors import ConfigError

BASE = {
    "grid": {"R": 10.0, "N": 128},
    "solver": {"T": 2.0},
    "data": {"family": "gauss_bump", "delta": 0.1},
}


def _cfg(**over):
    d = {k: dict(v) for k, v in BASE.items()}
    for path, val in over.items():
        sec, key = path.split("__")
        if val is None:
            d[sec].pop(key)
        else:
            d[sec][key] = val
    return d


def test_valid_simulate_config():
    cfg = parse_config(_cfg(), "simulate")
    assert isinstance(cfg, ExperimentConfig) and cfg.subcommand == "simulate" and cfg.seed == 0
    assert cfg.to_dict()["schema_version"] == 1


@pytest.mark.parametrize("path,field", [
    ("grid__R", "grid.R"),
    ("grid__N", "grid.N"),
    ("solver__T", "solver.T"),
    ("data__delta", "data.delta"),
    ("data__family", "data.family"),
])
def test_physical_parameters_have_no_defaults(path, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(_cfg(**{path: None}), "simulate")
    assert exc.value.field == field
    assert str(exc.value).startswith(f"{field}: required")


@pytest.mark.parametrize("path,val,field", [
    ("grid__R", -1.0, "grid.R"),
    ("grid__N", 12.5, "grid.N"),
    ("grid__N", 4, "grid.N"),
    ("solver__cfl", 1.5, "solver.cfl"),
    ("solver__scheme", "euler", "solver.scheme"),
    ("data__family", "square", "data.family"),
    ("data__delta", True, "data.delta"),
])
def test_field_level_messages(path, val, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(_cfg(**{path: val}), "simulate")
    assert exc.value.field == field


def test_subcommand_and_schema_checks():
    with pytest.raises(ConfigError, match="subcommand"):
        parse_config(_cfg())
    with pytest.raises(ConfigError, match="invoked as"):
        parse_config({**_cfg(), "subcommand": "verify"}, "simulate")
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config({**_cfg(), "schema_version": 7}, "simulate")
    with pytest.raises(ConfigError, match="seed"):
        parse_config(_cfg(), "simulate", seed=-1)


def test_hash_is_canonical_and_seed_sensitive():
    a = parse_config(_cfg(), "simulate")
    reordered = {"data": BASE["data"], "solver": BASE["solver"], "grid": BASE["grid"]}
    assert parse_config(reordered, "simulate").hash == a.hash
    assert parse_config(_cfg(), "simulate", seed=1).hash != a.hash
    assert parse_config(_cfg(data__delta=0.2), "simulate").hash != a.hash
    assert len(a.hash) == 16


def test_load_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('subcommand = "simulate"\nseed = 3\n[grid]\nR = 10.0\nN = 128\n'
                 '[solver]\nT = 1.0\n[data]\nfamily = "poly_bump"\ndelta = 0.0\n')
    cfg = load_config(p)
    assert cfg.seed == 3 and cfg.data["data"]["family"] == "poly_bump"
    assert load_config(p, seed=9).seed == 9
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    (tmp_path / "bad.toml").write_text("[grid\nR=")
    with pytest.raises(ConfigError, match="TOML"):
        load_config(tmp_path / "bad.toml")


@pytest.mark.parametrize("sub,data,field", [
    ("sweep", {**BASE, "sweep": {"deltas": []}}, "sweep.deltas"),
    ("verify", {"verify": {"R": 10.0, "Ns": [512]}}, "verify.Ns"),
    ("verify", {"verify": {"R": 10.0, "Ns": [512, 1024], "checks": ["bogus"]}}, "verify.checks"),
    ("probe", {"probe": {"name": "NONLIN", "deltas": [0.01, 0.02], "R": 20.0, "N": 512}}, "probe.T"),
    ("hnorm", {"hnorm": {"mode": "composite", "lam": 1.0}}, "hnorm.window"),
    ("hnorm", {"hnorm": {"mode": "strichartz", "q": 2.0, "lams": [1.0, 2.0]}}, "hnorm.r"),
    ("norms", {**BASE, "norms": {"specs": [{"s": 1.0, "p": 2.0}]}}, "norms.specs[0].q"),
])
def test_subcommand_blocks(sub, data, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(data, sub)
    assert exc.value.field == field
