"""Command-line experiment runner.

    python -m faddeev_lab <subcommand> --config exp.toml --out DIR [--seed N] [--threads N]

Every run writes ``manifest.json`` (config echo, config hash, versions,
status, artifact list) and ``timings.json`` (wall-clock seconds; the only
output that is not reproducible) next to its reports.  All JSON and CSV
outputs carry the config hash.  Exit codes: 0 success, 2 config error,
3 numerical failure (artifacts written so far are kept and the manifest is
flagged ``partial``).
"""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .config import SCHEMA_VERSION, SUBCOMMANDS, ExperimentConfig, load_config, parse_config
from .errors import ConfigError, LabError
from .plots import emit_plots
from .reports import _clean

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class NumericalFailure(LabError):
    """A run finished without a valid result (ceiling trip, non-finite values)."""


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "sympy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:  # pragma: no cover
            out[pkg] = None
    try:
        out["faddeev_lab"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        out["faddeev_lab"] = None
    return out


def dump_json(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class RunContext:
    """Output directory bookkeeping for one run."""

    def __init__(self, cfg: ExperimentConfig, out: Path, threads: int = 1):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.hash = cfg.hash
        self.artifacts: list[str] = []
        self.timings: dict[str, float] = {}
        self.plot_reports: dict[str, Any] = {}
        self.summary: dict[str, Any] = {}

    def path(self, rel: str) -> Path:
        p = self.out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def _add(self, rel: str) -> None:
        if rel not in self.artifacts:
            self.artifacts.append(rel)

    def write_json(self, rel: str, obj: dict) -> None:
        body = {"config_hash": self.hash, **_clean(obj)}
        self.path(rel).write_text(dump_json(body))
        self._add(rel)

    def write_csv(self, rel: str, columns: list[str], rows: list[dict]) -> None:
        with open(self.path(rel), "w", newline="") as fh:
            fh.write(f"# config_hash={self.hash}\n")
            w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: _fmt(row.get(k)) for k in columns})
        self._add(rel)

    def register(self, rel: str) -> None:
        self._add(rel)

    def stage(self, name: str, fn: Callable, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def finish(self, status: str, error: str | None) -> None:
        plots = emit_plots(self.plot_reports, self.out / "plots", self.hash) if self.plot_reports else None
        if plots:
            for f in plots.written:
                self._add(f"plots/{f}")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.cfg.subcommand,
            "config_hash": self.hash,
            "config": self.cfg.to_dict(),
            "versions": _versions(),
            "status": status,
            "partial": status != "ok",
            "error": error,
            "summary": _clean(self.summary),
            "artifacts": sorted(self.artifacts),
            "plots_skipped": plots.skipped if plots else [],
            "timings_file": "timings.json",
        }
        (self.out / "manifest.json").write_text(dump_json(manifest))
        timings = {"config_hash": self.hash, "threads": self.threads, "seconds": self.timings,
                   "note": "wall-clock only; excluded from reproducibility comparisons"}
        (self.out / "timings.json").write_text(dump_json(timings))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ------------------------------------------------------------ shared pieces


def _solver_config(cfg_dict: dict):
    from .evolution import Scheme, SolverConfig

    g, s = cfg_dict["grid"], cfg_dict["solver"]
    return SolverConfig.from_grid(
        float(g["R"]), int(g["N"]), float(s["T"]), cfl=float(s.get("cfl", 0.5)),
        scheme=Scheme(s.get("scheme", "rk4")), snapshot_stride=int(s.get("snapshot_stride", 1)),
        nonlinear=bool(s.get("nonlinear", True)), sponge=bool(s.get("sponge", False)),
    )


def _initial_state(cfg_dict: dict, delta: float | None = None):
    from .evolution import Form, initial_data

    g, d, s = cfg_dict["grid"], cfg_dict["data"], cfg_dict.get("solver", {})
    return initial_data(d["family"], float(d["delta"] if delta is None else delta), d.get("params", {}),
                        R=float(g["R"]), N=int(g["N"]), form=Form(s.get("form", "v")),
                        velocity=d.get("velocity", "zero"))


def _evolve(ctx: RunContext, delta: float | None = None, subdir: str = "trajectory"):
    from .evolution import Status, evolve

    traj = ctx.stage("evolve", evolve, _initial_state(ctx.cfg.data, delta), _solver_config(ctx.cfg.data))
    ctx.stage("save", traj.save, ctx.path(subdir), {"config_hash": ctx.hash}, f"config_hash={ctx.hash}")
    for s in range(len(traj.snapshots)):
        ctx.register(f"{subdir}/snapshot_{s:05d}.csv")
    ctx.register(f"{subdir}/manifest.json")
    ctx.summary.update({"trajectory_status": traj.status.value, "message": traj.message,
                        "final_t": float(traj.final.t), "snapshots": len(traj.snapshots)})
    return traj, traj.status is Status.COMPLETED


def _energy_series(ctx: RunContext, rows: list[dict]) -> None:
    t = [r["t"] for r in rows]
    E = [r["E"] for r in rows]
    drift = float(max(abs(e - E[0]) for e in E) / E[0]) if E and E[0] > 0 else 0.0
    rep = {"kind": "EnergySeries", "t": t, "E": E, "max_abs_u": [r["max_abs_u"] for r in rows],
           "relative_drift": drift}
    ctx.write_json("energy.json", rep)
    ctx.plot_reports["energy_vs_t"] = rep
    ctx.summary["relative_energy_drift"] = drift
    ctx.summary["max_abs_u"] = max(rep["max_abs_u"]) if rows else 0.0


def _write_series(ctx: RunContext, rows: list[dict]) -> None:
    from .diagnostics import SERIES_COLUMNS

    ctx.write_csv("series.csv", list(SERIES_COLUMNS), rows)


# --------------------------------------------------------------- runners


def run_simulate(ctx: RunContext) -> bool:
    from .diagnostics import time_series

    traj, ok = _evolve(ctx)
    rows = ctx.stage("series", time_series, traj)
    _write_series(ctx, rows)
    _energy_series(ctx, rows)
    if not ok:
        raise NumericalFailure(f"trajectory {traj.status.value}: {traj.message}")
    return True


def run_scatter(ctx: RunContext) -> bool:
    from .diagnostics import scattering_fit, time_series

    traj, ok = _evolve(ctx)
    sc = ctx.cfg.data.get("scatter", {})
    rep = ctx.stage("scattering", scattering_fit, traj, flow=sc.get("flow", "solver"))
    d = rep.to_dict()
    ctx.write_json("scattering.json", d)
    ctx.plot_reports["defect_vs_t"] = d
    ctx.summary.update({"verdict": rep.verdict, "final_over_peak": rep.final_over_peak, "warning": rep.warning})
    if sc.get("series", True):
        rows = ctx.stage("series", time_series, traj, rep)
        _write_series(ctx, rows)
        _energy_series(ctx, rows)
    if not ok:
        raise NumericalFailure(f"trajectory {traj.status.value}: {traj.message}")
    return True


def _sweep_one(cfg_dict: dict, delta: float, do_scatter: bool) -> dict:
    """One sweep member: simulate, check the pointwise chain on every snapshot, fit scattering."""
    from .coefficients import I_inverse
    from .diagnostics import energy, pointwise_bound_check, scattering_fit
    from .evolution import Status, evolve

    traj = evolve(_initial_state(cfg_dict, delta), _solver_config(cfg_dict))
    checks = [pointwise_bound_check(s) for s in traj.snapshots]
    E0 = energy(traj.snapshots[0]).E
    bound = float(I_inverse(2.0 * E0))
    peak = max(c.max_u for c in checks)
    row = {
        "delta": float(delta),
        "status": traj.status.value,
        "final_t": float(traj.final.t),
        "E0": float(E0),
        "max_abs_u": float(peak),
        "implied_bound": bound,
        "bound_holds": bool(peak <= bound + 1e-3),
        "chain_holds": all(c.chain_holds for c in checks),
        "max_chain_ratio": max(c.max_chain_ratio for c in checks),
        "verdict": None,
        "final_over_peak": None,
    }
    if do_scatter and traj.status is Status.COMPLETED:
        rep = scattering_fit(traj)
        row["verdict"] = rep.verdict
        row["final_over_peak"] = rep.final_over_peak
    return {"row": row, "traj": traj, "checks": [c.to_dict() for c in checks]}


SWEEP_COLUMNS = ["delta", "status", "final_t", "E0", "max_abs_u", "implied_bound", "bound_holds",
                 "chain_holds", "max_chain_ratio", "verdict", "final_over_peak"]


def run_sweep(ctx: RunContext) -> bool:
    sw = ctx.cfg.data["sweep"]
    deltas = sorted(float(d) for d in sw["deltas"])
    do_scatter = bool(sw.get("scatter", True))
    args = [(ctx.cfg.data, d, do_scatter) for d in deltas]
    t0 = time.perf_counter()
    if ctx.threads > 1 and len(deltas) > 1:
        with ProcessPoolExecutor(max_workers=min(ctx.threads, len(deltas))) as pool:
            results = list(pool.map(_sweep_one, *zip(*args)))
    else:
        results = [_sweep_one(*a) for a in args]
    ctx.timings["runs"] = time.perf_counter() - t0
    rows = []
    for k, res in enumerate(results):
        sub = f"runs/{k:03d}"
        traj = res["traj"]
        traj.save(ctx.path(sub), {"config_hash": ctx.hash, "delta": res["row"]["delta"]}, f"config_hash={ctx.hash}")
        for s in range(len(traj.snapshots)):
            ctx.register(f"{sub}/snapshot_{s:05d}.csv")
        ctx.register(f"{sub}/manifest.json")
        ctx.write_json(f"{sub}/pointwise.json", {"delta": res["row"]["delta"], "snapshots": res["checks"]})
        rows.append({**res["row"], "run_dir": sub})
    ctx.write_csv("summary.csv", SWEEP_COLUMNS + ["run_dir"], rows)
    peaks = [r["max_abs_u"] for r in rows]
    bounds = [r["implied_bound"] for r in rows]
    summary = {
        "deltas": deltas,
        "max_abs_u_monotone": bool(np.all(np.diff(peaks) > 0)),
        "implied_bound_monotone": bool(np.all(np.diff(bounds) > 0)),
        "all_completed": all(r["status"] == "COMPLETED" for r in rows),
        "all_chains_hold": all(r["chain_holds"] for r in rows),
        "all_bounds_hold": all(r["bound_holds"] for r in rows),
        "rows": rows,
    }
    ctx.write_json("summary.json", summary)
    ctx.summary.update({k: v for k, v in summary.items() if k != "rows"})
    if not summary["all_completed"]:
        bad = [r["delta"] for r in rows if r["status"] != "COMPLETED"]
        raise NumericalFailure(f"sweep members did not complete: delta = {bad}")
    return True


def _manufactured(amplitude: float):
    """Closed-form fields u = a r e^{-r^2} (v = u / r) with velocities, and their exact accelerations."""
    import sympy as sp

    from .evolution import rhs_u_exact, rhs_v_exact

    r = sp.symbols("r", positive=True)
    a = sp.nsimplify(amplitude)
    v = a * sp.exp(-r**2)
    vt = 2 * a / 3 * sp.exp(-r**2)
    lam = lambda e: sp.lambdify(r, e, "numpy")  # noqa: E731
    v_f, vt_f = lam(v), lam(vt)
    vr, vrr = lam(sp.diff(v, r)), lam(sp.diff(v, r, 2))
    u_f, ut_f = lam(r * v), lam(r * vt)
    ur, urr = lam(sp.diff(r * v, r)), lam(sp.diff(r * v, r, 2))
    ex_v = lambda x: rhs_v_exact(x, v_f(x), vr(x), vrr(x), vt_f(x))  # noqa: E731
    ex_u = lambda x: rhs_u_exact(x, u_f(x), ur(x), urr(x), ut_f(x))  # noqa: E731
    return (v_f, vt_f, ex_v), (u_f, ut_f, ex_u)


def _nullform_fields():
    return [
        ("exp(-(r^2+t^2))", lambda t, r: np.exp(-(r * r + t * t))),
        ("r exp(-r^2) cos t", lambda t, r: r * np.exp(-r * r) * np.cos(t)),
        ("cos 2t / (1+r^2)^2", lambda t, r: np.cos(2 * t) / (1 + r * r) ** 2),
    ]


def run_verify(ctx: RunContext) -> bool:
    from .diagnostics import nullform_residual, scaling_covariance_check, spacetime_symbols
    from .evolution import Form, consistency_u_v, rhs_convergence

    v = ctx.cfg.data["verify"]
    R, Ns = float(v["R"]), [int(n) for n in v["Ns"]]
    checks = v.get("checks", ["rhs_u", "rhs_v", "consistency", "nullform", "scaling"])
    (vf, vtf, exv), (uf, utf, exu) = _manufactured(float(v.get("amplitude", 0.5)))
    reports: dict[str, dict] = {}
    passed: dict[str, bool] = {}

    def order_ok(rep) -> bool:
        return bool(abs(rep.order - 2.0) <= 0.2)

    if "rhs_u" in checks:
        rep = ctx.stage("rhs_u", rhs_convergence, Form.U_FORM, uf, utf, exu, R, Ns, label="rhs_u")
        reports["rhs_u"], passed["rhs_u"] = rep.to_dict(), order_ok(rep)
    if "rhs_v" in checks:
        rep = ctx.stage("rhs_v", rhs_convergence, Form.V_FORM, vf, vtf, exv, R, Ns, label="rhs_v")
        reports["rhs_v"], passed["rhs_v"] = rep.to_dict(), order_ok(rep)
    if "consistency" in checks:
        rep = ctx.stage("consistency", consistency_u_v, vf, vtf, R, Ns)
        reports["consistency"], passed["consistency"] = rep.to_dict(), order_ok(rep)
    if "nullform" in checks:
        for k, (label, fn) in enumerate(_nullform_fields()):
            rep = ctx.stage("nullform", nullform_residual, fn, 0.02, 0.02, levels=3)
            reports[f"nullform_{k}"] = {**rep.to_dict(), "field": label}
            passed[f"nullform_{k}"] = order_ok(rep)
    if "scaling" in checks:
        import sympy as sp

        T, Rs = spacetime_symbols()
        fields = [Rs * sp.exp(-Rs**2 - T**2), Rs * sp.cos(T) / (1 + Rs**2)]
        for lam in v.get("scaling_lams", [0.25, 1.0, 2.0, 8.0]):
            errs = [ctx.stage("scaling", scaling_covariance_check, u, float(lam)).errors[0] for u in fields]
            key = f"scaling_lam_{float(lam)!r}"
            reports[key] = {"kind": "ScalingCheck", "lam": float(lam), "relative_errors": errs}
            passed[key] = bool(max(errs) < 1e-10)
    ctx.write_json("verify.json", {"reports": reports, "passed": passed, "all_pass": all(passed.values())})
    ctx.summary.update({"passed": passed, "all_pass": all(passed.values())})
    return True


def run_norms(ctx: RunContext) -> bool:
    from .diagnostics import TRAJECTORY_NORM_OPTIONS
    from .evolution import Form
    from .radial import BesovSpec, besov_norm, data_norm_D, profile_to_csv

    st = _initial_state({**ctx.cfg.data, "solver": {"form": "v"}}).to_form(Form.V_FORM)
    n = ctx.cfg.data["norms"]
    out = []
    for spec in n["specs"]:
        bs = BesovSpec(float(spec["s"]), float(spec["p"]), float(spec["q"]), 4)
        res = ctx.stage("besov", besov_norm, st.f, bs, **TRAJECTORY_NORM_OPTIONS)
        out.append({"s": bs.s, "p": bs.p, "q": bs.q, "value": res.value, "tail": res.tail,
                    "bands": list(res.bands), "terms": list(res.terms)})
    body: dict[str, Any] = {"kind": "NormReport", "profile": "v0", "besov": out}
    if n.get("data_norm", True):
        body["data_norm_D"] = ctx.stage("data_norm", data_norm_D, st.f, st.f_t, **TRAJECTORY_NORM_OPTIONS)
    ctx.write_json("norms.json", body)
    for name, prof in (("profile_v0.csv", st.f), ("profile_v1.csv", st.f_t)):
        profile_to_csv(ctx.path(name), prof, header=f"config_hash={ctx.hash}")
        ctx.register(name)
    return True


def run_probe(ctx: RunContext) -> bool:
    from .diagnostics import (REGRESSION_CONSTANTS, Probe, bump_family, inequality_probe, single_band_family,
                              small_data_trajectories, y_norm)

    p = ctx.cfg.data["probe"]
    probe = Probe(p["name"])
    seed = ctx.cfg.seed
    kw = {}
    const = REGRESSION_CONSTANTS.get(probe)
    if probe is Probe.NONLIN:
        d = ctx.cfg.data.get("data", {})
        fam = ctx.stage("family", small_data_trajectories, p["deltas"], family=d.get("family", "gauss_bump"),
                        params=d.get("params"), R=float(p["R"]), N=int(p["N"]), T=float(p["T"]))
        bad = [t.status.value for t in fam if t.status.value != "COMPLETED"]
        if bad:
            raise NumericalFailure(f"probe trajectories did not complete: {bad}")
    elif probe is Probe.RAD_SOB:
        fam = ctx.stage("family", single_band_family, p["lams"], seed=seed)
    else:
        m = int(p["members"])
        n_members = 2 * m if probe in (Probe.PROD, Probe.ALGEBRA_Y, Probe.R_WEIGHT) else m
        fam = ctx.stage("family", bump_family, n_members, seed, float(p["R"]), int(p["N"]))
        if probe in (Probe.PROD, Probe.ALGEBRA_Y, Probe.R_WEIGHT):
            fam = list(zip(fam[::2], fam[1::2]))
        elif probe is Probe.SIN_POWER:
            fam = [f.with_samples(f.samples * 0.5 / y_norm(f)) for f in fam]
            kw["k"] = int(p.get("k", 1))
            const = const.get(kw["k"])
    const = p.get("regression_constant", const)
    rep = ctx.stage("probe", inequality_probe, probe, fam, const, **kw)
    body = {**rep.to_dict(), "probe": probe.value}
    ctx.write_json("probe.json", body)
    ctx.plot_reports[f"ratio_{probe.value.lower()}"] = body
    ctx.summary.update({"max_ratio": rep.max, "within_constant": rep.within_constant})
    return True


def run_hnorm(ctx: RunContext) -> bool:
    from . import hyperbolic as hy

    h = ctx.cfg.data["hnorm"]
    mode = h["mode"]
    seed = ctx.cfg.seed
    w = h.get("window")
    pg = hy.PacketGrid(T=float(w["T"]), Nt=int(w["Nt"]), R=float(w["R"]), Nr=int(w["Nr"])) if w else None
    if mode == "composite":
        packet = ctx.stage("family", hy.gaussian_packet, pg, float(h["lam"]), angle=float(h.get("angle", np.pi / 4)))
        rep = ctx.stage("norm", hy.composite_X_norm, packet, h.get("bands"))
        body = rep.to_dict()
        ctx.summary.update({"X": rep.X})
    else:
        if mode == "strichartz":
            fam = ctx.stage("family", hy.free_wave_family, h["lams"], int(h.get("symbols", 2)), seed)
            rad = bool(h.get("radial_weight", False))
            rep = ctx.stage("probe", hy.strichartz_probe, float(h["q"]), None if rad else float(h["r"]), fam,
                            radial_weight=rad, regression_constant=h.get("regression_constant"))
        elif mode in ("trilinear", "bilinear"):
            triples = ctx.stage("family", hy.packet_triples, h["separations"], int(h["per_separation"]),
                                float(h["nu"]), seed, pg, int(h.get("pool", 3)))
            if mode == "trilinear":
                const = h.get("regression_constant", hy.TRILINEAR_REGRESSION_CONSTANT)
                rep = ctx.stage("probe", hy.trilinear_probe, triples, const)
            else:
                rep = ctx.stage("probe", hy.bilinear_probe, [(u, x, s) for u, _, x, s in triples])
        else:  # sin
            packet = hy.gaussian_packet(pg, float(h["lam"]), angle=float(h.get("angle", np.pi / 4)))
            base = packet.scaled(1.0 / hy.composite_X_norm(packet).X)
            rep = ctx.stage("probe", hy.sin_composition_probe, [base.scaled(a) for a in h["amplitudes"]],
                            alpha=float(h.get("alpha", 1.0)), regression_constant=h.get("regression_constant"))
        body = rep.to_dict()
        ctx.plot_reports[f"ratio_{mode}"] = body
        ctx.summary.update({"max_ratio": rep.max, "within_constant": rep.within_constant})
    ctx.write_json("hnorm.json", {**body, "mode": mode})
    return True


RUNNERS = {
    "simulate": run_simulate,
    "scatter": run_scatter,
    "sweep": run_sweep,
    "verify": run_verify,
    "norms": run_norms,
    "probe": run_probe,
    "hnorm": run_hnorm,
}


# ------------------------------------------------------------------ entry


def run(subcommand: str, config: str | Path | dict, out: str | Path, seed: int | None = None,
        threads: int = 1) -> int:
    """Run one experiment; returns the process exit code."""
    try:
        cfg = parse_config(config, subcommand, seed) if isinstance(config, dict) else \
            load_config(config, subcommand, seed)
        if threads < 1:
            raise ConfigError("--threads", f"must be at least 1 (got {threads})")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = RunContext(cfg, out, threads)
    status, error, code = "ok", None, EXIT_OK
    try:
        RUNNERS[cfg.subcommand](ctx)
    except ConfigError as exc:
        status, error, code = "config_error", str(exc), EXIT_CONFIG
    except (LabError, FloatingPointError, np.linalg.LinAlgError) as exc:
        status, error, code = "numerical_failure", f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL
    except ValueError as exc:
        status, error, code = "config_error", f"{type(exc).__name__}: {exc}", EXIT_CONFIG
    ctx.finish(status, error)
    if error:
        print(f"{status}: {error}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="faddeev-lab", description="Radial Faddeev-model numerics.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", required=True, help="TOML experiment file")
        sp_.add_argument("--out", required=True, help="output directory")
        sp_.add_argument("--seed", type=int, default=None, help="overrides the config seed (u64)")
        sp_.add_argument("--threads", type=int, default=1, help="worker processes (sweep)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
