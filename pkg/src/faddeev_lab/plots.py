"""Plot-data emission: gnuplot-ready .dat files plus one driver script per figure.

Three figure types are recognised from a report's ``kind``:
  EnergySeries      -> energy vs t  (columns: t E)
  ScatteringReport  -> defect vs t  (columns: t defect)
  RatioReport       -> ratio vs lam (columns: log10 lam, log10 ratio, lam, ratio),
                       least-squares slope in a header comment
Nothing is rendered; running ``gnuplot <name>.gp`` produces the image.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .reports import loglog_slope


@dataclass
class PlotResult:
    written: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"written": list(self.written), "skipped": [list(s) for s in self.skipped]}


def _resolve(value: Any) -> tuple[dict | None, str]:
    if value is None:
        return None, "missing report"
    if hasattr(value, "to_dict"):
        return value.to_dict(), ""
    if isinstance(value, dict):
        return value, ""
    p = Path(value)
    if not p.is_file():
        return None, f"missing report file {p}"
    try:
        return json.loads(p.read_text()), ""
    except json.JSONDecodeError as exc:
        return None, f"unreadable report {p}: {exc}"


def _header(config_hash: str | None, lines: list[str]) -> str:
    out = [f"# config_hash={config_hash}"] if config_hash else []
    return "".join(f"{l}\n" for l in out + [f"# {l}" for l in lines])


def _rows(cols) -> str:
    return "".join(" ".join(repr(float(c)) for c in row) + "\n" for row in zip(*cols))


def _script(name: str, config_hash: str | None, xlabel: str, ylabel: str, plot: str, logy: bool = False) -> str:
    lines = [f"# config_hash={config_hash}"] if config_hash else []
    lines += [
        "set terminal pngcairo size 800,600",
        f"set output '{name}.png'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logy:
        lines.append("set logscale y")
    lines.append(plot)
    return "\n".join(lines) + "\n"


def _energy(name: str, rep: dict, h: str | None):
    t, E = rep.get("t"), rep.get("E")
    if not t or E is None or len(t) != len(E):
        return None
    dat = _header(h, [f"{name}: energy vs t", "t E"]) + _rows((t, E))
    gp = _script(name, h, "t", "E", f"plot '{name}.dat' using 1:2 with lines title 'E(t)'")
    return dat, gp


def _defect(name: str, rep: dict, h: str | None):
    t, d = rep.get("times"), rep.get("defect")
    if not t or d is None or len(t) != len(d):
        return None
    dat = _header(h, [f"{name}: scattering defect vs t", f"verdict={rep.get('verdict')}", "t defect"]) + _rows((t, d))
    gp = _script(name, h, "t", "defect", f"plot '{name}.dat' using 1:2 with linespoints title 'defect'",
                 logy=min(d) > 0)
    return dat, gp


def _ratio(name: str, rep: dict, h: str | None):
    x = np.asarray(rep.get("parameters") or [], float)
    y = np.asarray(rep.get("ratios") or [], float)
    if x.size != y.size:
        return None
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2:
        return None
    slope = loglog_slope(x, y)
    lx, ly = np.log10(x), np.log10(y)
    icpt = float(np.mean(ly - slope * lx))
    dat = _header(h, [f"{name}: {rep.get('lhs')} / {rep.get('rhs')}",
                      f"fitted slope = {slope!r}", f"fitted intercept (log10) = {icpt!r}",
                      "log10_lam log10_ratio lam ratio"]) + _rows((lx, ly, x, y))
    gp = _script(name, h, "log10 lambda", "log10 ratio",
                 f"plot '{name}.dat' using 1:2 with points title 'ratio', "
                 f"{icpt!r} + {slope!r}*x with lines title 'slope {slope:.4f}'")
    return dat, gp


_BUILDERS = {"EnergySeries": _energy, "ScatteringReport": _defect, "RatioReport": _ratio}


def emit_plots(reports: Mapping[str, Any], out_dir, config_hash: str | None = None) -> PlotResult:
    """Write ``<name>.dat`` and ``<name>.gp`` for each recognised report.

    Values may be report objects, dicts from ``to_dict``, JSON file paths or
    None; missing or unrecognised reports are listed in ``skipped``.
    """
    res = PlotResult()
    out = Path(out_dir)
    for name in sorted(reports):
        rep, why = _resolve(reports[name])
        if rep is None:
            res.skipped.append((name, why))
            continue
        build = _BUILDERS.get(rep.get("kind"))
        files = build(name, rep, config_hash) if build else None
        if files is None:
            res.skipped.append((name, f"no plottable data for kind {rep.get('kind')!r}"))
            continue
        out.mkdir(parents=True, exist_ok=True)
        for ext, text in zip((".dat", ".gp"), files):
            (out / f"{name}{ext}").write_text(text)
            res.written.append(f"{name}{ext}")
    return res
