"""Report containers returned by diagnostics and probes.

All reports are frozen dataclasses with a ``to_dict`` method producing plain
JSON-serializable data, so that serialization is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _clean(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON-friendly types."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if hasattr(value, "name") and hasattr(value, "value") and not isinstance(value, (int, float, str)):
        return value.name
    return value


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)[0])


@dataclass(frozen=True)
class RatioReport:
    """Statistics of empirical LHS/RHS ratios over a family of inputs."""

    lhs_label: str
    rhs_label: str
    ratios: tuple[float, ...]
    regression_constant: float | None = None
    skipped: int = 0
    parameters: tuple[float, ...] = ()
    extras: dict = field(default_factory=dict)

    @property
    def min(self) -> float:
        return float(np.min(self.ratios)) if self.ratios else float("nan")

    @property
    def max(self) -> float:
        return float(np.max(self.ratios)) if self.ratios else float("nan")

    @property
    def median(self) -> float:
        return float(np.median(self.ratios)) if self.ratios else float("nan")

    @property
    def within_constant(self) -> bool | None:
        if self.regression_constant is None:
            return None
        return bool(self.max <= self.regression_constant)

    def slope(self) -> float:
        """Log-log slope of the ratios against ``parameters``."""
        return loglog_slope(self.parameters, self.ratios)

    def to_dict(self) -> dict:
        return _clean(
            {
                "kind": "RatioReport",
                "lhs": self.lhs_label,
                "rhs": self.rhs_label,
                "ratios": list(self.ratios),
                "parameters": list(self.parameters),
                "min": self.min,
                "max": self.max,
                "median": self.median,
                "regression_constant": self.regression_constant,
                "skipped": self.skipped,
                "extras": self.extras,
            }
        )


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors at a sequence of step sizes and the observed convergence orders."""

    label: str
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    extras: dict = field(default_factory=dict)

    @property
    def orders(self) -> tuple[float, ...]:
        out = []
        for (h0, e0), (h1, e1) in zip(zip(self.steps, self.errors), zip(self.steps[1:], self.errors[1:])):
            if e0 > 0 and e1 > 0:
                out.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
            else:
                out.append(float("inf"))
        return tuple(out)

    @property
    def order(self) -> float:
        """Order observed between the two finest resolutions."""
        return self.orders[-1] if self.orders else float("nan")

    @property
    def max_error(self) -> float:
        return float(max(self.errors)) if self.errors else 0.0

    def to_dict(self) -> dict:
        return _clean(
            {
                "kind": "ConvergenceReport",
                "label": self.label,
                "steps": list(self.steps),
                "errors": list(self.errors),
                "orders": list(self.orders),
                "extras": self.extras,
            }
        )


@dataclass(frozen=True)
class EnergyReport:
    t: float
    E: float
    kinetic: float
    gradient: float
    potential: float

    def to_dict(self) -> dict:
        return _clean(
            {
                "kind": "EnergyReport",
                "t": self.t,
                "E": self.E,
                "kinetic": self.kinetic,
                "gradient": self.gradient,
                "potential": self.potential,
            }
        )


@dataclass(frozen=True)
class ScatteringReport:
    fit_time: float
    times: tuple[float, ...]
    defect: tuple[float, ...]
    verdict: str
    slope: float
    warning: str | None = None

    @property
    def peak(self) -> float:
        return float(max(self.defect)) if self.defect else 0.0

    @property
    def final_over_peak(self) -> float:
        if not self.defect or self.peak == 0.0:
            return 0.0
        return float(self.defect[-1] / self.peak)

    def to_dict(self) -> dict:
        return _clean(
            {
                "kind": "ScatteringReport",
                "fit_time": self.fit_time,
                "times": list(self.times),
                "defect": list(self.defect),
                "verdict": self.verdict,
                "slope": self.slope,
                "final_over_peak": self.final_over_peak,
                "warning": self.warning,
            }
        )
