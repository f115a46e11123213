"""Coefficient functions of the equivariant Faddeev equation in u- and v-form.

The four nonlinear coefficients of the semilinear v-equation factor as
``h_i(r, u) = h_tilde_i(u) / phi(r, u)`` with ``phi = 1 + sin(u)**2 / r**2``.
Each ``h_tilde_i`` has a removable singularity at ``u = 0``; below a switch
threshold the functions are evaluated from truncated Maclaurin series.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import factorial

import numpy as np

from .errors import DomainError
from .reports import RatioReport


class CoefficientId(Enum):
    H1 = 1
    H2 = 2
    H3 = 3
    H4 = 4


@dataclass(frozen=True)
class SeriesSwitch:
    """Where and how finely the series branch replaces the closed forms."""

    u_threshold: float = 0.5
    series_order: int = 12

    def __post_init__(self):
        if not self.u_threshold > 0:
            raise ValueError("u_threshold must be positive")
        if self.series_order < 8:
            raise ValueError("series_order must be at least 8")


DEFAULT_SWITCH = SeriesSwitch()


def _series_tables(order: int) -> dict[str, np.ndarray]:
    # coefficients in powers of u**2, lowest first
    k = np.arange(order)
    sinc = np.array([(-1.0) ** i / factorial(2 * i + 1) for i in k])
    # (sin u - u cos u)/u**3 = sum_{m>=1} (-1)**(m+1) 2m/(2m+1)! u**(2m-2)
    a = np.array([(-1.0) ** (m + 1) * 2 * m / factorial(2 * m + 1) for m in k + 1])
    # (sin 2u - 2u)/(2u**3) = sum_{m>=1} (-1)**m 4**m/(2m+1)! u**(2m-2)
    b = np.array([(-1.0) ** m * 4.0**m / factorial(2 * m + 1) for m in k + 1])
    # (sin(u)**2 - u**2)/u**4 = sum_{j>=0} (-1)**(j+1) 2**(2j+3)/(2j+4)! u**(2j)
    m = np.array([(-1.0) ** (j + 1) * 2.0 ** (2 * j + 3) / factorial(2 * j + 4) for j in k])
    # its derivative divided by u
    mp = np.array([2.0 * (j + 1) * (-1.0) ** j * 2.0 ** (2 * j + 5) / factorial(2 * j + 6) for j in k])
    return {"sinc": sinc, "a": a, "h2": b, "m": m, "mp": mp}


_TABLE_CACHE: dict[int, dict[str, np.ndarray]] = {}


def _tables(order: int) -> dict[str, np.ndarray]:
    if order not in _TABLE_CACHE:
        _TABLE_CACHE[order] = _series_tables(order)
    return _TABLE_CACHE[order]


def _horner(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.full_like(x, coeffs[-1])
    for c in coeffs[-2::-1]:
        out = out * x + c
    return out


def _split(u, switch: SeriesSwitch, series_key: str, closed):
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    out = np.empty_like(u)
    small = np.abs(u) < switch.u_threshold
    if small.any():
        us = u[small]
        out[small] = _horner(_tables(switch.series_order)[series_key], us * us)
    big = ~small
    if big.any():
        out[big] = closed(u[big])
    return out[0] if scalar else out


def sinc(u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """sin(u)/u with the value 1 at u = 0."""
    return _split(u, switch, "sinc", lambda x: np.sin(x) / x)


def cubic_ratio(u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """(sin u - u cos u)/u**3, equal to 1/3 at u = 0."""
    return _split(u, switch, "a", lambda x: (np.sin(x) - x * np.cos(x)) / x**3)


def quartic_defect(u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """(sin(u)**2 - u**2)/u**4, equal to -1/3 at u = 0."""
    return _split(u, switch, "m", lambda x: (np.sin(x) ** 2 - x * x) / x**4)


def quartic_defect_slope(u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """Derivative of :func:`quartic_defect` divided by u (4/45 at u = 0)."""
    def closed(x):
        return ((np.sin(2 * x) - 2 * x) / x**4 - 4.0 * (np.sin(x) ** 2 - x * x) / x**5) / x
    return _split(u, switch, "mp", closed)


def h_tilde(cid: CoefficientId, u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """The r-independent numerator of coefficient ``cid`` at angle ``u``."""
    u = np.asarray(u, dtype=float)
    if cid is CoefficientId.H1:
        return 2.0 * u * sinc(u, switch) * cubic_ratio(u, switch)
    if cid is CoefficientId.H2:
        return _split(u, switch, "h2", lambda x: (np.sin(2 * x) - 2 * x) / (2 * x**3))
    if cid is CoefficientId.H3:
        return sinc(u, switch) * cubic_ratio(u, switch)
    if cid is CoefficientId.H4:
        return sinc(2.0 * u, switch)
    raise TypeError(f"unknown coefficient {cid!r}")


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("radius must be strictly positive")
    return r


def phi(r, u):
    """1 + sin(u)**2 / r**2."""
    r = _check_radius(r)
    return 1.0 + np.sin(u) ** 2 / r**2


def phi_stable(v, u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """phi expressed through v = u/r: 1 + v**2 (sin(u)/u)**2."""
    s = sinc(u, switch)
    return 1.0 + (np.asarray(v, dtype=float) * s) ** 2


def h(cid: CoefficientId, r, u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """Coefficient h_i(r, u) = h_tilde_i(u) / phi(r, u)."""
    return h_tilde(cid, u, switch) / phi(r, u)


def h_stable(cid: CoefficientId, v, u, switch: SeriesSwitch = DEFAULT_SWITCH):
    """Coefficient h_i evaluated from (v, u) without dividing by r."""
    return h_tilde(cid, u, switch) / phi_stable(v, u, switch)


def decay_exponent(cid: CoefficientId, j: int) -> int:
    """Power k of the Japanese bracket in the decay envelope of d^j h_tilde."""
    if cid is CoefficientId.H1:
        return 2
    if cid is CoefficientId.H2:
        return 2 if j == 0 else 3
    if cid is CoefficientId.H3:
        return 3
    return 1


# central-difference weights for derivative orders 1..3, accuracy 4
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-2, -1, 1, 2), (1 / 12, -2 / 3, 2 / 3, -1 / 12)),
    2: ((-2, -1, 0, 1, 2), (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)),
    3: ((-3, -2, -1, 1, 2, 3), (1 / 8, -1.0, 13 / 8, -13 / 8, 1.0, -1 / 8)),
}


def derivative(cid: CoefficientId, j: int, u, step: float = 0.04, switch: SeriesSwitch = DEFAULT_SWITCH):
    """j-th derivative of h_tilde by Richardson-extrapolated central differences.

    Returns ``(value, error_estimate)``; the estimate is the size of the
    Richardson correction.
    """
    if j not in _STENCILS:
        raise ValueError("derivative order must be 0..3")
    u = np.asarray(u, dtype=float)
    if j == 0:
        val = h_tilde(cid, u, switch)
        return val, np.zeros_like(val)
    offsets, weights = _STENCILS[j]

    def fd(hstep):
        acc = np.zeros_like(u)
        for o, wgt in zip(offsets, weights):
            acc = acc + wgt * h_tilde(cid, u + o * hstep, switch)
        return acc / hstep**j

    coarse = fd(step)
    fine = fd(step / 2)
    corrected = fine + (fine - coarse) / 15.0
    return corrected, np.abs(corrected - fine)


def default_u_grid(u_max: float = 1.0e4, dense_until: float = 50.0,
                   dense_step: float = 0.005, tail_step: float = 0.05) -> np.ndarray:
    """Nonnegative sample set for decay checks; all |d^j h_tilde| are even in u.

    The envelopes peak below |u| ~ 5, so the grid is dense there and coarser
    (still ~60 samples per oscillation period) in the tail.
    """
    head = np.arange(0.0, dense_until, dense_step)
    tail = np.arange(dense_until, u_max + 0.5 * tail_step, tail_step)
    return np.concatenate([head, tail])


def decay_margin(cid: CoefficientId, j: int, u_grid, step: float = 0.04,
                 regression_constant: float | None = None) -> RatioReport:
    """sup over ``u_grid`` of |d^j h_tilde(u)| * <u>**k for the envelope power k."""
    u = np.asarray(u_grid, dtype=float).ravel()
    k = decay_exponent(cid, j)
    d, err = derivative(cid, j, u, step)
    weighted = np.abs(d) * (1.0 + u * u) ** (k / 2.0)
    i = int(np.argmax(weighted))
    return RatioReport(
        lhs_label=f"|d^{j} h_tilde_{cid.name}| <u>^{k}",
        rhs_label="1",
        ratios=(float(weighted[i]),),
        regression_constant=regression_constant,
        parameters=(float(u[i]),),
        extras={
            "argmax_u": float(u[i]),
            "exponent": k,
            "max_richardson_error": float(np.max(err * (1.0 + u * u) ** (k / 2.0))),
            "grid_size": int(u.size),
        },
    )


def I(z):
    """Antiderivative of |sin| along the angle: 2k + 1 - cos(z - k pi) for z >= 0, odd."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    k = np.floor(a / np.pi)
    val = 2.0 * k + 1.0 - np.cos(a - k * np.pi)
    out = np.sign(z) * val
    return float(out) if out.ndim == 0 else out


def I_inverse(y):
    """Inverse of :func:`I` (odd, increasing)."""
    y = np.asarray(y, dtype=float)
    a = np.abs(y)
    k = np.floor(a / 2.0)
    frac = np.clip(a - 2.0 * k, 0.0, 2.0)
    z = k * np.pi + np.arccos(1.0 - frac)
    out = np.sign(y) * z
    return float(out) if out.ndim == 0 else out
