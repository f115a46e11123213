"""Time integration of the equivariant Faddeev equation in u- and v-form.

Both forms live on the same cell-centred grid r_i = (i + 1/2) dr, i < N,
with R = N dr and a Dirichlet condition at R imposed through an odd ghost
value.

The u-form right-hand side is the Euler-Lagrange operator of a discrete
Lagrangian written in v = u / r with R^4 cell volumes ``vol_i``:

* kinetic ``1/2 sum vol_i Phi_i v_t,i**2`` with ``Phi = 1 + sin(u)**2 / r**2``;
* ``1/2 sum r_h**3 (1 + qbar_h) (v_{i+1} - v_i)**2 / dr`` over cell
  interfaces r_h, with qbar the interface average of v**2;
* ``1/2 sum vol_i m(u_i) v_i**4 (1 + P_i**2)`` with
  ``m = (sin(u)**2 - u**2) / u**4`` and ``P = v + r v_r`` (= u_r).

The last two reproduce ``1/2 int [Phi u_r**2 + sin(u)**2 / r**2] r dr`` after
integrating the singular part of ``sin(u)**2 u_r**2 / r`` by parts, so every
density is regular at the axis and the semi-discrete energy is conserved
exactly.  The v-form right-hand side is a direct discretisation of the
semilinear equation with the same finite-volume Laplacian on R^4.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import simpson

from .coefficients import CoefficientId, cubic_ratio, h_tilde, quartic_defect, quartic_defect_slope, sinc
from .errors import EvaluationError
from .radial import (
    RadialGrid,
    RadialProfile,
    data_norm_D,
    fourier_bessel_basis,
    radial_kernel,
)
from .reports import ConvergenceReport


class Form(Enum):
    U_FORM = "u"
    V_FORM = "v"


class Scheme(Enum):
    RK4 = "rk4"
    LEAPFROG = "leapfrog"


class Status(Enum):
    COMPLETED = "COMPLETED"
    BLOWUP_DETECTED = "BLOWUP_DETECTED"
    CFL_VIOLATION = "CFL_VIOLATION"


_DIM = {Form.U_FORM: 2, Form.V_FORM: 4}
MAX_CFL = 0.9


# ------------------------------------------------------------------ states

@dataclass(frozen=True, eq=False)
class FieldState:
    """Field samples f (u or v) and their time derivative at time t."""

    t: float
    form: Form
    f: RadialProfile
    f_t: RadialProfile

    def __post_init__(self):
        if self.f.grid is not self.f_t.grid and not np.array_equal(self.f.r, self.f_t.r):
            raise ValueError("f and f_t must share a grid")

    @property
    def grid(self) -> RadialGrid:
        return self.f.grid

    @property
    def r(self) -> np.ndarray:
        return self.f.r

    def boundary_violation(self, atol: float = 1e-8) -> str | None:
        """Describe a violated boundary invariant, or None.

        Both forms need f = f_t = 0 at R (checked on the outermost node).
        The u-form additionally needs u -> 0 at the axis, checked as
        |u_0| / r_0 not exceeding 2 |u_1| / r_1 + atol, which holds whenever
        u = r v with v smooth.
        """
        scale = 1.0 + max(np.max(np.abs(self.f.samples)), np.max(np.abs(self.f_t.samples)))
        for name, s in (("f", self.f.samples), ("f_t", self.f_t.samples)):
            if abs(s[-1]) > atol * scale:
                return f"{name}(R) = {s[-1]:.3e} is not zero"
        if self.form is Form.U_FORM and self.grid.N > 1:
            r = self.r
            for name, s in (("u", self.f.samples), ("u_t", self.f_t.samples)):
                if abs(s[0]) / r[0] > 2.0 * abs(s[1]) / r[1] + atol * scale / r[0]:
                    return f"{name} does not vanish at the axis"
        return None

    def to_form(self, form: Form) -> "FieldState":
        """Convert between u = r v and v on the same nodes."""
        if form is self.form:
            return self
        g = self.grid
        if g.kind == "uniform":
            new_grid = RadialGrid.uniform(_DIM[form], g.R, g.N)
        else:
            new_grid = RadialGrid.fourier_bessel(_DIM[form], g.R, g.N)
        scale = self.r if form is Form.U_FORM else 1.0 / self.r
        return FieldState(self.t, form, RadialProfile(new_grid, self.f.samples * scale),
                          RadialProfile(new_grid, self.f_t.samples * scale))

    def data_norm(self, **kw) -> float:
        """data_norm_D of the corresponding v-form pair (v, v_t)."""
        s = self.to_form(Form.V_FORM)
        return data_norm_D(s.f, s.f_t, **kw)

    @classmethod
    def zeros(cls, form: Form, R: float, N: int, t: float = 0.0) -> "FieldState":
        g = RadialGrid.uniform(_DIM[form], R, N)
        z = np.zeros(N)
        return cls(t, form, RadialProfile(g, z), RadialProfile(g, z.copy()))


@dataclass(frozen=True)
class SolverConfig:
    """Grid, step and horizon; cfl = dt / dr must not exceed 0.9."""

    dr: float
    dt: float
    R: float
    T: float
    scheme: Scheme = Scheme.RK4
    snapshot_stride: int = 1
    sponge: bool = False
    sponge_strength: float = 2.0
    nonlinear: bool = True
    ceiling_f: float = 1.0e3
    ceiling_f_t: float = 1.0e6

    def __post_init__(self):
        if not (self.dr > 0 and self.dt > 0 and self.R > 0 and self.T >= 0):
            raise ValueError("dr, dt, R must be positive and T nonnegative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")
        n = self.R / self.dr
        if abs(n - round(n)) > 1e-6 * n:
            raise ValueError("R must be an integer multiple of dr")

    @property
    def cfl(self) -> float:
        return self.dt / self.dr

    @property
    def N(self) -> int:
        return int(round(self.R / self.dr))

    @classmethod
    def from_grid(cls, R: float, N: int, T: float, cfl: float = 0.5, **kw) -> "SolverConfig":
        dr = R / N
        return cls(dr=dr, dt=cfl * dr, R=R, T=T, **kw)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["scheme"] = self.scheme.value
        return d


@dataclass(frozen=True, eq=False)
class Trajectory:
    config: SolverConfig
    snapshots: tuple
    status: Status
    message: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self) -> FieldState:
        return self.snapshots[-1]

    def save(self, directory, manifest_extra: dict | None = None, header: str | None = None) -> Path:
        """Write one CSV per snapshot (r, f, f_t) plus manifest.json."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for k, s in enumerate(self.snapshots):
            name = f"snapshot_{k:05d}.csv"
            with open(out / name, "w", newline="") as fh:
                if header:
                    fh.write(f"# {header}\n")
                fh.write(f"# t = {float(s.t)!r}, form = {s.form.value}\n")
                fh.write("r,f,f_t\n")
                for r, a, b in zip(s.r, s.f.samples, s.f_t.samples):
                    fh.write(f"{float(r)!r},{float(a)!r},{float(b)!r}\n")
            files.append({"file": name, "t": float(s.t)})
        manifest = {
            "schema_version": 1,
            "config": self.config.to_dict(),
            "status": self.status.value,
            "message": self.message,
            "form": self.snapshots[0].form.value if self.snapshots else None,
            "snapshots": files,
        }
        if manifest_extra:
            manifest.update(manifest_extra)
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        return out


# --------------------------------------------------------------- operators

@dataclass(frozen=True, eq=False)
class _Stencil:
    r: np.ndarray
    rh: np.ndarray  # outer interface of each cell, r_{i+1/2}
    vol: np.ndarray  # R^4 cell volume without the sphere area
    w: np.ndarray  # u-form kinetic mass vol / r**2
    c1: np.ndarray  # rh**3 / dr
    c2: np.ndarray  # rh / dr
    dr: float


@lru_cache(maxsize=16)
def _stencil(R: float, N: int) -> _Stencil:
    dr = R / N
    edges = np.arange(N + 1) * dr
    r = (np.arange(N) + 0.5) * dr
    vol = (edges[1:] ** 4 - edges[:-1] ** 4) / 4.0
    rh = edges[1:]
    return _Stencil(r, rh, vol, vol / r**2, rh**3 / dr, rh / dr, dr)


def _stencil_for(grid: RadialGrid) -> _Stencil:
    if grid.kind != "uniform":
        raise ValueError("finite-difference operators need a uniform cell-centred grid")
    return _stencil(grid.R, grid.N)


def _diff_dirichlet(x: np.ndarray) -> np.ndarray:
    """x_{i+1} - x_i with the odd ghost x_N = -x_{N-1}."""
    d = np.empty_like(x)
    d[:-1] = x[1:] - x[:-1]
    d[-1] = -2.0 * x[-1]
    return d


def _flux_divergence(F: np.ndarray) -> np.ndarray:
    """Gradient of 1/2 sum c_h D_h**2 given fluxes F_h = c_h D_h."""
    g = -F.copy()
    g[-1] = -2.0 * F[-1]
    g[1:] += F[:-1]
    return g


def _check_finite(arr: np.ndarray, r: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(f"non-finite {what} at r = {r[i]:.6g}", index=i, radius=float(r[i]))


def _potential_gradient(st: _Stencil, v: np.ndarray, nonlinear: bool) -> np.ndarray:
    """dV/dv for the discrete potential written in v = u / r."""
    D = _diff_dirichlet(v)
    if not nonlinear:
        return _flux_divergence(st.c1 * D)
    r = st.r
    v2 = v * v
    q = np.empty_like(v)
    q[:-1] = 0.5 * (v2[:-1] + v2[1:])
    q[-1] = v2[-1]
    grad = _flux_divergence(st.c1 * (1.0 + q) * D)
    S = 0.5 * st.c1 * D * D
    share = S.copy()
    share[1:] += S[:-1]
    share[-1] += S[-1]
    grad += v * share
    # quintic/sextic remainder T = 1/2 sum vol m(u) v^4 (1 + P^2), P = u_r
    u = r * v
    m = quartic_defect(u)
    dm_dv = quartic_defect_slope(u) * u * r
    P = v + r * _dr_centered(st, v)
    v4 = v2 * v2
    bracket = 1.0 + P * P
    grad += st.vol * (0.5 * dm_dv * v4 + 2.0 * m * v2 * v) * bracket
    Y = st.vol * m * v4 * P
    grad += Y
    Y = Y * r / (2.0 * st.dr)
    ext = np.empty(v.size + 2)
    ext[1:-1] = Y
    ext[0] = -Y[0]
    ext[-1] = Y[-1]
    grad += ext[:-2] - ext[2:]
    return grad


def _accel_variational(st: _Stencil, v: np.ndarray, vt: np.ndarray, nonlinear: bool) -> np.ndarray:
    grad = _potential_gradient(st, v, nonlinear)
    if not nonlinear:
        return -grad / st.vol
    u = st.r * v
    phi = 1.0 + (v * sinc(u)) ** 2
    return -(grad / st.vol + v * sinc(2.0 * u) * vt * vt) / phi


def _accel_u(st: _Stencil, u: np.ndarray, ut: np.ndarray, nonlinear: bool) -> np.ndarray:
    return st.r * _accel_variational(st, u / st.r, ut / st.r, nonlinear)


def discrete_energy_parts(st_grid: RadialGrid, v: np.ndarray, vt: np.ndarray) -> tuple[float, float, float]:
    """(kinetic, potential, total) of the conserved discrete energy in v = u / r.

    ``potential`` is the sin^2 u / (2 r^2) part; the gradient part is the
    remainder total - kinetic - potential.
    """
    st = _stencil_for(st_grid)
    r = st.r
    u = r * v
    s = sinc(u)
    phi = 1.0 + (v * s) ** 2
    kinetic = 0.5 * float(np.sum(st.vol * phi * vt * vt))
    D = _diff_dirichlet(v)
    v2 = v * v
    q = np.empty_like(v)
    q[:-1] = 0.5 * (v2[:-1] + v2[1:])
    q[-1] = v2[-1]
    P = v + r * _dr_centered(st, v)
    V = 0.5 * float(np.sum(st.c1 * (1.0 + q) * D * D))
    V += 0.5 * float(np.sum(st.vol * quartic_defect(u) * v2 * v2 * (1.0 + P * P)))
    potential = 0.5 * float(np.sum(st.vol * (s * v) ** 2 / r**2))
    return kinetic, potential, kinetic + V


def _laplacian4(st: _Stencil, v: np.ndarray) -> np.ndarray:
    return -_flux_divergence(st.c1 * _diff_dirichlet(v)) / st.vol


def _dr_centered(st: _Stencil, v: np.ndarray) -> np.ndarray:
    """Centred v_r with the even ghost at the axis and the odd ghost at R."""
    ext = np.empty(v.size + 2)
    ext[1:-1] = v
    ext[0] = v[0]
    ext[-1] = -v[-1]
    return (ext[2:] - ext[:-2]) / (2.0 * st.dr)


def _nonlinearity_parts(st: _Stencil, v: np.ndarray, vt: np.ndarray):
    """(h1 v^3 v_r + h2 v^3 + h3 v^5, h4 v (v_t^2 - v_r^2)) on the grid."""
    u = st.r * v
    vr = _dr_centered(st, v)
    s = sinc(u)
    A = cubic_ratio(u)
    phi = 1.0 + (v * s) ** 2
    v2 = v * v
    v3 = v2 * v
    poly = (2.0 * u * s * A * v3 * vr + h_tilde(CoefficientId.H2, u) * v3 + s * A * v3 * v2) / phi
    null = sinc(2.0 * u) * v * (vt * vt - vr * vr) / phi
    return poly, null


def _nonlinearity_v(st: _Stencil, v: np.ndarray, vt: np.ndarray) -> np.ndarray:
    poly, null = _nonlinearity_parts(st, v, vt)
    return poly + null


def semilinear_terms(state: FieldState) -> tuple[RadialProfile, RadialProfile]:
    """Polynomial part h1 v^3 v_r + h2 v^3 + h3 v^5 and null part h4 v (v_t^2 - v_r^2)."""
    s = state.to_form(Form.V_FORM)
    st = _stencil_for(s.grid)
    poly, null = _nonlinearity_parts(st, s.f.samples, s.f_t.samples)
    return s.f.with_samples(poly), s.f.with_samples(null)


def _accel_v(st: _Stencil, v: np.ndarray, vt: np.ndarray, nonlinear: bool) -> np.ndarray:
    lap = _laplacian4(st, v)
    if not nonlinear:
        return lap
    return lap - _nonlinearity_v(st, v, vt)


def rhs_u(state: FieldState, nonlinear: bool = True) -> RadialProfile:
    """u_tt of the u-form equation (variational discretisation)."""
    if state.form is not Form.U_FORM:
        raise ValueError("rhs_u needs a U_FORM state")
    st = _stencil_for(state.grid)
    out = _accel_u(st, state.f.samples, state.f_t.samples, nonlinear)
    _check_finite(out, st.r, "u_tt")
    return state.f.with_samples(out)


def rhs_v(state: FieldState, nonlinear: bool = True) -> RadialProfile:
    """v_tt = v_rr + 3 v_r / r - [h1 v^3 v_r + h2 v^3 + h3 v^5 + h4 v (v_t^2 - v_r^2)]."""
    if state.form is not Form.V_FORM:
        raise ValueError("rhs_v needs a V_FORM state")
    st = _stencil_for(state.grid)
    out = _accel_v(st, state.f.samples, state.f_t.samples, nonlinear)
    _check_finite(out, st.r, "v_tt")
    return state.f.with_samples(out)


# closed-form right-hand sides for analytic fields (pointwise, no grid)

def rhs_u_exact(r, u, ur, urr, ut):
    r, u = np.asarray(r, float), np.asarray(u, float)
    s2 = np.sin(u) ** 2 / r**2
    return urr + ((1.0 - s2) * ur / r - np.sin(2.0 * u) / (2.0 * r**2) * (ut**2 - ur**2 + 1.0)) / (1.0 + s2)


def rhs_v_exact(r, v, vr, vrr, vt):
    r, v = np.asarray(r, float), np.asarray(v, float)
    u = r * v
    s, A = sinc(u), cubic_ratio(u)
    phi = 1.0 + (v * s) ** 2
    nl = (2.0 * u * s * A * v**3 * vr + h_tilde(CoefficientId.H2, u) * v**3
          + s * A * v**5 + sinc(2.0 * u) * v * (vt**2 - vr**2)) / phi
    return vrr + 3.0 * vr / r - nl


# ------------------------------------------------------------- integration

def _sponge_profile(st: _Stencil, R: float, strength: float) -> np.ndarray:
    start = 0.9 * R
    x = np.clip((st.r - start) / (R - start), 0.0, None)
    return strength * x**3


def _acceleration(form: Form, st: _Stencil, nonlinear: bool, sponge: np.ndarray | None) -> Callable:
    base = _accel_u if form is Form.U_FORM else _accel_v

    def acc(f, g):
        a = base(st, f, g, nonlinear)
        if sponge is not None:
            a = a - sponge * g
        return a

    return acc


def _rk4_step(acc, f, g, dt):
    k1f, k1g = g, acc(f, g)
    k2f, k2g = g + 0.5 * dt * k1g, acc(f + 0.5 * dt * k1f, g + 0.5 * dt * k1g)
    k3f, k3g = g + 0.5 * dt * k2g, acc(f + 0.5 * dt * k2f, g + 0.5 * dt * k2g)
    k4f, k4g = g + dt * k3g, acc(f + dt * k3f, g + dt * k3g)
    return (f + dt / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f),
            g + dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g))


def _leapfrog_step(acc, f, g, dt):
    # kick-drift-kick; the closing kick uses a predicted velocity because the
    # force depends on f_t
    half = g + 0.5 * dt * acc(f, g)
    f1 = f + dt * half
    pred = half + 0.5 * dt * acc(f1, half)
    return f1, half + 0.5 * dt * acc(f1, pred)


_STEPPERS = {Scheme.RK4: _rk4_step, Scheme.LEAPFROG: _leapfrog_step}


def evolve(initial: FieldState, config: SolverConfig) -> Trajectory:
    """Advance ``initial`` to t + T, recording every ``snapshot_stride`` steps.

    Raises ValueError for a grid/config mismatch, violated boundary
    invariants, or a horizon beyond the causal limit R - support without a
    sponge.  A CFL number above 0.9 returns immediately with CFL_VIOLATION.
    """
    grid = initial.grid
    if grid.kind != "uniform" or grid.N != config.N or abs(grid.R - config.R) > 1e-12 * config.R:
        raise ValueError("initial state must live on the uniform grid of the config")
    if config.cfl > MAX_CFL:
        return Trajectory(config, (initial,), Status.CFL_VIOLATION,
                          f"cfl = {config.cfl:.3f} exceeds {MAX_CFL}")
    msg = initial.boundary_violation()
    if msg:
        raise ValueError(msg)
    support = max(initial.f.support_radius(), initial.f_t.support_radius())
    if not config.sponge and support > 0 and config.T > config.R - support:
        raise ValueError(
            f"horizon T = {config.T} exceeds R - support = {config.R - support:.3f}; "
            "enlarge R or enable the sponge")
    st = _stencil_for(grid)
    sponge = _sponge_profile(st, config.R, config.sponge_strength) if config.sponge else None
    acc = _acceleration(initial.form, st, config.nonlinear, sponge)
    step = _STEPPERS[config.scheme]
    n_steps = int(math.ceil(config.T / config.dt - 1e-9)) if config.T > 0 else 0
    dt = config.T / n_steps if n_steps else 0.0

    f = initial.f.samples.copy()
    g = initial.f_t.samples.copy()
    t0 = initial.t
    snaps = [initial]
    status, message = Status.COMPLETED, ""

    def snap(k, f, g):
        return FieldState(t0 + k * dt, initial.form, initial.f.with_samples(f), initial.f_t.with_samples(g))

    for k in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                f_new, g_new = step(acc, f, g, dt)
            except EvaluationError as exc:
                status, message = Status.BLOWUP_DETECTED, str(exc)
                break
        if not (np.all(np.isfinite(f_new)) and np.all(np.isfinite(g_new))):
            status, message = Status.BLOWUP_DETECTED, f"non-finite state at t = {t0 + k * dt:.6g}"
            break
        f, g = f_new, g_new
        if np.max(np.abs(f)) > config.ceiling_f or np.max(np.abs(g)) > config.ceiling_f_t:
            snaps.append(snap(k, f, g))
            status, message = Status.BLOWUP_DETECTED, f"ceiling exceeded at t = {t0 + k * dt:.6g}"
            break
        if k % config.snapshot_stride == 0 or k == n_steps:
            snaps.append(snap(k, f, g))
    return Trajectory(config, tuple(snaps), status, message)


# ---------------------------------------------------------- spectral flows

@lru_cache(maxsize=4)
def _evaluation_matrix(R: float, N_fb: int, N_u: int) -> np.ndarray:
    """Maps R^4 Fourier-Bessel transform values to uniform cell centres."""
    basis = fourier_bessel_basis(4, R, N_fb)
    r = (np.arange(N_u) + 0.5) * (R / N_u)
    K = radial_kernel(basis.nu, np.outer(r, basis.rho))
    return K * (basis.w_hat / ((2.0 * np.pi) ** 2 * (2.0 * np.pi**2)))[None, :]


class _SpectralR4:
    """Transforms for R^4 profiles on either grid kind."""

    def __init__(self, grid: RadialGrid):
        if grid.dim != 4:
            raise ValueError("spectral flows act on R^4 profiles")
        self.grid = grid
        if grid.kind == "fourier_bessel":
            self.basis = grid.basis()
            self.uniform = False
        elif grid.kind == "uniform":
            self.basis = fourier_bessel_basis(4, grid.R, grid.N)
            self.fb_grid = RadialGrid.fourier_bessel(4, grid.R, grid.N)
            self.uniform = True
        else:
            raise ValueError(f"unsupported grid kind {grid.kind!r}")

    @property
    def rho(self) -> np.ndarray:
        return self.basis.rho

    def forward(self, f: RadialProfile) -> np.ndarray:
        samples = f.resample(self.fb_grid).samples if self.uniform else f.samples
        return self.basis.forward(samples)

    def inverse(self, fhat: np.ndarray) -> np.ndarray:
        if not self.uniform:
            return self.basis.inverse(fhat)
        return _evaluation_matrix(self.grid.R, self.basis.N, self.grid.N) @ fhat


def free_propagate(v0: RadialProfile, v1: RadialProfile, t: float) -> FieldState:
    """Free wave on R^4: vhat(t) = cos(t rho) vhat0 + sin(t rho)/rho vhat1."""
    if v0.grid.N != v1.grid.N or v0.grid.kind != v1.grid.kind or v0.grid.R != v1.grid.R:
        raise ValueError("v0 and v1 must share a grid")
    if t == 0:
        return FieldState(0.0, Form.V_FORM, v0, v1)
    sp = _SpectralR4(v0.grid)
    a, b = sp.forward(v0), sp.forward(v1)
    rho = sp.rho
    c, s = np.cos(t * rho), np.sin(t * rho)
    f_hat = c * a + s / rho * b
    ft_hat = -rho * s * a + c * b
    return FieldState(float(t), Form.V_FORM, v0.with_samples(sp.inverse(f_hat)),
                      v1.with_samples(sp.inverse(ft_hat)))


def duhamel(F: Sequence[tuple[float, RadialProfile]], t: float) -> FieldState:
    """Solution of box w = F with zero data at s = 0, box = -d_t^2 + Laplacian.

    ``F`` is a sequence of (s_k, profile) with increasing s_k starting at 0;
    the s-integral of -sin((t - s) rho)/rho Fhat(s) is done by Simpson's rule
    over the samples with s_k <= t (t must be one of the sample times or
    lie within their range, where Fhat is interpolated linearly).
    """
    items = list(F)
    if not items:
        raise ValueError("F needs at least one sample")
    s = np.array([x[0] for x in items], dtype=float)
    if np.any(np.diff(s) <= 0) or abs(s[0]) > 1e-14:
        raise ValueError("sample times must increase from 0")
    if t < 0 or t > s[-1] + 1e-12:
        raise ValueError("t must lie within the sampled interval")
    proto = items[0][1]
    sp = _SpectralR4(proto.grid)
    rho = sp.rho
    if t == 0:
        z = np.zeros(proto.grid.N)
        return FieldState(0.0, Form.V_FORM, proto.with_samples(z), proto.with_samples(z.copy()))
    keep = s <= t + 1e-12
    s_used = s[keep]
    Fhat = np.array([sp.forward(p) for (_, p), k in zip(items, keep) if k])
    if s_used[-1] < t - 1e-12:
        j = int(np.searchsorted(s, t))
        th = (t - s[j - 1]) / (s[j] - s[j - 1])
        nxt = sp.forward(items[j][1])
        Fhat = np.vstack([Fhat, (1 - th) * Fhat[-1] + th * nxt])
        s_used = np.append(s_used, t)
    phase = (t - s_used)[:, None] * rho[None, :]
    if s_used.size == 1:
        w_hat = np.zeros_like(rho)
        wt_hat = np.zeros_like(rho)
    else:
        w_hat = -simpson(np.sin(phase) / rho * Fhat, x=s_used, axis=0)
        wt_hat = -simpson(np.cos(phase) * Fhat, x=s_used, axis=0)
    return FieldState(float(t), Form.V_FORM, proto.with_samples(sp.inverse(w_hat)),
                      proto.with_samples(sp.inverse(wt_hat)))


# -------------------------------------------------------------- initial data

class Family(Enum):
    GAUSS_BUMP = "gauss_bump"
    POLY_BUMP = "poly_bump"
    TWO_BUMP = "two_bump"


def _v_profile(family: Family, params: dict) -> Callable:
    """Smooth even profile v0(r); u0 = r v0."""
    if family is Family.GAUSS_BUMP:
        w = float(params.get("width", 1.0))
        p = float(params.get("power", 1.0))
        return lambda r: r ** (p - 1.0) * np.exp(-(r / w) ** 2)
    if family is Family.POLY_BUMP:
        a = float(params.get("radius", 4.0))
        k = int(params.get("order", 6))
        return lambda r: np.where(r < a, np.clip(1.0 - (r / a) ** 2, 0.0, None) ** k, 0.0)
    if family is Family.TWO_BUMP:
        c = float(params.get("center", 4.0))
        w = float(params.get("width", 1.0))
        rel = float(params.get("ratio", 1.0))
        return lambda r: np.exp(-(r / w) ** 2) + rel * (np.exp(-((r - c) / w) ** 2) + np.exp(-((r + c) / w) ** 2))
    raise TypeError(f"unknown family {family!r}")


def initial_data(family: Family | str, delta: float, params: dict | None = None, *,
                 R: float = 40.0, N: int = 4096, form: Form = Form.U_FORM,
                 velocity: str = "zero") -> FieldState:
    """Degree-0 data u0 = delta r v0(r) with u1 = 0 or outgoing-matched.

    GAUSS_BUMP: v0 = r^(power-1) exp(-(r/width)^2) (default power 1).
    POLY_BUMP: v0 = (1 - (r/radius)^2)^order on r < radius.
    TWO_BUMP: a central Gaussian plus a shell at ``center`` (even in r).
    The outgoing velocity is v1 = -v0'(r) r / sqrt(1 + r^2), smooth at the
    axis and close to -v0' away from it.
    """
    family = Family(family) if not isinstance(family, Family) else family
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    params = dict(params or {})
    g = RadialGrid.uniform(_DIM[form], R, N)
    r = g.nodes
    fn = _v_profile(family, params)
    v0 = delta * fn(r)
    if velocity == "zero":
        v1 = np.zeros_like(r)
    elif velocity == "outgoing":
        h = 1e-4
        dv = delta * (fn(r + h) - fn(np.abs(r - h))) / (2 * h)
        v1 = -dv * r / np.sqrt(1.0 + r * r)
    else:
        raise ValueError("velocity must be 'zero' or 'outgoing'")
    scale = r if form is Form.U_FORM else 1.0
    return FieldState(0.0, form, RadialProfile(g, v0 * scale), RadialProfile(g, v1 * scale))


# ------------------------------------------------------ manufactured checks

def rhs_convergence(form: Form, f: Callable, f_t: Callable, exact: Callable, R: float,
                    Ns: Iterable[int], weight: str = "r3", r_min: float = 0.0,
                    nonlinear: bool = True, label: str = "") -> ConvergenceReport:
    """Discrete right-hand side against an exact one under grid refinement.

    ``weight`` selects the error norm: "max" (sup over nodes with r >= r_min)
    or "r3" (L2 with the R^4 volume element, divided by r for the u-form so
    both forms are measured on v-scale quantities).
    """
    Ns = list(Ns)
    errs, steps = [], []
    for N in Ns:
        g = RadialGrid.uniform(_DIM[form], R, N)
        r = g.nodes
        st = FieldState(0.0, form, RadialProfile(g, f(r)), RadialProfile(g, f_t(r)))
        num = (rhs_u if form is Form.U_FORM else rhs_v)(st, nonlinear).samples
        err = num - exact(r)
        if form is Form.U_FORM and weight == "r3":
            err = err / r
        if weight == "max":
            err_n = float(np.max(np.abs(err[r >= r_min])))
        elif weight == "r3":
            vol = _stencil(R, N).vol
            err_n = float(np.sqrt(np.sum(vol * err**2)))
        else:
            raise ValueError("weight must be 'max' or 'r3'")
        errs.append(err_n)
        steps.append(R / N)
    return ConvergenceReport(label or f"rhs_{form.value}", tuple(steps), tuple(errs),
                             {"weight": weight, "r_min": r_min})


def consistency_u_v(v: Callable, v_t: Callable, R: float, Ns: Iterable[int],
                    weight: str = "r3", r_min: float = 0.0) -> ConvergenceReport:
    """Refinement of |rhs_u(r v) / r - rhs_v(v)|: both approximate v_tt."""
    errs, steps = [], []
    for N in Ns:
        gu = RadialGrid.uniform(2, R, N)
        gv = RadialGrid.uniform(4, R, N)
        r = gu.nodes
        su = FieldState(0.0, Form.U_FORM, RadialProfile(gu, r * v(r)), RadialProfile(gu, r * v_t(r)))
        sv = FieldState(0.0, Form.V_FORM, RadialProfile(gv, v(r)), RadialProfile(gv, v_t(r)))
        diff = rhs_u(su).samples / r - rhs_v(sv).samples
        if weight == "max":
            errs.append(float(np.max(np.abs(diff[r >= r_min]))))
        else:
            errs.append(float(np.sqrt(np.sum(_stencil(R, N).vol * diff**2))))
        steps.append(R / N)
    return ConvergenceReport("rhs_u/r - rhs_v", tuple(steps), tuple(errs), {"weight": weight, "r_min": r_min})
