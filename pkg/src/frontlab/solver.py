"""Explicit finite-difference solver for u_t = Lap u + f(x, u).

The time step never exceeds min(0.4 dx^2 / (2 D), 0.5 / K), with D the
number of second-difference directions weighted by the stencil (1 on a
line, 2 in the plane, d_eff on a cylinder).  Under that bound each update
is a monotone map of the neighbouring values, so the discrete comparison
principle holds and ordered data stay ordered.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels as kern
from .reaction import ReactionField, ReactionProfile

log = logging.getLogger(__name__)

GEOMETRIES = ("line", "plane", "cylinder")
BOUNDARIES = {"neumann_zero_flux": kern.NEUMANN, "dirichlet_zero": kern.DIRICHLET_ZERO,
              "dirichlet_frozen": kern.DIRICHLET_FROZEN}
DIVERGENCE_BAND = (-0.25, 1.25)


class SolverError(RuntimeError):
    """Non-finite or runaway values; ``state`` holds the offending snapshot."""

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


@dataclass(frozen=True)
class GridSpec:
    """Uniform node-centred grid.

    ``extent`` is one (lo, hi) pair per axis.  On a cylinder the axes are
    (x1, r) with r starting at 0 on the symmetry axis, and ``d_eff`` is the
    dimension of the axisymmetric problem being represented.
    """

    geometry: str
    extent: tuple[tuple[float, float], ...]
    dx: float
    boundary: str = "neumann_zero_flux"
    d_eff: int | None = None

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary condition {self.boundary!r}")
        ext = tuple((float(a), float(b)) for a, b in self.extent)
        object.__setattr__(self, "extent", ext)
        need = 1 if self.geometry == "line" else 2
        if len(ext) != need:
            raise ValueError(f"{self.geometry} grids need {need} extent pairs")
        if self.dx <= 0 or any(b <= a for a, b in ext):
            raise ValueError("extent must be increasing and dx positive")
        if self.geometry == "cylinder":
            if self.d_eff is None or self.d_eff < 2:
                raise ValueError("cylinder grids need d_eff >= 2")
            if ext[1][0] != 0.0:
                raise ValueError("cylinder radial extent must start at the axis")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(round((b - a) / self.dx)) + 1 for a, b in self.extent)

    @property
    def axes(self) -> list[np.ndarray]:
        return [a + self.dx * np.arange(n) for (a, _), n in zip(self.extent, self.shape)]

    @property
    def dim(self) -> int:
        return {"line": 1, "plane": 2}.get(self.geometry, self.d_eff)

    @property
    def stencil_weight(self) -> int:
        return {"line": 1, "plane": 2}.get(self.geometry, self.d_eff)

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (*shape, k)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def max_dt(self, K: float) -> float:
        return min(0.4 * self.dx ** 2 / (2.0 * self.stencil_weight), 0.5 / K)

    def volume_weights(self) -> np.ndarray:
        """Quadrature weights for integrals over the represented domain."""
        if self.geometry == "line":
            w = np.full(self.shape, self.dx)
            w[0] = w[-1] = 0.5 * self.dx
            return w
        if self.geometry == "plane":
            wx = np.full(self.shape[0], self.dx)
            wy = np.full(self.shape[1], self.dx)
            wx[[0, -1]] *= 0.5
            wy[[0, -1]] *= 0.5
            return np.outer(wx, wy)
        d = self.d_eff
        sphere = 2.0 * math.pi ** ((d - 1) / 2) / math.gamma((d - 1) / 2)
        x, r = self.axes
        wx = np.full(x.size, self.dx)
        wx[[0, -1]] *= 0.5
        wr = sphere * r ** (d - 2) * self.dx
        wr[0] = sphere * (0.5 * self.dx) ** (d - 1) / (d - 1)
        wr[-1] *= 0.5
        return np.outer(wx, wr)

    def distance_metric(self) -> str:
        return "meridian" if self.geometry == "cylinder" else "euclidean"


@dataclass
class GridState:
    t: float
    u: np.ndarray
    grid: GridSpec

    def snapshot(self) -> "GridState":
        u = self.u.copy()
        u.flags.writeable = False
        return GridState(self.t, u, self.grid)


# ---------------------------------------------------------------------------
# discrete operators

def laplacian(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """The five-point (or axisymmetric) Laplacian used by the time stepper.

    Boundary rows use the reflecting stencil; for Dirichlet boundaries the
    values there are meaningless and callers ignore them.
    """
    h2 = grid.dx ** 2
    if grid.geometry == "line":
        up = np.pad(u, 1, mode="reflect")
        return (up[:-2] + up[2:] - 2.0 * u) / h2
    up = np.pad(u, 1, mode="reflect")
    lap_x = (up[:-2, 1:-1] + up[2:, 1:-1] - 2.0 * u) / h2
    if grid.geometry == "plane":
        return lap_x + (up[1:-1, :-2] + up[1:-1, 2:] - 2.0 * u) / h2
    d = grid.d_eff
    nr = u.shape[1]
    j = np.arange(nr, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        cp = np.where(j > 0, 1.0 + (d - 2.0) / (2.0 * j), 0.0) / h2
        cm = np.where(j > 0, 1.0 - (d - 2.0) / (2.0 * j), 0.0) / h2
    right = up[1:-1, 2:]
    left = up[1:-1, :-2]
    lap_r = cp * (right - u) + cm * (left - u)
    # reflecting outer edge: ghost equals the inner neighbour, total weight 2/h^2
    lap_r[:, -1] = 2.0 * (u[:, -2] - u[:, -1]) / h2
    lap_r[:, 0] = 2.0 * (d - 1.0) * (u[:, 1] - u[:, 0]) / h2
    return lap_x + lap_r


def boundary_mask(grid: GridSpec) -> np.ndarray:
    """True on nodes whose update is prescribed by a Dirichlet condition."""
    m = np.zeros(grid.shape, dtype=bool)
    if grid.boundary == "neumann_zero_flux":
        return m
    if grid.geometry == "line":
        m[[0, -1]] = True
    elif grid.geometry == "plane":
        m[[0, -1], :] = True
        m[:, [0, -1]] = True
    else:
        m[[0, -1], :] = True
        m[:, -1] = True
    return m


def reaction_at(field: ReactionField, grid: GridSpec, u: np.ndarray) -> np.ndarray:
    return field.evaluate(grid.coords(), u)


def rate(state: GridState, field: ReactionField) -> np.ndarray:
    """Discrete u_t = Lap_h u + f(x, u); zero on Dirichlet nodes."""
    r = laplacian(state.u, state.grid) + reaction_at(field, state.grid, state.u)
    r[boundary_mask(state.grid)] = 0.0
    return r


# ---------------------------------------------------------------------------
# stepping

class Stepper:
    """Precomputed node data for repeated advances of one field on one grid."""

    def __init__(self, grid: GridSpec, field: ReactionField):
        if grid.geometry == "cylinder" and field.dim != grid.d_eff:
            raise ValueError("field dimension does not match cylinder d_eff")
        if grid.geometry != "cylinder" and field.dim not in (grid.dim, 1):
            raise ValueError("field dimension does not match the grid")
        self.grid = grid
        self.field = field
        self.K = field.K
        self.bc = BOUNDARIES[grid.boundary]
        self.mode = field.kernel_mode
        if self.mode != "custom":
            coords = grid.coords()
            self.a = np.ascontiguousarray(field.modulation_at(coords))
            self.p = np.ascontiguousarray(field.equilibrium_at(coords))
            self.table = field.base.table
            self.mode_code = 0 if self.mode == "modulated" else 1
        else:
            self._coords = grid.coords()
            self._bmask = boundary_mask(grid)

    def max_dt(self) -> float:
        return self.grid.max_dt(self.K)

    def advance(self, u: np.ndarray, dt: float, nsteps: int) -> np.ndarray:
        if dt > self.max_dt() * (1.0 + 1e-12):
            raise ValueError(f"time step {dt:g} exceeds the stability bound {self.max_dt():g}")
        if nsteps <= 0:
            return u.copy()
        if self.mode == "custom":
            return self._advance_numpy(u, dt, nsteps)
        f = self.field
        u = np.ascontiguousarray(u, dtype=float).copy()
        out = np.empty_like(u)
        args = (self.a, self.p, float(f.boost), self.table, self.mode_code,
                bool(f.signed_extension), float(self.K), float(dt), float(self.grid.dx), self.bc)
        if self.grid.geometry == "line":
            res = kern.advance_line(u, out, *args, nsteps)
        elif self.grid.geometry == "plane":
            res = kern.advance_plane(u, out, *args, nsteps)
        else:
            res = kern.advance_cylinder(u, out, *args, float(self.grid.d_eff), nsteps)
        return res

    def _advance_numpy(self, u, dt, nsteps):
        u = np.array(u, dtype=float)
        zero = self.grid.boundary == "dirichlet_zero"
        for _ in range(nsteps):
            new = u + dt * (laplacian(u, self.grid) + self.field.evaluate(self._coords, u))
            new[self._bmask] = 0.0 if zero else u[self._bmask]
            u = new
        return u


def step(state: GridState, field: ReactionField, dt: float | None = None) -> GridState:
    """One explicit Euler step; rejects time steps above the stability bound."""
    st = Stepper(state.grid, field)
    dt = st.max_dt() if dt is None else dt
    return GridState(state.t + dt, st.advance(state.u, dt, 1), state.grid)


def _check(state: GridState, clamp: bool):
    if not np.all(np.isfinite(state.u)):
        raise SolverError(f"non-finite values at t={state.t:g}", state.snapshot())
    if clamp:
        lo, hi = float(state.u.min()), float(state.u.max())
        if lo < DIVERGENCE_BAND[0] or hi > DIVERGENCE_BAND[1]:
            raise SolverError(f"values left [{DIVERGENCE_BAND[0]}, {DIVERGENCE_BAND[1]}] "
                              f"at t={state.t:g}: min {lo:g}, max {hi:g}", state.snapshot())


def run(state0: GridState, field: ReactionField, until_t: float,
        observers: Sequence[Callable[[GridState], None]] = (),
        snapshot_every: float | None = None, dt: float | None = None) -> GridState:
    """Advance to ``until_t``, calling each observer on every snapshot.

    Snapshots are taken at the start, every ``snapshot_every`` and at the
    end; the step is shortened so that snapshot times are hit exactly.
    """
    if until_t < state0.t:
        raise ValueError("until_t precedes the initial time")
    st = Stepper(state0.grid, field)
    dt_max = st.max_dt() if dt is None else min(dt, st.max_dt())
    every = snapshot_every if snapshot_every else until_t - state0.t
    n_snap = max(1, math.ceil((until_t - state0.t) / every - 1e-9)) if until_t > state0.t else 0
    times = [min(state0.t + k * every, until_t) for k in range(n_snap + 1)]
    state = GridState(state0.t, np.array(state0.u, dtype=float), state0.grid)
    clamp = not field.signed_extension
    _check(state, clamp)
    for obs in observers:
        obs(state.snapshot())
    for t_next in times[1:]:
        span = t_next - state.t
        n = max(1, math.ceil(span / dt_max - 1e-9))
        u = st.advance(state.u, span / n, n)
        state = GridState(t_next, u, state.grid)
        _check(state, clamp)
        for obs in observers:
            obs(state.snapshot())
    return state


# ---------------------------------------------------------------------------
# initial data

def _distance(grid: GridSpec, x0: Sequence[float]) -> np.ndarray:
    c = grid.coords()
    x0 = np.asarray(x0, dtype=float)
    return np.sqrt(np.sum((c - x0) ** 2, axis=-1))


def spark_like(grid: GridSpec, x0: Sequence[float], R1: float, R2: float,
               eps1: float, eps2: float, theta0: float, t0: float = 0.0) -> GridState:
    """min(theta0 + eps1, exp(-eps2 (|x - x0| - R2))): above theta0 + eps1 on B_R1, exponential tail."""
    if not (0 < R1 <= R2 and eps1 > 0 and eps2 > 0 and theta0 + eps1 <= 1):
        raise ValueError("need 0 < R1 <= R2, eps1, eps2 > 0 and theta0 + eps1 <= 1")
    r = _distance(grid, x0)
    u = np.minimum(theta0 + eps1, np.exp(-eps2 * (r - R2)))
    return GridState(t0, u, grid)


def front_like(grid: GridSpec, axis: int, R1: float, R2: float, eps1: float, eps2: float,
               theta0: float, t0: float = 0.0) -> GridState:
    """Same profile as spark_like but in the half-space variable x_axis."""
    if not (R1 <= R2 and eps1 > 0 and eps2 > 0 and theta0 + eps1 <= 1):
        raise ValueError("need R1 <= R2, eps1, eps2 > 0 and theta0 + eps1 <= 1")
    x = grid.coords()[..., axis]
    u = np.minimum(theta0 + eps1, np.exp(-eps2 * (x - R2)))
    return GridState(t0, u, grid)


@dataclass(frozen=True)
class BumpProfile:
    """Plateau value U0 followed by a cap U'' + f0(U) = m decreasing to 0 over [0, length]."""

    plateau: float
    margin: float
    s: np.ndarray
    u: np.ndarray

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def max_slope(self) -> float:
        return float(np.max(np.abs(np.diff(self.u)) / np.diff(self.s)))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= 0.0, self.plateau, np.interp(s, self.s, self.u, right=0.0))


def build_bump_profile(f0: ReactionProfile, margin: float | None = None,
                       plateau: float | None = None, ds: float = 1e-4) -> BumpProfile:
    """Cap solving U'' = m - f0(U), U(0) = U0, U'(0) = 0, integrated until U hits 0.

    The default margin is half of the largest admissible one,
    m* = F(U0) / U0 with F the primitive of f0, which keeps the cap slope
    moderate and the end kink convex.
    """
    theta0 = f0.theta0
    if theta0 is None:
        raise ValueError("bump profiles need an ignition temperature")
    U0 = 0.5 * (1.0 + theta0) if plateau is None else plateau
    g = np.linspace(0.0, U0, 20001)
    F = float(np.trapezoid(f0(g), g))
    m_star = F / U0
    m = 0.5 * m_star if margin is None else margin
    if not 0.0 < m < m_star:
        raise ValueError(f"margin must lie in (0, {m_star:.4g})")
    s_list, u_list = [0.0], [U0]
    U, V, s = U0, 0.0, 0.0

    def acc(x):
        return m - float(f0(np.array([x]))[0])

    while U > 0.0:
        k1u, k1v = V, acc(U)
        k2u, k2v = V + 0.5 * ds * k1v, acc(U + 0.5 * ds * k1u)
        k3u, k3v = V + 0.5 * ds * k2v, acc(U + 0.5 * ds * k2u)
        k4u, k4v = V + ds * k3v, acc(U + ds * k3u)
        U_new = U + ds * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
        V = V + ds * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        s += ds
        if U_new <= 0.0:
            # land exactly on zero
            s_zero = s - ds + ds * U / (U - U_new)
            s_list.append(s_zero)
            u_list.append(0.0)
            break
        U = U_new
        s_list.append(s)
        u_list.append(U)
        if s > 1e4:
            raise ValueError("cap did not reach zero")
    return BumpProfile(plateau=U0, margin=m, s=np.array(s_list), u=np.array(u_list))


def bump_W(grid: GridSpec, R2: float, f0: ReactionProfile, margin: float | None = None,
           radial: bool = True, center: Sequence[float] | None = None, axis: int = 0,
           t0: float = 0.0, profile: BumpProfile | None = None) -> GridState:
    """Stationary subsolution seed: plateau on |x - center| <= R2 (or x_axis <= R2), cap, then 0."""
    prof = profile or build_bump_profile(f0, margin)
    if radial:
        center = np.zeros(grid.coords().shape[-1]) if center is None else center
        rho = _distance(grid, center)
        d = grid.dim
        need = (d - 1) * prof.max_slope / prof.margin
        if d > 1 and R2 < need:
            raise ValueError(f"radial bump needs R2 >= {need:.4g} for the curvature term")
    else:
        rho = grid.coords()[..., axis]
    return GridState(t0, prof(rho - R2), grid)


# ---------------------------------------------------------------------------
# output

def fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.9g}"


def snapshot_csv(state: GridState, path: str | Path) -> None:
    """Node values as CSV with columns x[,y],u."""
    grid = state.grid
    names = ["x"] if grid.geometry == "line" else (["x", "y"] if grid.geometry == "plane" else ["x", "r"])
    c = grid.coords().reshape(-1, len(names))
    u = np.asarray(state.u).reshape(-1)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names + ["u"]) + "\n")
        for row, val in zip(c, u):
            fh.write(",".join(fmt(x) for x in row) + "," + fmt(val) + "\n")


def to_pgm_bytes(u: np.ndarray) -> bytes:
    """Binary greyscale image, maxval 255, u = 1 white; first array axis is horizontal."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    img = np.rint(255.0 * np.clip(u, 0.0, 1.0)).astype(np.uint8).T[::-1]
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def snapshot_pgm(state: GridState, path: str | Path) -> None:
    Path(path).write_bytes(to_pgm_bytes(state.u))
