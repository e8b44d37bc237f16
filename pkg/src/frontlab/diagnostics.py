"""Level sets, widths, envelopes and speed functionals of grid snapshots.

All distances are Euclidean distances between grid nodes (in the meridian
plane for axisymmetric runs), computed with an exact separable squared
distance transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np
from scipy import ndimage

from .solver import GridState, fmt

INF = float("inf")
NAN = float("nan")


# ---------------------------------------------------------------------------
# distance transform

@numba.njit(cache=True)
def _lower_envelope(f, out, v, z):
    """out[p] = min_q (p - q)^2 + f[q] for a 1-D array f (inf allowed)."""
    n = f.shape[0]
    k = -1
    for q in range(n):
        fq = f[q]
        if fq == np.inf:
            continue
        while k >= 0:
            vk = v[k]
            s = ((fq + q * q) - (f[vk] + vk * vk)) / (2.0 * (q - vk))
            if s <= z[k]:
                k -= 1
            else:
                break
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
        else:
            k += 1
            v[k] = q
            z[k] = s
        z[k + 1] = np.inf
    if k < 0:
        for p in range(n):
            out[p] = np.inf
        return
    j = 0
    for p in range(n):
        while z[j + 1] < p:
            j += 1
        d = p - v[j]
        out[p] = d * d + f[v[j]]


@numba.njit(cache=True)
def _sq_edt_2d(target):
    nx, ny = target.shape
    g = np.empty((nx, ny))
    n = max(nx, ny)
    f = np.empty(n)
    o = np.empty(n)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    for j in range(ny):
        for i in range(nx):
            f[i] = 0.0 if target[i, j] else np.inf
        _lower_envelope(f[:nx], o[:nx], v, z)
        for i in range(nx):
            g[i, j] = o[i]
    for i in range(nx):
        for j in range(ny):
            f[j] = g[i, j]
        _lower_envelope(f[:ny], o[:ny], v, z)
        for j in range(ny):
            g[i, j] = o[j]
    return g


@numba.njit(cache=True)
def _sq_edt_1d(target):
    n = target.shape[0]
    f = np.empty(n)
    o = np.empty(n)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    for i in range(n):
        f[i] = 0.0 if target[i] else np.inf
    _lower_envelope(f, o, v, z)
    return o


def distance_to(target: np.ndarray, dx: float) -> np.ndarray:
    """Distance from every node to the nearest True node of ``target`` (inf if none)."""
    target = np.ascontiguousarray(target, dtype=np.bool_)
    if target.ndim == 1:
        sq = _sq_edt_1d(target)
    elif target.ndim == 2:
        sq = _sq_edt_2d(target)
    else:
        raise ValueError("distance transform supports 1-D and 2-D grids")
    return np.sqrt(sq) * dx


def dilate(mask: np.ndarray, radius: float, dx: float) -> np.ndarray:
    """Nodes within ``radius`` of ``mask``."""
    return distance_to(mask, dx) <= radius + 1e-12 * max(radius, dx)


# ---------------------------------------------------------------------------
# level sets and widths

@dataclass(frozen=True)
class LevelSet:
    threshold: float
    mask: np.ndarray

    @property
    def empty(self) -> bool:
        return not bool(self.mask.any())


def level_set(state: GridState, eps: float) -> LevelSet:
    return LevelSet(eps, np.asarray(state.u) >= eps)


def _sup_distance(source: np.ndarray, target: np.ndarray, dx: float) -> float:
    """sup over source nodes of the distance to target; 0 if source is empty."""
    if not source.any():
        return 0.0
    if not target.any():
        return INF
    return float(distance_to(target, dx)[source].max())


def width_L(state: GridState, eps: float) -> float:
    """Smallest L with {u >= eps} inside the L-neighbourhood of {u >= 1 - eps}."""
    if not 0.0 < eps < 0.5:
        raise ValueError("width_L needs 0 < eps < 1/2")
    u = np.asarray(state.u)
    return _sup_distance(u >= eps, u >= 1.0 - eps, state.grid.dx)


def width_L_high(state: GridState, eps: float) -> float:
    """Smallest L with {u < eps} inside the L-neighbourhood of {u < 1 - eps}."""
    if not 0.5 < eps < 1.0:
        raise ValueError("width_L_high needs 1/2 < eps < 1")
    u = np.asarray(state.u)
    return _sup_distance(u < eps, u < 1.0 - eps, state.grid.dx)


def width_J(state: GridState, eps: float) -> float:
    """Smallest L whose neighbourhood of {u >= 1 - eps} or {u < eps} covers the grid."""
    if not 0.0 < eps < 0.5:
        raise ValueError("width_J needs 0 < eps < 1/2")
    u = np.asarray(state.u)
    union = (u >= 1.0 - eps) | (u < eps)
    return _sup_distance(np.ones_like(union), union, state.grid.dx)


def width_L_pair(state: GridState, eps: float, eps_prime: float) -> float:
    """Smallest L with {u >= eps} inside the L-neighbourhood of {u >= eps_prime}."""
    if not 0.0 < eps < eps_prime < 1.0:
        raise ValueError("width_L_pair needs 0 < eps < eps_prime < 1")
    u = np.asarray(state.u)
    return _sup_distance(u >= eps, u >= eps_prime, state.grid.dx)


# ---------------------------------------------------------------------------
# radial envelope psi'' + (d - 1) psi' / r = zeta psi, psi(0) = 1

@numba.njit(cache=True)
def _envelope_rk4(zeta, d, h, n, r0, l0, q0, logpsi, q):
    """Integrate (log psi)' = q, q' = zeta - q^2 - (d - 1) q / r on r_k = k h from r0."""
    r = r0
    L = l0
    Q = q0
    k0 = int(round(r0 / h))
    for k in range(k0, n):
        logpsi[k] = L
        q[k] = Q
        a1 = Q
        b1 = zeta - Q * Q - (d - 1) * Q / r
        Q2 = Q + 0.5 * h * b1
        a2 = Q2
        rm = r + 0.5 * h
        b2 = zeta - Q2 * Q2 - (d - 1) * Q2 / rm
        Q3 = Q + 0.5 * h * b2
        a3 = Q3
        b3 = zeta - Q3 * Q3 - (d - 1) * Q3 / rm
        Q4 = Q + h * b3
        a4 = Q4
        b4 = zeta - Q4 * Q4 - (d - 1) * Q4 / (r + h)
        L = L + h * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0
        Q = Q + h * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0
        r = r + h


class BesselEnvelope:
    """Radial solution psi of Lap psi = zeta psi in R^d with psi(0) = 1.

    For d = 1 this is cosh(sqrt(zeta) r).  Otherwise log psi and psi'/psi are
    integrated on a uniform grid and interpolated linearly; the cache grows
    on demand when larger radii are requested.
    """

    def __init__(self, zeta: float, d: int, step: float = 1e-3, r_max: float | None = None):
        if zeta <= 0 or d < 1:
            raise ValueError("need zeta > 0 and d >= 1")
        self.zeta = float(zeta)
        self.d = int(d)
        self.step = float(step)
        self._logpsi = np.zeros(0)
        self._q = np.zeros(0)
        if d > 1:
            self._extend(r_max if r_max is not None else 60.0 / math.sqrt(self.zeta))

    @property
    def r_max(self) -> float:
        return (self._logpsi.size - 1) * self.step if self.d > 1 else INF

    def _extend(self, r_need: float):
        n = int(math.ceil(r_need / self.step)) + 2
        if n <= self._logpsi.size:
            return
        n = max(n, 2 * self._logpsi.size)
        z, d, h = self.zeta, self.d, self.step
        logpsi = np.empty(n)
        q = np.empty(n)
        # series start: psi = 1 + z r^2/(2d) + z^2 r^4/(8 d (d+2)), valid for z r^2 << 1
        k0 = max(1, int(math.floor(min(1e-2, 1e-2 / math.sqrt(z)) / h)))
        rs = np.arange(k0 + 1) * h
        psi = 1 + z * rs ** 2 / (2 * d) + z ** 2 * rs ** 4 / (8 * d * (d + 2))
        dpsi = z * rs / d + z ** 2 * rs ** 3 / (2 * d * (d + 2))
        logpsi[:k0 + 1] = np.log(psi)
        q[:k0 + 1] = dpsi / psi
        _envelope_rk4(z, d, h, n, k0 * h, logpsi[k0], q[k0], logpsi, q)
        self._logpsi, self._q = logpsi, q

    def _interp(self, arr, r):
        t = r / self.step
        m = np.minimum(t.astype(np.int64), arr.size - 2)
        w = t - m
        return arr[m] + (arr[m + 1] - arr[m]) * w

    def log_psi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.d == 1:
            a = math.sqrt(self.zeta) * r
            return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)
        if r.size and np.max(r) > self.r_max:
            self._extend(float(np.max(r)))
        return self._interp(self._logpsi, r)

    def psi(self, r):
        return np.exp(self.log_psi(r))

    def log_derivative(self, r):
        """psi'(r) / psi(r)."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.d == 1:
            return math.sqrt(self.zeta) * np.tanh(math.sqrt(self.zeta) * r)
        if r.size and np.max(r) > self.r_max:
            self._extend(float(np.max(r)))
        return self._interp(self._q, r)

    def psi_prime(self, r):
        return self.psi(r) * self.log_derivative(r)

    def inverse_log(self, value):
        """r >= 0 with log psi(r) = value (0 for value <= 0)."""
        value = np.maximum(np.asarray(value, dtype=float), 0.0)
        if self.d == 1:
            a = np.arccosh(np.exp(np.minimum(value, 700.0)))
            a = np.where(value > 30, value + math.log(2.0), a)
            return a / math.sqrt(self.zeta)
        vmax = float(np.max(value)) if value.size else 0.0
        while self._logpsi[-1] < vmax:
            self._extend(2.0 * self.r_max)
        lp = self._logpsi
        k = np.clip(np.searchsorted(lp, value, side="right") - 1, 0, lp.size - 2)
        w = (value - lp[k]) / (lp[k + 1] - lp[k])
        return (k + w) * self.step

    def table(self, r_max: float, step: float | None = None) -> tuple[float, np.ndarray]:
        """(spacing, log psi samples) covering [0, r_max], for compiled lookups."""
        if self.d == 1:
            h = step or self.step
            r = np.arange(int(math.ceil(r_max / h)) + 2) * h
            return h, self.log_psi(r)
        self._extend(r_max)
        return self.step, self._logpsi


psi = BesselEnvelope.psi
psi_prime = BesselEnvelope.psi_prime


@dataclass(frozen=True)
class EnvelopeSpeeds:
    """Speeds attached to the envelope built with zeta' = c0^2/8 + zeta/2."""

    c0: float
    zeta: float
    zeta_prime: float
    c_Y: float
    c_Z: float
    c_Y_prime: float


def envelope_speeds(c0: float, K: float, zeta: float | None = None) -> EnvelopeSpeeds:
    zeta = c0 ** 2 / 8.0 if zeta is None else zeta
    zp = c0 ** 2 / 8.0 + zeta / 2.0
    cY = c0 / 4.0 + 1.5 * math.sqrt(zp)
    cZ = 0.75 * c0 + 0.5 * math.sqrt(zp)
    return EnvelopeSpeeds(c0=c0, zeta=zeta, zeta_prime=zp, c_Y=cY, c_Z=cZ,
                          c_Y_prime=(K + zp) * cY / (2.0 * zp))


# ---------------------------------------------------------------------------
# Z, Y and Lambda

def _node_index(state: GridState, y) -> tuple[int, ...]:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    grid = state.grid
    if y.size != len(grid.axes):
        raise ValueError("probe point has the wrong dimension")
    idx = []
    for yk, ax in zip(y, grid.axes):
        if yk < ax[0] - 1e-9 or yk > ax[-1] + 1e-9:
            raise ValueError("probe point lies outside the grid")
        idx.append(int(round((yk - ax[0]) / grid.dx)))
    return tuple(idx)


def Z_y(state: GridState, y, eps0: float = 0.1) -> float:
    """Distance from y to {u >= 1 - eps0}; inf if that set is empty."""
    idx = _node_index(state, y)
    target = np.asarray(state.u) >= 1.0 - eps0
    if not target.any():
        return INF
    c = state.grid.coords()
    pts = c[target]
    yv = c[idx]
    return float(np.sqrt(np.min(np.sum((pts - yv) ** 2, axis=-1))))


BLOCK = 8


@numba.njit(cache=True, inline="always")
def _lookup(t, logtab):
    ntab = logtab.shape[0] - 1
    m = int(t)
    if m >= ntab:
        return logtab[ntab]
    return logtab[m] + (logtab[m + 1] - logtab[m]) * (t - m)


@numba.njit(cache=True)
def _ylog(g, gmax, B, Bx, ix, iy, h_tab, logtab, dx, bound):
    """min over nodes x of log psi(|x - y|) - g(x), for nodes that can beat ``bound``.

    A block is skipped when log psi of its distance to y minus its largest
    g already exceeds the bound; the result is exact whenever the true
    minimum is at most ``bound``.
    """
    nx, ny = g.shape
    bx, by = gmax.shape
    best = np.inf
    for I in range(bx):
        lo_i = I * Bx
        hi_i = min(lo_i + Bx, nx) - 1
        gi = lo_i - ix if lo_i > ix else (ix - hi_i if ix > hi_i else 0)
        for J in range(by):
            gm = gmax[I, J]
            if gm == -np.inf:
                continue
            lo_j = J * B
            hi_j = min(lo_j + B, ny) - 1
            gj = lo_j - iy if lo_j > iy else (iy - hi_j if iy > hi_j else 0)
            lb = _lookup(math.sqrt(gi * gi + gj * gj) * dx / h_tab, logtab) - gm
            if lb > bound or lb >= best:
                continue
            for i in range(lo_i, hi_i + 1):
                di = i - ix
                for j in range(lo_j, hi_j + 1):
                    gv = g[i, j]
                    if gv == -np.inf:
                        continue
                    dj = j - iy
                    val = _lookup(math.sqrt(di * di + dj * dj) * dx / h_tab, logtab) - gv
                    if val < best:
                        best = val
    return best


def _log_excess(u: np.ndarray, h: float) -> np.ndarray:
    ex = np.asarray(u, dtype=float) - h
    out = np.full(ex.shape, -np.inf)
    pos = ex > 0
    out[pos] = np.log(ex[pos])
    return out


class _YSolver:
    """Shared state for evaluating Y at many probes of one snapshot."""

    def __init__(self, state: GridState, h: float, envelope: BesselEnvelope, eps0: float):
        u = np.asarray(state.u, dtype=float)
        self.g = _log_excess(u, h)
        self.g2 = self.g.reshape(self.g.shape[0], -1)
        self.Bx = BLOCK if u.ndim == 2 else 64
        self.B = BLOCK if u.ndim == 2 else 1
        self.gmax = _block_max_xy(self.g2, self.Bx, self.B)
        self.dx = state.grid.dx
        self.env = envelope
        self.offset = math.log(max(1.0 - eps0 - h, 1e-300))
        diag = math.sqrt(sum((n * self.dx) ** 2 for n in u.shape))
        self.h_tab, self.logtab = envelope.table(diag + 2.0)
        self.any = bool(np.isfinite(self.g).any())

    def log_psi_Y(self, idx, z: float) -> float:
        ix = idx[0]
        iy = idx[1] if len(idx) > 1 else 0
        if math.isfinite(z):
            bound = float(self.env.log_psi(z)) - self.offset + 1e-12
        else:
            bound = np.inf
        return _ylog(self.g2, self.gmax, self.B, self.Bx, ix, iy, self.h_tab, self.logtab,
                     self.dx, bound)

    def Y(self, idx, z: float) -> float:
        if not self.any:
            return INF
        lv = self.log_psi_Y(idx, z)
        return INF if lv == np.inf else float(self.env.inverse_log(lv))


def _block_max_xy(g2, Bx, By):
    nx, ny = g2.shape
    pad = np.full((-(-nx // Bx) * Bx, -(-ny // By) * By), -np.inf)
    pad[:nx, :ny] = g2
    return pad.reshape(pad.shape[0] // Bx, Bx, pad.shape[1] // By, By).max(axis=(1, 3))


def Y_h_y(state: GridState, y, h: float, envelope: BesselEnvelope, eps0: float = 0.1) -> float:
    """Largest rho with u <= h + psi(|x - y|) / psi(rho) at every node; inf if u <= h everywhere."""
    idx = _node_index(state, y)
    return _YSolver(state, h, envelope, eps0).Y(idx, Z_y(state, y, eps0))


@dataclass(frozen=True)
class LambdaResult:
    value: float
    argmax: tuple | None
    stride_error: float
    probes: int


def Lambda_h(state: GridState, h: float, envelope: BesselEnvelope,
             y_samples: np.ndarray | None = None, stride: int = 4, eps0: float = 0.1) -> LambdaResult:
    """max over probes of Z_y - Y_y, skipping probes where either is a sentinel.

    Probes default to every ``stride``-th node in each direction; the gap to
    the full supremum is at most stride * dx times the Lipschitz constant of
    y -> Z_y - Y_y, reported as ``stride_error``.
    """
    u = np.asarray(state.u)
    dx = state.grid.dx
    solver = _YSolver(state, h, envelope, eps0)
    target = u >= 1.0 - eps0
    if not solver.any or not target.any():
        return LambdaResult(NAN, None, stride * dx, 0)
    zfield = distance_to(target, dx)
    if y_samples is None:
        grids = np.meshgrid(*[np.arange(0, n, stride) for n in u.shape], indexing="ij")
        probe_idx = np.stack([gi.ravel() for gi in grids], axis=-1)
    else:
        probe_idx = np.array([_node_index(state, y) for y in np.atleast_2d(y_samples)])
    best, arg = -INF, None
    for idx in probe_idx:
        idx = tuple(int(i) for i in idx)
        z = float(zfield[idx])
        lv = solver.log_psi_Y(idx, z)
        if lv == np.inf:
            continue
        yv = float(envelope.inverse_log(lv))
        if z - yv > best:
            best, arg = z - yv, tuple(float(ax[i]) for ax, i in zip(state.grid.axes, idx))
    return LambdaResult(best if arg is not None else NAN, arg, stride * dx, len(probe_idx))


# ---------------------------------------------------------------------------
# fronts and speeds

def front_position(state: GridState, eps: float, mode: str = "front", axis: int = 0,
                   center=None) -> float:
    """Furthest extent of {u >= eps}: largest coordinate along ``axis`` or largest radius."""
    mask = np.asarray(state.u) >= eps
    if not mask.any():
        return NAN
    c = state.grid.coords()
    if mode == "front":
        return float(c[..., axis][mask].max())
    center = np.zeros(c.shape[-1]) if center is None else np.asarray(center, dtype=float)
    return float(np.sqrt(np.sum((c[mask] - center) ** 2, axis=-1)).max())


def crossing_position(x: np.ndarray, u: np.ndarray, level: float) -> float:
    """Rightmost point where a 1-D profile crosses ``level`` downward, linearly interpolated."""
    above = np.flatnonzero(u >= level)
    if above.size == 0:
        return NAN
    i = above[-1]
    if i == u.size - 1:
        return float(x[-1])
    return float(x[i] + (u[i] - level) / (u[i] - u[i + 1]) * (x[i + 1] - x[i]))


@dataclass
class WidthRecord:
    t: float
    eps: float
    L_low: float
    L_high: float
    J: float
    L_pair: float
    front_pos: float
    Z_origin: float
    Y_origin: float
    Lambda: float


WIDTH_HEADER = "t,eps,L_low,L_high,J,L_pair,front_pos,Z_origin,Y_origin,Lambda"


@dataclass
class WidthTrace:
    records: list[WidthRecord] = dc_field(default_factory=list)

    def times(self) -> np.ndarray:
        return np.unique([r.t for r in self.records])

    def column(self, name: str, eps: float) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.records if abs(r.eps - eps) < 1e-12]
        return np.array([r.t for r in rows]), np.array([getattr(r, name) for r in rows], dtype=float)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(WIDTH_HEADER + "\n")
            for r in self.records:
                fh.write(",".join(fmt(getattr(r, k)) for k in WIDTH_HEADER.split(",")) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "WidthTrace":
        lines = Path(path).read_text().splitlines()
        if lines[0] != WIDTH_HEADER:
            raise ValueError("unexpected width trace header")
        recs = [WidthRecord(*map(float, ln.split(","))) for ln in lines[1:] if ln]
        return cls(recs)


class WidthRecorder:
    """Observer that appends one WidthRecord per configured eps to a trace.

    For eps < 1/2 the row holds L_eps, the high width at 1 - eps and J_eps;
    for eps > 1/2 only the high width at eps is defined and the other
    columns are nan.
    """

    def __init__(self, eps_list: Sequence[float], eps_pair: float = 0.9, origin=None,
                 envelope: BesselEnvelope | None = None, h: float = 0.0, eps0: float = 0.1,
                 stride: int = 4, lambda_every: int = 1, front_mode: str = "front",
                 front_axis: int = 0, center=None):
        self.trace = WidthTrace()
        self.eps_list = list(eps_list)
        self.eps_pair = eps_pair
        self.origin = origin
        self.envelope = envelope
        self.h = h
        self.eps0 = eps0
        self.stride = stride
        self.lambda_every = max(1, int(lambda_every))
        self.front_mode = front_mode
        self.front_axis = front_axis
        self.center = center
        self._count = 0

    def __call__(self, state: GridState) -> None:
        origin = self.origin if self.origin is not None else [ax[0] for ax in state.grid.axes]
        z = Z_y(state, origin, self.eps0)
        yv = lam = NAN
        if self.envelope is not None:
            yv = Y_h_y(state, origin, self.h, self.envelope, self.eps0)
            if self._count % self.lambda_every == 0:
                lam = Lambda_h(state, self.h, self.envelope, stride=self.stride, eps0=self.eps0).value
        self._count += 1
        for eps in self.eps_list:
            if eps < 0.5:
                low, high, J = width_L(state, eps), width_L_high(state, 1 - eps), width_J(state, eps)
            else:
                low, high, J = NAN, width_L_high(state, eps), NAN
            pair = width_L_pair(state, eps, self.eps_pair) if eps < self.eps_pair else NAN
            fp = front_position(state, eps, self.front_mode, self.front_axis, self.center)
            self.trace.records.append(WidthRecord(state.t, eps, low, high, J, pair, fp, z, yv, lam))


MIN_FIT_POINTS = 10


def spreading_speed_fit(trace: WidthTrace, eps: float, window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of the level-eps front position over the window (default: last half)."""
    t, x = trace.column("front_pos", eps)
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} snapshots in the fit window, got {int(sel.sum())}")
    if np.any(~np.isfinite(x[sel])):
        raise ValueError("front position undefined inside the fit window")
    return float(np.polyfit(t[sel], x[sel], 1)[0])


@dataclass(frozen=True)
class SpeedCheckReport:
    pairs: int
    passed: int
    worst_lower_margin: float
    worst_upper_margin: float

    @property
    def ok(self) -> bool:
        return self.pairs > 0 and self.passed == self.pairs


def global_mean_speed_check(snapshots: Sequence[GridState], eps: float, c_lo: float, c_hi: float,
                            delta: float, tau: float, t_min: float = -INF) -> SpeedCheckReport:
    """Check both inclusions of a global mean speed in [c_lo, c_hi] over time lag tau.

    B_{(c_lo - delta) tau}({u(t) >= eps}) must lie in {u(t + tau) >= 1 - eps}, and
    {u(t + tau) >= eps} must lie in B_{(c_hi + delta) tau}({u(t) >= 1 - eps}).
    Margins are distances: positive means the inclusion holds with room to spare.
    """
    times = np.array([s.t for s in snapshots])
    pairs = passed = 0
    worst_lo = worst_hi = INF
    for i, s in enumerate(snapshots):
        if s.t < t_min:
            continue
        j = np.flatnonzero(np.abs(times - (s.t + tau)) < 1e-9)
        if j.size == 0:
            continue
        later = snapshots[int(j[0])]
        dx = s.grid.dx
        u0, u1 = np.asarray(s.u), np.asarray(later.u)
        r_lo = max(c_lo - delta, 0.0) * tau
        r_hi = (c_hi + delta) * tau
        d_low = distance_to(u0 >= eps, dx)
        bad = u1 < 1.0 - eps
        m_lo = float(d_low[bad].min() - r_lo) if bad.any() else INF
        d_top = distance_to(u0 >= 1.0 - eps, dx)
        reach = u1 >= eps
        m_hi = float(r_hi - d_top[reach].max()) if reach.any() else INF
        pairs += 1
        ok = m_lo > 0 and m_hi >= 0
        passed += ok
        worst_lo = min(worst_lo, m_lo)
        worst_hi = min(worst_hi, m_hi)
    return SpeedCheckReport(pairs, passed, worst_lo, worst_hi)


def component_count(mask: np.ndarray) -> int:
    """Number of 4-connected components of a boolean node mask."""
    return int(ndimage.label(np.asarray(mask, dtype=bool))[1])


# ---------------------------------------------------------------------------
# steady-state identities

def weighted_reaction_integral(state: GridState, field, d: int | None = None) -> float:
    """Quadrature of |x|^(2-d) f(x, v(x)) over the represented domain (cylinder grids)."""
    grid = state.grid
    d = d or grid.dim
    c = grid.coords()
    rad = np.sqrt(np.sum(c ** 2, axis=-1))
    f = field.evaluate(c, np.asarray(state.u))
    w = grid.volume_weights()
    with np.errstate(divide="ignore"):
        kern = np.where(rad > 0, rad ** (2.0 - d), 0.0)
    return float(np.sum(kern * f * w))


def unit_sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
