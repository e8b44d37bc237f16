"""Explicit sub- and supersolutions and their certification on a lattice.

A barrier is a function v(t, x) together with the sign its parabolic
residual v_t - Lap v - f(x, v) should have.  ``certify`` evaluates the
residual with the same discrete Laplacian the solver uses and a forward
time difference, and checks the sign up to 10 (dx^2 + dt).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, Sequence

import numpy as np

from .frontspeed import FrontProfile, shoot_front_speed
from .reaction import ReactionField, ReactionProfile, estimate_lipschitz, make_profile
from .solver import BumpProfile, GridSpec, GridState, laplacian

SUPER = "supersolution"
SUB = "subsolution"


@dataclass(frozen=True, eq=False)
class BarrierFn:
    """v(t, coords) with the expected residual sign.

    ``valid_region(t, coords, v)`` returns a boolean mask of points where the
    sign is claimed; None means everywhere on ``t_range``.
    """

    name: str
    evaluate: Callable[[float, np.ndarray], np.ndarray]
    expected_sign: str
    provenance: str
    valid_region: Callable[[float, np.ndarray, np.ndarray], np.ndarray] | None = None
    t_range: tuple[float, float] = (-math.inf, math.inf)
    reaction: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    meta: Mapping[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.expected_sign not in (SUPER, SUB):
            raise ValueError("expected_sign must be supersolution or subsolution")

    def __call__(self, t: float, coords: np.ndarray) -> np.ndarray:
        if not self.t_range[0] <= t <= self.t_range[1]:
            raise ValueError(f"t={t:g} outside the barrier's time range {self.t_range}")
        return self.evaluate(t, coords)

    def flipped(self) -> "BarrierFn":
        """Same function with the opposite claimed sign (a negative control)."""
        other = SUB if self.expected_sign == SUPER else SUPER
        return BarrierFn(self.name + "_flipped", self.evaluate, other, self.provenance,
                         self.valid_region, self.t_range, self.reaction, self.meta)


# ---------------------------------------------------------------------------
# transition function for the annular supersolution

@dataclass(frozen=True)
class AnnulusRamp:
    """C^2 function h with h = 0 on [0, z1], h' = 1 beyond z2, 0 <= h'' <= delta / 6.

    h'' rises to delta/6 with a cubic smoothstep over a ramp of length
    1/delta, stays flat, and falls back symmetrically, so h is piecewise
    quintic and h' reaches exactly 1 at z2 = z1 + 7 / delta.
    """

    z1: float
    z2: float
    peak: float

    @classmethod
    def build(cls, d: int, delta: float) -> "AnnulusRamp":
        if delta <= 0:
            raise ValueError("delta must be positive")
        z1 = 6.0 * d / delta
        z2 = (6.0 * d + 7.0) / delta
        ramp = cls(z1, z2, delta / 6.0)
        # the plateau of h'' must have nonnegative length
        if ramp.ramp_length * 2 > z2 - z1:
            raise ValueError("infeasible ramp parameters")
        return ramp

    @property
    def ramp_length(self) -> float:
        # area P (L - a) = 1 with L = z2 - z1
        return (self.z2 - self.z1) - 1.0 / self.peak

    def _pieces(self, s):
        s = np.asarray(s, dtype=float)
        P, a, z1, z2 = self.peak, self.ramp_length, self.z1, self.z2
        s_a, s_b = z1 + a, z2 - a
        h2 = np.zeros_like(s)
        h1 = np.zeros_like(s)
        h0 = np.zeros_like(s)
        # rising ramp
        t = np.clip((s - z1) / a, 0.0, 1.0)
        up = (s > z1) & (s <= s_a)
        h2 = np.where(up, P * t * t * (3 - 2 * t), h2)
        h1 = np.where(up, P * a * (t ** 3 - 0.5 * t ** 4), h1)
        h0 = np.where(up, P * a * a * (0.25 * t ** 4 - 0.1 * t ** 5), h0)
        # plateau
        hA1, hA0 = 0.5 * P * a, 0.15 * P * a * a
        flat = (s > s_a) & (s <= s_b)
        y = s - s_a
        h2 = np.where(flat, P, h2)
        h1 = np.where(flat, hA1 + P * y, h1)
        h0 = np.where(flat, hA0 + hA1 * y + 0.5 * P * y * y, h0)
        # falling ramp, mirror of the rising one
        L_flat = s_b - s_a
        hB1 = hA1 + P * L_flat
        hB0 = hA0 + hA1 * L_flat + 0.5 * P * L_flat ** 2
        t = np.clip((s - s_b) / a, 0.0, 1.0)
        down = (s > s_b) & (s <= z2)
        g2 = P * (1 - t * t * (3 - 2 * t))
        g1 = P * a * (t - t ** 3 + 0.5 * t ** 4)
        g0 = P * a * a * (0.5 * t * t - 0.25 * t ** 4 + 0.1 * t ** 5)
        h2 = np.where(down, g2, h2)
        h1 = np.where(down, hB1 + g1, h1)
        h0 = np.where(down, hB0 + hB1 * (s - s_b) + g0, h0)
        # linear tail
        hZ1 = hB1 + 0.5 * P * a
        hZ0 = hB0 + hB1 * a + P * a * a * 0.35
        tail = s > z2
        h2 = np.where(tail, 0.0, h2)
        h1 = np.where(tail, hZ1, h1)
        h0 = np.where(tail, hZ0 + hZ1 * (s - z2), h0)
        return h0, h1, h2

    def h(self, s):
        return self._pieces(s)[0]

    def dh(self, s):
        return self._pieces(s)[1]

    def d2h(self, s):
        return self._pieces(s)[2]


# ---------------------------------------------------------------------------
# annular supersolution

def lifted_reaction(f1: ReactionProfile, eps_prime: float) -> Callable[[np.ndarray], np.ndarray]:
    """f2(u) = max(f1(u), f1(u - eps')) on [0, 1 + eps'], zero outside."""

    def f2(u):
        u = np.asarray(u, dtype=float)
        a = np.where((u > 0) & (u < 1), f1.fn(np.clip(u, 0, 1)), 0.0)
        v = u - eps_prime
        b = np.where((v > 0) & (v < 1), f1.fn(np.clip(v, 0, 1)), 0.0)
        return np.maximum(a, b)

    return f2


def annular_supersolution(f1: ReactionProfile, delta: float, d: int,
                          eps_prime: float | None = None) -> BarrierFn:
    """v(t, x) = U(z2 - h(|x|) - (c2 + delta/3) t) for t < 0.

    U connects 1 + eps' to eps' and travels at speed c2 for the lifted
    reaction f2 >= f1; it is normalized so that U(0) = 2 eps', where f2
    vanishes.  Coordinates are grid coordinates: (x,), (x, y) or (x1, r).
    """
    zz = f1.zero_zone
    if eps_prime is None:
        eps_prime = 0.25 * zz
    if not 0 < 2 * eps_prime <= zz:
        raise ValueError("eps' must satisfy 0 < 2 eps' <= width of the zero zone of f1")
    f2 = lifted_reaction(f1, eps_prime)
    shifted = make_profile("tabulated", lambda w: f2(w + eps_prime), {}, name="lifted")
    res = shoot_front_speed(shifted)
    c2 = res.speed
    prof = res.profile.shifted(res.profile.position_of(eps_prime))
    ramp = AnnulusRamp.build(d, delta)
    speed = c2 + delta / 3.0

    def evaluate(t, coords):
        rad = np.sqrt(np.sum(np.asarray(coords, dtype=float) ** 2, axis=-1))
        return eps_prime + prof(ramp.z2 - ramp.h(rad) - speed * t)

    def reaction(coords, v):
        return f2(v)

    return BarrierFn("annular_supersolution", evaluate, SUPER, "annular front supersolution",
                     t_range=(-math.inf, 0.0), reaction=reaction,
                     meta={"c2": c2, "z1": ramp.z1, "z2": ramp.z2, "eps_prime": eps_prime,
                           "delta": delta, "d": d})


# ---------------------------------------------------------------------------
# reference runs and exponential-tail barriers

@dataclass(frozen=True)
class ReferenceRun:
    """Stored snapshots of a monotone run, linearly interpolated in time."""

    grid: GridSpec
    times: np.ndarray
    values: np.ndarray  # (n_times, *grid.shape)

    @classmethod
    def from_states(cls, states: Sequence[GridState]) -> "ReferenceRun":
        return cls(states[0].grid, np.array([s.t for s in states]),
                   np.stack([np.asarray(s.u) for s in states]))

    def at(self, t: float) -> np.ndarray:
        if not self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12:
            raise ValueError(f"t={t:g} outside stored range [{self.times[0]:g}, {self.times[-1]:g}]")
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        t0, t1 = self.times[k], self.times[k + 1]
        lam = min(max((t - t0) / (t1 - t0), 0.0), 1.0)
        return (1.0 - lam) * self.values[k] + lam * self.values[k + 1]

    def rate_floor(self, lo: float, hi: float) -> float:
        """Smallest forward-difference w_t over nodes with lo <= w <= hi."""
        dt = np.diff(self.times)[:, None]
        w = self.values[:-1].reshape(len(self.times) - 1, -1)
        wt = (self.values[1:].reshape(w.shape) - w) / dt
        sel = (w >= lo) & (w <= hi)
        return float(wt[sel].min()) if sel.any() else math.nan


def _on_grid(ref: ReferenceRun, coords: np.ndarray, field_values: np.ndarray) -> np.ndarray:
    if coords.shape[:-1] == ref.grid.shape:
        return field_values
    if ref.grid.geometry != "line":
        raise ValueError("reference runs are sampled on their own grid")
    return np.interp(coords[..., 0], ref.grid.axes[0], field_values)


def exp_tail_supersolution(ref: ReferenceRun, tau: float, eps2: float, R2: float,
                           theta: float, axis: int = 0) -> BarrierFn:
    """v = w(t + tau - exp(-eps2^2 t), x) + exp(eps2^2 t - eps2 (x1 - R2)) for t >= 0."""
    if tau < 1.0:
        raise ValueError("tau must be at least 1 so that the reference time stays nonnegative")

    def beta(t):
        return tau - math.exp(-eps2 ** 2 * t)

    def evaluate(t, coords):
        coords = np.asarray(coords, dtype=float)
        w = _on_grid(ref, coords, ref.at(t + beta(t)))
        return w + np.exp(eps2 ** 2 * t - eps2 * (coords[..., axis] - R2))

    def valid(t, coords, v):
        w = _on_grid(ref, coords, ref.at(t + beta(t)))
        return w >= 1.0 - theta

    t_max = ref.times[-1] - tau
    return BarrierFn("exp_tail_supersolution", evaluate, SUPER, "exponential-tail supersolution",
                     valid_region=valid, t_range=(0.0, t_max),
                     meta={"tau": tau, "eps2": eps2, "R2": R2, "theta": theta})


def exp_tail_subsolution(ref: ReferenceRun, eps2: float, r: float, theta: float,
                         c0: float, K: float, m: float | None = None, axis: int = 0) -> BarrierFn:
    """v = w(t - 1 + exp(-eps2^2 t), x) - exp(eps2^2 t - eps2 (x1 - r)) for t >= 0.

    The sign is claimed where x1 >= c0 t / 2 + log(max(K / (eps2^2 m), 2 / theta)) / eps2 + r
    or where v >= 1 - theta.  ``m`` defaults to the smallest w_t of the
    reference run over theta/2 <= w <= 1 - theta/2.
    """
    if m is None:
        m = ref.rate_floor(theta / 2.0, 1.0 - theta / 2.0)
    if not m > 0:
        raise ValueError("reference run must be strictly increasing on the transition band")
    shift = math.log(max(K / (eps2 ** 2 * m), 2.0 / theta)) / eps2 + r

    def arg(t):
        return t - 1.0 + math.exp(-eps2 ** 2 * t)

    def evaluate(t, coords):
        coords = np.asarray(coords, dtype=float)
        w = _on_grid(ref, coords, ref.at(arg(t)))
        return w - np.exp(eps2 ** 2 * t - eps2 * (coords[..., axis] - r))

    def valid(t, coords, v):
        coords = np.asarray(coords, dtype=float)
        return (coords[..., axis] >= 0.5 * c0 * t + shift) | (v >= 1.0 - theta)

    return BarrierFn("exp_tail_subsolution", evaluate, SUB, "exponential-tail subsolution",
                     valid_region=valid, t_range=(0.0, ref.times[-1]),
                     meta={"eps2": eps2, "r": r, "theta": theta, "m": m, "shift": shift})


# ---------------------------------------------------------------------------
# slab barrier and the bump

def slab_speed(f0: ReactionProfile) -> float:
    """c = max(2 sqrt(sup |f0'|), 1) with the sup taken over sampled difference quotients."""
    return max(2.0 * math.sqrt(estimate_lipschitz(f0.fn)), 1.0)


def lemma91_supersolution(p: Callable[[np.ndarray], np.ndarray], f0: ReactionProfile,
                          z: float, axis: int = 0) -> BarrierFn:
    """v = p(x) + exp(-c (x1 - z - c t) / 2), a supersolution for the boosted slab field.

    ``p`` maps grid coordinates to the tube equilibrium.
    """
    c = slab_speed(f0)

    def evaluate(t, coords):
        coords = np.asarray(coords, dtype=float)
        return p(coords) + np.exp(-0.5 * c * (coords[..., axis] - z - c * t))

    return BarrierFn("lemma91_supersolution", evaluate, SUPER, "tube equilibrium plus decaying exponential",
                     t_range=(0.0, math.inf), meta={"c": c, "z": z})


def bump_barrier(profile: BumpProfile, R2: float, radial: bool = False, center=None,
                 axis: int = 0, dim: int = 1) -> BarrierFn:
    """The stationary bump W as a subsolution.

    A radial bump in dimension ``dim`` needs R2 >= (dim - 1) max|W'| / margin
    so that the curvature term cannot eat the margin.
    """
    need = (dim - 1) * profile.max_slope / profile.margin
    if radial and dim > 1 and R2 < need:
        raise ValueError(f"radial bump in dimension {dim} needs R2 >= {need:.4g}")

    def evaluate(t, coords):
        coords = np.asarray(coords, dtype=float)
        if radial:
            c = np.zeros(coords.shape[-1]) if center is None else np.asarray(center, dtype=float)
            rho = np.sqrt(np.sum((coords - c) ** 2, axis=-1))
        else:
            rho = coords[..., axis]
        return profile(rho - R2)

    return BarrierFn("bump_subsolution", evaluate, SUB, "stationary bump",
                     meta={"R2": R2, "margin": profile.margin})


def constant_barrier(value: float, sign: str = SUPER) -> BarrierFn:
    def evaluate(t, coords):
        return np.full(np.shape(coords)[:-1], float(value))

    return BarrierFn(f"constant_{value:g}", evaluate, sign, "constant")


# ---------------------------------------------------------------------------
# certification

@dataclass(frozen=True)
class Lattice:
    grid: GridSpec
    times: np.ndarray
    dt: float

    @property
    def tolerance(self) -> float:
        return 10.0 * (self.grid.dx ** 2 + self.dt)


@dataclass(frozen=True)
class CertificationReport:
    barrier: str
    region: str
    min_residual: float
    max_residual: float
    violations: int
    worst_violation: float
    tolerance: float
    points: int

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.points > 0

    def csv_row(self) -> str:
        from .solver import fmt
        return ",".join([self.barrier, self.region, fmt(self.min_residual),
                         fmt(self.max_residual), str(self.violations)])


CERT_HEADER = "barrier,region,min_residual,max_residual,violations"


def _interior(grid: GridSpec) -> np.ndarray:
    m = np.ones(grid.shape, dtype=bool)
    m[0] = m[-1] = False
    if grid.geometry == "plane":
        m[:, 0] = m[:, -1] = False
    elif grid.geometry == "cylinder":
        m[:, -1] = False
    return m


def residual(barrier: BarrierFn, reaction, grid: GridSpec, t: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """(v, v_t - Lap_h v - f(x, v)) at time t with a forward difference in time."""
    coords = grid.coords()
    v0 = barrier(t, coords)
    v1 = barrier(t + dt, coords)
    f = reaction(coords, v0) if not isinstance(reaction, ReactionField) else reaction.evaluate(coords, v0)
    return v0, (v1 - v0) / dt - laplacian(v0, grid) - f


def certify(barrier: BarrierFn, field, lattice: Lattice, region: str = "valid") -> CertificationReport:
    """Check the residual sign on interior lattice nodes inside the valid region."""
    reaction = field if field is not None else barrier.reaction
    if reaction is None:
        raise ValueError("no reaction supplied for certification")
    interior = _interior(lattice.grid)
    coords = lattice.grid.coords()
    tol = lattice.tolerance
    lo, hi, worst, count, pts = math.inf, -math.inf, 0.0, 0, 0
    for t in lattice.times:
        v, res = residual(barrier, reaction, lattice.grid, float(t), lattice.dt)
        mask = interior.copy()
        if barrier.valid_region is not None:
            mask &= barrier.valid_region(float(t), coords, v)
        r = res[mask]
        if r.size == 0:
            continue
        pts += r.size
        lo = min(lo, float(r.min()))
        hi = max(hi, float(r.max()))
        bad = np.maximum(-r, 0.0) if barrier.expected_sign == SUPER else np.maximum(r, 0.0)
        worst = max(worst, float(bad.max()))
        count += int(np.count_nonzero(bad > tol))
    return CertificationReport(barrier.name, region, lo, hi, count, worst, tol, pts)


def refinement_ok(coarse: CertificationReport, fine: CertificationReport, floor: float = 1e-6) -> bool:
    """Both pass and the worst violation shrinks at least twofold.

    Violations below ``floor`` are at the sampling accuracy of tabulated
    front profiles and count as zero.
    """
    return coarse.passed and fine.passed and fine.worst_violation <= max(0.5 * coarse.worst_violation, floor)
