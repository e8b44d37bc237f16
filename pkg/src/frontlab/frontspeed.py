"""Traveling-front speeds of u_t = u'' + f(u) by shooting.

A front U(s) with U(-inf) = 1, U(+inf) = 0 and speed c solves
U'' + c U' + f(U) = 0.  We launch from the unstable manifold of (1, 0) and
bisect on c: if the trajectory turns around (U' >= 0 while U > 0) the
speed is too large, if it crosses U = 0 the speed is too small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .reaction import ReactionField, ReactionProfile

LAUNCH = 1e-6
STEP = 1e-3
WINDOW = 200.0


class NoFrontError(ValueError):
    """The profile admits no front with nonnegative speed."""


class ConvergenceError(RuntimeError):
    """Bisection ended without a certified bracket."""


@numba.njit(cache=True)
def _table_f(u, table):
    n = table.size - 1
    if u <= 0.0 or u >= 1.0:
        return 0.0
    x = u * n
    m = int(x)
    if m >= n:
        m = n - 1
    w = x - m
    return table[m] + (table[m + 1] - table[m]) * w


@numba.njit(cache=True)
def _shoot(table, c, lam, delta, ds, nmax, zero_zone, out_u, record):
    """Integrate from the launch point; returns (class, steps, U, V).

    class = +1 speed too large, -1 too small, 0 undecided within the window.
    """
    U = 1.0 - delta
    V = -lam * delta
    for k in range(nmax):
        if record:
            out_u[k] = U
        if U < 0.0:
            return -1, k, U, V
        if V >= 0.0:
            return 1, k, U, V
        if U <= zero_zone:
            # f vanishes from here on: U tends to U + V / c
            if c <= 0.0:
                return -1, k, U, V
            if not record:
                return (1 if U + V / c > 0.0 else -1), k, U, V
        k1u = V
        k1v = -c * V - _table_f(U, table)
        u2 = U + 0.5 * ds * k1u
        v2 = V + 0.5 * ds * k1v
        k2u = v2
        k2v = -c * v2 - _table_f(u2, table)
        u3 = U + 0.5 * ds * k2u
        v3 = V + 0.5 * ds * k2v
        k3u = v3
        k3v = -c * v3 - _table_f(u3, table)
        u4 = U + ds * k3u
        v4 = V + ds * k3v
        k4u = v4
        k4v = -c * v4 - _table_f(u4, table)
        U = U + ds * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        V = V + ds * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        if record and U < 1e-9:
            return 0, k + 1, U, V
    return 0, nmax, U, V


@dataclass(frozen=True)
class FrontProfile:
    """Sampled front U(s), normalized so that U(0) = 1/2, with exponential tails."""

    s: np.ndarray
    u: np.ndarray
    speed: float
    lam_left: float
    mu_right: float

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.s, self.u)
        left = s < self.s[0]
        right = s > self.s[-1]
        if np.any(left):
            out = np.where(left, 1.0 - (1.0 - self.u[0]) * np.exp(self.lam_left * (s - self.s[0])), out)
        if np.any(right):
            out = np.where(right, self.u[-1] * np.exp(-self.mu_right * (s - self.s[-1])), out)
        return out

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        du = np.gradient(self.u, self.s)
        out = np.interp(s, self.s, du)
        out = np.where(s < self.s[0], -(1.0 - self.u[0]) * self.lam_left
                       * np.exp(self.lam_left * (s - self.s[0])), out)
        out = np.where(s > self.s[-1], -self.mu_right * self.u[-1]
                       * np.exp(-self.mu_right * (s - self.s[-1])), out)
        return out

    def position_of(self, level: float) -> float:
        """s with U(s) = level, inside the sampled window."""
        return float(np.interp(-level, -self.u, self.s))

    def shifted(self, s0: float) -> "FrontProfile":
        """Profile V(s) = U(s + s0)."""
        return FrontProfile(self.s - s0, self.u, self.speed, self.lam_left, self.mu_right)


@dataclass(frozen=True)
class FrontSolveResult:
    speed: float
    profile: FrontProfile
    residual: float
    iterations: int
    bracket: tuple[float, float]
    flags: tuple[str, ...] = ()


def _launch_rate(c: float, k1: float) -> float:
    # unstable eigenvalue at (1, 0), k1 = -f'(1) >= 0
    return 0.5 * (-c + math.sqrt(c * c + 4.0 * max(k1, 0.0)))


def _classify(profile: ReactionProfile, c: float, k1: float, ds: float, nmax: int) -> int:
    lam = _launch_rate(c, k1)
    if lam <= 0.0:
        lam = 1e-3
    zz = max(profile.zero_zone - 1e-4, -1.0)
    cls, _, U, V = _shoot(profile.table, c, lam, LAUNCH, ds, nmax, zz, np.empty(1), False)
    if cls == 0:
        # still descending at the window end: treat as not crossing zero
        cls = 1 if U + V / max(c, 1e-12) > 0.0 else -1
    return int(cls)


def shoot_front_speed(profile: ReactionProfile, tol: float = 1e-6, *,
                      ds: float = STEP, window: float = WINDOW, max_iter: int = 200) -> FrontSolveResult:
    """Front speed of an ignition, bistable or tabulated profile by bisection shooting."""
    integral = profile.integral()
    if integral < -1e-12:
        raise NoFrontError(f"integral of f is {integral:.3g} < 0; the front recedes")
    nmax = int(round(window / ds))
    k1 = -profile.derivative(1.0)
    K = profile.lipschitz_K
    lo, hi = 0.0, 2.0 * math.sqrt(K) + 1.0
    flags: list[str] = []
    if abs(integral) <= 1e-12:
        lo = hi = 0.0
        flags.append("zero_speed")
        it = 0
    else:
        if _classify(profile, hi, k1, ds, nmax) != 1:
            raise ConvergenceError("upper bracket is not a too-fast speed")
        if _classify(profile, lo, k1, ds, nmax) != -1:
            raise NoFrontError("zero speed already overshoots; no front with c > 0")
        it = 0
        while hi - lo > tol:
            if it >= max_iter:
                raise ConvergenceError("bisection did not reach the tolerance")
            mid = 0.5 * (lo + hi)
            if _classify(profile, mid, k1, ds, nmax) == 1:
                hi = mid
            else:
                lo = mid
            it += 1
    c = 0.5 * (lo + hi)
    prof, residual = _record_profile(profile, c, k1, ds, nmax)
    return FrontSolveResult(speed=c, profile=prof, residual=residual, iterations=it,
                            bracket=(lo, hi), flags=tuple(flags))


def _record_profile(profile: ReactionProfile, c: float, k1: float, ds: float, nmax: int):
    lam = max(_launch_rate(c, k1), 1e-3)
    buf = np.empty(nmax + 1)
    zz = max(profile.zero_zone - 1e-4, -1.0)
    _, n, _, _ = _shoot(profile.table, c, lam, LAUNCH, ds, nmax, zz, buf, True)
    u = buf[:max(n, 3)].copy()
    # keep the monotone part strictly inside (0, 1)
    good = np.flatnonzero((u <= 0.0) | (np.diff(u, prepend=u[0] + 1.0) >= 0.0))
    if good.size:
        u = u[:max(good[0], 3)]
    s = np.arange(u.size) * ds
    if u[-1] < 0.5 < u[0]:
        s = s - float(np.interp(-0.5, -u, s))
    f = profile(u)
    res = 0.0
    if u.size > 2:
        d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / ds ** 2
        d1 = (u[2:] - u[:-2]) / (2.0 * ds)
        res = float(np.max(np.abs(d2 + c * d1 + f[1:-1])))
    f0p = profile.derivative(0.0)
    disc = c * c - 4.0 * f0p
    if f0p <= 0.0:
        mu = 0.5 * (c + math.sqrt(max(disc, 0.0)))
    else:
        mu = 0.5 * (c - math.sqrt(max(disc, 0.0)))
    mu = max(mu, 1e-6)
    return FrontProfile(s=s, u=u, speed=c, lam_left=lam, mu_right=mu), res


def kpp_linear_speed(profile: ReactionProfile, h: float = 1e-6) -> float:
    """2 sqrt(f'(0)), with the derivative taken as a forward difference."""
    fp = float(profile.fn(np.array([h]))[0] - profile.fn(np.array([0.0]))[0]) / h
    return 2.0 * math.sqrt(max(fp, 0.0))


def profile_speed(profile: ReactionProfile, tol: float = 1e-6) -> tuple[float, tuple[str, ...]]:
    """Front speed by the method that suits the profile kind."""
    if profile.kind == "kpp":
        return kpp_linear_speed(profile), ("kpp_linear",)
    res = shoot_front_speed(profile, tol)
    return res.speed, res.flags


@dataclass(frozen=True)
class SpeedBounds:
    c0: float
    c1: float
    flags: tuple[str, ...]


def speed_bounds(field: ReactionField, tol: float = 1e-6) -> SpeedBounds:
    """Front speeds of the lower and upper bounding profiles f0 <= f <= f1."""
    if field.bounds is None:
        raise ValueError("field does not declare bounding profiles")
    lo, hi = field.bounds
    c0, fl0 = profile_speed(lo, tol)
    c1, fl1 = profile_speed(hi, tol)
    return SpeedBounds(c0=c0, c1=c1, flags=tuple(sorted(set(fl0) | set(fl1))))
