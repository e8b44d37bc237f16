"""Reaction profiles f0(u) and spatially varying reaction fields f(x, u).

A profile is a scalar nonlinearity on [0, 1] with f(0) = f(1) = 0.  Every
profile carries a dense lookup table so that compiled kernels can evaluate
it without calling back into Python.  A field couples a profile with
spatial data: a multiplicative modulation a(x), a localized equilibrium
p(x) with a stiff pull towards it, or an arbitrary callable.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

TABLE_SIZE = 1 << 16
SAMPLE_DU = 1e-4

KINDS = ("ignition", "monostable", "kpp", "bistable", "tabulated")


def _sample_grid(du: float = SAMPLE_DU) -> np.ndarray:
    n = int(round(1.0 / du))
    return np.linspace(0.0, 1.0, n + 1)


@dataclass(frozen=True, eq=False)
class ReactionProfile:
    """A scalar reaction term f0 on [0, 1].

    ``fn`` must be vectorized and is only ever called on values in [0, 1];
    evaluation outside the unit interval clamps first, so f0 extends by 0.
    """

    kind: str
    params: Mapping[str, float]
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_K: float
    theta_flat: float
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reaction kind {self.kind!r}")
        if not self.lipschitz_K >= 1.0:
            raise ValueError("lipschitz constant must be at least 1")

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return self.fn(u)

    @cached_property
    def table(self) -> np.ndarray:
        """Values on a uniform grid of TABLE_SIZE + 1 points in [0, 1]."""
        grid = np.linspace(0.0, 1.0, TABLE_SIZE + 1)
        tab = np.asarray(self.fn(grid), dtype=float).copy()
        tab[0] = 0.0
        tab[-1] = 0.0
        return tab

    @cached_property
    def zero_zone(self) -> float:
        """Largest sampled u with f0 identically zero on [0, u]."""
        g = _sample_grid()
        vals = self.fn(g)
        nz = np.flatnonzero(vals != 0.0)
        if nz.size == 0:
            return 1.0
        return float(g[nz[0] - 1]) if nz[0] > 0 else 0.0

    @property
    def theta0(self) -> float | None:
        return self.params.get("theta0")

    def integral(self) -> float:
        g = np.linspace(0.0, 1.0, 200001)
        return float(np.trapezoid(self.fn(g), g))

    def derivative(self, u: float, h: float = 1e-6) -> float:
        """One-sided difference quotient, pointing into [0, 1]."""
        if u + h <= 1.0:
            return float((self.fn(np.array([u + h]))[0] - self.fn(np.array([u]))[0]) / h)
        return float((self.fn(np.array([u]))[0] - self.fn(np.array([u - h]))[0]) / h)

    def scaled(self, factor: float) -> "ReactionProfile":
        fn = self.fn
        return make_profile(self.kind, lambda u: factor * fn(u),
                            {**self.params, "scale": factor},
                            name=f"{factor:g}*{self.name}")


def estimate_lipschitz(fn, du: float = SAMPLE_DU) -> float:
    g = _sample_grid(du)
    v = fn(g)
    return float(np.max(np.abs(np.diff(v))) / du)


def estimate_theta_flat(fn, du: float = SAMPLE_DU) -> float:
    """Largest theta <= 1/3 with f = 0 on [0, theta] and f non-increasing on [1 - theta, 1]."""
    g = _sample_grid(du)
    v = fn(g)
    nz = np.flatnonzero(v != 0.0)
    zero_top = 1.0 if nz.size == 0 else (g[nz[0] - 1] if nz[0] > 0 else 0.0)
    inc = np.flatnonzero(np.diff(v) > 1e-14)
    mono = 1.0 if inc.size == 0 else 1.0 - g[inc[-1] + 1]
    return float(max(0.0, min(zero_top, mono, 1.0 / 3.0)))


def make_profile(kind: str, fn, params: Mapping[str, float] | None = None,
                 lipschitz_K: float | None = None, name: str = "") -> ReactionProfile:
    K = estimate_lipschitz(fn) if lipschitz_K is None else lipschitz_K
    return ReactionProfile(kind=kind, params=dict(params or {}), fn=fn,
                           lipschitz_K=max(1.0, K), theta_flat=estimate_theta_flat(fn),
                           name=name or kind)


def ignition(theta0: float, rate: float = 1.0) -> ReactionProfile:
    """rate * (u - theta0)_+ * (1 - u)."""
    if not 0.0 < theta0 < 1.0:
        raise ValueError("theta0 must lie in (0, 1)")

    def fn(u):
        return rate * np.maximum(u - theta0, 0.0) * (1.0 - u)

    return make_profile("ignition", fn, {"theta0": theta0, "rate": rate},
                        name=f"ignition(theta0={theta0:g},rate={rate:g})")


def kpp(rate: float = 1.0) -> ReactionProfile:
    """rate * u * (1 - u)."""

    def fn(u):
        return rate * u * (1.0 - u)

    return make_profile("kpp", fn, {"rate": rate}, name=f"kpp(rate={rate:g})")


def monostable(rate: float = 1.0, b: float = 0.0) -> ReactionProfile:
    """rate * u * (1 - u) * (1 + b u); KPP when b <= 1."""

    def fn(u):
        return rate * u * (1.0 - u) * (1.0 + b * u)

    return make_profile("kpp" if b <= 1.0 else "monostable", fn, {"rate": rate, "b": b},
                        name=f"monostable(rate={rate:g},b={b:g})")


def bistable(theta0: float, rate: float = 1.0) -> ReactionProfile:
    """rate * u * (1 - u) * (u - theta0)."""
    if not 0.0 < theta0 < 1.0:
        raise ValueError("theta0 must lie in (0, 1)")

    def fn(u):
        return rate * u * (1.0 - u) * (u - theta0)

    return make_profile("bistable", fn, {"theta0": theta0, "rate": rate},
                        name=f"bistable(theta0={theta0:g},rate={rate:g})")


def tabulated(u: Sequence[float], f: Sequence[float], kind: str = "tabulated",
              params: Mapping[str, float] | None = None, name: str = "tabulated") -> ReactionProfile:
    """Piecewise-linear profile through the given samples."""
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    if u.ndim != 1 or u.shape != f.shape or u.size < 2:
        raise ValueError("tabulated profile needs matching 1-D arrays")
    if np.any(np.diff(u) <= 0) or abs(u[0]) > 1e-12 or abs(u[-1] - 1.0) > 1e-12:
        raise ValueError("u samples must increase strictly from 0 to 1")
    if abs(f[0]) > 1e-12 or abs(f[-1]) > 1e-12:
        raise ValueError("tabulated profile must vanish at 0 and 1")

    def fn(x):
        return np.interp(x, u, f)

    return make_profile(kind, fn, params, name=name)


def load_profile_csv(path: str | Path, kind: str = "tabulated") -> ReactionProfile:
    """Read a CSV with header ``u,f0``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["u", "f0"]:
            raise ValueError("profile CSV must have header 'u,f0'")
        rows = [(float(r["u"]), float(r["f0"])) for r in reader]
    arr = np.array(rows, dtype=float)
    return tabulated(arr[:, 0], arr[:, 1], kind=kind, name=Path(path).stem)


def parse_profile_spec(spec: str) -> ReactionProfile:
    """Build a profile from ``kind:key=value,...`` or ``csv:path``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "csv":
        return load_profile_csv(rest)
    kw = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        k, _, v = item.partition("=")
        kw[k.strip()] = float(v)
    builders = {"ignition": ignition, "kpp": kpp, "monostable": monostable,
                "bistable": bistable, "terrace": build_terrace_profile}
    if kind not in builders:
        raise ValueError(f"unknown profile kind {kind!r}")
    return builders[kind](**kw)


def build_terrace_profile(c_scale: float = 64.0, upper_gain: float = 2.0) -> ReactionProfile:
    """Two stacked ignition bumps separated by a dead zone at 1/2.

    On [0, 1/2] the profile is g(u) = c_scale (u - 1/4)_+^2 (1/2 - u); on
    [1/2, 1] it is upper_gain * g(u - 1/2).  The lower front (0 -> 1/2) and
    the upper front (1/2 -> 1) then travel at speeds c and sqrt(upper_gain) c.
    """
    if upper_gain <= 0:
        raise ValueError("upper_gain must be positive")

    def g(v):
        return c_scale * np.maximum(v - 0.25, 0.0) ** 2 * np.maximum(0.5 - v, 0.0)

    def fn(u):
        return np.where(u <= 0.5, g(u), upper_gain * g(u - 0.5))

    # the largest pure-ignition minorant starts at 3/4
    return make_profile("tabulated", fn,
                        {"theta0": 0.75, "c_scale": c_scale, "upper_gain": upper_gain},
                        name=f"terrace(c_scale={c_scale:g},gain={upper_gain:g})")


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True, eq=False)
class ReactionField:
    """f(x, u) over grid coordinates.

    ``coords`` passed to the callables are arrays of shape (..., k) holding
    grid coordinates: (x,) on a line, (x, y) in the plane and (x1, r) on an
    axisymmetric cylinder.  Exactly one of the spatial mechanisms is used:

    * ``modulation``: f = a(x) f0(u)
    * ``equilibrium`` with ``boost`` M: f = f0(u) + M (u - 1/2)(p(x) - u) on (1/2, p(x))
    * ``custom``: f = custom(coords, u), evaluated in numpy only
    """

    base: ReactionProfile
    dim: int = 1
    modulation: Callable[[np.ndarray], np.ndarray] | None = None
    equilibrium: Callable[[np.ndarray], np.ndarray] | None = None
    boost: float = 0.0
    custom: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    bounds: tuple[ReactionProfile, ReactionProfile] | None = None
    signed_extension: bool = False
    lipschitz_K: float | None = None
    name: str = ""
    meta: Mapping[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        used = sum(x is not None for x in (self.modulation, self.equilibrium, self.custom))
        if used > 1:
            raise ValueError("a field uses at most one spatial mechanism")
        if self.lipschitz_K is None:
            object.__setattr__(self, "lipschitz_K", self.base.lipschitz_K)

    @property
    def K(self) -> float:
        return float(self.lipschitz_K)

    @property
    def kernel_mode(self) -> str:
        if self.custom is not None:
            return "custom"
        if self.equilibrium is not None:
            return "slab"
        return "modulated"

    def modulation_at(self, coords: np.ndarray) -> np.ndarray:
        shape = np.shape(coords)[:-1]
        if self.modulation is None:
            return np.ones(shape)
        return np.broadcast_to(np.asarray(self.modulation(coords), dtype=float), shape).copy()

    def equilibrium_at(self, coords: np.ndarray) -> np.ndarray:
        shape = np.shape(coords)[:-1]
        if self.equilibrium is None:
            return np.zeros(shape)
        return np.broadcast_to(np.asarray(self.equilibrium(coords), dtype=float), shape).copy()

    def evaluate(self, coords: np.ndarray, u: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        u = np.asarray(u, dtype=float)
        uc = np.clip(u, 0.0, 1.0)
        if self.custom is not None:
            out = np.asarray(self.custom(coords, uc), dtype=float)
        elif self.equilibrium is not None:
            p = self.equilibrium_at(coords)
            out = self.base(uc)
            extra = self.boost * (uc - 0.5) * (p - uc)
            out = out + np.where((uc > 0.5) & (uc < p), extra, 0.0)
        else:
            out = self.modulation_at(coords) * self.base(uc)
        if self.signed_extension:
            out = out + np.where(u > 1.0, -self.K * (u - 1.0), 0.0) + np.where(u < 0.0, -self.K * u, 0.0)
        return out

    __call__ = evaluate


def homogeneous(profile: ReactionProfile, dim: int = 1, **kw) -> ReactionField:
    return ReactionField(base=profile, dim=dim, bounds=(profile, profile), name=profile.name, **kw)


def eval_field(field: ReactionField, x, u: float) -> float:
    """Pointwise evaluation f(x, u) at a single coordinate tuple."""
    coords = np.asarray(x, dtype=float).reshape(1, -1)
    return float(field.evaluate(coords, np.array([u], dtype=float))[0])


# ---------------------------------------------------------------------------
# class membership

def alpha_f(field: ReactionField, x, zeta: float, du: float = SAMPLE_DU) -> float:
    """Smallest sampled u > 0 with f(x, u) > zeta u; inf if there is none."""
    g = _sample_grid(du)[1:]
    coords = np.broadcast_to(np.asarray(x, dtype=float), (g.size, len(np.atleast_1d(x))))
    vals = field.evaluate(coords, g)
    hit = np.flatnonzero(vals > zeta * g)
    return float(g[hit[0]]) if hit.size else float("inf")


@dataclass(frozen=True)
class ClassFReport:
    member: bool
    vacuous: bool
    min_value: float
    worst_point: tuple | None
    theta_ok: bool
    alphas: np.ndarray


def check_class_F(field: ReactionField, zeta: float, eta: float, theta: float = 0.0,
                  x_samples: np.ndarray | None = None, theta0: float | None = None,
                  du: float = SAMPLE_DU) -> ClassFReport:
    """Check inf{f(x, u) : alpha_f(x; zeta) <= u <= theta0} >= eta at sampled points.

    ``theta`` is the flat-zone width: f must vanish on [0, theta] and be
    non-increasing on [1 - theta, 1].  ``theta0`` defaults to the ignition
    temperature recorded on the base profile.
    """
    if theta0 is None:
        theta0 = field.base.theta0
    if theta0 is None:
        raise ValueError("field has no ignition temperature; pass theta0")
    if x_samples is None:
        x_samples = np.zeros((1, field.dim if field.modulation is None else 2))
    x_samples = np.atleast_2d(np.asarray(x_samples, dtype=float))
    g = _sample_grid(du)
    alphas = np.empty(len(x_samples))
    worst, worst_pt, theta_ok = np.inf, None, True
    for i, x in enumerate(x_samples):
        coords = np.broadcast_to(x, (g.size, x.size))
        vals = field.evaluate(coords, g)
        hit = np.flatnonzero(vals[1:] > zeta * g[1:])
        a = float(g[1:][hit[0]]) if hit.size else np.inf
        alphas[i] = a
        if theta > 0:
            flat = g <= theta + 1e-15
            top = g >= 1.0 - theta - 1e-15
            if np.any(vals[flat] != 0.0) or np.any(np.diff(vals[top]) > 1e-12):
                theta_ok = False
        if np.isfinite(a):
            window = (g >= a - 1e-15) & (g <= theta0 + 1e-15)
            if np.any(window):
                m = float(vals[window].min())
                if m < worst:
                    worst, worst_pt = m, tuple(x)
    vacuous = bool(np.all(np.isinf(alphas)))
    member = bool(worst >= eta and theta_ok)
    return ClassFReport(member=member, vacuous=vacuous, min_value=float(worst),
                        worst_point=worst_pt, theta_ok=theta_ok, alphas=alphas)


# ---------------------------------------------------------------------------
# builders for the structured examples

def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def annuli_modulation(r: np.ndarray, beta: float, n_max: int, n_min: int = 3,
                      inner: float = 3.0, outer: float = 4.0) -> np.ndarray:
    """a(r) = beta within `inner` of a radius 2^n, 1 beyond `outer`, smooth collars between."""
    r = np.asarray(r, dtype=float)
    dist = np.full(r.shape, np.inf)
    for n in range(n_min, n_max + 1):
        dist = np.minimum(dist, np.abs(r - 2.0 ** n))
    return 1.0 + (beta - 1.0) * smoothstep((outer - dist) / (outer - inner))


def build_annuli_field(beta: float, n_max: int, n_min: int = 3) -> ReactionField:
    """a(|x|) f0(u) in the plane with f0 = (2u - 1)(1 - u) on [1/2, 1]."""
    if beta < 1:
        raise ValueError("beta must be at least 1")
    f0 = ignition(0.5, rate=2.0)

    def a(coords):
        return annuli_modulation(np.hypot(coords[..., 0], coords[..., 1]), beta, n_max, n_min)

    return ReactionField(base=f0, dim=2, modulation=a, bounds=(f0, f0.scaled(beta)),
                         lipschitz_K=beta * f0.lipschitz_K,
                         name=f"annuli(beta={beta:g},n_max={n_max})",
                         meta={"beta": beta, "n_max": n_max, "n_min": n_min})


@dataclass(frozen=True)
class SlabProfile:
    """Radial equilibrium p(r) in R^m, m = d - 1 >= 3.

    Outside r = 3 it is the harmonic tail 3^(d-4) r^(3-d).  Inside, a
    polynomial in r^2 (so smooth on the axis) matched to third order at 3.
    """

    d: int
    coeffs: np.ndarray  # coefficients of r^0, r^2, ..., r^12 on the cap
    r_cap: float = 3.0

    @property
    def m(self) -> int:
        return self.d - 1

    def p(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        s = r * r
        cap = np.zeros_like(r)
        for a in self.coeffs[::-1]:
            cap = cap * s + a
        tail = 3.0 ** (self.d - 4) * np.power(np.maximum(r, 1.0), 3.0 - self.d)
        return np.where(r < self.r_cap, cap, tail)

    def minus_laplacian(self, r):
        """-(p'' + (m - 1) p' / r); zero on the harmonic tail."""
        r = np.abs(np.asarray(r, dtype=float))
        s = r * r
        lap = np.zeros_like(r)
        # a_k r^(2k) contributes a_k 2k (2k - 2 + m) r^(2k - 2)
        for k in range(len(self.coeffs) - 1, 0, -1):
            lap = lap * s + self.coeffs[k] * 2 * k * (2 * k - 2 + self.m)
        return np.where(r < self.r_cap, -lap, 0.0)


def _slab_cap(d: int, p0: float, a5: float, a6: float) -> np.ndarray:
    """Cap sum_k a_k r^(2k), k <= 6, matched to the tail up to the third derivative at r = 3."""
    R = 3.0
    e = 3.0 - d
    c = 3.0 ** (d - 4)
    tail = np.array([c * R ** e, c * e * R ** (e - 1), c * e * (e - 1) * R ** (e - 2),
                     c * e * (e - 1) * (e - 2) * R ** (e - 3)])

    def jets(k):
        # value and first three derivatives of r^(2k) at R
        n = 2 * k
        out, coef = [], 1.0
        for j in range(4):
            out.append(coef * R ** (n - j))
            coef *= n - j
        return np.array(out)

    rhs = tail - p0 * jets(0) - a5 * jets(5) - a6 * jets(6)
    A = np.stack([jets(k) for k in (1, 2, 3, 4)], axis=1)
    return np.array([p0, *np.linalg.solve(A, rhs), a5, a6])


# admissible (p0, a5, a6) from a grid search minimizing sup |f0'| with p(B_1) at least
# 0.005 inside (2/3, 3/4)
_SLAB_CAPS = {4: (0.742, 1e-5, -2e-7), 5: (0.745, 1e-5, -6e-7), 6: (0.745, 1.1e-4, -4e-6)}


def slab_cap_admissible(sp: SlabProfile) -> bool:
    r = np.linspace(1e-6, sp.r_cap - 1e-9, 3001)
    pv = sp.p(r)
    ml = sp.minus_laplacian(r)
    return bool(np.all(np.diff(pv) < 0) and np.all(ml[:-1] > 0)
                and 2 / 3 < sp.p(1.0) and sp.p(0.0) < 0.75)


def build_slab_profile(d: int) -> SlabProfile:
    """Radially decreasing p with -Lap p > 0 on r < 3 and p(B_1) inside (2/3, 3/4)."""
    if d < 4:
        raise ValueError("the slab construction needs d >= 4")
    if d in _SLAB_CAPS:
        sp = SlabProfile(d=d, coeffs=_slab_cap(d, *_SLAB_CAPS[d]))
        if slab_cap_admissible(sp):
            return sp
    for p0 in np.linspace(0.70, 0.745, 10):
        for a5 in np.linspace(-2e-4, 2e-4, 21):
            for a6 in np.linspace(-4e-6, 4e-6, 21):
                sp = SlabProfile(d=d, coeffs=_slab_cap(d, p0, a5, a6))
                if slab_cap_admissible(sp):
                    return sp
    raise ValueError("no admissible cap for this dimension")


def slab_base_profile(sp: SlabProfile) -> ReactionProfile:
    """f0 with f0(p(r)) = -Lap p(r) on [1/3, p(0)], linear decay to 0 on [p(0), 1]."""
    r = np.linspace(0.0, 3.0, 30001)
    pv = sp.p(r)[::-1]
    fv = sp.minus_laplacian(r)[::-1]
    fv[0] = 0.0
    p_top, f_top = pv[-1], fv[-1]

    def fn(u):
        u = np.asarray(u, dtype=float)
        inside = np.interp(u, pv, fv, left=0.0, right=f_top)
        above = f_top * (1.0 - u) / (1.0 - p_top)
        return np.where(u < 1.0 / 3.0, 0.0, np.where(u <= p_top, inside, above))

    return make_profile("ignition", fn, {"theta0": 1.0 / 3.0, "p_top": float(p_top)},
                        name=f"slab_f0(d={sp.d})")


def build_slab_field(d_eff: int, M: float, K: float | None = None) -> tuple[ReactionField, SlabProfile]:
    """Ignition field with an unstable-looking tube equilibrium p(|x~|) boosted by M.

    Coordinates are (x1, r) with r the distance to the axis in R^(d-1).
    """
    sp = build_slab_profile(d_eff)
    f0 = slab_base_profile(sp)

    def p_of(coords):
        return sp.p(coords[..., 1])

    K_est = f0.lipschitz_K + M * max(sp.p(0.0) - 0.5, 0.0)
    field = ReactionField(base=f0, dim=d_eff, equilibrium=p_of, boost=M,
                          lipschitz_K=K if K is not None else K_est,
                          name=f"slab(d={d_eff},M={M:g})", meta={"M": M, "d": d_eff})
    return field, sp
