import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from frontlab.diagnostics import (BesselEnvelope, Lambda_h, WidthRecorder, WidthTrace, Y_h_y, Z_y, component_count,
                                  crossing_position, dilate, distance_to, envelope_speeds, front_position,
                                  global_mean_speed_check, spreading_speed_fit, unit_sphere_area,
                                  weighted_reaction_integral, width_J, width_L, width_L_high, width_L_pair)
from frontlab.reaction import ReactionField, kpp
from frontlab.solver import GridSpec, GridState

from oracles import widths, y_value


def _state(u, dx=1.0):
    if u.ndim == 1:
        g = GridSpec("line", ((0.0, dx * (u.size - 1)),), dx)
    else:
        g = GridSpec("plane", ((0.0, dx * (u.shape[0] - 1)), (0.0, dx * (u.shape[1] - 1))), dx)
    return GridState(0.0, u, g)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.1, 0.25, 0.4]))
@settings(max_examples=25, deadline=None)
def test_widths_match_all_pairs_oracle(seed, eps):
    rng = np.random.default_rng(seed)
    u = rng.random((12, 9))
    s = _state(u, 0.5)
    c = s.grid.coords()
    L, H, J, P = widths(c, u, eps)
    assert width_L(s, eps) == pytest.approx(L, rel=1e-12)
    assert width_L_high(s, 1 - eps) == pytest.approx(H, rel=1e-12)
    assert width_J(s, eps) == pytest.approx(J, rel=1e-12)
    assert width_L_pair(s, eps, 0.9) == pytest.approx(P, rel=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 0.3))
@settings(max_examples=25, deadline=None)
def test_distance_transform_matches_scipy(seed, density):
    rng = np.random.default_rng(seed)
    mask = rng.random((23, 17)) < density
    mask[0, 0] = True
    expect = ndimage.distance_transform_edt(~mask) * 0.5
    assert np.allclose(distance_to(mask, 0.5), expect, atol=1e-12)


def test_distance_transform_1d_and_empty():
    m = np.zeros(7, dtype=bool)
    m[2] = True
    assert distance_to(m, 0.5) == pytest.approx([1.0, 0.5, 0, 0.5, 1.0, 1.5, 2.0])
    assert np.all(np.isinf(distance_to(np.zeros(4, dtype=bool), 1.0)))
    with pytest.raises(ValueError):
        distance_to(np.zeros((2, 2, 2), dtype=bool), 1.0)


def test_dilate():
    m = np.zeros(9, dtype=bool)
    m[4] = True
    assert dilate(m, 1.0, 0.5).sum() == 5


def test_width_sentinels():
    s = _state(np.zeros(10))
    assert width_L(s, 0.25) == 0.0  # nothing above eps
    s = _state(np.full(10, 0.4))
    assert width_L(s, 0.25) == math.inf  # nothing above 1 - eps


@pytest.mark.parametrize("fn, eps", [(width_L, 0.6), (width_L_high, 0.3), (width_J, 0.5)])
def test_width_eps_domain(fn, eps):
    with pytest.raises(ValueError):
        fn(_state(np.zeros(4)), eps)


def test_width_of_linear_ramp():
    # u = 1 - x / 10 on nodes x = 0.1 k; levels chosen between nodes
    x = np.linspace(0, 10, 101)
    s = _state(1 - x / 10, 0.1)
    # {u >= 0.205} ends at node 7.9, {u >= 0.795} at node 2.0
    assert width_L(s, 0.205) == pytest.approx(5.9)
    # {u < 0.795} starts at 2.1, {u < 0.205} at 8.0
    assert width_L_high(s, 0.795) == pytest.approx(5.9)


# --- Bessel envelope -------------------------------------------------------

@pytest.mark.parametrize("zeta", [0.01, 0.5, 2.0])
def test_envelope_d1_is_cosh(zeta):
    env = BesselEnvelope(zeta, 1)
    r = np.linspace(0, 50, 501)
    assert np.allclose(env.psi(r), np.cosh(math.sqrt(zeta) * r), rtol=1e-9, atol=0)


@pytest.mark.parametrize("zeta", [0.05, 0.5, 2.0])
def test_envelope_d3_is_sinhc(zeta):
    env = BesselEnvelope(zeta, 3)
    k = math.sqrt(zeta)
    r = np.linspace(1e-3, 50, 500)
    # compare in logs: log(sinh(kr)/(kr)) is stable for large kr
    ref = k * r + np.log1p(-np.exp(-2 * k * r)) - math.log(2) - np.log(k * r)
    assert np.max(np.abs(env.log_psi(r) - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-6


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_envelope_log_derivative_tends_to_sqrt_zeta(d):
    zeta = 0.3
    env = BesselEnvelope(zeta, d)
    r = 50 / math.sqrt(zeta)
    # psi'/psi = sqrt(zeta) - (d - 1) / (2 r) + O(r^-2), approached from below
    rr = np.linspace(1.0, r, 400)
    ld = env.log_derivative(rr)
    assert np.all(np.diff(ld) > 0) and np.all(ld < math.sqrt(zeta))
    assert abs(float(env.log_derivative(np.array([r]))[0]) - math.sqrt(zeta) + (d - 1) / (2 * r)) < 1e-3


def test_envelope_d2_matches_scipy_i0():
    from scipy.special import i0
    env = BesselEnvelope(1.0, 2)
    r = np.linspace(0, 20, 41)
    assert np.allclose(env.psi(r), i0(r), rtol=1e-6)


@given(st.floats(0.0, 80.0), st.sampled_from([1, 2, 3]))
@settings(max_examples=40, deadline=None)
def test_envelope_inverse_log_roundtrip(r, d):
    env = BesselEnvelope(0.2, d)
    assert float(env.inverse_log(env.log_psi(np.array([r])))[0]) == pytest.approx(r, abs=1e-6, rel=1e-6)


def test_envelope_rejects_bad_parameters():
    with pytest.raises(ValueError):
        BesselEnvelope(0.0, 2)


def test_envelope_speeds():
    sp = envelope_speeds(1.0, 2.0)
    assert sp.zeta == pytest.approx(1 / 8)
    assert sp.zeta_prime == pytest.approx(1 / 8 + 1 / 16)
    assert sp.c_Z == pytest.approx(0.75 + 0.5 * math.sqrt(3 / 16))


# --- Z, Y, Lambda ----------------------------------------------------------

@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_Y_matches_node_scan(seed):
    rng = np.random.default_rng(seed)
    u = rng.random((20, 14)) ** 3
    u[rng.integers(0, 20), rng.integers(0, 14)] = 0.95
    s = _state(u, 0.5)
    env = BesselEnvelope(0.1, 2)
    c = s.grid.coords()
    for y in ([0.0, 0.0], [4.5, 3.0], [9.5, 6.5]):
        ref = y_value(c, u, y, 0.0, env.log_psi, env.inverse_log)
        assert Y_h_y(s, y, 0.0, env) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_Z_is_distance_to_top_set():
    u = np.zeros((10, 10))
    u[7, 3] = 0.95
    s = _state(u, 0.5)
    assert Z_y(s, [0.5, 1.5], 0.1) == pytest.approx(math.hypot(3.0, 0.0))
    assert Z_y(_state(np.zeros((4, 4))), [0.0, 0.0]) == math.inf


def test_Lambda_full_stride_matches_probe_scan(rng):
    u = rng.random((16, 12)) ** 4
    u[3, 4] = u[10, 9] = 0.97
    s = _state(u, 0.5)
    env = BesselEnvelope(0.2, 2)
    lam = Lambda_h(s, 0.0, env, stride=1)
    c = s.grid.coords()
    best = -math.inf
    for i in range(16):
        for j in range(12):
            y = c[i, j]
            best = max(best, Z_y(s, y) - y_value(c, u, y, 0.0, env.log_psi, env.inverse_log))
    assert lam.value == pytest.approx(best, rel=1e-9, abs=1e-9)
    assert lam.probes == 16 * 12


def test_Lambda_sentinel():
    env = BesselEnvelope(0.2, 1)
    assert math.isnan(Lambda_h(_state(np.full(8, 0.5)), 0.0, env).value)


# --- fronts, traces, speeds --------------------------------------------------

def test_crossing_position_interpolates():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    u = np.array([1.0, 0.8, 0.2, 0.0])
    assert crossing_position(x, u, 0.5) == pytest.approx(1.5)


def test_front_position_modes():
    u = np.zeros((9, 9))
    u[:3, :5] = 1.0
    s = _state(u, 1.0)
    assert front_position(s, 0.5) == 2.0
    assert front_position(s, 0.5, "radial", center=[0.0, 0.0]) == pytest.approx(math.hypot(2, 4))
    assert math.isnan(front_position(_state(np.zeros(5)), 0.5))


def test_trace_csv_roundtrip(tmp_path):
    g = GridSpec("line", ((0.0, 10.0),), 0.5)
    rec = WidthRecorder([0.1, 0.7], envelope=BesselEnvelope(0.1, 1), origin=[0.0])
    for t in (0.0, 1.0):
        rec(GridState(t, np.clip(1 - g.axes[0] / (5 + t), 0, 1), g))
    rec.trace.to_csv(tmp_path / "t.csv")
    back = WidthTrace.from_csv(tmp_path / "t.csv")
    assert len(back.records) == 4
    t, L = back.column("L_low", 0.1)
    assert np.array_equal(t, [0.0, 1.0]) and np.all(np.isfinite(L))
    _, low = back.column("L_low", 0.7)
    assert np.all(np.isnan(low))
    (tmp_path / "bad.csv").write_text("a,b\n")
    with pytest.raises(ValueError):
        WidthTrace.from_csv(tmp_path / "bad.csv")


def _translating(c, times, x):
    g = GridSpec("line", ((x[0], x[-1]),), x[1] - x[0])
    return [GridState(t, np.clip(1.0 - (x - c * t) / 4.0, 0.0, 1.0), g) for t in times]


def test_spreading_speed_fit_on_translating_ramp():
    x = np.linspace(0, 100, 1001)
    rec = WidthRecorder([0.25], origin=[0.0])
    for s in _translating(1.5, np.arange(0, 41, 2.0), x):
        rec(s)
    assert spreading_speed_fit(rec.trace, 0.25) == pytest.approx(1.5, abs=0.01)
    with pytest.raises(ValueError):
        spreading_speed_fit(rec.trace, 0.25, (100.0, 200.0))


@pytest.mark.parametrize("lo, hi, ok", [(1.2, 1.8, True), (1.8, 2.5, False), (0.5, 1.0, False)])
def test_global_mean_speed_check_brackets(lo, hi, ok):
    x = np.linspace(0, 100, 1001)
    snaps = _translating(1.5, np.arange(0, 41, 2.0), x)
    rep = global_mean_speed_check(snaps, 0.1, lo, hi, 0.05, 20.0)
    assert rep.pairs == 11
    assert rep.ok is ok


def test_component_count():
    m = np.zeros((6, 6), dtype=bool)
    m[0, 0] = m[2, 2] = m[2, 3] = m[5, 5] = True
    m[4, 5] = True
    assert component_count(m) == 3
    diag = np.eye(4, dtype=bool)
    assert component_count(diag) == 4  # 4-connectivity


@pytest.mark.parametrize("d, area", [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi ** 2)])
def test_unit_sphere_area(d, area):
    assert unit_sphere_area(d) == pytest.approx(area)


def test_weighted_reaction_integral_constant():
    # f = 1 on a box: integral of |x|^(2 - 3) over a cylinder section, checked against a fine quadrature
    g = GridSpec("cylinder", ((-2.0, 2.0), (0.0, 2.0)), 0.02, d_eff=3)
    field = ReactionField(base=kpp(1.0), dim=3, custom=lambda c, u: np.ones(c.shape[:-1]))
    val = weighted_reaction_integral(GridState(0.0, np.zeros(g.shape), g), field, 3)
    from scipy import integrate
    ref = integrate.dblquad(lambda r, x: 2 * math.pi * r / math.hypot(x, r), -2, 2, 0, 2)[0]
    assert val == pytest.approx(ref, rel=5e-3)


# --- spec examples for Z, Y, Lambda and speeds --------------------------------

def test_Z_of_a_front():
    # top set {u >= 0.9} is x >= 12.3 on nodes 0.1 apart: Z_y = max(0, 12.3 - y) exactly at nodes
    x = np.linspace(0, 30, 301)
    s = _state(np.where(x >= 12.25, 1.0, 0.0), 0.1)
    for y in (0.0, 5.0, 12.3, 20.0):
        assert Z_y(s, [y]) == pytest.approx(max(0.0, 12.3 - y), abs=1e-9)


def test_Z_of_ones_is_zero():
    assert Z_y(_state(np.ones(10)), [3.0]) == 0.0


def test_Y_equality_case():
    env = BesselEnvelope(0.2, 2)
    g = GridSpec("plane", ((0.0, 20.0), (0.0, 20.0)), 0.25)
    y = np.array([10.0, 10.0])
    r = np.sqrt(((g.coords() - y) ** 2).sum(-1))
    u = env.psi(r) / float(env.psi(np.array([10.0]))[0])
    assert Y_h_y(GridState(0.0, u, g), y, 0.0, env) == pytest.approx(10.0, abs=g.dx)


def test_Y_sentinel_when_below_h():
    assert Y_h_y(_state(np.full(10, 0.1)), [0.0], 0.2, BesselEnvelope(0.2, 1)) == math.inf


def test_Lambda_of_ones_is_nonpositive():
    res = Lambda_h(_state(np.ones((10, 10)), 0.5), 0.0, BesselEnvelope(0.2, 2), stride=1)
    assert res.value <= 0.0


def test_Y_rejects_points_off_grid():
    with pytest.raises(ValueError):
        Z_y(_state(np.ones(10)), [100.0])


@pytest.fixture(scope="module")
def ignition_run():
    from frontlab.solver import bump_W, run
    from frontlab.reaction import homogeneous, ignition
    from frontlab.frontspeed import shoot_front_speed
    f = ignition(0.25, 2.0)
    g = GridSpec("line", ((0.0, 150.0),), 0.1)
    c0 = shoot_front_speed(f).speed
    env = BesselEnvelope(envelope_speeds(c0, c0).zeta_prime, 1)
    snaps = []
    run(bump_W(g, 5.0, f, radial=False), homogeneous(f), 120.0, observers=[snaps.append], snapshot_every=2.0)
    return snaps, env, c0


def test_Y_minus_Z_bounded_on_ignition_run(ignition_run):
    snaps, env, _ = ignition_run
    # the seed plateau sits below 1 - eps0, so Z starts as a sentinel
    gap = np.array([Y_h_y(s, [0.0], 0.0, env) - Z_y(s, [0.0]) for s in snaps])
    gap = gap[np.isfinite(gap)]
    assert gap.size > 50
    assert gap.max() <= gap[0] + 2.0


def test_Lambda_bounded_on_ignition_run(ignition_run):
    snaps, env, _ = ignition_run
    lam = np.array([Lambda_h(s, 0.0, env).value for s in snaps])
    lam = lam[np.isfinite(lam)]
    assert lam.size > 50
    first = lam[:3]
    assert lam.min() >= first.min() - 1.0
    assert lam.max() <= first.max() + 2.0


def test_ignition_run_global_mean_speed(ignition_run):
    snaps, _, c0 = ignition_run
    # tau = half the run; the slack 0.1 c0 tau has to cover the 0.1-0.9 front width
    rep = global_mean_speed_check(snaps, 0.1, c0, c0, 0.1 * c0, 60.0, t_min=10.0)
    assert rep.pairs > 0 and rep.ok


def test_gms_trivial_on_ones():
    g = GridSpec("line", ((0.0, 10.0),), 0.5)
    snaps = [GridState(t, np.ones(g.shape), g) for t in (0.0, 1.0, 2.0)]
    rep = global_mean_speed_check(snaps, 0.25, 5.0, 0.1, 0.0, 1.0)
    assert rep.pairs == 2 and rep.ok


def test_speed_fit_of_stationary_state():
    g = GridSpec("line", ((0.0, 10.0),), 0.5)
    rec = WidthRecorder([0.25], origin=[0.0])
    for t in range(12):
        rec(GridState(float(t), np.where(g.axes[0] < 4.0, 1.0, 0.0), g))
    assert spreading_speed_fit(rec.trace, 0.25, (0.0, 11.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError, match="at least"):
        spreading_speed_fit(rec.trace, 0.25, (0.0, 5.0))


@pytest.mark.parametrize("fn, value, eps, expect", [
    (width_L, 1.0, 0.25, 0.0),
    (width_L, 0.25, 0.25, math.inf),
    (width_L_high, 0.0, 0.75, 0.0),
    (width_J, 0.0, 0.25, 0.0),
    (width_J, 1.0, 0.25, 0.0),
])
def test_width_constant_fields(fn, value, eps, expect):
    assert fn(_state(np.full((6, 5), value)), eps) == expect


@pytest.mark.parametrize("fn, args", [(width_L, (0.25,)), (width_L_high, (0.75,)), (width_L_pair, (0.25, 0.75))])
def test_ramp_width_is_half_length(fn, args):
    D, dx = 10.0, 0.1
    x = np.arange(-5.0, 20.0 + dx / 2, dx)
    s = _state(np.clip(1 - x / D, 0, 1), dx)
    assert fn(s, *args) == pytest.approx(D / 2, abs=dx)


def test_J_of_half_plateau():
    D, dx = 20.0, 0.1
    x = np.arange(-10.0, 30.0 + dx / 2, dx)
    u = np.where(x < 0, 1.0, np.where(x <= D, 0.5, 0.0))
    assert width_J(_state(u, dx), 0.25) == pytest.approx(D / 2, abs=dx)


def test_width_pair_domain():
    with pytest.raises(ValueError):
        width_L_pair(_state(np.zeros(4)), 0.6, 0.4)


@pytest.mark.parametrize("zeta, d, r, expect", [
    (4.0, 1, 1.0, math.cosh(2.0)),
    (1.0, 3, 1.0, math.sinh(1.0)),
])
def test_envelope_point_values(zeta, d, r, expect):
    assert float(BesselEnvelope(zeta, d).psi(np.array([r]))[0]) == pytest.approx(expect, rel=1e-6)


def test_envelope_log_derivative_d1_at_50():
    assert float(BesselEnvelope(1.0, 1).log_derivative(np.array([50.0]))[0]) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_envelope_starts_flat(d):
    env = BesselEnvelope(0.7, d)
    assert float(env.psi(np.array([0.0]))[0]) == pytest.approx(1.0)
    assert abs(float(env.log_derivative(np.array([0.0]))[0])) < 1e-9
    r = np.linspace(0.01, 30, 300)
    assert np.all(env.psi(r) > 1) and np.all(env.log_derivative(r) > 0)
