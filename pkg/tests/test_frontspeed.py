import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.frontspeed import (ConvergenceError, NoFrontError, kpp_linear_speed, profile_speed,
                                 shoot_front_speed, speed_bounds)
from frontlab.reaction import ReactionField, bistable, build_terrace_profile, ignition, kpp, make_profile


@pytest.fixture(scope="module")
def ign_front(ign):
    return shoot_front_speed(ign)


@pytest.mark.parametrize("theta", [0.1, 0.25, 0.4])
def test_bistable_closed_form(theta):
    # cubic u(1 - u)(u - theta) has c = (1 - 2 theta) / sqrt(2)
    res = shoot_front_speed(bistable(theta))
    assert res.speed == pytest.approx((1 - 2 * theta) / math.sqrt(2), abs=1e-4)
    assert res.bracket[1] - res.bracket[0] <= 1e-6


def test_bistable_balanced_has_zero_speed():
    res = shoot_front_speed(bistable(0.5))
    assert res.speed == 0.0 and "zero_speed" in res.flags


def test_receding_front_is_rejected():
    with pytest.raises(NoFrontError):
        shoot_front_speed(bistable(0.7))


def test_ignition_speed_frozen(ign_front):
    # frozen from an independent shot at ds = 1e-4, tol 1e-8: 0.8155763
    assert ign_front.speed == pytest.approx(0.81558, abs=2e-5)


@given(st.floats(0.25, 9.0))
@settings(max_examples=6, deadline=None)
def test_speed_scales_with_square_root_of_gain(a):
    # x -> sqrt(a) x maps fronts of f to fronts of a f
    f = ignition(0.3, 1.0)
    c1 = shoot_front_speed(f).speed
    ca = shoot_front_speed(f.scaled(a)).speed
    assert ca == pytest.approx(math.sqrt(a) * c1, rel=2e-5)


def test_speed_below_two_sqrt_K(ign_front, ign):
    assert ign_front.speed <= 2 * math.sqrt(ign.lipschitz_K)


def test_profile_is_monotone_and_centred(ign_front):
    p = ign_front.profile
    assert np.all(np.diff(p.u) < 0)
    assert p(np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-6)
    assert p.position_of(0.5) == pytest.approx(0.0, abs=1e-6)
    s = np.array([-40.0, 40.0])
    assert p(s)[0] == pytest.approx(1.0, abs=1e-6) and p(s)[1] == pytest.approx(0.0, abs=1e-6)


def test_profile_solves_ode(ign_front, ign):
    p = ign_front.profile
    s = np.linspace(-5, 5, 401)
    h = 1e-3
    d2 = (p(s + h) - 2 * p(s) + p(s - h)) / h ** 2
    d1 = (p(s + h) - p(s - h)) / (2 * h)
    assert np.max(np.abs(d2 + ign_front.speed * d1 + ign(p(s)))) < 1e-2
    assert ign_front.residual < 1e-3


def test_shifted_profile(ign_front):
    p = ign_front.profile
    q = p.shifted(2.0)
    assert q(np.array([-2.0]))[0] == pytest.approx(0.5, abs=1e-6)


def test_kpp_linear_speed():
    assert kpp_linear_speed(kpp(1.0)) == pytest.approx(2.0, rel=1e-5)
    assert kpp_linear_speed(kpp(4.0)) == pytest.approx(4.0, rel=1e-5)


def test_profile_speed_dispatch(ign):
    c, flags = profile_speed(kpp(1.0))
    assert c == pytest.approx(2.0, rel=1e-5) and flags == ("kpp_linear",)
    assert profile_speed(ign)[0] == pytest.approx(0.81558, abs=2e-5)


def test_speed_bounds(ign):
    field = ReactionField(base=ign, modulation=lambda c: 1.5, bounds=(ign, ign.scaled(2.0)))
    sb = speed_bounds(field)
    assert sb.c1 == pytest.approx(math.sqrt(2) * sb.c0, rel=1e-5)
    with pytest.raises(ValueError):
        speed_bounds(ReactionField(base=ign))


def test_terrace_halves_have_sqrt_gain_ratio():
    f = build_terrace_profile(64.0, 0.5)
    lower = make_profile("tabulated", lambda v: 2 * f.fn(0.5 * v))
    upper = make_profile("tabulated", lambda v: 2 * f.fn(0.5 + 0.5 * v))
    cl, cu = shoot_front_speed(lower).speed, shoot_front_speed(upper).speed
    assert cu / cl == pytest.approx(math.sqrt(0.5), rel=1e-4)


def test_bisection_budget():
    with pytest.raises(ConvergenceError):
        shoot_front_speed(bistable(0.25), tol=1e-12, max_iter=3)
