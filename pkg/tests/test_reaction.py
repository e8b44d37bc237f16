import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.reaction import (ReactionField, alpha_f, annuli_modulation, bistable, build_annuli_field,
                               build_slab_field, build_slab_profile, build_terrace_profile, check_class_F,
                               eval_field, homogeneous, ignition, kpp, load_profile_csv, monostable,
                               parse_profile_spec, slab_base_profile, smoothstep, tabulated)

U = np.linspace(0.0, 1.0, 2001)


def test_ignition_vanishes_below_threshold(ign):
    assert np.all(ign(U[U <= 0.25]) == 0.0)
    assert np.all(ign(U[(U > 0.25) & (U < 1.0)]) > 0.0)
    assert ign(np.array([1.0]))[0] == 0.0


def test_ignition_formula(ign):
    u = np.array([0.3, 0.5, 0.9])
    assert np.allclose(ign(u), 2.0 * (u - 0.25) * (1.0 - u), rtol=0, atol=1e-15)


@pytest.mark.parametrize("theta", [0.1, 0.25, 0.4])
def test_bistable_sign_pattern(theta):
    f = bistable(theta)
    inner = U[(U > 0) & (U < 1)]
    vals = f(inner)
    assert np.all(vals[inner < theta] < 0)
    assert np.all(vals[inner > theta] > 0)
    assert f.theta0 == theta


def test_evaluation_clamps_outside_unit_interval(kpp_profile):
    assert np.all(kpp_profile(np.array([-0.5, 1.5])) == 0.0)


@pytest.mark.parametrize("spec, kind, probe, expect", [
    ("ignition:theta0=0.25,rate=2", "ignition", 0.5, 2 * 0.25 * 0.5),
    ("kpp:rate=3", "kpp", 0.5, 0.75),
    ("bistable:theta0=0.3", "bistable", 0.5, 0.5 * 0.5 * 0.2),
    ("monostable:rate=1,b=3", "monostable", 0.5, 0.25 * 2.5),
])
def test_parse_profile_spec(spec, kind, probe, expect):
    p = parse_profile_spec(spec)
    assert p.kind == kind
    assert p(np.array([probe]))[0] == pytest.approx(expect, rel=1e-12)


def test_parse_profile_spec_rejects_unknown():
    with pytest.raises(ValueError):
        parse_profile_spec("arrhenius:E=3")


def test_csv_profile_roundtrip(tmp_path):
    path = tmp_path / "prof.csv"
    path.write_text("u,f0\n0,0\n0.5,0.25\n1,0\n")
    p = load_profile_csv(path)
    assert p(np.array([0.25, 0.5, 0.75])) == pytest.approx([0.125, 0.25, 0.125])
    assert parse_profile_spec(f"csv:{path}")(np.array([0.5]))[0] == pytest.approx(0.25)


@pytest.mark.parametrize("header, rows", [("x,y", "0,0\n1,0\n"), ("u,f0", "0,0.1\n1,0\n")])
def test_csv_profile_validation(tmp_path, header, rows):
    path = tmp_path / "bad.csv"
    path.write_text(f"{header}\n{rows}")
    with pytest.raises(ValueError):
        load_profile_csv(path)


def test_tabulated_requires_increasing_samples():
    with pytest.raises(ValueError):
        tabulated([0.0, 0.6, 0.5, 1.0], [0, 1, 1, 0])


def test_lipschitz_estimate_kpp():
    # sup |f'| of rate u(1-u) is rate, attained at 0 and 1
    assert kpp(3.0).lipschitz_K == pytest.approx(3.0, rel=1e-3)
    assert kpp(0.2).lipschitz_K == 1.0  # floored at 1


def test_zero_zone(ign):
    assert ign.zero_zone == pytest.approx(0.25, abs=2e-4)
    assert kpp(1.0).zero_zone == 0.0


@given(st.floats(0.1, 10.0), st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_scaled_profile_is_multiple(factor, u):
    f = ignition(0.3, 1.5)
    g = f.scaled(factor)
    assert g(np.array([u]))[0] == pytest.approx(factor * f(np.array([u]))[0], rel=1e-12, abs=1e-15)


@given(st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_terrace_halves_are_rescaled_copies(v):
    f = build_terrace_profile(64.0, 0.5)
    lower = f(np.array([0.5 * v]))[0]
    upper = f(np.array([0.5 + 0.5 * v]))[0]
    assert upper == pytest.approx(0.5 * lower, abs=1e-12)


def test_terrace_dead_zone():
    f = build_terrace_profile(64.0, 2.0)
    assert np.all(f(np.array([0.0, 0.25, 0.5, 0.75, 1.0])) == 0.0)


def test_field_modulation_and_bounds(ign):
    field = ReactionField(base=ign, dim=1, modulation=lambda c: 1.0 + c[..., 0], bounds=(ign, ign.scaled(3)))
    coords = np.array([[0.0], [2.0]])
    assert field.evaluate(coords, np.array([0.5, 0.5])) == pytest.approx([0.25, 0.75])
    assert eval_field(field, [1.0], 0.5) == pytest.approx(0.5)


def test_field_rejects_two_mechanisms(ign):
    with pytest.raises(ValueError):
        ReactionField(base=ign, modulation=lambda c: 1.0, equilibrium=lambda c: 0.7)


def test_signed_extension(ign):
    field = homogeneous(ign, signed_extension=True, lipschitz_K=2.0)
    vals = field.evaluate(np.zeros((2, 1)), np.array([-0.1, 1.1]))
    assert vals == pytest.approx([0.2, -0.2])


def test_alpha_f_matches_quadratic_root(ign):
    # first u with 2 (u - 1/4)(1 - u) > zeta u
    zeta = 0.1
    b, c = -(2.5 - zeta), 0.5
    root = (-b - math.sqrt(b * b - 8 * c)) / 4  # smaller root of 2u^2 + b u + c
    field = homogeneous(ign)
    assert alpha_f(field, [0.0], zeta) == pytest.approx(root, abs=2e-4)


def test_class_F_membership(ign):
    field = homogeneous(ign)
    rep = check_class_F(field, zeta=0.05, eta=0.0, theta=0.2)
    assert rep.member and rep.theta_ok and not rep.vacuous
    rep2 = check_class_F(homogeneous(kpp(1.0)), zeta=0.05, eta=0.0, theta=0.1, theta0=0.5)
    assert not rep2.theta_ok


@pytest.mark.parametrize("d", [4, 5, 6])
def test_slab_profile_shape(d):
    sp = build_slab_profile(d)
    r = np.linspace(0.0, 2.999, 3000)
    assert np.all(np.diff(sp.p(r)) < 0)
    assert np.all(sp.minus_laplacian(r[1:]) > 0)
    assert 2 / 3 < sp.p(1.0) and sp.p(0.0) < 0.75


@pytest.mark.parametrize("d", [4, 5, 6])
def test_slab_profile_matches_tail_to_third_order(d):
    sp = build_slab_profile(d)
    # one-sided derivatives of the cap at r = 3 against the closed-form tail
    coef = np.zeros(2 * len(sp.coeffs) - 1)
    coef[::2] = sp.coeffs
    cap = np.polynomial.Polynomial(coef)
    e, c = 3.0 - d, 3.0 ** (d - 4)
    tail = [c * 3 ** e, c * e * 3 ** (e - 1), c * e * (e - 1) * 3 ** (e - 2),
            c * e * (e - 1) * (e - 2) * 3 ** (e - 3)]
    for j in range(4):
        assert cap.deriv(j)(3.0) == pytest.approx(tail[j], rel=1e-9, abs=1e-12)


def test_slab_profile_rejects_low_dimension():
    with pytest.raises(ValueError):
        build_slab_profile(3)


def test_slab_tail_is_harmonic():
    sp = build_slab_profile(4)
    r = np.linspace(3.5, 20, 50)
    h = 1e-4
    d2 = (sp.p(r + h) - 2 * sp.p(r) + sp.p(r - h)) / h ** 2
    d1 = (sp.p(r + h) - sp.p(r - h)) / (2 * h)
    assert np.max(np.abs(d2 + (sp.m - 1) * d1 / r)) < 1e-5


def test_slab_base_profile_balances_equilibrium():
    sp = build_slab_profile(4)
    f0 = slab_base_profile(sp)
    r = np.linspace(0.0, 2.9, 200)
    # p is an equilibrium of Lap p + f0(p) = 0 inside the cap
    assert np.max(np.abs(f0(sp.p(r)) - sp.minus_laplacian(r))) < 1e-3
    assert f0.theta0 == pytest.approx(1 / 3)


def test_slab_field_boost_only_between_half_and_p():
    field, sp = build_slab_field(4, 100.0)
    coords = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    p0 = float(sp.p(0.0))
    u = np.array([0.45, 0.6, p0 + 0.01])
    base = field.base(u)
    extra = field.evaluate(coords, u) - base
    assert extra[0] == 0.0 and extra[2] == 0.0
    assert extra[1] == pytest.approx(100.0 * 0.1 * (p0 - 0.6))


def test_annuli_modulation_levels():
    r = np.array([8.0, 16.0 + 3.0, 16.0 + 4.0, 12.0])
    a = annuli_modulation(r, 20.0, 7)
    assert a[0] == 20.0 and a[1] == 20.0 and a[2] == 1.0 and a[3] == 1.0


def test_annuli_field_bounds():
    field = build_annuli_field(10.0, 5)
    lo, hi = field.bounds
    assert hi(np.array([0.75]))[0] == pytest.approx(10 * lo(np.array([0.75]))[0])
    with pytest.raises(ValueError):
        build_annuli_field(0.5, 5)


@given(st.floats(-2.0, 3.0))
@settings(max_examples=50, deadline=None)
def test_smoothstep_range_and_symmetry(t):
    s = float(smoothstep(t))
    assert 0.0 <= s <= 1.0
    assert s + float(smoothstep(1.0 - t)) == pytest.approx(1.0)
