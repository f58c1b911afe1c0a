import math

import numpy as np
import pytest

import bourgen as bg
from bourgen.bour import _stage_rhs
from bourgen.errors import (
    ConfigError,
    NonConstantVolumeError,
    RadicandNegativeError,
    RectExitError,
    StepTooLargeError,
)


def U_catenoid(lo=-2.0, hi=2.0):
    return bg.GeneratrixMetric.from_expression("sqrt(s^2+1)", (lo, hi))


# ---------------------------------------------------------------------------
# ode_rhs
# ---------------------------------------------------------------------------

def test_rhs_rotational_reference(rotational_frame):
    U = U_catenoid()
    for eps in (1, -1):
        params = bg.BourParams(m=1.0, s_range=(-2.0, 2.0), step=0.01,
                               epsilon=eps)
        got = bg.ode_rhs(0.0, 0.0, U, params, rotational_frame)
        assert np.isclose(got, eps * 1.0, atol=1e-14)


def test_rhs_helicoid_degenerate(helicoidal_frame):
    U = U_catenoid(0.5, 2.0)
    params = bg.BourParams(m=1.0, s_range=(0.5, 2.0), step=0.01)
    for s in (0.5, 1.0, 1.7, 2.0):
        assert bg.ode_rhs(s, 0.4, U, params, helicoidal_frame) == 0.0


def test_rhs_at_generatrix_critical_point(helicoidal_frame):
    # U'(0) = 0: the radicand reduces to |grad omega|^2 and
    # theta' = eps * |grad theta|
    U = bg.GeneratrixMetric.from_expression("sqrt(s^2+2)", (-1.0, 1.0))
    params = bg.BourParams(m=1.0, s_range=(-1.0, 1.0), step=0.01)
    w = math.sqrt(2.0)
    got = bg.ode_rhs(0.0, 0.3, U, params, helicoidal_frame)
    expected = math.sqrt(helicoidal_frame.grad_theta_sq(w, 0.3))
    assert np.isclose(got, expected, atol=1e-13)


def test_rhs_radicand_negative(helicoidal_frame):
    U = bg.GeneratrixMetric.from_expression("sqrt(s^2+2)", (0.5, 2.0))
    params = bg.BourParams(m=2.0, s_range=(0.5, 2.0), step=0.01)
    with pytest.raises(RadicandNegativeError) as exc:
        bg.ode_rhs(1.5, 0.0, U, params, helicoidal_frame)
    assert exc.value.s == 1.5
    assert exc.value.radicand < 0


def test_rhs_rect_exit(helicoidal_frame):
    U = U_catenoid(0.5, 2.0)
    params = bg.BourParams(m=1.0, s_range=(0.5, 2.0), step=0.01)
    frame = bg.builtin_frame(bg.SpaceSpec("euclidean_helicoidal", a=1.0),
                             omega_range=(1.01, 1.5))
    with pytest.raises(RectExitError):
        bg.ode_rhs(2.0, 0.0, U, params, frame)  # omega = sqrt(5) > 1.5
    with pytest.raises(StepTooLargeError):
        _stage_rhs(2.0, 0.0, U, params, frame)


# ---------------------------------------------------------------------------
# integrate_profile
# ---------------------------------------------------------------------------

def test_catenoid_profile(rotational_frame):
    U = U_catenoid()
    params = bg.BourParams(m=1.0, s_range=(-2.0, 2.0), step=0.01, epsilon=1,
                           anchor=0.0)
    profile = bg.integrate_profile(U, params, rotational_frame, 0.0)
    assert np.max(np.abs(profile.theta - np.arcsinh(profile.s))) < 1e-6
    assert np.allclose(profile.omega, np.cosh(profile.theta), atol=1e-6)


def test_helicoid_profile_is_ray(helicoidal_frame):
    U = U_catenoid(0.5, 2.0)
    params = bg.BourParams(m=1.0, s_range=(0.5, 2.0), step=0.005)
    theta0 = 0.3
    profile = bg.integrate_profile(U, params, helicoidal_frame, theta0)
    assert np.allclose(profile.theta, theta0, atol=1e-14)
    r = np.sqrt(profile.omega**2 - 1.0)
    assert np.allclose(profile.x1, r * math.cos(theta0), atol=1e-12)
    assert np.allclose(profile.x2, r * math.sin(theta0), atol=1e-12)


def test_profile_omega_constraint(bcv_member):
    # omega(x(s)) = m U(s) through the chart, not just by construction
    chart_w = np.array([bcv_member.frame.chart.volume_at((x, y))
                        for x, y in zip(bcv_member.x1, bcv_member.x2)])
    assert np.max(np.abs(chart_w - bcv_member.omega)) < 1e-8


def test_profile_unit_speed(catenoid_member, bcv_member):
    # finite-difference derivatives in the quotient metric: 1 +- 5e-4
    for member in (catenoid_member, bcv_member):
        chart = member.frame.chart
        q = bg.quotient_metric(chart)
        s = member.s
        d1 = np.gradient(member.x1, s)
        d2 = np.gradient(member.x2, s)
        speed = np.array([
            q.q11(member.x1[k], member.x2[k]) * d1[k] ** 2
            + 2 * q.q12(member.x1[k], member.x2[k]) * d1[k] * d2[k]
            + q.q22(member.x1[k], member.x2[k]) * d2[k] ** 2
            for k in range(1, len(s) - 1)])
        assert np.max(np.abs(speed - 1.0)) < 5e-4


def test_branch_mirror_symmetry(rotational_frame, bcv_frame):
    # built-in frames have theta-independent gradient norms, so the two
    # branches are exact mirrors about theta0
    cases = [
        (rotational_frame, U_catenoid(), (-2.0, 2.0), 0.0),
        (bcv_frame, bg.GeneratrixMetric.from_expression("sqrt(s^2+4)", (0.0, 1.0)),
         (0.0, 1.0), 0.25),
    ]
    for frame, U, s_range, theta0 in cases:
        thetas = {}
        for eps in (1, -1):
            params = bg.BourParams(m=1.0, s_range=s_range, step=0.01,
                                   epsilon=eps)
            thetas[eps] = bg.integrate_profile(U, params, frame, theta0).theta
        assert np.max(np.abs((thetas[1] - theta0) + (thetas[-1] - theta0))) < 1e-12


def test_rk4_convergence_order(rotational_frame):
    U = U_catenoid()
    errs = []
    for step in (0.04, 0.02):
        params = bg.BourParams(m=1.0, s_range=(-2.0, 2.0), step=step,
                               epsilon=1, anchor=0.0)
        profile = bg.integrate_profile(U, params, rotational_frame, 0.0)
        errs.append(np.max(np.abs(profile.theta - np.arcsinh(profile.s))))
    ratio = errs[0] / errs[1]
    assert 12.0 < ratio < 20.0


def test_euler_integrator_first_order(rotational_frame):
    U = U_catenoid()
    errs = []
    for step in (0.02, 0.01):
        params = bg.BourParams(m=1.0, s_range=(-2.0, 2.0), step=step,
                               epsilon=1, anchor=0.0, integrator="euler")
        profile = bg.integrate_profile(U, params, rotational_frame, 0.0)
        errs.append(np.max(np.abs(profile.theta - np.arcsinh(profile.s))))
    assert 1.7 < errs[0] / errs[1] < 2.3


def test_misaligned_anchor_keeps_grid_inside_range(rotational_frame):
    U = U_catenoid(-1.0, 1.0)
    params = bg.BourParams(m=1.0, s_range=(-1.0, 1.0), step=0.03, anchor=0.305)
    profile = bg.integrate_profile(U, params, rotational_frame, 0.0)
    assert profile.s[0] >= -1.0 - 1e-12
    assert profile.s[-1] <= 1.0 + 1e-12
    assert np.isclose(profile.s[profile.anchor_index], 0.305)
    assert np.isclose(profile.theta[profile.anchor_index], 0.0)


def test_integrate_rect_exit(helicoidal_frame):
    U = U_catenoid(0.5, 2.0)
    frame = bg.builtin_frame(bg.SpaceSpec("euclidean_helicoidal", a=1.0),
                             omega_range=(1.01, 1.8))
    params = bg.BourParams(m=1.0, s_range=(0.5, 2.0), step=0.005)
    with pytest.raises((RectExitError, StepTooLargeError)):
        bg.integrate_profile(U, params, frame, 0.0)


# ---------------------------------------------------------------------------
# vertical quadrature and member assembly
# ---------------------------------------------------------------------------

def test_vertical_shift_zero_for_helicoid(helicoid_member):
    assert np.max(np.abs(helicoid_member.V_samples)) == 0.0


def test_vertical_shift_zero_for_catenoid(catenoid_member):
    assert np.max(np.abs(catenoid_member.V_samples)) == 0.0


def test_vertical_shift_against_direct_quadrature(bcv_member):
    # independent path: finite-difference x' on the sample grid and a
    # trapezoid cumulative integral of -x_i' g_i3 / (m^2 U^2)
    chart = bcv_member.frame.chart
    s = bcv_member.s
    d1 = np.gradient(bcv_member.x1, s, edge_order=2)
    d2 = np.gradient(bcv_member.x2, s, edge_order=2)
    integrand = np.array([
        -(d1[k] * chart.g13(bcv_member.x1[k], bcv_member.x2[k])
          + d2[k] * chart.g23(bcv_member.x1[k], bcv_member.x2[k]))
        / bcv_member.omega[k] ** 2
        for k in range(len(s))])
    direct = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(s))])
    # the oracle is second order (FD derivatives + trapezoid), so its own
    # error dominates the comparison
    assert np.max(np.abs(direct - bcv_member.V_samples)) < 2e-4


def test_member_map_affine_in_t(bcv_member):
    s = 0.4
    p0 = bcv_member.map(s, 0.0)
    p1 = bcv_member.map(s, 1.0)
    p2 = bcv_member.map(s, 2.0)
    assert np.isclose(p1[2] - p0[2], 1.0 / bcv_member.m, atol=1e-14)
    assert np.isclose(p2[2] - p1[2], p1[2] - p0[2], atol=1e-14)
    assert p0[:2] == p1[:2] == p2[:2]


def test_member_json_roundtrip(tmp_path, bcv_member):
    path = tmp_path / "member.json"
    bcv_member.to_json(path)
    back = bg.SurfaceMember.from_json(path)
    assert back.m == bcv_member.m
    assert back.space == bcv_member.space
    for s in (0.05, 0.41, 0.93):
        a = np.array(bcv_member.map(s, 0.7))
        b = np.array(back.map(s, 0.7))
        assert np.allclose(a, b, atol=1e-10)


def test_params_validation():
    with pytest.raises(ConfigError):
        bg.BourParams(m=0.0, s_range=(0.0, 1.0), step=0.01)
    with pytest.raises(ConfigError):
        bg.BourParams(m=-2.0, s_range=(0.0, 1.0), step=0.01)
    with pytest.raises(ConfigError):
        bg.BourParams(m=1.0, s_range=(0.0, 1.0), step=0.2)
    with pytest.raises(ConfigError):
        bg.BourParams(m=1.0, s_range=(0.0, 1.0), step=0.01, epsilon=2)
    with pytest.raises(ConfigError):
        bg.BourParams(m=1.0, s_range=(1.0, 0.0), step=0.01)


def test_feasible_range(helicoidal_frame):
    U = bg.GeneratrixMetric.from_expression("sqrt(s^2+2)", (0.5, 2.0))
    full = bg.feasible_s_range(U, 1.0, helicoidal_frame, (0.5, 2.0), step=0.005)
    assert full == (0.5, 2.0)
    lo, hi = bg.feasible_s_range(U, 1.5, helicoidal_frame, (0.5, 2.0), step=0.005)
    assert lo == 0.5
    # radicand zero at sqrt(3.5/2.8125) ~ 1.1155, minus the pullback
    assert 0.95 < hi < 1.1155
    lo2, hi2 = bg.feasible_s_range(U, 2.0, helicoidal_frame, (0.5, 2.0), step=0.005)
    assert 0.55 < hi2 < math.sqrt(7.0 / 12.0)


# ---------------------------------------------------------------------------
# constant-volume members
# ---------------------------------------------------------------------------

def test_flat_cylinder(flat_chart):
    s = np.linspace(0.0, np.pi, 2001)
    curve = bg.LiftedCurve(u=s, x1=np.cos(s), x2=np.sin(s), x3=np.zeros_like(s))
    member = bg.constant_volume_member(flat_chart, curve)
    U = member.U
    assert U(1.0) == 1.0
    rep = bg.isometry_report(flat_chart, member, U,
                             (np.linspace(0.2, 2.9, 9), [0.0, 1.0]), tol=1e-6)
    assert rep.passed
    assert np.max(np.abs(member.V_samples)) < 1e-12


def test_constant_volume_not_one_rejected():
    chart = bg.AdaptedChart3(
        g11=lambda a, b: 1.0, g12=lambda a, b: 0.0, g13=lambda a, b: 0.0,
        g22=lambda a, b: 1.0, g23=lambda a, b: 0.0, g33=lambda a, b: 4.0,
        label="scaled-flat")
    s = np.linspace(0.0, 1.0, 101)
    curve = bg.LiftedCurve(u=s, x1=s, x2=np.zeros_like(s), x3=np.zeros_like(s))
    with pytest.raises(NonConstantVolumeError):
        bg.constant_volume_member(chart, curve)
    rescaled = bg.rescale_vertical(chart, 2.0)
    member = bg.constant_volume_member(rescaled, curve)
    assert np.isclose(member.map(0.5, 1.0)[2], 1.0, atol=1e-12)


def test_nonconstant_volume_rejected(helicoidal_chart):
    s = np.linspace(0.5, 1.5, 51)
    curve = bg.LiftedCurve(u=s, x1=s, x2=np.zeros_like(s), x3=np.zeros_like(s))
    with pytest.raises(NonConstantVolumeError):
        bg.constant_volume_member(helicoidal_chart, curve)
