import json
import math

import numpy as np
import pytest

import bourgen as bg
from bourgen.chart import invariant_pairing
from bourgen.errors import (
    DomainError,
    RankDeficiencyError,
    TransversalityError,
)
from bourgen.quotient import newton_invert


# ---------------------------------------------------------------------------
# quotient metric
# ---------------------------------------------------------------------------

def test_quotient_metric_reference_point(helicoidal_chart):
    q = bg.quotient_metric(helicoidal_chart)
    got = q.matrix_at((1.0, 0.0))
    assert np.allclose(got, [[1.0, 0.0], [0.0, 0.5]], atol=1e-14)


def test_quotient_metric_matches_printed_formula(helicoidal_chart):
    # (x1^2+a^2) dx1^2 + 2 x1 x2 dx1 dx2 + (x2^2+a^2) dx2^2, / (x1^2+x2^2+a^2)
    q = bg.quotient_metric(helicoidal_chart)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x1, x2 = rng.uniform(-2, 2, 2)
        denom = x1 * x1 + x2 * x2 + 1.0
        expected = np.array([[x1 * x1 + 1.0, x1 * x2],
                             [x1 * x2, x2 * x2 + 1.0]]) / denom
        assert np.allclose(q.matrix_at((x1, x2)), expected, atol=1e-12)


def test_quotient_metric_is_inverse_of_inverse_block(helicoidal_chart, bcv_frame):
    rng = np.random.default_rng(2)
    for chart in (helicoidal_chart, bcv_frame.chart):
        q = bg.quotient_metric(chart)
        for _ in range(15):
            p = rng.uniform(0.3, 1.8, 2)
            block = chart.inverse_metric_at(p)[:2, :2]
            assert np.allclose(q.matrix_at(p) @ block, np.eye(2), atol=1e-10)


def test_quotient_metric_identity_on_axis(helicoidal_chart):
    assert np.allclose(bg.quotient_metric(helicoidal_chart).matrix_at((0.0, 0.0)),
                       np.eye(2), atol=1e-14)


# ---------------------------------------------------------------------------
# generic frames (Newton inversion)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def numeric_frame(helicoidal_chart):
    return bg.build_frame(
        helicoidal_chart, bg.spaces.theta_ratio_fn(),
        rect=((1.05, 3.0), (-2.0, 2.0)),
        seed_box=((0.2, 3.0), (-2.5, 2.5)))


def test_newton_invert_reference_point(numeric_frame):
    x1, x2 = numeric_frame.invert(math.sqrt(2), 0.0)
    assert np.isclose(x1, 1.0, atol=1e-10)
    assert np.isclose(x2, 0.0, atol=1e-10)


def test_frame_gradient_norms_reference(numeric_frame):
    assert np.isclose(numeric_frame.grad_omega_sq(math.sqrt(2), 0.0), 0.5,
                      atol=1e-9)
    assert np.isclose(numeric_frame.grad_theta_sq(math.sqrt(2), 0.0), 2.0,
                      atol=1e-8)


def test_frame_right_inverse_property(numeric_frame):
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = rng.uniform(1.1, 2.8)
        t = rng.uniform(-1.8, 1.8)
        x1, x2 = numeric_frame.invert(w, t)
        assert np.isclose(numeric_frame.omega(x1, x2), w, atol=1e-10)
        assert np.isclose(numeric_frame.theta(x1, x2), t, atol=1e-10)


def test_frame_gradient_norms_positive(numeric_frame):
    rng = np.random.default_rng(6)
    for _ in range(10):
        w = rng.uniform(1.1, 2.8)
        t = rng.uniform(-1.8, 1.8)
        assert numeric_frame.grad_omega_sq(w, t) > 0
        assert numeric_frame.grad_theta_sq(w, t) > 0


def test_newton_quadratic_convergence(helicoidal_chart):
    omega = helicoidal_chart.volume_fn()
    theta = bg.spaces.theta_ratio_fn()

    def forward(a, b):
        return omega(a, b), theta(a, b)

    def jac(a, b):
        return np.array([omega.gradient_at(a, b), theta.gradient_at(a, b)])

    trace = []
    newton_invert(forward, jac, (1.9, 0.7), (0.8, 0.1), trace=trace)
    resid = [r for r in trace if r > 1e-14]
    # quadratic: r_{k+1} <= C r_k^2 once in the basin
    assert len(resid) >= 2
    for r0, r1 in zip(resid[:-2], resid[1:-1]):
        assert r1 <= 10.0 * r0 * r0 + 1e-14


def test_rank_deficiency_detected(helicoidal_chart):
    # theta functionally dependent on omega: the pair cannot chart the
    # orbit space
    omega = helicoidal_chart.volume_fn()
    dependent = bg.InvariantFunction(
        value=lambda a, b: omega(a, b) ** 2,
        gradient=lambda a, b: tuple(2 * omega(a, b) * g
                                    for g in omega.gradient_at(a, b)))
    with pytest.raises(RankDeficiencyError):
        bg.build_frame(helicoidal_chart, dependent,
                       rect=((1.05, 2.0), (1.0, 4.0)),
                       seed_box=((0.2, 2.0), (-1.5, 1.5)))


def test_builtin_bcv_inversion_radius_relation(bcv_frame):
    # the inverted radius satisfies
    # x1^2 + x2^2 = 4 (w^2 - a^2) / ((1 + sqrt(D))^2 - 4 tau^2 w^2)
    # and round-trips through the volume function
    a = kappa = tau = 1.0
    rng = np.random.default_rng(8)
    for _ in range(20):
        w = rng.uniform(1.5, 2.7)
        t = rng.uniform(-2.0, 2.0)
        x1, x2 = bcv_frame.invert(w, t)
        D = (1 - 2 * a * tau) ** 2 + (4 * tau**2 - kappa) * (w * w - a * a)
        expected_r2 = 4 * (w * w - a * a) / ((1 + math.sqrt(D)) ** 2
                                             - 4 * tau**2 * w * w)
        assert np.isclose(x1 * x1 + x2 * x2, expected_r2, atol=1e-10)
        assert np.isclose(bcv_frame.chart.volume_at((x1, x2)), w, atol=1e-10)


def test_frame_dump_grid(tmp_path, helicoidal_frame):
    path = tmp_path / "grid.json"
    payload = helicoidal_frame.dump_grid(path, shape=(5, 5))
    on_disk = json.loads(path.read_text())
    assert on_disk["columns"] == ["omega", "theta", "x1", "x2"]
    assert len(on_disk["rows"]) == 25
    assert payload["rows"] == on_disk["rows"]


# ---------------------------------------------------------------------------
# characteristic-traced invariants
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def traced_theta(helicoidal_chart):
    cauchy = bg.line_segment((1.0, -0.6), (1.0, 0.6))
    return bg.solve_orthogonal_invariant(
        helicoidal_chart, cauchy, np.linspace(0.0, 1.2, 61), n_steps=220)


def test_traced_theta_orthogonality(helicoidal_chart, traced_theta):
    omega = helicoidal_chart.volume_fn()
    rng = np.random.default_rng(42)
    pts = traced_theta.sample_swept(rng, 40)
    worst = max(abs(invariant_pairing(helicoidal_chart, omega, traced_theta,
                                      p, step=1e-5)) for p in pts)
    assert worst < 1e-6


def test_traced_theta_level_sets_match_ratio(helicoidal_chart, traced_theta):
    # theta is constant exactly where x2/x1 is: gradients are parallel
    from bourgen._numerics import central_gradient2
    rng = np.random.default_rng(43)
    pts = traced_theta.sample_swept(rng, 25)
    worst = 0.0
    for p in pts:
        dth = central_gradient2(traced_theta, p[0], p[1], 1e-5)
        dq = (-p[1] / p[0] ** 2, 1.0 / p[0])
        worst = max(worst, abs(dth[0] * dq[1] - dth[1] * dq[0]))
    assert worst < 1e-5


def test_traced_theta_value_is_affine_in_ratio(traced_theta):
    # for this chart the characteristics are the rays from the origin, so
    # the arc-length data on the segment x1 = 1 gives x2/x1 + 0.6
    rng = np.random.default_rng(44)
    pts = traced_theta.sample_swept(rng, 30)
    vals = np.array([traced_theta(p[0], p[1]) for p in pts])
    assert np.allclose(vals, pts[:, 1] / pts[:, 0] + 0.6, atol=1e-10)


def test_tangent_cauchy_rejected(helicoidal_chart):
    # a radial segment is itself a characteristic
    with pytest.raises(TransversalityError):
        bg.solve_orthogonal_invariant(
            helicoidal_chart, bg.line_segment((0.5, 0.0), (2.0, 0.0)),
            np.linspace(0.0, 1.5, 31), n_steps=40)


def test_circular_symmetry_theta_constant_on_rays():
    # radially symmetric volume function: characteristics are rays, so a
    # traced theta is constant along each ray
    chart = bg.AdaptedChart3(
        g11=lambda a, b: 1.0, g12=lambda a, b: 0.0, g13=lambda a, b: 0.0,
        g22=lambda a, b: 1.0, g23=lambda a, b: 0.0,
        g33=lambda a, b: a * a + b * b,
        domain=lambda a, b: a * a + b * b > 1e-4, label="radial")
    arc = bg.CauchyCurve(
        point=lambda sig: np.array([math.cos(sig - 0.75), math.sin(sig - 0.75)]),
        length=1.5)
    traced = bg.solve_orthogonal_invariant(chart, arc, np.linspace(0, 1.5, 41),
                                           n_steps=150)
    for phi in (-0.4, 0.0, 0.5):
        v1 = traced(0.8 * math.cos(phi), 0.8 * math.sin(phi))
        v2 = traced(1.3 * math.cos(phi), 1.3 * math.sin(phi))
        assert np.isclose(v1, v2, atol=1e-9)
        assert np.isclose(v1, phi + 0.75, atol=1e-9)


def test_traced_outside_swept_region(traced_theta):
    with pytest.raises(DomainError):
        traced_theta(5.0, 4.9)  # ray through this point misses the segment


def test_traced_dump_grid(tmp_path, traced_theta):
    path = tmp_path / "traced.json"
    payload = traced_theta.dump_grid(path)
    assert payload["columns"] == ["omega", "theta", "x1", "x2"]
    assert len(payload["rows"]) == 61 * (2 * 220 + 1)


def test_traced_theta_in_numeric_frame(helicoidal_chart, traced_theta):
    # a traced invariant can back a generic frame end to end
    frame = bg.build_frame(helicoidal_chart, traced_theta,
                           rect=((1.3, 1.8), (0.3, 0.9)),
                           seed_box=((0.9, 1.5), (-0.3, 0.4)),
                           seed_counts=(8, 8))
    w, t = 1.5, 0.55
    x1, x2 = frame.invert(w, t)
    assert np.isclose(helicoidal_chart.volume_at((x1, x2)), w, atol=1e-9)
    assert np.isclose(traced_theta(x1, x2), t, atol=1e-9)
    assert frame.grad_omega_sq(w, t) > 0
    assert frame.grad_theta_sq(w, t) > 0
