"""Numerical verification: finite-difference first fundamental forms,
isometry reports, and closed-form versus generic cross-checks.

The induced-metric coefficients of a member map are measured by central
differences of the map and the ambient metric at the foot point; an
isometry report aggregates the deviations from the target diag(1, U^2)
over a grid.  Cross-checks compare the two independent computation paths
of the same surface (generic pipeline and printed closed forms), with
angles compared modulo the additive gauge constant.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from ._numerics import unwrap_angles
from .errors import GridMismatchError, RangeError


@dataclass(frozen=True)
class FormSample:
    """First-fundamental-form coefficients at one (s, t) sample."""

    s: float
    t: float
    E: float
    F: float
    G: float

    def is_valid(self):
        return self.E > 0 and self.G > 0 and self.E * self.G - self.F**2 > 0


def fd_first_form(chart, member, s, t, h=1e-5):
    """Measure (E, F, G) of the member map at (s, t) by central differences.

    The map components are treated as coordinates of the ambient chart;
    the pairing uses the metric at the foot point.
    """
    lo, hi = member.s_range
    if not (lo <= s - h and s + h <= hi):
        raise RangeError(
            f"finite-difference stencil [{s - h:.6g}, {s + h:.6g}] exits the "
            f"member range {member.s_range}")
    p0 = np.array(member.map(s, t))
    psi_s = (np.array(member.map(s + h, t)) - np.array(member.map(s - h, t))) / (2 * h)
    psi_t = (np.array(member.map(s, t + h)) - np.array(member.map(s, t - h))) / (2 * h)
    g = chart.metric_at((p0[0], p0[1]))
    return FormSample(s=float(s), t=float(t),
                      E=float(psi_s @ g @ psi_s),
                      F=float(psi_s @ g @ psi_t),
                      G=float(psi_t @ g @ psi_t))


@dataclass(frozen=True)
class IsometryReport:
    """Grid-aggregated deviation of a member's induced metric from
    ds^2 + U(s)^2 dt^2."""

    grid_shape: tuple
    s_range: tuple
    t_range: tuple
    fd_step: float
    tol: float
    max_E_dev: float
    max_F_dev: float
    max_G_dev: float
    worst: dict
    passed: bool

    def to_dict(self):
        return {
            "grid_shape": list(self.grid_shape),
            "s_range": list(self.s_range),
            "t_range": list(self.t_range),
            "fd_step": self.fd_step,
            "tol": self.tol,
            "max_E_dev": self.max_E_dev,
            "max_F_dev": self.max_F_dev,
            "max_G_dev": self.max_G_dev,
            "worst": self.worst,
            "passed": bool(self.passed),
        }


def isometry_report(chart, member, U, grid, tol=1e-5, h=1e-5):
    """Verify the member against the target metric on an (s, t) grid.

    ``grid`` is (s_values, t_values); single-point grids are allowed.
    Failures are reported, not raised.
    """
    s_values, t_values = (np.atleast_1d(np.asarray(g, dtype=float)) for g in grid)
    maxima = {"E": 0.0, "F": 0.0, "G": 0.0}
    worst = {}
    for s in s_values:
        U2 = U(s) ** 2
        for t in t_values:
            sample = fd_first_form(chart, member, s, t, h)
            devs = {"E": abs(sample.E - 1.0), "F": abs(sample.F),
                    "G": abs(sample.G - U2)}
            for name, dev in devs.items():
                maxima[name] = max(maxima[name], dev)
            top = max(devs, key=devs.get)
            if not worst or devs[top] > worst["deviation"]:
                worst = {"s": float(s), "t": float(t), "quantity": top,
                         "deviation": float(devs[top])}
    max_E, max_F, max_G = maxima["E"], maxima["F"], maxima["G"]
    passed = max(max_E, max_F, max_G) <= tol
    return IsometryReport(
        grid_shape=(len(s_values), len(t_values)),
        s_range=(float(s_values[0]), float(s_values[-1])),
        t_range=(float(t_values[0]), float(t_values[-1])),
        fd_step=float(h), tol=float(tol),
        max_E_dev=float(max_E), max_F_dev=float(max_F), max_G_dev=float(max_G),
        worst=worst, passed=passed)


@dataclass(frozen=True)
class CrossCheckReport:
    """Max deviations between closed-form and generic computations of the
    same member: radius, screw angle (modulo the gauge constant), and
    vertical quadrature (modulo gauge, through the kind-specific
    relation between the two parametrizations)."""

    rho_dev: float
    angle_dev: float
    v_dev: float
    n_samples: int

    def to_dict(self):
        return {"rho_dev": self.rho_dev, "angle_dev": self.angle_dev,
                "v_dev": self.v_dev, "n_samples": self.n_samples}


def _gauge_deviation(x, y, anchor_index):
    d = np.asarray(x) - np.asarray(y)
    return float(np.max(np.abs(d - d[anchor_index])))


def cross_check(closed, generic):
    """Compare a ClosedFormFamily against a generic SurfaceMember.

    Both must share the s grid as well as (m, epsilon).  The generic
    profile is converted to radius / screw-angle form; angles are compared
    modulo the additive gauge constant fixed at the closed family's
    anchor.  The vertical comparison uses the relation between the
    adapted-chart flow coordinate and the printed cylindrical display:
    flat screw spaces shift by +lam/a, BCV by -lam/a, rotational by 0.
    """
    if closed.s_grid.shape != generic.s.shape or not np.allclose(
            closed.s_grid, generic.s, rtol=0, atol=1e-12):
        raise GridMismatchError("closed-form family and member use different s grids")
    if closed.m != generic.m or closed.epsilon != generic.epsilon:
        raise GridMismatchError("closed-form family and member disagree on (m, epsilon)")
    kind = closed.space.kind
    a = closed.space.a
    k0 = closed.anchor_index
    if kind != "euclidean_rotational" and a == 0.0:
        raise GridMismatchError(
            "closed-form family has a = 0 but a screw-space kind; no "
            "matching adapted chart exists for a generic member")
    if kind == "euclidean_rotational":
        rho_gen = generic.x1
        lam_gen = generic.x2.copy()
        v_shift = np.zeros_like(lam_gen)
    else:
        rho_gen = np.hypot(generic.x1, generic.x2)
        phi = unwrap_angles(np.arctan2(generic.x2, generic.x1))
        lam_gen = a * phi
        v_shift = (closed.lam_samples / a if kind == "euclidean_helicoidal"
                   else -closed.lam_samples / a)
    rho_dev = float(np.max(np.abs(rho_gen - closed.rho_samples)))
    angle_dev = _gauge_deviation(lam_gen, closed.lam_samples, k0)
    v_dev = _gauge_deviation(generic.V_samples, closed.V_samples + v_shift, k0)
    return CrossCheckReport(rho_dev=rho_dev, angle_dev=angle_dev, v_dev=v_dev,
                            n_samples=len(closed.s_grid))
