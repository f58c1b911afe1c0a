"""Generation of the one-parameter family of isometric invariant surfaces.

Given the generatrix U(s) of the target metric ds^2 + U(s)^2 dt^2 and a
parameter m > 0, the orbit-space profile is fixed by
    omega(s) = m U(s),
    theta'(s) = eps * |grad theta| sqrt(|grad omega|^2 - m^2 U'(s)^2) / |grad omega|,
with both gradient norms evaluated at (m U(s), theta(s)).  The branch
eps = +1 matches the positive sign of the closed-form screw quadratures.
The two signs printed in the source relations (one on m U, one on the
normal coefficient) collapse to this single branch: omega and U are
positive, so m is normalized positive, and the remaining sign is eps.

The member map is
    psi_m(s, t) = (x1(s), x2(s), t/m + V(s)),
    V(s) = -sum_i integral of x_i'(s) g_i3(x1, x2) / (m^2 U^2) ds,
anchored so V and theta take their data at the anchor sample; the
induced metric is ds^2 + U(s)^2 dt^2 by construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ._numerics import cumulative_simpson_anchored
from .errors import (
    ConfigError,
    GridMismatchError,
    NonConstantVolumeError,
    RadicandNegativeError,
    RangeError,
    RectExitError,
    StepTooLargeError,
)
from .natural import GeneratrixMetric, LiftedCurve

RADICAND_CLAMP = 1e-12


@dataclass(frozen=True)
class BourParams:
    """Parameters of one family member integration."""

    m: float
    s_range: tuple
    step: float
    epsilon: int = 1
    integrator: str = "rk4"
    anchor: Optional[float] = None

    def __post_init__(self):
        if not self.m > 0.0:
            raise ConfigError("m must be positive (the sign of omega = m U is "
                              "absorbed: omega and U are positive)")
        if self.epsilon not in (1, -1):
            raise ConfigError("epsilon must be +1 or -1")
        s0, s1 = self.s_range
        if not s1 > s0:
            raise ConfigError("empty s_range")
        if not self.step > 0.0:
            raise ConfigError("step must be positive")
        if self.step > (s1 - s0) / 10.0:
            raise ConfigError("step must be at most a tenth of the range length")
        if self.integrator not in ("rk4", "euler"):
            raise ConfigError("integrator must be 'rk4' or 'euler'")
        if self.anchor is not None and not (s0 <= self.anchor <= s1):
            raise ConfigError("anchor must lie inside s_range")


def ode_rhs(s, theta, U, params, frame):
    """theta'(s) of the profile equation at (s, theta).

    Raises RadicandNegativeError when the target metric is not realizable
    at this m along this s; grazing-zero radicands (above -1e-12) are
    clamped to zero.
    """
    w = params.m * U(s)
    frame.require_in_rect(w, theta)
    go = frame.grad_omega_sq(w, theta)
    gt = frame.grad_theta_sq(w, theta)
    rad = go - (params.m * U.derivative(s)) ** 2
    if rad <= -RADICAND_CLAMP:
        raise RadicandNegativeError(
            f"|grad omega|^2 - m^2 U'^2 = {rad:.3e} < 0 at s = {s:.6g}: "
            f"the metric is not realizable at m = {params.m:g} here",
            s=s, radicand=rad)
    if abs(rad) < RADICAND_CLAMP:
        # symmetric deadband: an identically-degenerate radicand (fixed
        # point of the family) must not pick up float noise
        rad = 0.0
    return (params.epsilon * frame.branch_sign
            * math.sqrt(gt) * math.sqrt(rad) / math.sqrt(go))


@dataclass(frozen=True)
class ProfileCurve:
    """Arc-length samples of the orbit-space profile of one member."""

    s: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    theta_prime: np.ndarray
    frame: object
    params: BourParams
    U: GeneratrixMetric
    anchor_index: int

    @property
    def samples(self):
        return np.column_stack([self.s, self.x1, self.x2, self.omega, self.theta])

    def theta_spline(self):
        return CubicHermiteSpline(self.s, self.theta, self.theta_prime)

    def position_derivatives(self):
        """(x1'(s), x2'(s)) at the nodes via the inverse-chart Jacobian."""
        n = len(self.s)
        d1 = np.empty(n)
        d2 = np.empty(n)
        m = self.params.m
        for k in range(n):
            J = self.frame.invert_jacobian(self.omega[k], self.theta[k])
            vel = J @ np.array([m * self.U.derivative(self.s[k]),
                                self.theta_prime[k]])
            d1[k], d2[k] = vel
        return d1, d2


def _stage_rhs(s, theta, U, params, frame):
    """rhs for integrator stage points: rectangle exits become
    StepTooLargeError because the accepted nodes are inside."""
    try:
        return ode_rhs(s, theta, U, params, frame)
    except RectExitError as exc:
        raise StepTooLargeError(
            f"integrator stage left the rectangle near s = {s:.6g}; "
            f"reduce the step ({exc})") from exc


def integrate_profile(U, params, frame, theta0=0.0):
    """Integrate the profile ODE and lift the path to the orbit space.

    theta takes the value theta0 at the anchor (default: the lower end of
    s_range); integration sweeps outward in both directions.  omega(s) is
    imposed exactly as m U(s); positions come from the frame inversion at
    every node.
    """
    s0, s1 = params.s_range
    anchor = params.anchor if params.anchor is not None else s0
    h = params.step
    # anchor-aligned grid, kept inside s_range (an off-grid anchor must not
    # push evaluations past the generatrix domain)
    k_lo = int(math.ceil((s0 - anchor) / h - 1e-9))
    k_hi = int(math.floor((s1 - anchor) / h + 1e-9))
    if k_hi - k_lo < 10:
        raise ConfigError("fewer than 10 steps across s_range")
    s = anchor + h * np.arange(k_lo, k_hi + 1)
    n = len(s)
    ia = -k_lo  # anchor index
    theta = np.empty(n)
    theta_p = np.empty(n)
    theta[ia] = theta0
    theta_p[ia] = ode_rhs(s[ia], theta0, U, params, frame)

    def sweep(direction):
        step = direction * h
        rng = range(ia + 1, n) if direction > 0 else range(ia - 1, -1, -1)
        for k in rng:
            sk = s[k - direction]
            yk = theta[k - direction]
            f1 = theta_p[k - direction]
            if params.integrator == "euler":
                y_next = yk + step * f1
            else:
                f2 = _stage_rhs(sk + step / 2, yk + step / 2 * f1, U, params, frame)
                f3 = _stage_rhs(sk + step / 2, yk + step / 2 * f2, U, params, frame)
                f4 = _stage_rhs(sk + step, yk + step * f3, U, params, frame)
                y_next = yk + step / 6 * (f1 + 2 * f2 + 2 * f3 + f4)
            theta[k] = y_next
            theta_p[k] = ode_rhs(s[k], y_next, U, params, frame)

    sweep(+1)
    sweep(-1)

    omega = params.m * np.array([U(x) for x in s])
    x1 = np.empty(n)
    x2 = np.empty(n)
    for k in range(n):
        x1[k], x2[k] = frame.invert(omega[k], theta[k])
    return ProfileCurve(s=s, x1=x1, x2=x2, omega=omega, theta=theta,
                        theta_prime=theta_p, frame=frame, params=params,
                        U=U, anchor_index=ia)


@dataclass(frozen=True)
class VerticalShift:
    """The s-part V(s) of the member's flow coordinate, with samples."""

    s: np.ndarray
    values: np.ndarray
    prime: np.ndarray
    spline: object

    def __call__(self, s):
        return float(self.spline(s))


def vertical_quadrature(profile, chart, params, U):
    """V(s) = -sum_i cumulative integral of x_i' g_i3 / (m^2 U^2).

    Composite Simpson on the profile grid, anchored to zero at the
    profile's anchor sample.
    """
    s = profile.s
    steps = np.diff(s)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise GridMismatchError("profile grid must be uniform")
    d1, d2 = profile.position_derivatives()
    m2U2 = (params.m * np.array([U(x) for x in s])) ** 2
    integrand = np.empty(len(s))
    for k in range(len(s)):
        g13 = chart.g13(profile.x1[k], profile.x2[k])
        g23 = chart.g23(profile.x1[k], profile.x2[k])
        integrand[k] = -(d1[k] * g13 + d2[k] * g23) / m2U2[k]
    V = cumulative_simpson_anchored(integrand, s, profile.anchor_index)
    return VerticalShift(s=s, values=V, prime=integrand,
                         spline=CubicHermiteSpline(s, V, integrand))


class SurfaceMember:
    """One family member: map(s, t) = (x1(s), x2(s), t/m + V(s)).

    The third component is affine in t with slope 1/m.  When a frame and
    generatrix are attached, positions are re-solved exactly at any s;
    otherwise (e.g. after JSON round-trip) cubic Hermite interpolation of
    the stored samples is used.
    """

    def __init__(self, s, x1, x2, x1p, x2p, theta, theta_prime, omega,
                 V, Vp, m, epsilon, profile=None, U=None, frame=None,
                 space=None, metadata=None):
        self.s = np.asarray(s, dtype=float)
        self.x1 = np.asarray(x1, dtype=float)
        self.x2 = np.asarray(x2, dtype=float)
        self.x1p = np.asarray(x1p, dtype=float)
        self.x2p = np.asarray(x2p, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        self.theta_prime = np.asarray(theta_prime, dtype=float)
        self.omega = np.asarray(omega, dtype=float)
        self.V_samples = np.asarray(V, dtype=float)
        self.V_prime = np.asarray(Vp, dtype=float)
        self.m = float(m)
        self.epsilon = int(epsilon)
        self.profile = profile
        self.U = U
        self.frame = frame
        self.space = space
        self.metadata = dict(metadata or {})
        self.s_range = (float(self.s[0]), float(self.s[-1]))
        self._V_spline = CubicHermiteSpline(self.s, self.V_samples, self.V_prime)
        self._theta_spline = CubicHermiteSpline(self.s, self.theta,
                                                self.theta_prime)
        self._x1_spline = CubicHermiteSpline(self.s, self.x1, self.x1p)
        self._x2_spline = CubicHermiteSpline(self.s, self.x2, self.x2p)

    def V(self, s):
        return float(self._V_spline(s))

    def position(self, s):
        if self.frame is not None and self.U is not None:
            w = self.m * self.U(s)
            return self.frame.invert(w, float(self._theta_spline(s)))
        return float(self._x1_spline(s)), float(self._x2_spline(s))

    def map(self, s, t):
        lo, hi = self.s_range
        if not (lo - 1e-12 <= s <= hi + 1e-12):
            raise RangeError(f"s = {s:.6g} outside member range {self.s_range}")
        p1, p2 = self.position(s)
        return (p1, p2, t / self.m + self.V(s))

    # -- serialization -------------------------------------------------------

    def to_dict(self):
        d = {
            "format": "bourgen-member",
            "version": 1,
            "m": self.m,
            "epsilon": self.epsilon,
            "metadata": self.metadata,
            "space": self.space.to_dict() if self.space is not None else None,
            "profile": {
                "s": self.s.tolist(),
                "x1": self.x1.tolist(),
                "x2": self.x2.tolist(),
                "x1_prime": self.x1p.tolist(),
                "x2_prime": self.x2p.tolist(),
                "omega": self.omega.tolist(),
                "theta": self.theta.tolist(),
                "theta_prime": self.theta_prime.tolist(),
            },
            "V": self.V_samples.tolist(),
            "V_prime": self.V_prime.tolist(),
        }
        if self.U is not None and self.U.representation == "expression":
            d["generatrix"] = {"kind": "expression", "text": self.U.source,
                               "s_range": list(self.U.s_range)}
        elif self.U is not None:
            su, val = self.U.table(self.s)
            d["generatrix"] = {"kind": "table", "s": self.s.tolist(),
                               "values": su.tolist()}
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "bourgen-member":
            raise ValueError("not a bourgen member file")
        from .spaces import SpaceSpec
        prof = d["profile"]
        space = SpaceSpec.from_dict(d["space"]) if d.get("space") else None
        U = None
        gen = d.get("generatrix")
        if gen and gen["kind"] == "expression":
            U = GeneratrixMetric.from_expression(gen["text"], gen["s_range"])
        elif gen and gen["kind"] == "table":
            U = GeneratrixMetric.from_samples(gen["s"], gen["values"])
        return cls(s=prof["s"], x1=prof["x1"], x2=prof["x2"],
                   x1p=prof["x1_prime"], x2p=prof["x2_prime"],
                   theta=prof["theta"], theta_prime=prof["theta_prime"],
                   omega=prof["omega"], V=d["V"], Vp=d["V_prime"],
                   m=d["m"], epsilon=d["epsilon"], space=space, U=U,
                   metadata=d.get("metadata", {}))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def assemble_member(profile, V, params, *, space=None, chart_label=None):
    """Bundle a profile and its vertical quadrature into a SurfaceMember."""
    if profile.s.shape != V.s.shape or not np.allclose(
            profile.s, V.s, rtol=0, atol=1e-12):
        raise GridMismatchError("profile and V are on different s grids")
    d1, d2 = profile.position_derivatives()
    meta = {"chart": chart_label or profile.frame.chart.label,
            "integrator": params.integrator, "step": params.step,
            "epsilon": params.epsilon,
            "anchor": float(profile.s[profile.anchor_index])}
    return SurfaceMember(
        s=profile.s, x1=profile.x1, x2=profile.x2, x1p=d1, x2p=d2,
        theta=profile.theta, theta_prime=profile.theta_prime,
        omega=profile.omega, V=V.values, Vp=V.prime,
        m=params.m, epsilon=params.epsilon, profile=profile, U=profile.U,
        frame=profile.frame, space=space, metadata=meta)


def generate_member(U, params, frame, theta0=0.0, *, space=None):
    """Full pipeline for one member: integrate, quadrature, assemble."""
    profile = integrate_profile(U, params, frame, theta0)
    V = vertical_quadrature(profile, frame.chart, params, U)
    return assemble_member(profile, V, params, space=space)


def constant_volume_member(chart, profile_curve, *, tol=1e-10):
    """Single ruled member over a chart with constant unit volume function.

    The input curve must be unit speed in the quotient metric; the member
    map is (x1(s), x2(s), t + V(s)) with V the cumulative integral of
    -(x1' g13 + x2' g23), and induced metric ds^2 + dt^2.
    """
    if isinstance(profile_curve, LiftedCurve):
        s = profile_curve.u
        c1, c2 = profile_curve.x1, profile_curve.x2
    else:
        s, c1, c2 = (np.asarray(a, dtype=float) for a in profile_curve)
    w = np.array([chart.volume_at((c1[k], c2[k])) for k in range(len(s))])
    spread = np.max(np.abs(w - np.mean(w)))
    if spread > tol * max(1.0, np.mean(np.abs(w))):
        raise NonConstantVolumeError(
            f"volume function varies by {spread:.3e} along the curve; "
            "not a constant-volume chart")
    if abs(np.mean(w) - 1.0) > 1e-9:
        raise NonConstantVolumeError(
            f"volume function is constant {np.mean(w):.6g} != 1; rescale the "
            "chart (bourgen.chart.rescale_vertical) first")
    d1 = np.gradient(c1, s, edge_order=2)
    d2 = np.gradient(c2, s, edge_order=2)
    from .quotient import quotient_metric
    q = quotient_metric(chart)
    for k in (0, len(s) // 2, len(s) - 1):
        speed = (q.q11(c1[k], c2[k]) * d1[k] ** 2
                 + 2 * q.q12(c1[k], c2[k]) * d1[k] * d2[k]
                 + q.q22(c1[k], c2[k]) * d2[k] ** 2)
        if abs(speed - 1.0) > 5e-2:
            raise ValueError(
                f"input curve is not unit speed in the quotient metric "
                f"(speed^2 = {speed:.4g} at s = {s[k]:.6g})")
    integrand = np.array([
        -(d1[k] * chart.g13(c1[k], c2[k]) + d2[k] * chart.g23(c1[k], c2[k]))
        for k in range(len(s))])
    V = cumulative_simpson_anchored(integrand, s, 0)
    U = GeneratrixMetric.from_callable(lambda _s: 1.0, (s[0], s[-1]),
                                       dU=lambda _s: 0.0)
    return SurfaceMember(
        s=s, x1=c1, x2=c2, x1p=d1, x2p=d2,
        theta=np.zeros_like(s), theta_prime=np.zeros_like(s),
        omega=w, V=V, Vp=integrand, m=1.0, epsilon=1,
        U=U, metadata={"chart": chart.label, "kind": "constant-volume"})


def feasible_s_range(U, m, frame, s_range, theta_ref=0.0, n_scan=2001,
                     step=None, pullback_steps=20):
    """Largest prefix [s0, s*] of s_range on which the profile radicand
    |grad omega|^2(mU, theta_ref) - m^2 U'^2 stays nonnegative.

    Dense-grid scan.  When the range is shrunk and ``step`` is given, the
    upper end is pulled back ``pullback_steps`` integrator steps from the
    radicand zero: theta(s) has a square-root branch point there, and a
    fixed-step integrator needs the radicand bounded away from zero to
    keep its order.  Gradient norms are evaluated at theta_ref (exact for
    the built-in frames, whose norms do not depend on theta).
    """
    s0, s1 = s_range
    ss = np.linspace(s0, s1, n_scan)
    hi = None
    for s in ss:
        w = m * U(s)
        if not frame.contains(w, theta_ref):
            break
        rad = frame.grad_omega_sq(w, theta_ref) - (m * U.derivative(s)) ** 2
        if rad <= -RADICAND_CLAMP:
            break
        hi = s
    if hi is None or hi <= s0:
        raise RadicandNegativeError(
            f"no feasible s interval from {s0:.6g} at m = {m:g}", s=s0)
    if hi < s1 and step is not None:
        hi = s0 + math.floor((hi - s0) / step - pullback_steps) * step
        if hi <= s0:
            raise RadicandNegativeError(
                f"feasible interval from {s0:.6g} at m = {m:g} is shorter "
                "than the integrator pullback; reduce the step", s=s0)
    return (s0, float(min(hi, s1)))
