"""Orbit-space geometry: quotient metric, orthogonal invariant pairs, and
inversion of the (x1,x2) -> (omega,theta) map.

The quotient metric on the space of orbits is the inverse of the upper 2x2
block of the inverse ambient metric.  A transverse invariant theta is
either supplied analytically or traced numerically: theta is constant
along the integral curves of the horizontal projection of grad(omega)
(the characteristics of the defining first-order PDE), and takes
arc-length Cauchy data on a curve transversal to them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chart import DEFAULT_FD_STEP, AdaptedChart3, InvariantFunction, as_invariant
from .errors import (
    DegenerateGradientError,
    DomainError,
    NewtonDivergenceError,
    RankDeficiencyError,
    RectExitError,
    SingularMetricError,
    TransversalityError,
)


# ---------------------------------------------------------------------------
# quotient metric
# ---------------------------------------------------------------------------

def _inverse_block2(chart, x1, x2):
    """Upper 2x2 block of the inverse metric, by cofactors (fast path)."""
    g11 = chart.g11(x1, x2)
    g12 = chart.g12(x1, x2)
    g13 = chart.g13(x1, x2)
    g22 = chart.g22(x1, x2)
    g23 = chart.g23(x1, x2)
    g33 = chart.g33(x1, x2)
    det = (g11 * (g22 * g33 - g23 * g23)
           - g12 * (g12 * g33 - g23 * g13)
           + g13 * (g12 * g23 - g22 * g13))
    if det <= 0.0 or not np.isfinite(det):
        raise SingularMetricError(
            f"{chart.label}: metric determinant {det:.3e} at "
            f"({x1!r}, {x2!r}) is not positive")
    b11 = (g22 * g33 - g23 * g23) / det
    b12 = -(g12 * g33 - g13 * g23) / det
    b22 = (g11 * g33 - g13 * g13) / det
    return b11, b12, b22


@dataclass(frozen=True)
class QuotientMetric2:
    """Quotient metric coefficients on the orbit space, as functions of
    the invariant coordinates (x1, x2)."""

    q11: Callable[[float, float], float]
    q12: Callable[[float, float], float]
    q22: Callable[[float, float], float]

    def matrix_at(self, p):
        x1, x2 = p
        q11 = self.q11(x1, x2)
        q12 = self.q12(x1, x2)
        q22 = self.q22(x1, x2)
        return np.array([[q11, q12], [q12, q22]])


def quotient_metric(chart):
    """Quotient metric of the orbit space: the inverse of the upper 2x2
    block of the inverse ambient metric."""

    def q11(x1, x2):
        b11, b12, b22 = _inverse_block2(chart, x1, x2)
        return b22 / (b11 * b22 - b12 * b12)

    def q12(x1, x2):
        b11, b12, b22 = _inverse_block2(chart, x1, x2)
        return -b12 / (b11 * b22 - b12 * b12)

    def q22(x1, x2):
        b11, b12, b22 = _inverse_block2(chart, x1, x2)
        return b11 / (b11 * b22 - b12 * b12)

    return QuotientMetric2(q11=q11, q12=q12, q22=q22)


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuotientFrame:
    """Orthogonal invariant pair (omega, theta) with gradient norms in the
    (omega, theta) coordinates and the inverse chart map.

    ``rect`` is the declared (omega, theta) rectangle on which the pair is
    a valid coordinate system; it also bounds profile integrations.
    ``branch_sign`` orients the profile branches: gradient norms are
    absolute values, so screw charts with negative pitch set -1 here to
    keep the branch labels aligned with the closed-form quadratures
    (epsilon = +1 always means increasing screw angle).
    """

    chart: AdaptedChart3
    omega: InvariantFunction
    theta: InvariantFunction
    grad_omega_sq: Callable[[float, float], float]
    grad_theta_sq: Callable[[float, float], float]
    invert: Callable[[float, float], tuple]
    rect: tuple
    label: str = "frame"
    branch_sign: int = 1

    def contains(self, w, t):
        (w0, w1), (t0, t1) = self.rect
        return w0 <= w <= w1 and t0 <= t <= t1

    def require_in_rect(self, w, t):
        if not self.contains(w, t):
            raise RectExitError(
                f"{self.label}: (omega, theta) = ({w:.6g}, {t:.6g}) outside "
                f"declared rectangle {self.rect}")

    def forward_jacobian(self, x1, x2, step=DEFAULT_FD_STEP):
        """d(omega, theta)/d(x1, x2) at a point of the orbit space."""
        dw = self.omega.gradient_at(x1, x2, step)
        dt = self.theta.gradient_at(x1, x2, step)
        return np.array([dw, dt])

    def invert_jacobian(self, w, t, step=DEFAULT_FD_STEP):
        """d(x1, x2)/d(omega, theta) at (w, t), via the forward gradients."""
        x1, x2 = self.invert(w, t)
        fj = self.forward_jacobian(x1, x2, step)
        det = fj[0, 0] * fj[1, 1] - fj[0, 1] * fj[1, 0]
        if abs(det) < 1e-14:
            raise RankDeficiencyError(
                f"{self.label}: forward Jacobian singular at ({w:.6g}, {t:.6g})")
        return np.array([[fj[1, 1], -fj[0, 1]], [-fj[1, 0], fj[0, 0]]]) / det

    def dump_grid(self, path, shape=(21, 21)):
        """Write a JSON debugging grid of (omega, theta, x1, x2) tuples."""
        (w0, w1), (t0, t1) = self.rect
        ws = np.linspace(w0, w1, shape[0])
        ts = np.linspace(t0, t1, shape[1])
        rows = []
        for w in ws:
            for t in ts:
                x1, x2 = self.invert(w, t)
                rows.append([float(w), float(t), float(x1), float(x2)])
        payload = {"label": self.label, "columns": ["omega", "theta", "x1", "x2"],
                   "rows": rows}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
        return payload


def newton_invert(forward, jacobian, target, seed, tol=1e-12, maxiter=50,
                  trace=None):
    """Damped Newton for forward(x) = target, x and target 2-vectors.

    ``forward`` maps (x1, x2) -> (omega, theta); ``jacobian`` returns the
    2x2 forward Jacobian.  Returns the solution; raises
    NewtonDivergenceError with the last residual on failure.  When
    ``trace`` is a list, the max-norm residual after each iteration is
    appended to it (used to observe quadratic convergence).
    """
    x = np.array(seed, dtype=float)
    target = np.asarray(target, dtype=float)
    scale = max(1.0, abs(target[0]), abs(target[1]))
    r = np.asarray(forward(x[0], x[1])) - target
    for _ in range(maxiter):
        err = np.max(np.abs(r))
        if err <= tol * scale:
            return x[0], x[1]
        J = np.asarray(jacobian(x[0], x[1]), dtype=float)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if abs(det) < 1e-300:
            raise NewtonDivergenceError(
                f"singular Jacobian during inversion at x={tuple(x)!r}",
                residual=err)
        step = np.array([J[1, 1] * r[0] - J[0, 1] * r[1],
                         -J[1, 0] * r[0] + J[0, 0] * r[1]]) / det
        lam = 1.0
        for _ in range(8):
            x_new = x - lam * step
            try:
                r_new = np.asarray(forward(x_new[0], x_new[1])) - target
            except (DomainError, ValueError, FloatingPointError):
                lam *= 0.5
                continue
            if np.max(np.abs(r_new)) < err or lam < 1e-2:
                break
            lam *= 0.5
        else:
            x_new = x - lam * step
            r_new = np.asarray(forward(x_new[0], x_new[1])) - target
        x, r = x_new, r_new
        if trace is not None:
            trace.append(float(np.max(np.abs(r))))
    err = float(np.max(np.abs(r)))
    if err <= tol * scale:
        return x[0], x[1]
    raise NewtonDivergenceError(
        f"chart inversion did not converge to {tuple(target)!r}; "
        f"last residual {err:.3e}", residual=err)


def build_frame(chart, theta, rect, *, seed_box, seed_counts=(25, 25),
                fd_step=DEFAULT_FD_STEP, newton_tol=1e-12, newton_maxiter=50,
                jacobian_floor=1e-8, label=None):
    """Construct a QuotientFrame from an invariant theta on a chart.

    ``seed_box`` = ((x1_lo, x1_hi), (x2_lo, x2_hi)) samples the orbit
    space: the seed grid provides Newton starting points and the
    rank check of the forward map.  Gradient norms are computed through
    the pairing of the chart and re-expressed as functions of
    (omega, theta) via the inverse map.
    """
    from .chart import invariant_pairing  # local import to avoid cycle noise

    omega = chart.volume_fn()
    theta = as_invariant(theta, name="theta")

    (x1_lo, x1_hi), (x2_lo, x2_hi) = seed_box
    xs = np.linspace(x1_lo, x1_hi, seed_counts[0])
    ys = np.linspace(x2_lo, x2_hi, seed_counts[1])
    seeds = []
    (w_lo, w_hi), (t_lo, t_hi) = rect
    pad_w = 0.25 * (w_hi - w_lo)
    pad_t = 0.25 * (t_hi - t_lo)
    for x1 in xs:
        for x2 in ys:
            if not chart.domain(x1, x2):
                continue
            try:
                w = omega(x1, x2)
                t = theta(x1, x2)
            except DomainError:
                continue  # e.g. outside a traced invariant's swept region
            if not np.isfinite(w) or not np.isfinite(t):
                continue
            seeds.append((w, t, x1, x2))
            if w_lo - pad_w <= w <= w_hi + pad_w and t_lo - pad_t <= t <= t_hi + pad_t:
                dw = np.array(omega.gradient_at(x1, x2, fd_step))
                dt = np.array(theta.gradient_at(x1, x2, fd_step))
                det = dw[0] * dt[1] - dw[1] * dt[0]
                norm = max(np.hypot(*dw) * np.hypot(*dt), 1e-300)
                if abs(det) < jacobian_floor * norm:
                    raise RankDeficiencyError(
                        f"(omega, theta) Jacobian nearly singular at "
                        f"({x1:.6g}, {x2:.6g}): |det|/scale = {abs(det)/norm:.3e}")
    if not seeds:
        raise DomainError("seed_box contains no domain points")
    seed_arr = np.array(seeds)  # columns: w, t, x1, x2

    def forward(x1, x2):
        return omega(x1, x2), theta(x1, x2)

    def fwd_jac(x1, x2):
        return np.array([omega.gradient_at(x1, x2, fd_step),
                         theta.gradient_at(x1, x2, fd_step)])

    def invert(w, t):
        d2 = (seed_arr[:, 0] - w) ** 2 + (seed_arr[:, 1] - t) ** 2
        seed = seed_arr[int(np.argmin(d2)), 2:]
        return newton_invert(forward, fwd_jac, (w, t), seed,
                             tol=newton_tol, maxiter=newton_maxiter)

    def grad_omega_sq(w, t):
        p = invert(w, t)
        return invariant_pairing(chart, omega, omega, p, step=fd_step)

    def grad_theta_sq(w, t):
        p = invert(w, t)
        return invariant_pairing(chart, theta, theta, p, step=fd_step)

    return QuotientFrame(
        chart=chart, omega=omega, theta=theta,
        grad_omega_sq=grad_omega_sq, grad_theta_sq=grad_theta_sq,
        invert=invert, rect=rect,
        label=label or f"{chart.label}/frame")


# ---------------------------------------------------------------------------
# characteristic-traced invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CauchyCurve:
    """Transversal data curve in the orbit space, parametrized by arc
    length on [0, length]."""

    point: Callable[[float], np.ndarray]
    length: float
    tangent: Optional[Callable[[float], np.ndarray]] = None

    def point_at(self, sigma):
        return np.asarray(self.point(sigma), dtype=float)

    def tangent_at(self, sigma):
        if self.tangent is not None:
            return np.asarray(self.tangent(sigma), dtype=float)
        h = 1e-6 * max(1.0, self.length)
        lo = max(0.0, sigma - h)
        hi = min(self.length, sigma + h)
        return (self.point_at(hi) - self.point_at(lo)) / (hi - lo)


def line_segment(p0, p1):
    """Arc-length parametrized straight Cauchy segment from p0 to p1."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    if length == 0.0:
        raise ValueError("degenerate segment")
    direction = (p1 - p0) / length
    return CauchyCurve(point=lambda sigma: p0 + sigma * direction,
                       length=length,
                       tangent=lambda sigma: direction)


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


class TracedInvariant:
    """Invariant function produced by the method of characteristics.

    The value at x is the arc-length parameter of the Cauchy curve at the
    foot of the characteristic through x: characteristics are integral
    curves of the horizontal projection of grad(omega), along which every
    solution of the defining PDE is constant.  Evaluation integrates the
    characteristic from x until it crosses the Cauchy curve and refines
    the crossing by Newton iteration, so values are smooth in x up to
    integrator error (a precomputed trace grid supplies fallbacks,
    diagnostics and the JSON dump).
    """

    gradient = None  # finite differences apply
    name = "traced-theta"

    def __init__(self, chart, cauchy, arc_grid, *, step=None, n_steps=400,
                 min_angle=1e-3, grad_floor=1e-10):
        self.chart = chart
        self.cauchy = cauchy
        self.sigmas = np.asarray(arc_grid, dtype=float)
        if self.sigmas.ndim != 1 or len(self.sigmas) < 2:
            raise ValueError("arc_grid must hold at least two arc-length values")
        self.step = float(step) if step is not None else cauchy.length / 400.0
        self.n_steps = int(n_steps)
        self.min_angle = float(min_angle)
        self.grad_floor = float(grad_floor)
        self._omega = chart.volume_fn()
        self._check_transversality()
        self._trace_grid()

    # -- characteristic field ------------------------------------------------

    def _field(self, x):
        """Horizontal projection of grad(omega): the characteristic velocity."""
        x1, x2 = x
        if not self.chart.domain(x1, x2):
            raise DomainError(
                f"characteristic left the chart domain at ({x1:.6g}, {x2:.6g})")
        b11, b12, b22 = _inverse_block2(self.chart, x1, x2)
        d1, d2 = self._omega.gradient_at(x1, x2)
        a = np.array([b11 * d1 + b12 * d2, b12 * d1 + b22 * d2])
        if a[0] * d1 + a[1] * d2 < self.grad_floor ** 2:
            raise DegenerateGradientError(
                f"|grad omega| below {self.grad_floor:g} at ({x1:.6g}, {x2:.6g})")
        return a

    def _check_transversality(self):
        for sigma in self.sigmas:
            p = self.cauchy.point_at(sigma)
            a = self._field(p)
            t = self.cauchy.tangent_at(sigma)
            sin_angle = abs(_cross2(a, t)) / (np.linalg.norm(a) * np.linalg.norm(t))
            if sin_angle < np.sin(self.min_angle):
                raise TransversalityError(
                    f"Cauchy curve tangent to a characteristic at arc length "
                    f"{sigma:.6g} (|sin angle| = {sin_angle:.2e})")

    def _rk4_step(self, x, h, sign):
        f = self._field
        k1 = sign * f(x)
        k2 = sign * f(x + 0.5 * h * k1)
        k3 = sign * f(x + 0.5 * h * k2)
        k4 = sign * f(x + h * k3)
        return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    def _trace_grid(self):
        n = self.n_steps
        J = len(self.sigmas)
        pts = np.empty((J, 2 * n + 1, 2))
        for j, sigma in enumerate(self.sigmas):
            x0 = self.cauchy.point_at(sigma)
            pts[j, n] = x0
            for sign, direction in ((+1.0, +1), (-1.0, -1)):
                x = x0.copy()
                for k in range(1, n + 1):
                    # characteristics may leave the domain before n steps;
                    # freeze the row there (harmless for bracketing)
                    try:
                        x = self._rk4_step(x, self.step, sign)
                    except (DomainError, DegenerateGradientError):
                        pass
                    pts[j, n + direction * k] = x
        self.grid_points = pts
        self.grid_omega = np.array(
            [[self.chart.volume_at(p) for p in row] for row in pts])
        self._flat = pts.reshape(-1, 2)
        self._flat_k = np.tile(np.arange(2 * n + 1), J)

    # -- evaluation -----------------------------------------------------------

    def _crossing_from(self, x, sign):
        """Trace the characteristic from x until it crosses the Cauchy
        polyline; returns (x_prev, x_next, sigma0, u0) with the crossing
        bracketed in the last step, or None."""
        h = self.step
        x_prev = np.asarray(x, dtype=float)
        for _ in range(self.n_steps):
            x_next = self._rk4_step(x_prev, h, sign)
            hit = self._segment_crossing(x_prev, x_next)
            if hit is not None:
                return (x_prev, x_next) + hit
            x_prev = x_next
        return None

    def _segment_crossing(self, a, b):
        """Intersection of the trace step [a, b] with the dense Cauchy
        polyline; returns (sigma0, u0) seeds for the Newton refinement."""
        d = b - a
        p = self._poly_pts[:-1]
        r = self._poly_segs
        pa0 = p[:, 0] - a[0]
        pa1 = p[:, 1] - a[1]
        denom = d[0] * r[:, 1] - d[1] * r[:, 0]
        ok = np.abs(denom) > 1e-300
        safe = np.where(ok, denom, 1.0)
        u = (pa0 * r[:, 1] - pa1 * r[:, 0]) / safe   # along the trace step
        w = (pa0 * d[1] - pa1 * d[0]) / safe         # along the poly segment
        tol = 1e-9
        mask = ok & (u >= -tol) & (u <= 1 + tol) & (w >= -tol) & (w <= 1 + tol)
        if not mask.any():
            return None
        idx = np.flatnonzero(mask)
        i = idx[int(np.argmin(u[idx]))]
        sig0 = self._poly_sig[i] + w[i] * (self._poly_sig[i + 1] - self._poly_sig[i])
        return float(np.clip(sig0, 0.0, self.cauchy.length)), float(u[i])

    def _proj_sigma(self, x):
        """Arc-length parameter of the polyline point nearest to x."""
        d = self._poly_pts - x
        i = int(np.argmin(np.einsum("ij,ij->i", d, d)))
        lo = max(0, i - 1)
        hi = min(len(self._poly_sig) - 1, i + 1)
        seg = self._poly_pts[hi] - self._poly_pts[lo]
        denom = seg @ seg
        if denom == 0.0:
            return float(self._poly_sig[i])
        u = ((x - self._poly_pts[lo]) @ seg) / denom
        sig = self._poly_sig[lo] + u * (self._poly_sig[hi] - self._poly_sig[lo])
        return float(np.clip(sig, 0.0, self.cauchy.length))

    def _on_curve_distance(self, x):
        d = self._poly_pts - x
        return float(np.sqrt(np.min(np.einsum("ij,ij->i", d, d))))

    @property
    def _poly_pts(self):
        if not hasattr(self, "_poly_cache"):
            sig = np.linspace(0.0, self.cauchy.length, 512)
            pts = np.array([self.cauchy.point_at(s) for s in sig])
            self._poly_cache = (sig, pts, np.diff(pts, axis=0))
        return self._poly_cache[1]

    @property
    def _poly_sig(self):
        _ = self._poly_pts
        return self._poly_cache[0]

    @property
    def _poly_segs(self):
        _ = self._poly_pts
        return self._poly_cache[2]

    def _refine_crossing(self, x_a, x_b, sign, sig0, u0):
        """Newton solve for the exact (trace parameter, sigma) crossing of
        the Hermite-interpolated trace step [x_a, x_b] with the curve."""
        h = self.step
        va = sign * self._field(x_a)
        vb = sign * self._field(x_b)

        def trace(u):  # cubic Hermite on [0, 1]
            u2, u3 = u * u, u * u * u
            h00 = 2 * u3 - 3 * u2 + 1
            h10 = u3 - 2 * u2 + u
            h01 = -2 * u3 + 3 * u2
            h11 = u3 - u2
            return (h00 * x_a + h10 * h * va + h01 * x_b + h11 * h * vb)

        def dtrace(u):
            u2 = u * u
            d00 = 6 * u2 - 6 * u
            d10 = 3 * u2 - 4 * u + 1
            d01 = -6 * u2 + 6 * u
            d11 = 3 * u2 - 2 * u
            return (d00 * x_a + d10 * h * va + d01 * x_b + d11 * h * vb)

        sig = sig0
        u = u0
        for _ in range(60):
            pt = trace(u)
            c = self.cauchy.point_at(sig)
            r = pt - c
            if np.max(np.abs(r)) < 1e-14 * max(1.0, float(np.max(np.abs(pt)))):
                break
            dtan = self.cauchy.tangent_at(sig)
            J = np.column_stack([dtrace(u), -dtan])
            det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            if abs(det) < 1e-14 * max(1.0, np.linalg.norm(J)):
                raise TransversalityError(
                    "characteristic nearly tangent to the Cauchy curve "
                    f"near arc length {sig:.6g}")
            du = (J[1, 1] * r[0] - J[0, 1] * r[1]) / det
            dsig = (-J[1, 0] * r[0] + J[0, 0] * r[1]) / det
            u -= du
            sig -= dsig
            u = float(np.clip(u, -0.5, 1.5))
        if sig < -1e-9 or sig > self.cauchy.length + 1e-9:
            raise DomainError(
                f"characteristic meets the data curve outside its arc range "
                f"(sigma = {sig:.6g})")
        return float(np.clip(sig, 0.0, self.cauchy.length))

    def _preferred_sign(self, x):
        d = self._flat - np.asarray(x)
        i = int(np.argmin(np.einsum("ij,ij->i", d, d)))
        return -1.0 if self._flat_k[i] >= self.n_steps else +1.0

    def __call__(self, x1, x2):
        return self.value(x1, x2)

    def value(self, x1, x2):
        x = np.array([x1, x2], dtype=float)
        if self._on_curve_distance(x) < 1e-12:
            return self._proj_sigma(x)
        first = self._preferred_sign(x)
        for sign in (first, -first):
            try:
                hit = self._crossing_from(x, sign)
            except (DomainError, DegenerateGradientError):
                hit = None
            if hit is not None:
                x_a, x_b, sig0, u0 = hit
                return self._refine_crossing(x_a, x_b, sign, sig0, u0)
        raise DomainError(
            f"point ({x1:.6g}, {x2:.6g}) is outside the swept region of the "
            "characteristic grid")

    # -- diagnostics ----------------------------------------------------------

    def sample_swept(self, rng, n):
        """n random grid nodes strictly inside the swept region."""
        J, K, _ = self.grid_points.shape
        jj = rng.integers(1, J - 1, size=n)
        kk = rng.integers(K // 8, K - K // 8, size=n)
        return self.grid_points[jj, kk]

    def dump_grid(self, path):
        """JSON debugging dump: rows of (omega, theta, x1, x2)."""
        rows = []
        J, K, _ = self.grid_points.shape
        for j in range(J):
            for k in range(K):
                x1, x2 = self.grid_points[j, k]
                rows.append([float(self.grid_omega[j, k]), float(self.sigmas[j]),
                             float(x1), float(x2)])
        payload = {"label": self.name, "columns": ["omega", "theta", "x1", "x2"],
                   "rows": rows}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
        return payload


def solve_orthogonal_invariant(chart, cauchy, arc_grid, *, step=None,
                               n_steps=400, min_angle=1e-3):
    """Trace an invariant theta with g(grad omega, grad theta) = 0.

    theta equals the Cauchy arc-length parameter on the data curve and is
    constant along characteristics (integral curves of the horizontal
    projection of grad omega).  The data curve must be transversal to the
    characteristics; tangency raises TransversalityError.
    """
    return TracedInvariant(chart, cauchy, arc_grid, step=step,
                           n_steps=n_steps, min_angle=min_angle)
