"""Command-line interface, run configuration, and file exporters.

Subcommands:
    family    generate + verify a family from a JSON config
    demo      canned configurations (catenoid | helicoid | bcv)
    natural   extract natural parameters from a lifted-curve CSV
    verify    re-check a serialized member JSON
    mesh      re-export a serialized member as an OBJ mesh

Exit status: 0 on success, 2 when --strict and a verification fails,
1 on configuration or domain errors (single-line diagnostic on stderr).
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import bour, natural, spaces, verify
from .errors import BourgenError, ConfigError
from .expressions import parse_expression
from .natural import GeneratrixMetric, LiftedCurve

DEMOS = {
    "catenoid": {
        "space": {"kind": "euclidean_rotational", "a": 0.0},
        "generatrix": "sqrt(s^2+1)",
        "m_values": [1.0],
        "epsilon": 1,
        "s_range": [-2.0, 2.0],
        "step": 0.01,
        "anchor": 0.0,
    },
    "helicoid": {
        "space": {"kind": "euclidean_helicoidal", "a": 1.0},
        "generatrix": "sqrt(s^2+1)",
        "m_values": [1.0],
        "epsilon": 1,
        "s_range": [0.5, 2.0],
        "step": 0.005,
    },
    "bcv": {
        "space": {"kind": "bcv_helicoidal", "a": 1.0, "kappa": 1.0, "tau": 1.0},
        "generatrix": "sqrt(s^2+4)",
        "m_values": [1.0],
        "epsilon": 1,
        "s_range": [0.0, 1.0],
        "step": 0.005,
    },
}


@dataclass
class RunConfig:
    """Validated run configuration (see README for the JSON schema)."""

    space: spaces.SpaceSpec
    generatrix: object  # GeneratrixMetric factory input
    m_values: list
    epsilon: int = 1
    s_range: tuple = (0.0, 1.0)
    step: float = 0.005
    anchor: Optional[float] = None
    theta0: float = 0.0
    integrator: str = "rk4"
    s_count: int = 21
    t_count: int = 21
    t_range: tuple = (0.0, 1.0)
    isometry_tol: float = 1e-5
    cross_tol: float = 1e-5
    fd_step: float = 1e-5
    auto_shrink: bool = True
    seed: int = 20240901

    @classmethod
    def from_dict(cls, d):
        try:
            space = spaces.SpaceSpec.from_dict(d["space"])
        except KeyError:
            raise ConfigError("config needs a 'space' entry")
        except BourgenError as exc:
            raise ConfigError(str(exc))
        gen = d.get("generatrix")
        if gen is None:
            raise ConfigError("config needs a 'generatrix' entry")
        m_values = [float(m) for m in d.get("m_values", [1.0])]
        if any(m <= 0 for m in m_values):
            raise ConfigError("m must be positive")
        if len(set(m_values)) != len(m_values):
            raise ConfigError("m values must be distinct")
        grid = d.get("grid", {})
        tol = d.get("tolerances", {})
        cfg = cls(
            space=space, generatrix=gen, m_values=m_values,
            epsilon=int(d.get("epsilon", 1)),
            s_range=tuple(float(x) for x in d.get("s_range", (0.0, 1.0))),
            step=float(d.get("step", 0.005)),
            anchor=None if d.get("anchor") is None else float(d["anchor"]),
            theta0=float(d.get("theta0", 0.0)),
            integrator=str(d.get("integrator", "rk4")),
            s_count=int(grid.get("s_count", 21)),
            t_count=int(grid.get("t_count", 21)),
            t_range=tuple(float(x) for x in grid.get("t_range", (0.0, 1.0))),
            isometry_tol=float(tol.get("isometry", 1e-5)),
            cross_tol=float(tol.get("cross_check", 1e-5)),
            fd_step=float(tol.get("fd_step", 1e-5)),
            auto_shrink=bool(d.get("auto_shrink", True)),
            seed=int(d.get("seed", 20240901)))
        if cfg.epsilon not in (1, -1):
            raise ConfigError("epsilon must be +1 or -1")
        if cfg.s_count < 2 or cfg.t_count < 2:
            raise ConfigError("grid counts must be at least 2")
        if not cfg.s_range[0] < cfg.s_range[1]:
            raise ConfigError("empty s_range")
        if isinstance(gen, str):
            try:
                parse_expression(gen)
            except BourgenError as exc:
                raise ConfigError(f"generatrix does not parse: {exc}")
        return cfg

    def make_generatrix(self):
        gen = self.generatrix
        if isinstance(gen, str):
            try:
                expr = parse_expression(gen)
            except BourgenError as exc:
                raise ConfigError(f"generatrix does not parse: {exc}")
            return GeneratrixMetric.from_expression(expr, self.s_range)
        if isinstance(gen, dict) and "csv" in gen:
            U = GeneratrixMetric.from_csv(gen["csv"])
            sys.stderr.write(
                "note: CSV generatrix uses monotone-cubic interpolation with "
                "interpolated U'; radicand checks are approximate\n")
            return U
        raise ConfigError("generatrix must be an expression string or "
                          "{'csv': path}")


# ---------------------------------------------------------------------------
# exporters
# ---------------------------------------------------------------------------

def write_profile_csv(member, path):
    rows = np.column_stack([
        member.s, member.x1, member.x2, member.omega, member.theta,
        member.V_samples])
    np.savetxt(path, rows, delimiter=",",
               header="s,x1,x2,omega,theta,V", comments="")


def write_obj(member, space, path, s_count=41, t_count=41, t_range=(0.0, 1.0)):
    """Triangulated (s, t) grid mesh in ambient cartesian coordinates.

    Vertices are laid out row-major in s; each grid cell becomes two
    triangles.
    """
    s_values = np.linspace(member.s_range[0], member.s_range[1], s_count)
    t_values = np.linspace(t_range[0], t_range[1], t_count)
    lines = [f"# bourgen member m={member.m:.17g}"]
    for s in s_values:
        for t in t_values:
            p = member.map(float(s), float(t))
            x, y, z = spaces.mesh_xyz(space, p)
            lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    for i in range(s_count - 1):
        for j in range(t_count - 1):
            v00 = i * t_count + j + 1
            v10 = (i + 1) * t_count + j + 1
            v11 = (i + 1) * t_count + j + 2
            v01 = i * t_count + j + 2
            lines.append(f"f {v00} {v10} {v11}")
            lines.append(f"f {v00} {v11} {v01}")
    Path(path).write_text("\n".join(lines) + "\n")


def _write_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def _member_name(m):
    return f"member_m{m:g}".replace(".", "p")


def _process_member(cfg, U, frame, m, out_dir):
    result = {"m": m, "requested_s_range": list(cfg.s_range)}
    s_range = cfg.s_range
    if cfg.auto_shrink:
        s_range = bour.feasible_s_range(U, m, frame, cfg.s_range,
                                        theta_ref=cfg.theta0, step=cfg.step)
        result["s_range"] = list(s_range)
        result["shrunk"] = s_range != cfg.s_range
    params = bour.BourParams(m=m, s_range=s_range, step=cfg.step,
                             epsilon=cfg.epsilon, integrator=cfg.integrator,
                             anchor=cfg.anchor if cfg.anchor is not None
                             and s_range[0] <= cfg.anchor <= s_range[1] else None)
    member = bour.generate_member(U, params, frame, cfg.theta0, space=cfg.space)

    # closed form + cross-check (every built-in space has one)
    anchor_s = member.metadata["anchor"]
    if cfg.space.kind == "bcv_helicoidal":
        closed = spaces.bcv_closed_form(U, m, cfg.epsilon, cfg.space.kappa,
                                        cfg.space.tau, cfg.space.a,
                                        member.s, anchor=anchor_s)
    else:
        closed = spaces.r3_closed_form(U, m, cfg.epsilon, cfg.space.a,
                                       member.s, anchor=anchor_s)
    cross = verify.cross_check(closed, member)
    result["cross_check"] = cross.to_dict()
    result["cross_check_passed"] = bool(
        max(cross.rho_dev, cross.angle_dev) <= cfg.cross_tol)

    h = cfg.fd_step
    s_grid = np.linspace(s_range[0] + 2 * h, s_range[1] - 2 * h, cfg.s_count)
    t_grid = np.linspace(cfg.t_range[0], cfg.t_range[1], cfg.t_count)
    report = verify.isometry_report(frame.chart, member, U,
                                    (s_grid, t_grid), tol=cfg.isometry_tol, h=h)
    result["isometry"] = report.to_dict()
    result["passed"] = bool(report.passed and result["cross_check_passed"])

    name = _member_name(m)
    write_profile_csv(member, out_dir / f"{name}_profile.csv")
    member.to_json(out_dir / f"{name}.json")
    write_obj(member, cfg.space, out_dir / f"{name}.obj",
              t_range=cfg.t_range)
    result["artifacts"] = [f"{name}_profile.csv", f"{name}.json", f"{name}.obj"]
    return result


def run(cfg, out_dir, strict=False):
    """Generate, verify and export every requested member.

    Returns (exit_code, report_dict); the report is also written to
    report.json in the output directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    U = cfg.make_generatrix()
    frame = spaces.builtin_frame(cfg.space)
    report = {"space": cfg.space.to_dict(),
              "generatrix": cfg.generatrix if isinstance(cfg.generatrix, str)
              else "csv",
              "seed": cfg.seed,
              "members": []}
    with ThreadPoolExecutor(max_workers=min(4, len(cfg.m_values))) as pool:
        futures = [pool.submit(_process_member, cfg, U, frame, m, out_dir)
                   for m in cfg.m_values]
        for fut in futures:
            report["members"].append(fut.result())
    report["all_passed"] = bool(all(r["passed"] for r in report["members"]))
    _write_json(report, out_dir / "report.json")
    for r in report["members"]:
        status = "pass" if r["passed"] else "FAIL"
        print(f"m={r['m']:g}: {status} "
              f"(isometry max dev {max(r['isometry']['max_E_dev'], r['isometry']['max_F_dev'], r['isometry']['max_G_dev']):.3e}, "
              f"cross-check rho/angle dev {r['cross_check']['rho_dev']:.3e}/"
              f"{r['cross_check']['angle_dev']:.3e})")
    if not report["all_passed"] and strict:
        return 2, report
    return 0, report


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_family(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    cfg = _apply_overrides(RunConfig.from_dict(raw), args)
    code, _ = run(cfg, args.out, strict=args.strict)
    return code


def _cmd_demo(args):
    cfg = _apply_overrides(RunConfig.from_dict(DEMOS[args.name]), args)
    code, _ = run(cfg, args.out, strict=args.strict)
    return code


def _apply_overrides(cfg, args):
    if getattr(args, "step", None) is not None:
        cfg.step = args.step
    if getattr(args, "tol", None) is not None:
        cfg.isometry_tol = args.tol
        cfg.cross_tol = args.tol
    if getattr(args, "fd_step", None) is not None:
        cfg.fd_step = args.fd_step
    return cfg


def _cmd_natural(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    space = spaces.SpaceSpec.from_dict(raw["space"])
    chart = spaces.make_chart(space)
    curve = LiftedCurve.from_csv(args.curve)
    coeffs = natural.pullback_coefficients(chart, curve)
    nat = natural.to_natural(coeffs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nat.U.to_csv(out / "generatrix.csv")
    surface = natural.ReparametrizedSurface(curve, nat)
    h = 1e-5
    s_grid = np.linspace(nat.s_samples[0] + 2 * h, nat.s_samples[-1] - 2 * h, 15)
    rep = verify.isometry_report(chart, surface, nat.U, (s_grid, [0.0, 0.5]),
                                 tol=args.tol or 1e-5, h=h)
    payload = {"s_range": [float(nat.s_samples[0]), float(nat.s_samples[-1])],
               "isometry": rep.to_dict()}
    _write_json(payload, out / "natural_report.json")
    print(f"natural parameters extracted: s in [{nat.s_samples[0]:.6g}, "
          f"{nat.s_samples[-1]:.6g}]; reparametrization "
          f"{'passes' if rep.passed else 'FAILS'} the isometry check")
    if args.strict and not rep.passed:
        return 2
    return 0


def _cmd_verify(args):
    member = bour.SurfaceMember.from_json(args.member)
    if member.space is None:
        raise ConfigError("member file carries no space spec; cannot rebuild "
                          "the chart for verification")
    if member.U is None:
        raise ConfigError("member file carries no generatrix")
    chart = spaces.make_chart(member.space)
    h = args.fd_step or 1e-5
    s_grid = np.linspace(member.s_range[0] + 2 * h, member.s_range[1] - 2 * h, 15)
    rep = verify.isometry_report(chart, member, member.U, (s_grid,
                                                           np.linspace(0, 1, 7)),
                                 tol=args.tol or 1e-5, h=h)
    print(f"member m={member.m:g}: "
          f"{'pass' if rep.passed else 'FAIL'} "
          f"(max devs E {rep.max_E_dev:.3e}, F {rep.max_F_dev:.3e}, "
          f"G {rep.max_G_dev:.3e})")
    if args.strict and not rep.passed:
        return 2
    return 0


def _cmd_mesh(args):
    member = bour.SurfaceMember.from_json(args.member)
    if member.space is None:
        raise ConfigError("member file carries no space spec; cannot embed")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (Path(args.member).stem + ".obj")
    write_obj(member, member.space, path)
    print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bourgen",
        description="Generate and verify one-parameter families of isometric "
                    "screw-invariant surfaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--strict", action="store_true",
                       help="exit 2 when a verification fails")
        p.add_argument("--step", type=float, default=None,
                       help="override the integrator step")
        p.add_argument("--tol", type=float, default=None,
                       help="override verification tolerances")
        p.add_argument("--fd-step", dest="fd_step", type=float, default=None,
                       help="finite-difference step of the form measurements "
                            "(default 1e-5)")

    p = sub.add_parser("family", help="generate a family from a config")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_family)

    p = sub.add_parser("demo", help="run a canned demo")
    p.add_argument("name", choices=sorted(DEMOS))
    common(p)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("natural", help="extract natural parameters from a curve CSV")
    p.add_argument("--config", required=True, help="config carrying the space")
    p.add_argument("--curve", required=True, help="CSV with columns u,x1,x2,x3")
    common(p)
    p.set_defaults(func=_cmd_natural)

    p = sub.add_parser("verify", help="re-check a serialized member")
    p.add_argument("member", help="member JSON file")
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("mesh", help="re-export a serialized member as OBJ")
    p.add_argument("member", help="member JSON file")
    common(p)
    p.set_defaults(func=_cmd_mesh)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BourgenError as exc:
        stage = type(exc).__name__
        sys.stderr.write(f"error: {stage}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
