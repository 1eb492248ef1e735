"""``randers-cut`` command line.

Exit codes: 0 ok, 1 a verification failed, 2 bad input, 3 the theorem's
hypotheses do not hold for the requested surface.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import checks
from .conjcut import (ArcKind, CutLocusArc, classify_curvature, cut_locus_equator_case,
                      cut_locus_theorem)
from .errors import (ConvexityError, DomainError, HypothesisError, NumericalCornerError,
                     UnsupportedProfileError)
from .geodesics import flow_deviate, shoot_h_geodesic
from .halfperiod import (convexity_scan, half_period_curve, numerical_derivatives,
                         threshold_bracket)
from .oracle import (build_distance_field, densify, empirical_cut_locus, h_metric_distance,
                     hausdorff)
from .surfaces import (Family, NavigationData, ProfileSpec, load_surface_spec, max_wind,
                       nav_to_json, symmetry_residual)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_HYPOTHESIS = 0, 1, 2, 3

_INPUT_ERRORS = (DomainError, ConvexityError, UnsupportedProfileError, ValueError, KeyError,
                 OSError, json.JSONDecodeError)


class InputError(Exception):
    pass


# -- parsing -------------------------------------------------------------------

_ANGLE = re.compile(r"^\s*([+-]?[\d.]*)\s*\*?\s*(pi)?\s*(?:/\s*([\d.]+))?\s*$")


def parse_angle(text: str) -> float:
    """Radians from ``"1.2"``, ``"pi"``, ``"pi/3"``, ``"2pi/3"``, ``"-3*pi/4"`` or ``"1/3"``."""
    m = _ANGLE.match(text.lower())
    if not m or not (m.group(1) or m.group(2)) or m.group(1) in ("+", "-", ".") and not m.group(2):
        raise InputError(f"cannot parse angle {text!r}")
    coef_s, has_pi, den_s = m.groups()
    try:
        coef = Fraction(coef_s) if coef_s not in ("", "+", "-") else Fraction(-1 if coef_s == "-" else 1)
        den = Fraction(den_s) if den_s else Fraction(1)
    except ValueError as exc:
        raise InputError(f"cannot parse angle {text!r}") from exc
    if den == 0:
        raise InputError(f"zero denominator in {text!r}")
    q = coef / den
    return float(q) * math.pi if has_pi else float(q)


def parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"a point is 'r,theta', got {text!r}")
    return parse_angle(parts[0]), parse_angle(parts[1])


@dataclass
class RunConfig:
    command: str
    nav: NavigationData | None
    out: Path | None
    resolution: int
    seed: int
    args: argparse.Namespace = field(repr=False)


def _surface(args) -> NavigationData | None:
    if args.spec:
        path = Path(args.spec).resolve()
        nav = load_surface_spec(path)
    elif args.family:
        fam = Family(args.family)
        if fam is Family.ROUND:
            spec = ProfileSpec.round(args.radius)
        elif fam is Family.EXAMPLE1:
            spec = ProfileSpec.example1(_need(args.lam, "--lambda"))
        elif fam is Family.EXAMPLE2:
            spec = ProfileSpec.example2(_need(args.lam, "--lambda"))
        else:
            raise InputError("custom profiles are read with --spec")
        nav = NavigationData(spec, 0.0)
    else:
        return None
    if args.mu is not None:
        nav = nav.with_mu(args.mu)
    return nav


def _need(value, flag):
    if value is None:
        raise InputError(f"{flag} is required")
    return value


def make_config(args) -> RunConfig:
    out = Path(args.out).resolve() if args.out else None
    return RunConfig(args.command, _surface(args), out, args.resolution, args.seed, args)


# -- output ----------------------------------------------------------------------

def write_atomic(path: Path, write: Callable[[Path], None]) -> Path:
    """Run ``write`` on a temporary sibling of ``path`` and rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=path.suffix)
    os.close(fd)
    try:
        write(Path(tmp))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def write_json(path: Path, obj) -> Path:
    def dump(p):
        with open(p, "w") as fh:
            json.dump(obj, fh, indent=2, default=_jsonable)
            fh.write("\n")
    return write_atomic(path, dump)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def _emit(cfg: RunConfig, name: str, obj) -> None:
    print(json.dumps(obj, indent=2, default=_jsonable))
    if cfg.out:
        write_json(cfg.out / name, obj)


def _require_nav(cfg: RunConfig) -> NavigationData:
    if cfg.nav is None:
        raise InputError("a surface is required: --spec PATH or --family NAME")
    return cfg.nav


# -- subcommands -------------------------------------------------------------------

def cmd_surface_info(cfg: RunConfig) -> int:
    nav = _require_nav(cfg)
    spec = nav.profile
    r = np.linspace(0, 2 * spec.a, 4001)
    m = spec.m(r)
    cls = classify_curvature(spec)
    report = {
        "surface": nav_to_json(nav),
        "a": spec.a,
        "m_max": float(spec.m_max),
        "m_argmax": float(r[int(np.argmax(m))]),
        "m_min_interior": float(m[1:-1].min()),
        "mu_max": max_wind(spec),
        "curvature_class": cls.value.value,
        "curvature_class_stable": cls.stable,
        "symmetry_residual": symmetry_residual(spec),
    }
    _emit(cfg, "surface_info.json", report)
    return EXIT_OK


def cmd_geodesic(cfg: RunConfig) -> int:
    nav = _require_nav(cfg)
    a = cfg.args
    start = parse_point(a.point)
    spec = nav.profile
    length = parse_angle(a.length) if a.length else 4 * spec.a
    s = np.linspace(0, length, max(cfg.resolution, 2))
    path = shoot_h_geodesic(spec, start, parse_angle(a.nu), a.dr_sign, length, s_eval=s)
    if a.direction != "h":
        path = flow_deviate(path, nav.mu, a.direction)
    summary = {"kind": path.kind.value, "nu": path.nu, "mu": path.mu, "n": len(path),
               "end": [float(path.r[-1]), float(path.theta[-1])],
               "turning_s": list(path.turning_s),
               "max_clairaut_residual": float(np.max(np.abs(path.clairaut_residual())))}
    if cfg.out:
        write_atomic(cfg.out / "geodesic.csv", path.to_csv)
    _emit(cfg, "geodesic.json", summary)
    return EXIT_OK


def cmd_half_period(cfg: RunConfig) -> int:
    nav = _require_nav(cfg)
    top = nav.profile.m_at_equator()
    nu = top * np.linspace(0, 1, cfg.resolution + 2)[1:-1]
    curve = half_period_curve(nav, nu, convention=cfg.args.convention)
    if cfg.out:
        write_atomic(cfg.out / "half_period.csv", curve.to_csv)
        if curve.d2 is not None:
            d2H = numerical_derivatives(curve.H, nu[1] - nu[0], 2)
            write_atomic(cfg.out / "half_period_d2.csv",
                         lambda p: curve.second_derivative_csv(p, d2H, curve.d2))
    _emit(cfg, "half_period.json", {"n": len(nu), "mu": nav.mu, "convention": cfg.args.convention,
                                    "H_range": [float(curve.H.min()), float(curve.H.max())]})
    return EXIT_OK


def cmd_scan_convexity(cfg: RunConfig) -> int:
    a = cfg.args
    if a.scan_family not in ("example1", "example2"):
        raise InputError("scan-convexity needs --family example1 or example2")
    n = int(round((a.lam_max - a.lam_min) / a.step)) + 1
    if n < 1:
        raise InputError("empty lambda range")
    lams = np.round(a.lam_min + a.step * np.arange(n), 10)
    rows = convexity_scan(a.scan_family, lams, source=a.source)
    if cfg.out:
        def dump(p):
            with open(p, "w") as fh:
                fh.write("lambda,mu,d2_min,d2_max,sign\n")
                for row in rows:
                    fh.write(f"{row.lam:.10g},{row.mu:.12e},{row.d2_min:.12e},"
                             f"{row.d2_max:.12e},{row.sign}\n")
        write_atomic(cfg.out / f"convexity_{a.scan_family}.csv", dump)
    bracket = threshold_bracket(rows)
    _emit(cfg, f"convexity_{a.scan_family}.json", {
        "family": a.scan_family, "source": a.source,
        "rows": [{"lambda": r.lam, "sign": r.sign, "d2_min": r.d2_min, "d2_max": r.d2_max}
                 for r in rows],
        "threshold_bracket": list(bracket) if bracket else None,
    })
    return EXIT_OK


def theorem_arc(nav: NavigationData, x, n_samples: int = 64) -> CutLocusArc:
    """Curvature-class theorem, falling back to the equator-case theorem."""
    try:
        return cut_locus_theorem(nav, x, n_samples)
    except HypothesisError as first:
        try:
            return cut_locus_equator_case(nav, x, n_samples)
        except HypothesisError:
            raise first from None


def compare_cut_sets(nav: NavigationData, arc: CutLocusArc, emp_points) -> float:
    """Hausdorff distance between empirical points and the (densified) prediction."""
    ref = arc.samples if arc.kind is ArcKind.SINGLE_POINT else densify(arc.samples, 800)
    return hausdorff(nav.profile, emp_points, ref)


def agreement(nav: NavigationData, arc: CutLocusArc, emp_points, tol: float) -> dict:
    """Verdict of the oracle against a prediction.

    A single point must be within ``tol`` in Hausdorff distance.  For an arc
    the points must lie within ``tol`` of the predicted curve and the arc's
    ends must match within ``2 tol``; the Hausdorff distance to the arc also
    counts gaps between pencil samples, so it is reported but not judged.
    """
    pts = np.asarray(emp_points, dtype=float).reshape(-1, 2)
    out = {"hausdorff": compare_cut_sets(nav, arc, pts)}
    if arc.kind is ArcKind.SINGLE_POINT or len(pts) == 0:
        out["pass"] = bool(out["hausdorff"] < tol)
        return out
    spec = nav.profile
    if arc.kind is ArcKind.PARALLEL_SUBARC:
        lo, hi = arc.theta_interval
        mid = 0.5 * (lo + hi)
        th = mid + np.remainder(pts[:, 1] - mid + math.pi, 2 * math.pi) - math.pi
        off = float(np.max(np.abs(pts[:, 0] - arc.r)))
        ext = float(spec.m(arc.r)) * max(abs(th.min() - lo), abs(th.max() - hi))
    else:
        off = float(h_metric_distance(spec, pts, densify(arc.samples, 800)).min(axis=1).max())
        lo, hi = arc.r_interval
        ext = max(abs(pts[:, 0].min() - lo), abs(pts[:, 0].max() - hi))
    out.update(off_curve=off, extent_error=ext)
    out["pass"] = bool(off < tol and ext < 2 * tol)
    return out


def cmd_cut_locus(cfg: RunConfig) -> int:
    nav = _require_nav(cfg)
    a = cfg.args
    x = parse_point(_need(a.point, "--point"))
    result: dict = {"surface": nav_to_json(nav), "point": list(x), "mode": a.mode}
    arc = None
    code = EXIT_OK
    if a.mode in ("theorem", "both"):
        try:
            arc = theorem_arc(nav, x)
            result["theorem"] = arc.to_json()
            if cfg.out:
                write_json(cfg.out / "cut_theorem.json", arc.to_json())
        except HypothesisError as exc:
            result["theorem_error"] = f"{exc}; rerun with --mode oracle"
            code = EXIT_HYPOTHESIS
            if a.mode == "theorem":
                print(json.dumps(result, indent=2), file=sys.stderr)
                return code
    if a.mode in ("oracle", "both"):
        t0 = time.perf_counter()
        fld = build_distance_field(nav, x, cfg.resolution, 2 * cfg.resolution, a.stencil)
        t_field = time.perf_counter() - t0
        emp = empirical_cut_locus(nav, x, a.pencil, fld)
        result["oracle"] = {"n_points": len(emp), "tol_mesh": emp.tol, "field_seconds": t_field,
                            "r_range": [float(emp.r.min()), float(emp.r.max())] if len(emp) else None}
        if cfg.out:
            write_atomic(cfg.out / "cut_oracle.csv", emp.to_csv)
            if a.export_field:
                write_atomic(cfg.out / "distance_field.csv", fld.to_csv)
        if arc is not None:
            verdict = agreement(nav, arc, emp.points(), emp.tol)
            result.update(verdict)
            detail = " ".join(f"{k} {v:.6f}" for k, v in verdict.items() if k != "pass")
            print(f"{detail} tol_mesh {emp.tol:.6f} {'PASS' if verdict['pass'] else 'FAIL'}",
                  file=sys.stderr)
            if not verdict["pass"]:
                code = EXIT_FAIL
    _emit(cfg, "cut_locus.json", result)
    return code


def cmd_verify(cfg: RunConfig) -> int:
    navs = [cfg.nav] if cfg.nav is not None else None
    results = checks.run_suite(navs, seed=cfg.seed, n_shots=cfg.args.shots,
                               include_closed_forms=navs is None)
    failed = [r.name for r in results if not r.passed]
    report = {"seed": cfg.seed, "passed": not failed, "failed": failed,
              "checks": [r.to_json() for r in results]}
    _emit(cfg, "verify.json", report)
    if failed:
        print("failed invariants:\n  " + "\n  ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "surface-info": cmd_surface_info,
    "geodesic": cmd_geodesic,
    "half-period": cmd_half_period,
    "scan-convexity": cmd_scan_convexity,
    "cut-locus": cmd_cut_locus,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="surface spec JSON")
    common.add_argument("--family", choices=[f.value for f in Family],
                        help="closed-form surface instead of --spec")
    common.add_argument("--lambda", dest="lam", type=float, help="family parameter")
    common.add_argument("--radius", type=float, default=1.0)
    common.add_argument("--mu", type=float, help="wind strength, overrides the surface file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--resolution", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="randers-cut", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("surface-info", parents=[common])
    g = sub.add_parser("geodesic", parents=[common])
    g.add_argument("--point", required=True, help="start 'r,theta', e.g. 'pi/3,0'")
    g.add_argument("--nu", required=True, help="Clairaut constant")
    g.add_argument("--dr-sign", type=int, default=-1, choices=(-1, 0, 1))
    g.add_argument("--length", help="h-arclength, default 4a")
    g.add_argument("--direction", choices=("h", "forward", "backward"), default="forward")
    hp = sub.add_parser("half-period", parents=[common])
    hp.add_argument("--convention", choices=("exact", "squared"), default="exact")
    sc = sub.add_parser("scan-convexity", parents=[common])
    sc.add_argument("--lam-min", type=float, required=True)
    sc.add_argument("--lam-max", type=float, required=True)
    sc.add_argument("--step", type=float, required=True)
    sc.add_argument("--source", choices=("analytic", "numeric", "exact"), default="analytic")
    cl = sub.add_parser("cut-locus", parents=[common])
    cl.add_argument("--point", help="source 'r,theta'")
    cl.add_argument("--mode", choices=("theorem", "oracle", "both"), default="theorem")
    cl.add_argument("--stencil", type=int, default=80, choices=(8, 16, 32, 48, 80))
    cl.add_argument("--pencil", type=int, default=256)
    cl.add_argument("--export-field", action="store_true")
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--shots", type=int, default=20, help="random geodesics per surface")
    return p


_DEFAULT_RESOLUTION = {"geodesic": 1025, "half-period": 199, "cut-locus": 512}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.resolution is None:
        args.resolution = _DEFAULT_RESOLUTION.get(args.command, 256)
    if args.command == "scan-convexity":
        args.scan_family, args.family = args.family, None
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](cfg)
    except HypothesisError as exc:
        print(f"hypothesis not satisfied: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NumericalCornerError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, *_INPUT_ERRORS) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
