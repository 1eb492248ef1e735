"""Theorem cut loci against the mesh oracle for the closed-form test cases.

For each case prints how far the empirical cut points sit off the predicted
curve, the error at the arc ends, the Hausdorff distance to the densified
prediction and the resulting verdict, at each requested resolution.  With
several resolutions the Hausdorff column is the mesh convergence table.
"""
import argparse
import math
import time
from dataclasses import dataclass, field
from pathlib import Path


from randers_cut.cli import agreement, theorem_arc
from randers_cut.oracle import build_distance_field, empirical_cut_locus
from randers_cut.surfaces import NavigationData, ProfileSpec

CASES = {
    "round mu=0.25 x=(pi/3,0)": (ProfileSpec.round(1.0), 0.25, (math.pi / 3, 0.0)),
    "round mu=0.1 x=(pi/3,0)": (ProfileSpec.round(1.0), 0.1, (math.pi / 3, 0.0)),
    "example2 l=0.5 mu=0.2 x=(pi/3,0)": (ProfileSpec.example2(0.5), 0.2, (math.pi / 3, 0.0)),
    "example1 l=1 mu=1/(2 sqrt2) x=(pi/3,0)": (ProfileSpec.example1(1.0), 0.5 / math.sqrt(2),
                                               (math.pi / 3, 0.0)),
    "example1 l=1 mu=1/(2 sqrt2) x=(pi/2,0)": (ProfileSpec.example1(1.0), 0.5 / math.sqrt(2),
                                               (math.pi / 2, 0.0)),
    "example2 l=0.5 mu=0 x=(pi/2,0)": (ProfileSpec.example2(0.5), 0.0, (math.pi / 2, 0.0)),
}


@dataclass
class Config:
    resolutions: list = field(default_factory=lambda: [(512, 80)])
    pencil: int = 256
    out: Path | None = None


def run(cfg: Config) -> None:
    print(f"{'case':42s} {'n_r':>5s} {'k':>3s} {'points':>6s} {'off':>7s} {'ends':>7s} "
          f"{'hausdorff':>9s} {'tol_mesh':>8s} {'verdict':>7s} {'secs':>5s}")
    for name, (spec, mu, x) in CASES.items():
        nav = NavigationData(spec, mu)
        arc = theorem_arc(nav, x)
        for n_r, k in cfg.resolutions:
            t0 = time.perf_counter()
            fld = build_distance_field(nav, x, n_r, 2 * n_r, k)
            emp = empirical_cut_locus(nav, x, cfg.pencil, fld)
            secs = time.perf_counter() - t0
            v = agreement(nav, arc, emp.points(), emp.tol)
            off, ends = v.get("off_curve", float("nan")), v.get("extent_error", float("nan"))
            print(f"{name:42s} {n_r:5d} {k:3d} {len(emp):6d} {off:7.4f} {ends:7.4f} "
                  f"{v['hausdorff']:9.4f} {emp.tol:8.4f} {'PASS' if v['pass'] else 'FAIL':>7s} "
                  f"{secs:5.0f}")
            if cfg.out:
                cfg.out.mkdir(parents=True, exist_ok=True)
                tag = name.split()[0] + f"_{x[0]:.3f}_{mu:.3f}_{n_r}_{k}"
                emp.to_csv(cfg.out / f"cut_{tag}.csv")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--convergence", action="store_true",
                   help="run 128/8, 256/16 and 512/32 instead of 512/80")
    p.add_argument("--pencil", type=int, default=256)
    p.add_argument("--out", type=Path)
    a = p.parse_args()
    res = [(128, 8), (256, 16), (512, 32)] if a.convergence else [(512, 80)]
    run(Config(resolutions=res, pencil=a.pencil, out=a.out))
