"""Half-period curves H, H_F+ and H_F- with second derivatives for the two closed-form families.

Writes one CSV per (family, lambda) into the output directory; these are the
data behind the convexity plots (second derivative of H_F+ against nu).
"""
import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from randers_cut.halfperiod import closed_form_HF_plus, example_profile, half_period_curve
from randers_cut.surfaces import NavigationData, max_wind


@dataclass
class Config:
    out: Path = Path("results/half_period")
    n_nu: int = 399
    mu_fraction: float = 0.5
    convention: str = "squared"
    cases: tuple = (("example1", 1.0), ("example1", 1.5), ("example1", 1.6),
                    ("example2", 0.5), ("example2", 0.6), ("example2", 0.65))


def run(cfg: Config) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    for family, lam in cfg.cases:
        spec = example_profile(family, lam)
        nav = NavigationData(spec, cfg.mu_fraction * max_wind(spec))
        nu = spec.m_at_equator() * np.linspace(0, 1, cfg.n_nu + 2)[1:-1]
        curve = half_period_curve(nav, nu, convention=cfg.convention)
        exact_d2 = closed_form_HF_plus(nav, nu, 2)
        inner = slice(2, -2)
        err = np.max(np.abs(curve.d2[inner] - exact_d2[inner]))
        path = cfg.out / f"{family}_lambda{lam:g}.csv"
        np.savetxt(path, np.column_stack([nu, curve.H, curve.HF_plus, curve.HF_minus,
                                          curve.d2, exact_d2]),
                   delimiter=",", comments="", fmt="%.12e",
                   header="nu,H,HF_plus,HF_minus,d2HF_plus_numeric,d2HF_plus_closed_form")
        print(f"{family} lambda={lam:g} mu={nav.mu:.4f}: max (H_F+)'' = {exact_d2.max():+.4f}, "
              f"numeric vs closed form {err:.1e} -> {path}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Config.out)
    p.add_argument("--n-nu", type=int, default=Config.n_nu)
    p.add_argument("--mu-fraction", type=float, default=Config.mu_fraction)
    a = p.parse_args()
    run(Config(out=a.out, n_nu=a.n_nu, mu_fraction=a.mu_fraction))
