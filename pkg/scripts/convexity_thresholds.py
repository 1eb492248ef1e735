"""Bracket the lambda at which (H_F+)'' first changes sign, for both closed-form families.

A fine grid uses the closed-form second derivative.  A coarse grid
cross-checks it with numerical differentiation of the quadrature half period,
once with the squared-constant wind shift and once with the exact tangency
radius.
"""
import argparse
from dataclasses import dataclass, field

import numpy as np

from randers_cut.halfperiod import convexity_scan, threshold_bracket


@dataclass
class Config:
    fine: dict = field(default_factory=lambda: {"example1": (1.4, 1.7, 0.01),
                                                "example2": (0.55, 0.70, 0.005)})
    coarse: dict = field(default_factory=lambda: {"example1": (1.4, 1.7, 0.05),
                                                  "example2": (0.55, 0.70, 0.025)})
    nu_resolution: int = 2001
    quadrature_nu: int = 401


def _grid(lo, hi, step):
    return np.round(np.arange(lo, hi + step / 2, step), 10)


def _report(family, source, rows):
    bracket = threshold_bracket(rows)
    text = f"({bracket[0]:g}, {bracket[1]:g}]" if bracket else "none in range"
    print(f"{family:9s} {source:9s} sign change in {text}", flush=True)


def run(cfg: Config) -> None:
    for family, rng in cfg.fine.items():
        _report(family, "analytic", convexity_scan(family, _grid(*rng), cfg.nu_resolution))
    for family, rng in cfg.coarse.items():
        for source in ("numeric", "exact"):
            _report(family, source,
                    convexity_scan(family, _grid(*rng), cfg.quadrature_nu, source=source))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nu-resolution", type=int, default=Config.nu_resolution)
    run(Config(nu_resolution=p.parse_args().nu_resolution))
