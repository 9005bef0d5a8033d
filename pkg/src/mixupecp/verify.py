"""Quick self-check of the Alpha pipeline against the brute-force references."""

from __future__ import annotations

import warnings

import numpy as np

from .ecc import ecc, mixup_ecp
from .errors import NoConvergence
from .geometry import alpha_filtration, meb
from .oracle import cech_chi_curve, grid_chi_2d


def _scales(rng, pts, k):
    diam = float(np.ptp(pts, axis=0).max())
    return np.sort(rng.uniform(0.0, 0.8 * diam, size=k))


def check_alpha_vs_cech(n_clouds: int = 20, seed: int = 0) -> tuple:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_clouds):
        dim = int(rng.choice([2, 3]))
        pts = rng.normal(size=(int(rng.integers(dim + 1, 11)), dim))
        radii = _scales(rng, pts, 20)
        bad += int(np.any(ecc(alpha_filtration(pts))(radii) != cech_chi_curve(pts, radii)))
    return bad == 0, f"{n_clouds - bad}/{n_clouds} clouds agree at 20 radii"


def check_intersection(n_pairs: int = 5, seed: int = 1) -> tuple:
    rng = np.random.default_rng(seed)
    checked = bad = 0
    for _ in range(n_pairs):
        x = rng.uniform(size=(int(rng.integers(2, 7)), 2))
        y = rng.uniform(size=(int(rng.integers(2, 7)), 2))
        prof = mixup_ecp(x, y).profile
        for r in rng.uniform(0.02, 0.5, size=3):
            try:
                ref = grid_chi_2d([x, y], float(r), mode="intersection")
            except NoConvergence:
                continue
            checked += 1
            bad += int(prof(r) != ref)
    return bad == 0 and checked > 0, f"{checked - bad}/{checked} radii agree with the raster count"


def check_meb(n_sets: int = 50, seed: int = 2) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_sets):
        pts = rng.normal(size=(int(rng.integers(1, 12)), int(rng.choice([2, 3]))))
        c, r = meb(pts)
        worst = max(worst, float(np.max(np.linalg.norm(pts - np.asarray(c), axis=1)) - r))
    return worst <= 1e-9, f"largest excess distance {worst:.2e}"


def check_dead_zone(n_pairs: int = 20, seed: int = 3) -> tuple:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_pairs):
        dim = int(rng.choice([2, 3]))
        x = rng.normal(size=(8, dim))
        y = rng.normal(size=(8, dim)) + 0.5
        prof = mixup_ecp(x, y)
        rs = rng.uniform(0, prof.dmin / 2, size=10) * (1 - 1e-9)
        bad += int(np.any(prof.profile(rs) != 0))
    return bad == 0, f"{n_pairs - bad}/{n_pairs} pairs vanish below dmin/2"


CHECKS = {
    "alpha-vs-cech": check_alpha_vs_cech,
    "intersection-raster": check_intersection,
    "enclosing-ball": check_meb,
    "dead-zone": check_dead_zone,
}


def run_checks(seed: int = 0) -> dict:
    """Run every check; returns ``{name: {"passed": bool, "detail": str}}``."""
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, (name, fn) in enumerate(CHECKS.items()):
            ok, detail = fn(seed=seed + i)
            out[name] = {"passed": bool(ok), "detail": detail}
    return out
