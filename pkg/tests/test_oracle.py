import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixupecp.ecc import ecc, mixup_ecp
from mixupecp.errors import DimensionUnsupported, NoConvergence, TooManyPoints
from mixupecp.geometry import alpha_filtration
from mixupecp.oracle import (GridSpec, cech_chi_curve, cech_chi_oracle, cech_subset_radii,
                             cubical_chi, grid_chi_2d)
from mixupecp.verify import run_checks

TRIANGLE = np.array([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])


@pytest.mark.parametrize("r, expected", [(0.5, 2), (1.5, 1)])
def test_cech_two_points(r, expected):
    assert cech_chi_oracle([[0, 0], [2, 0]], r) == expected


def test_cech_triangle_cycle():
    assert cech_chi_oracle(TRIANGLE, 0.55) == 0
    assert cech_chi_oracle(TRIANGLE, 0.6) == 1


def test_cech_limits_point_count():
    with pytest.raises(TooManyPoints):
        cech_chi_oracle(np.random.default_rng(0).normal(size=(21, 2)), 0.1)


def test_cech_subsets_pruned_at_radius():
    radii, sizes = cech_subset_radii(TRIANGLE, 0.55)
    assert sorted(sizes.tolist()) == [1, 1, 1, 2, 2, 2]
    radii, sizes = cech_subset_radii(TRIANGLE)
    assert len(radii) == 7


@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.integers(1, 10))
def test_cech_matches_alpha(seed, dim, n):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, dim))
    radii = rng.uniform(0, 3, 20)
    assert np.array_equal(cech_chi_curve(pts, radii), ecc(alpha_filtration(pts))(radii))


# -- raster -------------------------------------------------------------------


def test_cubical_chi_shapes():
    assert cubical_chi(np.zeros((4, 4), bool)) == 0
    ring = np.ones((5, 5), bool)
    ring[2, 2] = False
    assert cubical_chi(ring) == 0
    diag = np.eye(3, dtype=bool)
    assert cubical_chi(diag) == 1  # closed squares touch at corners
    two = np.zeros((5, 5), bool)
    two[0, 0] = two[3, 3] = True
    assert cubical_chi(two) == 2


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((0, 0), (1, 1), 8)
    with pytest.raises(ValueError):
        GridSpec((0, 0), (0, 1), 32)
    g = GridSpec.around(np.array([[0.0, 0.0], [1.0, 2.0]]), 0.5)
    assert g.hi[0] - g.lo[0] == pytest.approx(g.hi[1] - g.lo[1])
    assert g.lo[1] <= -1.0 and g.hi[1] >= 3.0
    assert g.doubled().resolution == 512


def test_raster_single_disk():
    assert grid_chi_2d([[0.3, 0.4]], 0.7) == 1


def test_raster_disjoint_intersection_is_empty():
    x, y = np.array([[0.0, 0.0]]), np.array([[3.0, 0.0]])
    assert grid_chi_2d([x, y], 1.0, mode="intersection") == 0


def test_raster_triangle_hole():
    assert grid_chi_2d(TRIANGLE, 0.54) == 0


def test_raster_rejects_bad_input():
    with pytest.raises(DimensionUnsupported):
        grid_chi_2d(np.zeros((2, 3)), 0.5)
    with pytest.raises(ValueError):
        grid_chi_2d([np.zeros((1, 2))], 0.5, mode="intersection")
    with pytest.raises(ValueError):
        grid_chi_2d(np.zeros((1, 2)), 0.5, mode="xor")


def test_raster_signals_transition_radius():
    # just below the triangle's circumradius the hole is a few cells wide,
    # so coarse grids miss it and finer ones see it
    with pytest.raises(NoConvergence):
        grid_chi_2d(TRIANGLE, 1 / np.sqrt(3) - 3e-3)


def _clear_radius(rng, breakpoints, box_side):
    cell = box_side / 2048
    while True:
        r = float(rng.uniform(0.05, 0.5))
        if np.min(np.abs(breakpoints - r)) > cell:
            return r


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_raster_union_matches_cech(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(6, 2))
    chi = ecc(alpha_filtration(pts))
    r = _clear_radius(rng, chi.breakpoints, 3.0)
    try:
        ref = grid_chi_2d(pts, r)
    except NoConvergence:
        return
    assert ref == cech_chi_oracle(pts, r)


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_inclusion_exclusion_with_raster_intersection(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(size=(6, 2)), rng.uniform(size=(6, 2))
    prof = mixup_ecp(x, y).profile
    r = _clear_radius(rng, prof.breakpoints, 3.0)
    try:
        inter = grid_chi_2d([x, y], r, mode="intersection")
    except NoConvergence:
        return
    union = cech_chi_oracle(np.vstack([x, y]), r)
    assert union == cech_chi_oracle(x, r) + cech_chi_oracle(y, r) - inter
    assert inter == prof(r)


def test_verify_checks_pass():
    results = run_checks(seed=0)
    assert set(results) == {"alpha-vs-cech", "intersection-raster", "enclosing-ball", "dead-zone"}
    assert all(v["passed"] for v in results.values()), results
