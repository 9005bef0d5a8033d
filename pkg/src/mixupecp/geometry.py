"""Delaunay complexes, Alpha filtrations and minimum enclosing balls.

Point clouds live in R^2 or R^3. The Delaunay triangulation is computed
with Qhull (through :mod:`scipy.spatial`) after removing duplicate points
and any affine degeneracy, and Alpha values are assigned with the standard
convention so that the complex at scale ``r`` is homotopy equivalent to
the union of closed radius-``r`` balls around the points.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import DegenerateInput, DimensionUnsupported, DuplicatePointsWarning, TooFewPoints

SUPPORTED_DIMS = (2, 3)

# Points closer than this are treated as one point.
MERGE_TOL = 1e-12
# Singular values below RANK_TOL * largest are treated as zero.
RANK_TOL = 1e-12
# Relative slack when deciding whether a point is strictly inside a ball.
INSIDE_TOL = 1e-10


@dataclass(frozen=True)
class PointCloud:
    """A finite set of points in R^2 or R^3.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Coordinates. Stored as a read-only float64 array.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1 and pts.size in SUPPORTED_DIMS:
            pts = pts[None, :]
        if pts.ndim != 2:
            raise DimensionUnsupported(f"expected an (n, d) array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise TooFewPoints("a point cloud needs at least one point")
        if pts.shape[1] not in SUPPORTED_DIMS:
            raise DimensionUnsupported(f"dimension {pts.shape[1]} not in {SUPPORTED_DIMS}")
        if not np.all(np.isfinite(pts)):
            raise DegenerateInput("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "PointCloud":
        return PointCloud(self.points[np.asarray(idx)])


@dataclass(frozen=True, order=True)
class Simplex:
    """A simplex given by its sorted vertex indices."""

    vertices: tuple

    def __post_init__(self):
        v = tuple(int(i) for i in self.vertices)
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"vertices must be strictly increasing: {v}")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class Filtration:
    """Simplices of a Delaunay complex with their Alpha entry values.

    Attributes
    ----------
    points : ndarray, shape (n, d)
        The (duplicate-free) vertex coordinates.
    simplices : tuple of ndarray
        ``simplices[k]`` is an integer array of shape (m_k, k + 1) holding
        the sorted vertex indices of every k-simplex.
    values : tuple of ndarray
        ``values[k][i]`` is the entry scale of ``simplices[k][i]``.
    multiplicity : ndarray
        How many input points were merged into each vertex.
    """

    points: np.ndarray
    simplices: tuple
    values: tuple
    multiplicity: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def max_dim(self) -> int:
        return len(self.simplices) - 1

    def __len__(self) -> int:
        return sum(len(s) for s in self.simplices)

    def flat(self):
        """Return ``(values, dims)`` as flat arrays over all simplices."""
        vals = np.concatenate(self.values)
        dims = np.concatenate([np.full(len(s), k) for k, s in enumerate(self.simplices)])
        return vals, dims

    @property
    def entries(self) -> list:
        """``(Simplex, value)`` pairs sorted by value, then by dimension."""
        out = []
        for k, (simp, val) in enumerate(zip(self.simplices, self.values)):
            out.extend((float(v), k, tuple(s)) for s, v in zip(simp.tolist(), val.tolist()))
        out.sort()
        return [(Simplex(s), v) for v, _, s in out]

    def to_csv_rows(self) -> list:
        """Rows ``(vertices joined by ';', value)`` in filtration order."""
        return [(";".join(map(str, s.vertices)), repr(v)) for s, v in self.entries]


def _as_array(points) -> np.ndarray:
    if isinstance(points, PointCloud):
        return points.points
    return PointCloud(points).points


def merge_duplicates(points, tol: float = MERGE_TOL):
    """Collapse points that lie within ``tol`` of an earlier point.

    Parameters
    ----------
    points : PointCloud or array_like
    tol : float
        Distance below which two points are considered identical.

    Returns
    -------
    unique : ndarray, shape (m, d)
        First occurrence of each distinct point, in input order.
    multiplicity : ndarray of int, shape (m,)
    index : ndarray of int, shape (n,)
        For each input point, the row of ``unique`` it was merged into.
    """
    pts = _as_array(points)
    n = pts.shape[0]
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray") if n > 1 else np.zeros((0, 2), int)
    if len(pairs) == 0:
        return pts, np.ones(n, dtype=int), np.arange(n)
    # connected components of the "closer than tol" graph, labelled by
    # their earliest member
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    first = np.full(labels.max() + 1, n)
    np.minimum.at(first, labels, np.arange(n))
    root = first[labels]
    keep = np.unique(root)
    relabel = np.searchsorted(keep, root)
    multiplicity = np.bincount(relabel, minlength=len(keep))
    warnings.warn(
        f"merged {n - len(keep)} duplicate point(s) into {len(keep)} distinct points",
        DuplicatePointsWarning,
        stacklevel=2,
    )
    return pts[keep], multiplicity, relabel


def circumspheres(points: np.ndarray, simplices: np.ndarray):
    """Smallest circumscribing spheres of a batch of simplices.

    For each simplex the centre is the point of its affine hull that is
    equidistant from all its vertices.

    Parameters
    ----------
    points : ndarray, shape (n, d)
    simplices : ndarray of int, shape (m, k + 1)

    Returns
    -------
    centers : ndarray, shape (m, d)
    radius_sq : ndarray, shape (m,)
        Squared radii; ``inf`` for affinely degenerate simplices.
    """
    simplices = np.asarray(simplices)
    m, k1 = simplices.shape
    base = points[simplices[:, 0]]
    if k1 == 1:
        return base.copy(), np.zeros(m)
    a = points[simplices[:, 1]] - base
    aa = np.einsum("md,md->m", a, a)
    if k1 == 2:
        return base + 0.5 * a, 0.25 * aa
    b = points[simplices[:, 2]] - base
    bb = np.einsum("md,md->m", b, b)
    ab = np.einsum("md,md->m", a, b)
    if k1 == 3:
        # solve the 2x2 Gram system [[aa, ab], [ab, bb]] lam = [aa, bb] / 2
        det = aa * bb - ab * ab
        degenerate = det <= 1e-24 * aa * bb
        det = np.where(degenerate, 1.0, det)
        l1 = 0.5 * bb * (aa - ab) / det
        l2 = 0.5 * aa * (bb - ab) / det
        offset = l1[:, None] * a + l2[:, None] * b
    elif k1 == 4 and points.shape[1] == 3:
        c = points[simplices[:, 3]] - base
        cc = np.einsum("md,md->m", c, c)
        bxc = _cross(b, c)
        vol = np.einsum("md,md->m", a, bxc)
        degenerate = np.abs(vol) <= 1e-12 * np.sqrt(aa * bb * cc)
        vol = np.where(degenerate, 1.0, vol)
        offset = (aa[:, None] * bxc + bb[:, None] * _cross(c, a) + cc[:, None] * _cross(a, b)) / (2 * vol[:, None])
    else:
        raise ValueError(f"simplices with {k1} vertices in dimension {points.shape[1]} are not supported")
    radius_sq = np.einsum("md,md->m", offset, offset)
    radius_sq[degenerate] = np.inf
    return base + offset, radius_sq


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    out[:, 0] = u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1]
    out[:, 1] = u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2]
    out[:, 2] = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    return out


def _affine_frame(pts: np.ndarray):
    """Return (rank, coordinates of the points in their affine hull)."""
    centred = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    if s[0] == 0.0:
        return 0, centred[:, :0]
    # centring costs a few ulps of the coordinates themselves, which can
    # dwarf RANK_TOL * s[0] for tightly clustered points far from the origin
    noise = 64 * np.finfo(float).eps * float(np.abs(pts).max()) * np.sqrt(len(pts))
    rank = min(int(np.sum(s > max(RANK_TOL * s[0], noise))), len(pts) - 1)
    return rank, centred @ vt[:rank].T


def _qhull(coords: np.ndarray) -> np.ndarray:
    last = None
    for opts in ("Qbb Qc Qz Q12", "QJ Qbb"):
        try:
            tri = Delaunay(coords, qhull_options=opts)
        except QhullError as exc:
            last = exc
            continue
        if len(tri.coplanar) == 0:
            return tri.simplices
    raise DegenerateInput(f"Delaunay triangulation failed: {last or 'points dropped as coplanar'}")


def _top_simplices(pts: np.ndarray) -> np.ndarray:
    """Maximal simplices of the Delaunay complex of duplicate-free points."""
    n = pts.shape[0]
    if n == 1:
        return np.zeros((1, 1), dtype=np.int64)
    rank, coords = _affine_frame(pts)
    if rank == 0:
        raise DegenerateInput("all points coincide")
    if n == rank + 1:
        return np.arange(n, dtype=np.int64)[None, :]
    if rank == 1:
        order = np.argsort(coords[:, 0], kind="stable")
        return np.sort(np.stack([order[:-1], order[1:]], axis=1), axis=1)
    top = np.sort(_qhull(coords), axis=1).astype(np.int64)
    # joggled output can contain flat slivers; they are not part of the
    # Delaunay complex of the unperturbed points
    _, r2 = circumspheres(pts, top)
    top = top[np.isfinite(r2)]
    if len(top) == 0:
        raise DegenerateInput("triangulation contains only flat simplices")
    return top[np.lexsort(top.T[::-1])]


def _faces(cofaces: np.ndarray, n: int):
    """Distinct codimension-one faces and the coface-to-face incidence.

    Returns
    -------
    faces : ndarray, shape (f, k)
    face_of : ndarray, shape (m, k + 1)
        ``face_of[i, j]`` indexes the face of ``cofaces[i]`` with column
        ``j`` removed.
    """
    m, k1 = cofaces.shape
    cand = np.stack([np.delete(cofaces, j, axis=1) for j in range(k1)], axis=1)  # (m, k1, k)
    weights = n ** np.arange(k1 - 2, -1, -1, dtype=np.int64)
    keys = (cand.astype(np.int64) * weights).sum(-1)
    uniq, first, inv = np.unique(keys.ravel(), return_index=True, return_inverse=True)
    faces = cand.reshape(-1, k1 - 1)[first]
    return faces, inv.reshape(m, k1)


def _strictly_contains(points: np.ndarray, simplices: np.ndarray, centers, radius_sq):
    rel = points[None, :, :] - centers[:, None, :]
    d2 = np.einsum("mnd,mnd->mn", rel, rel)
    rows = np.arange(len(simplices))[:, None]
    d2[rows, simplices] = np.inf
    return (d2 < radius_sq[:, None] * (1.0 - INSIDE_TOL)).any(axis=1)


def _build(pts: np.ndarray, top: np.ndarray):
    n = pts.shape[0]
    k = top.shape[1] - 1
    simplices = [None] * (k + 1)
    values = [None] * (k + 1)
    simplices[k] = top
    _, r2 = circumspheres(pts, top)
    values[k] = np.sqrt(r2)
    for j in range(k - 1, 0, -1):
        faces, face_of = _faces(simplices[j + 1], n)
        coface_min = np.full(len(faces), np.inf)
        np.minimum.at(coface_min, face_of.ravel(), np.repeat(values[j + 1], j + 2))
        centers, fr2 = circumspheres(pts, faces)
        attached = _strictly_contains(pts, faces, centers, fr2)
        own = np.sqrt(fr2)
        values[j] = np.where(attached, coface_min, np.minimum(own, coface_min))
        simplices[j] = faces
    if k > 0:
        simplices[0] = np.arange(n, dtype=np.int64)[:, None]
    values[0] = np.zeros(n)
    return tuple(simplices), tuple(values)


def _check_cloud(cloud) -> np.ndarray:
    pts = _as_array(cloud)
    if pts.shape[1] not in SUPPORTED_DIMS:
        raise DimensionUnsupported(f"dimension {pts.shape[1]} not in {SUPPORTED_DIMS}")
    return pts


def alpha_filtration(cloud, merge: bool = True) -> Filtration:
    """Alpha filtration of a point cloud.

    Top simplices enter at their circumradius. A lower face enters at its
    own smallest circumscribing radius when that ball is empty of other
    points, and otherwise at the smallest value among its cofaces. Vertices
    enter at 0.

    Parameters
    ----------
    cloud : PointCloud or array_like, shape (n, d)
    merge : bool
        Merge points closer than ``MERGE_TOL`` first (warning if any).

    Returns
    -------
    Filtration
    """
    pts = _check_cloud(cloud)
    if merge:
        pts, mult, _ = merge_duplicates(pts)
    else:
        mult = np.ones(pts.shape[0], dtype=int)
    top = _top_simplices(pts)
    simplices, values = _build(pts, top)
    return Filtration(points=pts, simplices=simplices, values=values, multiplicity=mult)


def delaunay(cloud, merge: bool = True) -> list:
    """All simplices of the Delaunay complex, as :class:`Simplex` objects.

    Vertex indices refer to the cloud after duplicate merging.
    """
    filt = alpha_filtration(cloud, merge=merge)
    return [Simplex(tuple(s)) for simp in filt.simplices for s in simp.tolist()]


# -- minimum enclosing ball ---------------------------------------------


def _ball_through(support):
    """Smallest ball with every support point on its boundary."""
    p0 = support[0]
    if len(support) == 1:
        return tuple(p0), 0.0
    dim = len(p0)
    edges = [[q[i] - p0[i] for i in range(dim)] for q in support[1:]]
    k = len(edges)
    g = [[sum(a * b for a, b in zip(edges[i], edges[j])) for j in range(k)] for i in range(k)]
    rhs = [0.5 * g[i][i] for i in range(k)]
    lam = _solve_small(g, rhs)
    if lam is None:
        # affinely dependent support: fall back to the best sub-support
        best = None
        for sub in itertools.combinations(support, len(support) - 1):
            c, r = _ball_through(list(sub))
            if all(_dist(c, q) <= r * (1 + 1e-12) + 1e-300 for q in support):
                if best is None or r < best[1]:
                    best = (c, r)
        return best
    c = tuple(p0[i] + sum(lam[j] * edges[j][i] for j in range(k)) for i in range(dim))
    return c, max(_dist(c, q) for q in support)


def _solve_small(a, b):
    k = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    scale = max(abs(m[i][i]) for i in range(k)) or 1.0
    for col in range(k):
        piv = max(range(col, k), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) <= 1e-14 * scale:
            return None
        m[col], m[piv] = m[piv], m[col]
        for r in range(col + 1, k):
            f = m[r][col] / m[col][col]
            for c in range(col, k + 1):
                m[r][c] -= f * m[col][c]
    x = [0.0] * k
    for r in range(k - 1, -1, -1):
        x[r] = (m[r][k] - sum(m[r][c] * x[c] for c in range(r + 1, k))) / m[r][r]
    return x


def _dist(c, q) -> float:
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(c, q)))


def _welzl(pts, n, support, dim):
    if n == 0 or len(support) == dim + 1:
        if not support:
            return None
        return _ball_through(support)
    p = pts[n - 1]
    ball = _welzl(pts, n - 1, support, dim)
    if ball is not None and _dist(ball[0], p) <= ball[1] * (1 + 1e-12) + 1e-300:
        return ball
    return _welzl(pts, n - 1, support + [p], dim)


def meb(points):
    """Minimum enclosing ball of at most 31 points in R^2 or R^3.

    Parameters
    ----------
    points : array_like, shape (k, d)

    Returns
    -------
    center : tuple of float
    radius : float
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in SUPPORTED_DIMS:
        raise DimensionUnsupported(f"expected (k, 2) or (k, 3) points, got shape {arr.shape}")
    if not 1 <= arr.shape[0] <= 31:
        raise ValueError(f"meb supports 1 to 31 points, got {arr.shape[0]}")
    pts = [tuple(row) for row in arr.tolist()]
    return _welzl(pts, len(pts), [], arr.shape[1])


def meb_radius(points) -> float:
    """Radius of the smallest ball containing ``points``."""
    return meb(points)[1]


def within_ball(center, radius: float, q) -> bool:
    """Whether ``q`` lies in the closed ball, up to relative slack 1e-12."""
    return _dist(center, q) <= radius * (1 + 1e-12) + 1e-300


def meb_extend(center, radius, support_pts, new_point, dim):
    """MEB of ``support_pts`` plus ``new_point`` given the MEB of the former.

    Used by subset enumeration, where a set grows one point at a time.
    """
    if within_ball(center, radius, new_point):
        return center, radius
    return _welzl(support_pts, len(support_pts), [new_point], dim)
