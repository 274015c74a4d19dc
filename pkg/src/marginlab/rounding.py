"""Sphere nets in general position and the nearest-point rounding map.

A net with parameter ``alpha`` is a point set on the unit sphere meant to
cover every sphere point within distance alpha/2, so that rounding to the
nearest net point moves any input by strictly less than alpha.  Nets are
built as greedy maximal packings at spacing alpha/2 from uniform random
proposals (a maximal s-packing is an s-covering); random construction also
puts the points in general position with probability 1, which keeps every
rounding fiber small.

On the circle and on the 2-sphere the random phase is finished off by an
exact completion step (gap splitting, resp. spherical-Voronoi vertex
insertion) that makes the packing genuinely maximal, so covering holds
everywhere rather than just with high probability.  In higher dimensions
the rejection-count stopping rule leaves an uncovered mass that is already
far below what 10^4-probe verification can detect, and failed probes are
recycled as net points in up to three densification rounds.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import DimensionMismatchError, NetConstructionError
from .geometry import RngStream, as_generator, derive_stream_id, sample_uniform_sphere

#: Relative slack on the packing spacing; inserted points keep pairwise
#: distance >= (alpha/2) * (1 - PACKING_SLACK).
PACKING_SLACK = 1e-6

MAX_NET_POINTS = 10**7
REJECTION_MULTIPLIER = 50
DENSIFY_ROUNDS = 3
BUILD_VERIFY_PROBES = 10_000

TIE_TOL = 1e-12

_MAGIC = b"MLABNET1"


@dataclass(frozen=True)
class SphereNet:
    """Finite rounding codebook on the sphere in R^dimension.

    ``alpha`` is the covering target: every sphere point should lie within
    alpha/2 of some net point.  ``seed`` records the randomness that built
    the net (0 for synthetic nets assembled in tests).
    """

    points: np.ndarray
    alpha: float
    seed: int
    dimension: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise DimensionMismatchError(
                f"net points shape {pts.shape} does not match dimension {self.dimension}"
            )
        if len(pts) and np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) > 1e-9:
            raise ValueError("net points must be unit vectors")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def spacing(self) -> float:
        return self.alpha / 2.0


class _NearestQuerier:
    """Nearest-point distance queries with a method picked once up front.

    Both paths select the nearest index and then recompute the distance
    with one canonical norm, so tree acceleration returns exactly the
    linear-scan values.
    """

    def __init__(self, points: np.ndarray, method: str = "auto"):
        self.points = np.asarray(points, dtype=np.float64)
        if method == "auto":
            method = "tree" if len(self.points) >= 4096 else "linear"
        self.method = method
        self._tree = cKDTree(self.points) if method == "tree" else None

    def __call__(self, queries: np.ndarray) -> np.ndarray:
        queries = np.asarray(queries, dtype=np.float64)
        if self.method == "tree":
            _, idx = self._tree.query(queries, k=1)
        elif self.method == "linear":
            idx = _linear_nearest_indices(self.points, queries)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        return np.linalg.norm(queries - self.points[idx], axis=1)


def nearest_distances(points: np.ndarray, queries: np.ndarray, method: str = "auto") -> np.ndarray:
    """Distance from each query to its nearest point; see _NearestQuerier."""
    return _NearestQuerier(points, method)(queries)


def _linear_nearest_indices(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    m = len(points)
    rows = max(1, int(4e7 / max(m, 1)))
    pt_sq = np.einsum("md,md->m", points, points)
    out = np.empty(len(queries), dtype=np.int64)
    for lo in range(0, len(queries), rows):
        block = queries[lo : lo + rows]
        d2 = np.maximum(
            np.einsum("qd,qd->q", block, block)[:, None] + pt_sq[None, :] - 2.0 * (block @ points.T),
            0.0,
        )
        out[lo : lo + len(block)] = np.argmin(d2, axis=1)
    return out


def round_to_net(net: SphereNet, x: np.ndarray) -> tuple[np.ndarray, int]:
    """Nearest net point for x; ties within 1e-12 break to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if net.size == 0:
        raise ValueError("cannot round against an empty net")
    if x.shape != (net.dimension,):
        raise DimensionMismatchError(f"query shape {x.shape} vs net dimension {net.dimension}")
    idx = int(round_many(net, x[None, :])[0])
    return net.points[idx], idx


def round_many(net: SphereNet, queries: np.ndarray) -> np.ndarray:
    """Vectorized rounding; returns the chosen net index per query row."""
    queries = np.asarray(queries, dtype=np.float64)
    if net.size == 0:
        raise ValueError("cannot round against an empty net")
    if queries.ndim != 2 or queries.shape[1] != net.dimension:
        raise DimensionMismatchError(f"queries shape {queries.shape} vs net dimension {net.dimension}")
    pts = net.points
    pt_sq = np.einsum("md,md->m", pts, pts)
    rows = max(1, int(4e7 / max(net.size, 1)))
    out = np.empty(len(queries), dtype=np.int64)
    for lo in range(0, len(queries), rows):
        block = queries[lo : lo + rows]
        d2 = np.maximum(
            np.einsum("qd,qd->q", block, block)[:, None] + pt_sq[None, :] - 2.0 * (block @ pts.T),
            0.0,
        )
        dist = np.sqrt(d2)
        # Lowest index among all points within TIE_TOL of the minimum.
        near = dist <= dist.min(axis=1, keepdims=True) + TIE_TOL
        out[lo : lo + len(block)] = np.argmax(near, axis=1)
    return out


def verify_covering(
    net: SphereNet, n_probe: int, rng: RngStream | np.random.Generator
) -> tuple[bool, float]:
    """Empirical covering check: all probes within alpha/2 of the net."""
    if n_probe < 1:
        raise ValueError("n_probe must be >= 1")
    if net.size == 0:
        raise ValueError("cannot verify an empty net")
    gen = as_generator(rng)
    querier = _NearestQuerier(net.points)
    worst = 0.0
    for block in _probe_blocks(net.dimension, n_probe, gen):
        worst = max(worst, float(querier(block).max()))
    return worst <= net.spacing, worst


def check_general_position(
    net: SphereNet, n_probe: int, rng: RngStream | np.random.Generator, tol: float = 1e-9
) -> bool:
    """True iff no probe sees dimension+1 net points tied at its nearest distance.

    Vacuously true when the net has at most ``dimension`` points.
    """
    if n_probe < 1:
        raise ValueError("n_probe must be >= 1")
    d = net.dimension
    if net.size <= d:
        return True
    gen = as_generator(rng)
    pts = net.points
    pt_sq = np.einsum("md,md->m", pts, pts)
    rows = max(1, min(8192, int(2e7 / net.size)))
    for block in _probe_blocks(d, n_probe, gen, rows):
        d2 = np.maximum(
            np.einsum("qd,qd->q", block, block)[:, None] + pt_sq[None, :] - 2.0 * (block @ pts.T),
            0.0,
        )
        dist = np.sqrt(d2)
        ties = dist <= dist.min(axis=1, keepdims=True) + tol
        if int(ties.sum(axis=1).max()) >= d + 1:
            return False
    return True


def _probe_blocks(d: int, n_probe: int, gen: np.random.Generator, rows: int = 8192):
    left = n_probe
    while left > 0:
        take = min(rows, left)
        yield sample_uniform_sphere(d, gen, size=take)
        left -= take


# ---------------------------------------------------------------------------
# Construction


class _Packing:
    """Growing point set with fast min-distance queries.

    Queries run against a k-d tree snapshot plus a linear scan over the
    points inserted since the last rebuild.
    """

    def __init__(self, dim: int, spacing: float):
        self.dim = dim
        self.spacing = spacing
        self.arr = np.empty((1024, dim))
        self.count = 0
        self._tree = None
        self._tree_count = 0

    def points(self) -> np.ndarray:
        return self.arr[: self.count]

    def insert(self, p: np.ndarray) -> None:
        if self.count == len(self.arr):
            grown = np.empty((2 * len(self.arr), self.dim))
            grown[: self.count] = self.arr[: self.count]
            self.arr = grown
        self.arr[self.count] = p
        self.count += 1
        if self.count > MAX_NET_POINTS:
            raise NetConstructionError(f"net exceeded the {MAX_NET_POINTS} point memory guard")
        if self.count - self._tree_count >= 512:
            self._rebuild()

    def _rebuild(self) -> None:
        self._tree = cKDTree(self.arr[: self.count])
        self._tree_count = self.count

    def min_dist_block(self, queries: np.ndarray) -> np.ndarray:
        """Min distance from each query to the current point set (inf if empty)."""
        best = np.full(len(queries), np.inf)
        if self._tree_count:
            # Parallel queries are read-only and return exact nearest
            # distances, so thread count cannot change any result.
            best = self._tree.query(queries, k=1, workers=-1)[0]
        tail = self.arr[self._tree_count : self.count]
        if len(tail):
            d2 = np.maximum(
                np.einsum("qd,qd->q", queries, queries)[:, None]
                + np.einsum("md,md->m", tail, tail)[None, :]
                - 2.0 * (queries @ tail.T),
                0.0,
            )
            best = np.minimum(best, np.sqrt(d2.min(axis=1)))
        return best

    def min_dist_one(self, q: np.ndarray) -> float:
        return float(self.min_dist_block(q[None, :])[0])


def _greedy_fill(packing: _Packing, gen: np.random.Generator, multiplier: int, chunk: int = 32768) -> None:
    """Insert uniform proposals at spacing >= s until the rejection rule fires.

    Stops once ``multiplier * |current points|`` consecutive proposals have
    been rejected.  Chunked processing reproduces the sequential accept /
    reject sequence exactly: a proposal is accepted iff it keeps distance
    >= s to all previously accepted points, including ones accepted earlier
    in the same chunk.
    """
    s = packing.spacing
    consecutive = 0
    fresh = np.empty((chunk, packing.dim))  # points accepted earlier in the chunk
    while True:
        props = sample_uniform_sphere(packing.dim, gen, size=chunk)
        base = packing.min_dist_block(props) if packing.count else np.full(chunk, np.inf)
        candidates = np.flatnonzero(base >= s)
        n_fresh = 0
        pos = 0
        stopped = False
        for c in candidates:
            run = c - pos  # rejections strictly before this candidate
            if packing.count and consecutive + run >= multiplier * packing.count:
                stopped = True
                break
            consecutive += run
            p = props[c]
            ok = True
            if n_fresh:
                gaps = fresh[:n_fresh] - p
                if float(np.min(np.einsum("md,md->m", gaps, gaps))) < s * s:
                    ok = False
            if ok:
                packing.insert(p)
                fresh[n_fresh] = p
                n_fresh += 1
                consecutive = 0
            else:
                consecutive += 1
                if consecutive >= multiplier * packing.count:
                    stopped = True
                    break
            pos = c + 1
        if stopped:
            return
        run = chunk - pos
        if packing.count and consecutive + run >= multiplier * packing.count:
            return
        consecutive += run


def _complete_interval(packing: _Packing) -> None:
    """Exact maximality on S^0: make sure both endpoints are present."""
    pts = packing.points()
    for sign in (1.0, -1.0):
        if not np.any(np.abs(pts[:, 0] - sign) < 0.5):
            packing.insert(np.array([sign]))
            pts = packing.points()


def _complete_circle(packing: _Packing) -> None:
    """Exact maximality on the circle: split every arc gap that could still
    accept a point, so the final covering radius is strictly below spacing."""
    s = packing.spacing
    arc = 2.0 * math.asin(min(s / 2.0, 1.0))  # arc length whose chord is s
    threshold = 2.0 * arc * (1.0 - 1e-9)
    angles = sorted(math.atan2(p[1], p[0]) for p in packing.points())
    stack = []
    for i, a in enumerate(angles):
        b = angles[(i + 1) % len(angles)] + (2.0 * math.pi if i + 1 == len(angles) else 0.0)
        stack.append((a, b))
    while stack:
        lo, hi = stack.pop()
        if hi - lo <= threshold:
            continue
        mid = 0.5 * (lo + hi)
        packing.insert(np.array([math.cos(mid), math.sin(mid)]))
        stack.append((lo, mid))
        stack.append((mid, hi))


def _complete_sphere(packing: _Packing) -> None:
    """Exact maximality on S^2 and S^3 via spherical-Voronoi vertices.

    The farthest point from a finite set on the sphere is a spherical
    Voronoi vertex of that set, and for points on the sphere those vertices
    are the outward unit normals of the convex hull's facets.  Inserting
    every vertex whose nearest-point distance still (almost) reaches the
    spacing, and iterating, yields a maximal packing whose covering radius
    is strictly below the spacing.
    """
    s = packing.spacing
    select = s * (1.0 - 1e-9)
    for _ in range(500):
        pts = np.ascontiguousarray(packing.points())
        hull = ConvexHull(pts)
        normals = hull.equations[:, :-1]
        verts = normals / np.linalg.norm(normals, axis=1)[:, None]
        gap = nearest_distances(pts, verts, method="tree")
        cand = verts[gap > select]
        if not len(cand):
            return
        keys = tuple(cand[:, j] for j in range(cand.shape[1] - 1, -1, -1))
        order = np.lexsort((*keys, -gap[gap > select]))
        added = 0
        for v in cand[order]:
            if packing.min_dist_one(v) >= select:
                packing.insert(v / np.linalg.norm(v))
                added += 1
        if not added:
            return
    raise NetConstructionError("spherical completion did not converge")


def build_net(
    dim: int,
    alpha: float,
    seed: int,
    *,
    rejection_multiplier: int = REJECTION_MULTIPLIER,
    densify_rounds: int = DENSIFY_ROUNDS,
    verify_probes: int = BUILD_VERIFY_PROBES,
) -> SphereNet:
    """Build a verified alpha/2-covering net on the sphere in R^dim.

    Greedy random packing at spacing alpha/2 runs until
    ``rejection_multiplier * |T|`` consecutive proposals are rejected; in
    dimensions up to 4 an exact completion step then finishes the packing
    (gap splitting on the circle, hull-based Voronoi vertices on S^2 and
    S^3).  In dimension 4 the random phase stops at a small rejection
    multiplier, since exact completion makes the long probabilistic tail
    redundant.  Covering is verified empirically before the net is
    returned.  On a failed verification the builder densifies: failing
    probes are inserted (they are legal packing points by definition) and
    the greedy phase resumes with the rejection threshold doubled, up to
    ``densify_rounds`` times, after which NetConstructionError is raised.
    """
    if dim < 1:
        raise DimensionMismatchError(f"dimension must be >= 1, got {dim}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    rng = RngStream(seed, stream_id=derived_net_stream(dim, alpha))
    proposal_gen = rng.child("proposals").generator()
    packing = _Packing(dim, alpha / 2.0)
    multiplier = min(rejection_multiplier, 1) if dim == 4 else rejection_multiplier
    _greedy_fill(packing, proposal_gen, multiplier)
    for attempt in range(densify_rounds + 1):
        if dim == 1:
            _complete_interval(packing)
        elif dim == 2:
            _complete_circle(packing)
        elif dim in (3, 4):
            _complete_sphere(packing)
        net = SphereNet(
            points=packing.points().copy(), alpha=alpha, seed=seed, dimension=dim
        )
        ok, worst = _internal_verify(net, packing, rng.child("verify", attempt), verify_probes)
        if ok:
            return net
        if attempt == densify_rounds:
            raise NetConstructionError(
                f"covering verification failed after {densify_rounds} densification "
                f"rounds (worst probe distance {worst:.6g} > {net.spacing:.6g})"
            )
        multiplier *= 2
        _greedy_fill(packing, proposal_gen, multiplier)
    raise AssertionError("unreachable")


def _internal_verify(
    net: SphereNet, packing: _Packing, rng: RngStream, n_probe: int
) -> tuple[bool, float]:
    """Covering check that also recycles failing probes into the packing."""
    gen = rng.generator()
    querier = _NearestQuerier(net.points)
    worst = 0.0
    ok = True
    s = net.spacing
    for block in _probe_blocks(net.dimension, n_probe, gen):
        dist = querier(block)
        worst = max(worst, float(dist.max()))
        for p in block[dist > s]:
            ok = False
            if packing.min_dist_one(p) >= s:
                packing.insert(p)
    return ok, worst


def derived_net_stream(dim: int, alpha: float) -> int:
    """Stream id namespace for net construction, parameterized by (dim, alpha)."""
    return derive_stream_id("net", dim, f"{alpha!r}")


# ---------------------------------------------------------------------------
# Persistence: header (dimension, alpha, seed, point count) then row-major
# little-endian float64 coordinates; round trips are bit exact.

_HEADER = struct.Struct("<8sIdqQ")


def save_net(net: SphereNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, net.dimension, net.alpha, net.seed, net.size))
        fh.write(np.ascontiguousarray(net.points, dtype="<f8").tobytes())


def load_net(path) -> SphereNet:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ValueError(f"{path}: truncated net file")
        magic, dim, alpha, seed, count = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a sphere net file")
        body = fh.read(count * dim * 8)
        if len(body) != count * dim * 8:
            raise ValueError(f"{path}: truncated coordinate block")
        pts = np.frombuffer(body, dtype="<f8").reshape(count, dim).astype(np.float64)
    return SphereNet(points=pts, alpha=alpha, seed=seed, dimension=dim)
