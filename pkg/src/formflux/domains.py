"""Bounded open regions of R^n.

Every domain knows membership (open-set convention: the boundary is
excluded), exact distance to its boundary, exact volume and diameter, a
bounding box, and uniform sampling by rejection from the bounding box.
Convex shapes additionally support shrink (the eps-inset).

Shapes: ball, axis box, convex polytope (normalized halfspaces), annulus,
slit box (box minus a thickened axis-aligned segment), and set difference
of two convex shapes.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError, InefficiencyError, UnsupportedOperationError

__all__ = [
    "Domain",
    "Ball",
    "AxisBox",
    "ConvexPolytope",
    "Annulus",
    "SlitBox",
    "SetDifference",
    "domain_from_json",
    "unit_ball_volume",
    "dist_point_to_simplex",
]

_REJECTION_FLOOR = 1e-3
_MIN_ATTEMPTS = 20000


def unit_ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


# ---------------------------------------------------------------------------
# small exact geometry helpers


def _dist_point_to_segments(x, a, b):
    """Distances from point x to segments a->b, all arrays batched on axis 0."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    denom = np.sum(d * d, axis=-1)
    num = np.sum((x - a) * d, axis=-1)
    t = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[..., np.newaxis] * d
    return np.linalg.norm(x - proj, axis=-1)


def dist_point_to_simplex(x, vertices):
    """Exact Euclidean distance from x to the convex hull of `vertices`.

    Recursive: if the least-squares projection onto the affine span has
    nonnegative barycentric coordinates it is the closest point, otherwise
    the closest point lies on a facet.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(vertices, dtype=float)
    m = len(v)
    if m == 1:
        return float(np.linalg.norm(x - v[0]))
    e = (v[1:] - v[0]).T  # (n, m-1)
    s, *_ = np.linalg.lstsq(e, x - v[0], rcond=None)
    lam0 = 1.0 - float(np.sum(s))
    if lam0 >= -1e-12 and np.all(s >= -1e-12):
        return float(np.linalg.norm(x - (v[0] + e @ s)))
    return min(
        dist_point_to_simplex(x, np.delete(v, i, axis=0)) for i in range(m)
    )


def _dist_point_to_triangles_2d(x, tris):
    """Distances from a single 2-d point to a batch of triangles (N, 3, 2)."""
    x = np.asarray(x, dtype=float)
    tris = np.asarray(tris, dtype=float)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]

    def cross(u, w):
        return u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]

    d1 = cross(b - a, x - a)
    d2 = cross(c - b, x - b)
    d3 = cross(a - c, x - c)
    inside = ((d1 >= 0) & (d2 >= 0) & (d3 >= 0)) | (
        (d1 <= 0) & (d2 <= 0) & (d3 <= 0)
    )
    edge = np.minimum(
        _dist_point_to_segments(x, a, b),
        np.minimum(
            _dist_point_to_segments(x, b, c), _dist_point_to_segments(x, c, a)
        ),
    )
    return np.where(inside, 0.0, edge)


# ---------------------------------------------------------------------------


class Domain:
    """Base class; concrete shapes fill in the geometric predicates."""

    dimension: int
    is_convex: bool = False
    shape_name: str = "domain"

    # -- predicates, batched where the estimator needs them ----------------

    def contains(self, x) -> bool:
        return bool(self.contains_batch(np.asarray(x, dtype=float)[np.newaxis])[0])

    def contains_batch(self, pts):
        raise NotImplementedError

    def dist_to_boundary(self, x) -> float:
        return float(
            self.dist_to_boundary_batch(np.asarray(x, dtype=float)[np.newaxis])[0]
        )

    def dist_to_boundary_batch(self, pts):
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def shrink(self, eps):
        raise UnsupportedOperationError(
            f"shrink is not supported for shape {self.shape_name!r}"
        )

    def hull_check_batch(self, tuples):
        """Whether the convex hull of each point tuple lies inside the domain.

        tuples has shape (N, m, n) with every point already a member.  Returns
        a boolean array, or None when this shape cannot decide cheaply.
        Convex domains always contain the hull of member points.
        """
        if self.is_convex:
            return np.ones(len(tuples), dtype=bool)
        return None

    # -- sampling -----------------------------------------------------------

    def sample_uniform(self, count, seed=0):
        """count i.i.d. uniform points via rejection from the bounding box.

        seed may be an integer or a numpy Generator.  Raises
        InefficiencyError if the acceptance rate falls below 1e-3.
        """
        rng = (
            seed
            if isinstance(seed, np.random.Generator)
            else np.random.default_rng(np.random.SeedSequence(seed))
        )
        lo, hi = self.bounding_box()
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = np.empty((count, self.dimension))
        got = 0
        attempts = 0
        while got < count:
            batch = max(4 * (count - got), 4096)
            pts = rng.uniform(lo, hi, size=(batch, self.dimension))
            keep = pts[self.contains_batch(pts)]
            take = min(len(keep), count - got)
            out[got : got + take] = keep[:take]
            got += take
            attempts += batch
            if attempts >= _MIN_ATTEMPTS and got / attempts < _REJECTION_FLOOR:
                raise InefficiencyError(
                    f"rejection sampling acceptance {got / attempts:.2e} below "
                    f"{_REJECTION_FLOOR:g} for shape {self.shape_name!r}",
                    acceptance_ratio=got / attempts,
                    samples=got,
                )
        return out

    # -- serialization -------------------------------------------------------

    def to_json(self):
        return {"shape": self.shape_name, "params": self._params()}

    def _params(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self._params()})"


class Ball(Domain):
    is_convex = True
    shape_name = "ball"

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.center.ndim != 1:
            raise ArgumentError("ball center must be a vector")
        if self.radius <= 0:
            raise ArgumentError("ball radius must be positive")
        self.dimension = len(self.center)

    def contains_batch(self, pts):
        return np.linalg.norm(pts - self.center, axis=-1) < self.radius

    def dist_to_boundary_batch(self, pts):
        return np.maximum(
            0.0, self.radius - np.linalg.norm(pts - self.center, axis=-1)
        )

    def volume(self):
        return unit_ball_volume(self.dimension) * self.radius**self.dimension

    def diameter(self):
        return 2.0 * self.radius

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def shrink(self, eps):
        if eps >= self.radius:
            raise ArgumentError(f"shrink by {eps} empties ball of radius {self.radius}")
        return Ball(self.center, self.radius - eps)

    def _params(self):
        return {"center": self.center.tolist(), "radius": self.radius}


class AxisBox(Domain):
    is_convex = True
    shape_name = "axis-box"

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ArgumentError("box corners must be vectors of equal length")
        if np.any(self.hi <= self.lo):
            raise ArgumentError("box must have positive side lengths")
        self.dimension = len(self.lo)

    def contains_batch(self, pts):
        return np.all((pts > self.lo) & (pts < self.hi), axis=-1)

    def dist_to_boundary_batch(self, pts):
        margins = np.minimum(pts - self.lo, self.hi - pts)
        return np.maximum(0.0, np.min(margins, axis=-1))

    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def shrink(self, eps):
        lo, hi = self.lo + eps, self.hi - eps
        if np.any(hi <= lo):
            raise ArgumentError(f"shrink by {eps} empties the box")
        return AxisBox(lo, hi)

    def sample_uniform(self, count, seed=0):
        # a box is its own bounding box, skip the rejection loop
        rng = (
            seed
            if isinstance(seed, np.random.Generator)
            else np.random.default_rng(np.random.SeedSequence(seed))
        )
        return rng.uniform(self.lo, self.hi, size=(count, self.dimension))

    def _params(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


class ConvexPolytope(Domain):
    """Bounded intersection of halfspaces a_i . x <= b_i.

    Rows are normalized at construction and redundant halfspaces dropped, so
    the minimum margin min_i (b_i - a_i . x) is the exact boundary distance
    for interior points.
    """

    is_convex = True
    shape_name = "convex-polytope"

    def __init__(self, normals, offsets):
        a = np.asarray(normals, dtype=float)
        b = np.asarray(offsets, dtype=float)
        if a.ndim != 2 or b.shape != (a.shape[0],):
            raise ArgumentError("need (m, n) normals and (m,) offsets")
        norms = np.linalg.norm(a, axis=1)
        if np.any(norms <= 0):
            raise ArgumentError("zero normal vector")
        # leave rows that are already unit length untouched so that
        # serialization round trips are exact
        scale = np.where(np.abs(norms - 1.0) < 1e-12, 1.0, norms)
        a = a / scale[:, np.newaxis]
        b = b / scale
        self.dimension = a.shape[1]

        from scipy.optimize import linprog
        from scipy.spatial import ConvexHull, HalfspaceIntersection

        # Chebyshev center: maximize r subject to a_i . x + r <= b_i
        m, n = a.shape
        res = linprog(
            c=np.concatenate([np.zeros(n), [-1.0]]),
            A_ub=np.hstack([a, np.ones((m, 1))]),
            b_ub=b,
            bounds=[(None, None)] * n + [(0, None)],
            method="highs",
        )
        if not res.success or res.x[n] <= 1e-12:
            raise ArgumentError("polytope is empty or has empty interior")
        self._chebyshev_center = res.x[:n]
        self._inradius = res.x[n]

        try:
            hs = HalfspaceIntersection(
                np.hstack([a, -b[:, np.newaxis]]), self._chebyshev_center
            )
        except Exception as exc:
            raise ArgumentError(f"polytope is unbounded or degenerate: {exc}")
        self.vertices = hs.intersections
        if not np.all(np.isfinite(self.vertices)):
            raise ArgumentError("polytope is unbounded")

        # keep only facet-defining halfspaces (tight at some vertex)
        tight = np.any(
            np.abs(a @ self.vertices.T - b[:, np.newaxis]) < 1e-9, axis=1
        )
        self.normals = a[tight]
        self.offsets = b[tight]

        hull = ConvexHull(self.vertices)
        self._volume = float(hull.volume)
        diffs = self.vertices[:, np.newaxis, :] - self.vertices[np.newaxis, :, :]
        self._diameter = float(np.sqrt(np.max(np.sum(diffs**2, axis=-1))))

    def contains_batch(self, pts):
        margins = self.offsets - pts @ self.normals.T
        return np.all(margins > 0, axis=-1)

    def dist_to_boundary_batch(self, pts):
        margins = self.offsets - pts @ self.normals.T
        return np.maximum(0.0, np.min(margins, axis=-1))

    def volume(self):
        return self._volume

    def diameter(self):
        return self._diameter

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def shrink(self, eps):
        if eps >= self._inradius:
            raise ArgumentError(f"shrink by {eps} empties the polytope")
        return ConvexPolytope(self.normals, self.offsets - eps)

    def _params(self):
        return {"normals": self.normals.tolist(), "offsets": self.offsets.tolist()}


class Annulus(Domain):
    shape_name = "annulus"

    def __init__(self, center, r_in, r_out):
        self.center = np.asarray(center, dtype=float)
        self.r_in = float(r_in)
        self.r_out = float(r_out)
        if not 0.0 < self.r_in < self.r_out:
            raise ArgumentError("need 0 < r_in < r_out")
        self.dimension = len(self.center)

    def contains_batch(self, pts):
        r = np.linalg.norm(pts - self.center, axis=-1)
        return (r > self.r_in) & (r < self.r_out)

    def dist_to_boundary_batch(self, pts):
        r = np.linalg.norm(pts - self.center, axis=-1)
        return np.maximum(0.0, np.minimum(r - self.r_in, self.r_out - r))

    def volume(self):
        v = unit_ball_volume(self.dimension)
        return v * (self.r_out**self.dimension - self.r_in**self.dimension)

    def diameter(self):
        return 2.0 * self.r_out

    def bounding_box(self):
        return self.center - self.r_out, self.center + self.r_out

    def hull_check_batch(self, tuples):
        """Hull of member points stays in the annulus iff it avoids the
        closed inner ball; the outer ball contains it by convexity."""
        tuples = np.asarray(tuples, dtype=float)
        n_pts, m = tuples.shape[0], tuples.shape[1]
        if self.dimension == 2 and m == 2:
            d = _dist_point_to_segments(self.center, tuples[:, 0], tuples[:, 1])
            return d > self.r_in
        if self.dimension == 2 and m == 3:
            d = _dist_point_to_triangles_2d(self.center, tuples)
            return d > self.r_in
        if m <= self.dimension + 1:
            return np.array(
                [
                    dist_point_to_simplex(self.center, tuples[i]) > self.r_in
                    for i in range(n_pts)
                ]
            )
        return None

    def _params(self):
        return {
            "center": self.center.tolist(),
            "r_in": self.r_in,
            "r_out": self.r_out,
        }


class SlitBox(Domain):
    """An axis box minus the closed delta-neighborhood of an axis-aligned
    segment.  delta = 0 removes the bare segment (measure zero)."""

    shape_name = "slit-box"

    def __init__(self, lo, hi, seg_start, seg_end, delta=0.0):
        self.box = AxisBox(lo, hi)
        self.seg_start = np.asarray(seg_start, dtype=float)
        self.seg_end = np.asarray(seg_end, dtype=float)
        self.delta = float(delta)
        self.dimension = self.box.dimension
        if self.seg_start.shape != (self.dimension,) or self.seg_end.shape != (
            self.dimension,
        ):
            raise ArgumentError("segment endpoints must match the box dimension")
        if self.delta < 0:
            raise ArgumentError("delta must be >= 0")
        diff = self.seg_end - self.seg_start
        moving = np.nonzero(np.abs(diff) > 0)[0]
        if len(moving) != 1:
            raise ArgumentError("slit segment must be axis-aligned and nondegenerate")
        self.axis = int(moving[0])
        if np.any(self.seg_start < self.box.lo) or np.any(self.seg_start > self.box.hi):
            raise ArgumentError("segment must lie in the closed box")
        if np.any(self.seg_end < self.box.lo) or np.any(self.seg_end > self.box.hi):
            raise ArgumentError("segment must lie in the closed box")
        # transverse clearance so the capsule is not clipped sideways, and
        # each end is either on the box wall or a full delta inside it
        if self.delta > 0:
            for j in range(self.dimension):
                if j == self.axis:
                    continue
                c = self.seg_start[j]
                if c - self.box.lo[j] < self.delta or self.box.hi[j] - c < self.delta:
                    raise ArgumentError(
                        "slit thickened by delta must clear the box walls sideways"
                    )
            for end in (self.seg_start, self.seg_end):
                gap = min(
                    end[self.axis] - self.box.lo[self.axis],
                    self.box.hi[self.axis] - end[self.axis],
                )
                if 0.0 < gap < self.delta:
                    raise ArgumentError(
                        "segment end must sit on the box wall or at least "
                        "delta inside it"
                    )
            corners_lo, corners_hi = self.box.lo, self.box.hi
            corners = np.array(
                [
                    [
                        (corners_hi if (mask >> j) & 1 else corners_lo)[j]
                        for j in range(self.dimension)
                    ]
                    for mask in range(1 << self.dimension)
                ]
            )
            if np.any(self._seg_dist(corners) <= self.delta):
                raise ArgumentError("slit capsule may not contain box corners")

    def _seg_dist(self, pts):
        return _dist_point_to_segments(pts, self.seg_start, self.seg_end)

    def contains_batch(self, pts):
        return self.box.contains_batch(pts) & (self._seg_dist(pts) > self.delta)

    def dist_to_boundary_batch(self, pts):
        inner = self._seg_dist(pts) - self.delta
        return np.maximum(
            0.0, np.minimum(self.box.dist_to_boundary_batch(pts), inner)
        )

    def volume(self):
        n = self.dimension
        length = float(np.linalg.norm(self.seg_end - self.seg_start))
        removed = length * unit_ball_volume(n - 1) * self.delta ** (n - 1)
        half_ball = 0.5 * unit_ball_volume(n) * self.delta**n
        for end in (self.seg_start, self.seg_end):
            gap = min(
                end[self.axis] - self.box.lo[self.axis],
                self.box.hi[self.axis] - end[self.axis],
            )
            if gap > 0.0:  # interior end carries a full half ball
                removed += half_ball
        return self.box.volume() - removed

    def diameter(self):
        return self.box.diameter()

    def bounding_box(self):
        return self.box.bounding_box()

    def _params(self):
        return {
            "lo": self.box.lo.tolist(),
            "hi": self.box.hi.tolist(),
            "seg_start": self.seg_start.tolist(),
            "seg_end": self.seg_end.tolist(),
            "delta": self.delta,
        }


class SetDifference(Domain):
    """outer minus the closure of inner, both convex, inner strictly inside."""

    shape_name = "set-difference"

    def __init__(self, outer, inner):
        if not outer.is_convex or not inner.is_convex:
            raise ArgumentError("set-difference requires convex outer and inner")
        if outer.dimension != inner.dimension:
            raise ArgumentError("dimension mismatch")
        self.outer = outer
        self.inner = inner
        self.dimension = outer.dimension
        if isinstance(inner, Ball):
            if outer.dist_to_boundary(inner.center) <= inner.radius:
                raise ArgumentError("inner ball must lie strictly inside outer")
        else:
            for v in _convex_vertices(inner):
                if outer.dist_to_boundary(v) <= 0:
                    raise ArgumentError("inner shape must lie strictly inside outer")

    def _dist_to_inner(self, pts):
        """Distance from pts to the closed inner set (0 inside it)."""
        inner = self.inner
        if isinstance(inner, Ball):
            return np.maximum(
                0.0, np.linalg.norm(pts - inner.center, axis=-1) - inner.radius
            )
        if isinstance(inner, AxisBox):
            gap = np.maximum(inner.lo - pts, 0.0) + np.maximum(pts - inner.hi, 0.0)
            return np.linalg.norm(gap, axis=-1)
        verts = _convex_vertices(inner)
        from scipy.spatial import Delaunay

        tri = Delaunay(verts)
        out = np.empty(len(pts))
        for i, x in enumerate(pts):
            out[i] = min(
                dist_point_to_simplex(x, verts[simp]) for simp in tri.simplices
            )
        return out

    def contains_batch(self, pts):
        return self.outer.contains_batch(pts) & (self._dist_to_inner(pts) > 0)

    def dist_to_boundary_batch(self, pts):
        d = np.minimum(
            self.outer.dist_to_boundary_batch(pts), self._dist_to_inner(pts)
        )
        return np.maximum(0.0, d)

    def volume(self):
        return self.outer.volume() - self.inner.volume()

    def diameter(self):
        # the inner hole is strictly interior, so extremal pairs survive
        return self.outer.diameter()

    def bounding_box(self):
        return self.outer.bounding_box()

    def _params(self):
        return {"outer": self.outer.to_json(), "inner": self.inner.to_json()}


def _convex_vertices(domain):
    if isinstance(domain, AxisBox):
        n = domain.dimension
        return np.array(
            [
                [
                    (domain.hi if (mask >> j) & 1 else domain.lo)[j]
                    for j in range(n)
                ]
                for mask in range(1 << n)
            ]
        )
    if isinstance(domain, ConvexPolytope):
        return domain.vertices
    raise ArgumentError(f"no vertex representation for {domain.shape_name!r}")


_SHAPES = {}


def domain_from_json(doc):
    """Rebuild a domain from its {shape, params} document."""
    shape = doc.get("shape")
    params = doc.get("params", {})
    if shape == "ball":
        return Ball(params["center"], params["radius"])
    if shape == "axis-box":
        return AxisBox(params["lo"], params["hi"])
    if shape == "convex-polytope":
        return ConvexPolytope(params["normals"], params["offsets"])
    if shape == "annulus":
        return Annulus(params["center"], params["r_in"], params["r_out"])
    if shape == "slit-box":
        return SlitBox(
            params["lo"],
            params["hi"],
            params["seg_start"],
            params["seg_end"],
            params.get("delta", 0.0),
        )
    if shape == "set-difference":
        return SetDifference(
            domain_from_json(params["outer"]), domain_from_json(params["inner"])
        )
    raise ArgumentError(f"unknown domain shape {shape!r}")
