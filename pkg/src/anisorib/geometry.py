"""Planar segment sets, polygonal domains, and checkerboard partitions.

Segment sets are stored as (N, 4) float arrays of endpoint coordinates so
that length, orientation and clipping work vectorized across the whole set;
the rib constructions upstream emit up to ~5e5 segments per build.

Conventions
-----------
* Normal angles live in [0, pi): a segment's direction is only defined up
  to sign, so orientations are projective.
* Checkerboard squares follow the half-open convention [x, x+s) x [y, y+s):
  a segment lying exactly on a shared edge belongs to exactly one square.
  Sides of the board not shared with a neighbor square are closed again, so
  clipping a set contained in the board partitions its length exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "Segment",
    "Continuum",
    "Square",
    "Domain2D",
    "Checkerboard",
    "total_length",
    "riemannian_length",
    "is_connected",
    "component_count",
    "clip",
    "checkerboard",
    "merge_collinear",
    "point_segment_distance",
    "transform_continuum",
    "transform_domain",
    "unit_square",
]

_DEG_TOL = 1e-14


@dataclass(frozen=True)
class Segment:
    """Single closed segment; ``normal_angle`` in [0, pi)."""

    p: tuple[float, float]
    q: tuple[float, float]

    @property
    def normal_angle(self) -> float:
        dx = self.q[0] - self.p[0]
        dy = self.q[1] - self.p[1]
        a = np.arctan2(dx, -dy) % np.pi
        return float(0.0 if np.pi - a < 1e-12 else a)

    @property
    def length(self) -> float:
        return float(np.hypot(self.q[0] - self.p[0], self.q[1] - self.p[1]))


class Continuum:
    """A finite union of closed segments, stored as an (N, 4) array.

    Parameters
    ----------
    segs : array_like with rows (x1, y1, x2, y2)
    drop_degenerate : bool
        Silently drop zero-length rows (useful for clip outputs) instead
        of raising.
    """

    def __init__(self, segs, drop_degenerate: bool = False):
        a = np.asarray(segs, dtype=float)
        if a.size == 0:
            a = np.empty((0, 4))
        if a.ndim != 2 or a.shape[1] != 4:
            raise ValueError("segments must be an (N, 4) array of endpoints")
        lens = np.hypot(a[:, 2] - a[:, 0], a[:, 3] - a[:, 1])
        scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
        degenerate = lens <= _DEG_TOL * scale
        if degenerate.any():
            if not drop_degenerate:
                raise ValueError(f"{int(degenerate.sum())} degenerate segment(s)")
            a = a[~degenerate]
        self.segs = a
        self._lengths = None
        self._normals = None

    @classmethod
    def from_segments(cls, segments) -> "Continuum":
        rows = [(s.p[0], s.p[1], s.q[0], s.q[1]) if isinstance(s, Segment) else tuple(s) for s in segments]
        return cls(np.array(rows, dtype=float).reshape(-1, 4))

    def __len__(self) -> int:
        return self.segs.shape[0]

    def __iter__(self):
        for row in self.segs:
            yield Segment((row[0], row[1]), (row[2], row[3]))

    @property
    def lengths(self) -> np.ndarray:
        if self._lengths is None:
            self._lengths = np.hypot(self.segs[:, 2] - self.segs[:, 0], self.segs[:, 3] - self.segs[:, 1])
        return self._lengths

    @property
    def normal_angles(self) -> np.ndarray:
        """Angle in [0, pi) of each segment's unit normal."""
        if self._normals is None:
            dx = self.segs[:, 2] - self.segs[:, 0]
            dy = self.segs[:, 3] - self.segs[:, 1]
            a = np.mod(np.arctan2(dx, -dy), np.pi)
            a[np.pi - a < 1e-12] = 0.0
            self._normals = a
        return self._normals

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.segs[:, :2] + self.segs[:, 2:])

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        if len(self) == 0:
            return (0.0, 0.0, 0.0, 0.0)
        xs = self.segs[:, (0, 2)]
        ys = self.segs[:, (1, 3)]
        return (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))

    @property
    def tol_snap(self) -> float:
        """Endpoint snapping tolerance: 1e-9 x bounding-box diameter."""
        x0, y0, x1, y1 = self.bbox
        diam = np.hypot(x1 - x0, y1 - y0)
        return 1e-9 * max(diam, 1e-30)

    def concat(self, other: "Continuum") -> "Continuum":
        return Continuum(np.vstack([self.segs, other.segs]), drop_degenerate=True)

    def subset(self, mask) -> "Continuum":
        return Continuum(self.segs[mask], drop_degenerate=True)


def total_length(c: Continuum) -> float:
    """Sum of segment lengths (the H^1 measure for overlap-free input)."""
    return c.total_length


def riemannian_length(c: Continuum, m) -> float:
    """Length weighted by sqrt(<M n, n>) along each segment's unit normal n.

    ``m`` is an SpdTensor2 (anything with ``entries()``).
    """
    from .tensor import riemannian_norm_entries

    if len(c) == 0:
        return 0.0
    w = riemannian_norm_entries(m.entries(), c.normal_angles)
    return float((c.lengths * w).sum())


def point_segment_distance(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distance from points[i] to the closed segment segs[i], elementwise."""
    p = np.atleast_2d(points)
    s = np.atleast_2d(segs)
    a = s[:, :2]
    d = s[:, 2:] - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.einsum("ij,ij->i", p - a, d) / np.where(dd > 0, dd, 1.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.hypot(p[:, 0] - proj[:, 0], p[:, 1] - proj[:, 1])


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)

    def find(self, i: int) -> int:
        p = self.parent
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:
            p[i], i = root, p[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[ri] = rj

    def n_components(self, items) -> int:
        return len({self.find(int(i)) for i in items})


def _adjacency_union(c: Continuum, tol: float) -> _UnionFind:
    """Union-find over segment indices: segments sharing a snapped endpoint
    or having an endpoint on another segment (T-junction) are joined."""
    n = len(c)
    uf = _UnionFind(n)
    if n == 0:
        return uf
    ends = np.vstack([c.segs[:, :2], c.segs[:, 2:]])  # endpoint k belongs to segment k % n
    owner = np.tile(np.arange(n), 2)
    tree = cKDTree(ends)
    for i, j in tree.query_pairs(tol, output_type="ndarray"):
        uf.union(int(owner[i]), int(owner[j]))
    # T-junctions: endpoint of one segment interior to another
    mids = c.midpoints
    radii = 0.5 * c.lengths + tol
    groups = tree.query_ball_point(mids, np.maximum(radii, tol))
    for si, hits in enumerate(groups):
        if not hits:
            continue
        hits = np.asarray(hits)
        hits = hits[owner[hits] != si]
        if hits.size == 0:
            continue
        dist = point_segment_distance(ends[hits], np.broadcast_to(c.segs[si], (hits.size, 4)))
        for k in np.nonzero(dist <= tol)[0]:
            uf.union(si, int(owner[hits[k]]))
    return uf


def component_count(c: Continuum, tol: float | None = None) -> int:
    """Number of connected components of the snapped adjacency graph."""
    if len(c) == 0:
        return 0
    uf = _adjacency_union(c, c.tol_snap if tol is None else tol)
    return uf.n_components(range(len(c)))


def is_connected(c: Continuum, tol: float | None = None) -> bool:
    """True iff the snapped adjacency graph has exactly one component."""
    return component_count(c, tol) == 1


@dataclass(frozen=True)
class Square:
    """Axis-aligned square [x0, x0+s) x [y0, y0+s) up to closure flags.

    ``closed_hi_x`` / ``closed_hi_y`` reopen the high edges; standalone
    squares are closed on all sides, checkerboard squares are closed on a
    high side only where the board has no neighbor there.
    """

    x0: float
    y0: float
    s: float
    closed_hi_x: bool = True
    closed_hi_y: bool = True
    ix: int = 0
    iy: int = 0

    def __post_init__(self) -> None:
        if self.s <= 0:
            raise ValueError("square side must be positive")

    @property
    def x1(self) -> float:
        return self.x0 + self.s

    @property
    def y1(self) -> float:
        return self.y0 + self.s

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + 0.5 * self.s, self.y0 + 0.5 * self.s)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Half-open membership (closure flags applied)."""
        p = np.atleast_2d(points)
        ok_x = (p[:, 0] >= self.x0) & ((p[:, 0] <= self.x1) if self.closed_hi_x else (p[:, 0] < self.x1))
        ok_y = (p[:, 1] >= self.y0) & ((p[:, 1] <= self.y1) if self.closed_hi_y else (p[:, 1] < self.y1))
        return ok_x & ok_y


def _clip_to_rect(segs: np.ndarray, x0: float, y0: float, x1: float, y1: float,
                  closed_hi_x: bool = True, closed_hi_y: bool = True) -> np.ndarray:
    """Clip segments to the closed rectangle, then drop pieces that lie
    entirely on an open high edge (half-open ownership of shared edges)."""
    if segs.size == 0:
        return segs.reshape(0, 4)
    p = segs[:, :2]
    d = segs[:, 2:] - p
    t0 = np.zeros(len(segs))
    t1 = np.ones(len(segs))
    keep = np.ones(len(segs), dtype=bool)
    for axis, lo, hi in ((0, x0, x1), (1, y0, y1)):
        pi = p[:, axis]
        di = d[:, axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - pi) / di
            tb = (hi - pi) / di
        tlo = np.minimum(ta, tb)
        thi = np.maximum(ta, tb)
        par = np.abs(di) <= _DEG_TOL * max(1.0, abs(lo), abs(hi))
        inside_par = (pi >= lo - 1e-12) & (pi <= hi + 1e-12)
        keep &= ~par | inside_par
        t0 = np.where(par, t0, np.maximum(t0, tlo))
        t1 = np.where(par, t1, np.minimum(t1, thi))
    span = np.hypot(d[:, 0], d[:, 1])
    keep &= (t1 - t0) * span > 1e-13 * max(1.0, abs(x1 - x0))
    out = np.empty((int(keep.sum()), 4))
    pk, dk = p[keep], d[keep]
    out[:, :2] = pk + t0[keep, None] * dk
    out[:, 2:] = pk + t1[keep, None] * dk
    tol = 1e-12 * max(1.0, abs(x1), abs(y1))
    if not closed_hi_x:
        on_hi = (np.abs(out[:, 0] - x1) <= tol) & (np.abs(out[:, 2] - x1) <= tol)
        out = out[~on_hi]
    if not closed_hi_y:
        on_hi = (np.abs(out[:, 1] - y1) <= tol) & (np.abs(out[:, 3] - y1) <= tol)
        out = out[~on_hi]
    return out


def _polygon_area(poly: np.ndarray) -> float:
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clip_polygon_to_rect(poly: np.ndarray, x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a simple polygon against a rectangle."""
    out = poly
    for axis, bound, keep_leq in ((0, x1, True), (0, x0, False), (1, y1, True), (1, y0, False)):
        if out.shape[0] == 0:
            break
        vals = out[:, axis]
        inside = vals <= bound if keep_leq else vals >= bound
        nxt = np.roll(np.arange(out.shape[0]), -1)
        pieces = []
        for i in range(out.shape[0]):
            j = nxt[i]
            a, b = out[i], out[j]
            if inside[i]:
                pieces.append(a)
            if inside[i] != inside[j]:
                t = (bound - a[axis]) / (b[axis] - a[axis])
                pieces.append(a + t * (b - a))
        out = np.array(pieces).reshape(-1, 2)
    return out


class Domain2D:
    """Polygonal bounded open set: one outer boundary, optional holes.

    Vertex order is normalized internally (outer counter-clockwise, holes
    clockwise); input order does not matter.
    """

    def __init__(self, outer, holes=()):
        outer = np.asarray(outer, dtype=float)
        if outer.ndim != 2 or outer.shape[0] < 3 or outer.shape[1] != 2:
            raise ValueError("outer boundary needs at least 3 vertices")
        if _polygon_area(outer) < 0:
            outer = outer[::-1]
        if abs(_polygon_area(outer)) <= 0:
            raise ValueError("outer boundary has zero area")
        self.outer = outer
        self.holes = []
        for h in holes:
            h = np.asarray(h, dtype=float)
            if h.ndim != 2 or h.shape[0] < 3:
                raise ValueError("hole needs at least 3 vertices")
            if _polygon_area(h) < 0:
                h = h[::-1]
            self.holes.append(h)
        self._edge_cache = None

    @property
    def area(self) -> float:
        a = _polygon_area(self.outer)
        for h in self.holes:
            a -= _polygon_area(h)
        return float(a)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (
            float(self.outer[:, 0].min()),
            float(self.outer[:, 1].min()),
            float(self.outer[:, 0].max()),
            float(self.outer[:, 1].max()),
        )

    @property
    def is_axis_rect(self) -> bool:
        if self.holes or self.outer.shape[0] != 4:
            return False
        x0, y0, x1, y1 = self.bbox
        want = {(x0, y0), (x1, y0), (x1, y1), (x0, y1)}
        return {(float(v[0]), float(v[1])) for v in self.outer} == want

    def boundary_continuum(self) -> Continuum:
        rows = []
        for poly in [self.outer, *self.holes]:
            nxt = np.roll(poly, -1, axis=0)
            rows.append(np.hstack([poly, nxt]))
        return Continuum(np.vstack(rows))

    def _ring_edges(self):
        for poly in [self.outer, *self.holes]:
            yield poly, np.roll(poly, -1, axis=0)

    def _edge_arrays(self):
        """Cached per-ring edge arrays (a, b, b - a), each ring (E, 2)."""
        if self._edge_cache is None:
            cache = []
            for a, b in self._ring_edges():
                cache.append((a, b, b - a))
            self._edge_cache = cache
        return self._edge_cache

    def contains(self, points: np.ndarray, include_boundary: bool = True, tol: float = 1e-12) -> np.ndarray:
        """Membership in the closure (or, with include_boundary=False, the
        open set) via crossing counts, vectorized over points."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x0, y0, x1, y1 = self.bbox
        scale = max(1.0, abs(x1 - x0), abs(y1 - y0))
        eps2 = (tol * scale) ** 2
        px = p[:, 0:1]
        py = p[:, 1:2]
        on_boundary = np.zeros(p.shape[0], dtype=bool)
        inside = np.zeros(p.shape[0], dtype=bool)
        for ring_idx, (a, b, d) in enumerate(self._edge_arrays()):
            ax, ay = a[:, 0], a[:, 1]
            dx, dy = d[:, 0], d[:, 1]
            # boundary proximity: squared distance point -> edge, (P, E)
            relx = px - ax
            rely = py - ay
            den = np.maximum(dx * dx + dy * dy, 1e-300)
            tt = np.clip((relx * dx + rely * dy) / den, 0.0, 1.0)
            ddx = relx - tt * dx
            ddy = rely - tt * dy
            on_boundary |= np.any(ddx * ddx + ddy * ddy <= eps2, axis=1)
            # ray casting to +x, half-open in y to avoid double counts
            by = b[:, 1]
            cond = (ay <= py) != (by <= py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax + (py - ay) * dx / dy
            crossings = np.count_nonzero(cond & (xint > px), axis=1)
            odd = (crossings % 2) == 1
            if ring_idx == 0:
                inside = odd
            else:
                inside &= ~odd
        if include_boundary:
            return inside | on_boundary
        return inside & ~on_boundary

    def rect_overlap_area(self, x0: float, y0: float, x1: float, y1: float) -> float:
        """Exact area of (domain intersect rectangle), holes subtracted."""
        if self.is_axis_rect:
            bx0, by0, bx1, by1 = self.bbox
            w = max(0.0, min(x1, bx1) - max(x0, bx0))
            h = max(0.0, min(y1, by1) - max(y0, by0))
            return w * h
        area = abs(_polygon_area(_clip_polygon_to_rect(self.outer, x0, y0, x1, y1))) \
            if _clip_polygon_to_rect(self.outer, x0, y0, x1, y1).shape[0] >= 3 else 0.0
        for h in self.holes:
            ph = _clip_polygon_to_rect(h, x0, y0, x1, y1)
            if ph.shape[0] >= 3:
                area -= abs(_polygon_area(ph))
        return float(max(area, 0.0))

    def clip_segments(self, segs: np.ndarray) -> np.ndarray:
        """Portions of segments inside the closed domain."""
        if segs.size == 0:
            return segs.reshape(0, 4)
        x0, y0, x1, y1 = self.bbox
        if self.is_axis_rect:
            return _clip_to_rect(segs, x0, y0, x1, y1)
        ea = np.vstack([a for a, _, _ in self._edge_arrays()])
        ed = np.vstack([d for _, _, d in self._edge_arrays()])
        p = segs[:, :2]
        d = segs[:, 2:] - p
        # crossing parameters of every segment against every boundary edge
        denom = d[:, 0:1] * ed[:, 1] - d[:, 1:2] * ed[:, 0]
        relx = ea[:, 0] - p[:, 0:1]
        rely = ea[:, 1] - p[:, 1:2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (relx * ed[:, 1] - rely * ed[:, 0]) / denom
            u = (relx * d[:, 1:2] - rely * d[:, 0:1]) / denom
        ok = np.isfinite(t) & (t > 0) & (t < 1) & (u >= 0) & (u <= 1)
        # per segment: sorted cut parameters bound candidate pieces, whose
        # midpoints are tested for membership in one batched query
        piece_rows = []
        piece_mids = []
        for i in range(segs.shape[0]):
            ts = np.unique(np.concatenate([[0.0, 1.0], t[i][ok[i]]]))
            lo, hi = ts[:-1], ts[1:]
            piece_rows.append(
                np.column_stack(
                    [
                        p[i, 0] + lo * d[i, 0],
                        p[i, 1] + lo * d[i, 1],
                        p[i, 0] + hi * d[i, 0],
                        p[i, 1] + hi * d[i, 1],
                    ]
                )
            )
            mid = 0.5 * (lo + hi)
            piece_mids.append(np.column_stack([p[i, 0] + mid * d[i, 0], p[i, 1] + mid * d[i, 1]]))
        rows = np.vstack(piece_rows)
        keep = self.contains(np.vstack(piece_mids), include_boundary=True)
        return rows[keep]


@dataclass
class Checkerboard:
    """Finite family of lattice squares of side s meeting the domain."""

    s: float
    squares: list[Square]
    omega_areas: np.ndarray  # |Omega intersect Q_i| per square
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {(q.ix, q.iy): k for k, q in enumerate(self.squares)}

    def __len__(self) -> int:
        return len(self.squares)

    def square_of_points(self, points: np.ndarray) -> np.ndarray:
        """Board-square index for each point; points on high board edges
        fall back downward so that every point of the closure is owned."""
        p = np.atleast_2d(points)
        ix = np.floor(p[:, 0] / self.s + 1e-12).astype(np.int64)
        iy = np.floor(p[:, 1] / self.s + 1e-12).astype(np.int64)
        out = np.full(p.shape[0], -1, dtype=np.int64)
        for k in range(p.shape[0]):
            for cand in ((ix[k], iy[k]), (ix[k] - 1, iy[k]), (ix[k], iy[k] - 1), (ix[k] - 1, iy[k] - 1)):
                hit = self.index.get((int(cand[0]), int(cand[1])))
                if hit is not None:
                    out[k] = hit
                    break
        return out


def checkerboard(omega: Domain2D, s: float) -> Checkerboard:
    """Lattice squares (corners on (s Z)^2) whose interior meets the domain."""
    if s <= 0:
        raise ValueError("board side s must be positive")
    x0, y0, x1, y1 = omega.bbox
    ix0 = int(np.floor(x0 / s + 1e-12))
    ix1 = int(np.ceil(x1 / s - 1e-12))
    iy0 = int(np.floor(y0 / s + 1e-12))
    iy1 = int(np.ceil(y1 / s - 1e-12))
    hits = []
    areas = []
    for iy in range(iy0, iy1 + 1):
        for ix in range(ix0, ix1 + 1):
            a = omega.rect_overlap_area(ix * s, iy * s, (ix + 1) * s, (iy + 1) * s)
            if a > 1e-15 * s * s:
                hits.append((ix, iy))
                areas.append(a)
    squares = []
    hit_set = set(hits)
    for ix, iy in hits:
        squares.append(
            Square(
                ix * s,
                iy * s,
                s,
                closed_hi_x=(ix + 1, iy) not in hit_set,
                closed_hi_y=(ix, iy + 1) not in hit_set,
                ix=ix,
                iy=iy,
            )
        )
    return Checkerboard(s=s, squares=squares, omega_areas=np.array(areas))


def clip(c: Continuum, region) -> Continuum:
    """Portions of ``c`` inside a Square or a Domain2D.

    Standalone squares behave as closed regions; squares carrying open
    high edges (checkerboard members) drop pieces lying exactly on those
    edges, so a board partition counts shared edges once.
    """
    if isinstance(region, Square):
        segs = _clip_to_rect(c.segs, region.x0, region.y0, region.x1, region.y1,
                             region.closed_hi_x, region.closed_hi_y)
    elif isinstance(region, Domain2D):
        segs = region.clip_segments(c.segs)
    else:
        raise TypeError(f"cannot clip against {type(region).__name__}")
    return Continuum(segs, drop_degenerate=True)


def merge_collinear(c: Continuum, tol: float | None = None) -> Continuum:
    """Union of the segments as a set of points: collinear overlapping
    pieces are merged so total_length reports the H^1 measure.

    Grouping key: direction angle mod pi and signed line offset, both
    rounded at the snapping tolerance.
    """
    if len(c) == 0:
        return c
    tol = c.tol_snap if tol is None else tol
    segs = c.segs
    d = segs[:, 2:] - segs[:, :2]
    lens = np.hypot(d[:, 0], d[:, 1])
    u = d / lens[:, None]
    # orient representatives into the upper half plane so +-u collapse
    flip = (u[:, 1] < 0) | ((np.abs(u[:, 1]) < 1e-15) & (u[:, 0] < 0))
    u[flip] *= -1.0
    ang = np.arctan2(u[:, 1], u[:, 0])  # in [0, pi)
    offset = segs[:, 0] * (-u[:, 1]) + segs[:, 1] * u[:, 0]  # <p, n>
    ang_key = np.round(ang / 1e-9).astype(np.int64)
    off_key = np.round(offset / tol).astype(np.int64)
    order = np.lexsort((off_key, ang_key))
    out = []
    i = 0
    while i < len(order):
        j = i
        while (
            j + 1 < len(order)
            and ang_key[order[j + 1]] == ang_key[order[i]]
            and off_key[order[j + 1]] == off_key[order[i]]
        ):
            j += 1
        group = order[i : j + 1]
        i = j + 1
        if group.size == 1:
            out.append(segs[group[0]])
            continue
        ug = u[group[0]]
        base = segs[group[0], :2]
        t0 = (segs[group, 0] - base[0]) * ug[0] + (segs[group, 1] - base[1]) * ug[1]
        t1 = (segs[group, 2] - base[0]) * ug[0] + (segs[group, 3] - base[1]) * ug[1]
        lo = np.minimum(t0, t1)
        hi = np.maximum(t0, t1)
        srt = np.argsort(lo)
        cur_lo, cur_hi = lo[srt[0]], hi[srt[0]]
        intervals = []
        for k in srt[1:]:
            if lo[k] <= cur_hi + tol:
                cur_hi = max(cur_hi, hi[k])
            else:
                intervals.append((cur_lo, cur_hi))
                cur_lo, cur_hi = lo[k], hi[k]
        intervals.append((cur_lo, cur_hi))
        for a, b in intervals:
            out.append(np.concatenate([base + a * ug, base + b * ug]))
    return Continuum(np.array(out), drop_degenerate=True)


def transform_continuum(b: np.ndarray, c: Continuum) -> Continuum:
    """Apply the linear map B to all endpoints."""
    b = np.asarray(b, dtype=float)
    segs = c.segs
    out = np.empty_like(segs)
    out[:, :2] = segs[:, :2] @ b.T
    out[:, 2:] = segs[:, 2:] @ b.T
    return Continuum(out, drop_degenerate=True)


def transform_domain(b: np.ndarray, omega: Domain2D) -> Domain2D:
    """Apply the linear map B to the domain's boundary polygons."""
    b = np.asarray(b, dtype=float)
    return Domain2D(omega.outer @ b.T, [h @ b.T for h in omega.holes])


def unit_square() -> Domain2D:
    return Domain2D([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
