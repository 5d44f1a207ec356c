"""Angular measures carried by rib sets and the limit shape functional.

A rib set is scored by how its length mass distributes across the domain
and across normal directions.  The set itself is summarized by a cloud of
weighted point atoms (one per segment, carrying its normal angle); binned
over a checkerboard this becomes piecewise-constant data: a density weight
per square plus a probability measure on angles mod pi.  The functional
assembled from those data has an explicit unconstrained minimum, which
serves as the yardstick for optimality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Checkerboard, Continuum, Domain2D, clip
from .tensor import SpdTensor2, TensorField, riemannian_norm_entries

__all__ = [
    "AngularMeasure",
    "EmpiricalVarifold",
    "FittedVarifold",
    "DeviationReport",
    "empirical_varifold",
    "pair_test",
    "disintegrate",
    "f_infinity",
    "F_infinity_min",
    "F_infinity_fitted",
    "profile_square_integrals",
    "square_sample_point",
    "optimality_deviation",
    "angle_total_variation",
]

_ATOM_MERGE_TOL = 1e-12
_MASS_TOL = 1e-10


@dataclass(frozen=True)
class AngularMeasure:
    """Probability measure on normal angles in [0, pi), finitely atomic."""

    angles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float) % np.pi
        w = np.asarray(self.weights, dtype=float)
        if ang.shape != w.shape or ang.ndim != 1:
            raise ValueError("angles and weights must be matching 1d arrays")
        if ang.size == 0:
            raise ValueError("measure needs at least one atom")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        tot = w.sum()
        if not tot > 0:
            raise ValueError("measure must have positive mass")
        # canonicalize: merge coincident atoms, sort, normalize to mass one
        order = np.argsort(ang)
        ang, w = ang[order], w[order]
        keep_ang, keep_w = [ang[0]], [w[0]]
        for a, b in zip(ang[1:], w[1:]):
            if a - keep_ang[-1] <= _ATOM_MERGE_TOL:
                keep_w[-1] += b
            else:
                keep_ang.append(a)
                keep_w.append(b)
        if len(keep_ang) > 1 and (np.pi - keep_ang[-1]) + keep_ang[0] <= _ATOM_MERGE_TOL:
            keep_w[0] += keep_w.pop()
            keep_ang.pop()
        object.__setattr__(self, "angles", np.array(keep_ang))
        object.__setattr__(self, "weights", np.array(keep_w) / tot)

    @property
    def n_atoms(self) -> int:
        return len(self.angles)

    def mean_riemannian_norm(self, m: SpdTensor2) -> float:
        """Integral of sqrt(<M y, y>) over unit normals y ~ this measure."""
        vals = riemannian_norm_entries(m.entries(), self.angles)
        return float(np.dot(vals, self.weights))

    def binned(self, n_bins: int) -> np.ndarray:
        """Histogram of the measure on n_bins equal bins over [0, pi)."""
        edges = np.linspace(0.0, np.pi, n_bins + 1)
        idx = np.minimum(np.digitize(self.angles, edges) - 1, n_bins - 1)
        h = np.zeros(n_bins)
        np.add.at(h, idx, self.weights)
        return h

    @staticmethod
    def dirac(angle: float) -> "AngularMeasure":
        return AngularMeasure(np.array([angle]), np.array([1.0]))


@dataclass(frozen=True)
class EmpiricalVarifold:
    """Weighted point atoms summarizing a rib set: one atom per segment at
    its midpoint, carrying the normal angle and the segment's length share.
    """

    points: np.ndarray
    angles: np.ndarray
    weights: np.ndarray
    source_length: float

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        a = np.asarray(self.angles, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or a.shape != (p.shape[0],) or w.shape != a.shape:
            raise ValueError("points (N,2), angles (N,), weights (N,) required")
        if abs(w.sum() - 1.0) > _MASS_TOL:
            raise ValueError("atom weights must sum to one")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "angles", a % np.pi)
        object.__setattr__(self, "weights", w)

    @property
    def n_atoms(self) -> int:
        return len(self.weights)


def empirical_varifold(c: Continuum) -> EmpiricalVarifold:
    """Atomize a rib set: midpoints, normal angles, length-share weights."""
    total = c.total_length
    if not total > 0:
        raise ValueError("cannot atomize a set of zero length")
    return EmpiricalVarifold(c.midpoints, c.normal_angles, c.lengths / total, total)


def pair_test(v: EmpiricalVarifold, phi) -> float:
    """Pair the varifold with a test function phi(points, angles) -> values.

    phi must be vectorized over atoms and pi-periodic in the angle slot.
    """
    vals = np.asarray(phi(v.points, v.angles), dtype=float)
    return float(np.dot(vals, v.weights))


@dataclass(frozen=True)
class FittedVarifold:
    """Piecewise-constant limit data on a checkerboard: per square a
    density weight alpha_i and an angular measure nu_i.  Total mass
    (sum of alpha_i times the square's overlap area) is one."""

    board: Checkerboard
    alphas: np.ndarray
    nus: list

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        if a.shape != (len(self.board),):
            raise ValueError("one alpha per board square")
        if np.any(a < 0):
            raise ValueError("alphas must be nonnegative")
        if len(self.nus) != len(self.board):
            raise ValueError("one angular measure per board square")
        mass = float(np.dot(a, self.board.omega_areas))
        if abs(mass - 1.0) > _MASS_TOL:
            raise ValueError(f"fitted mass must be one, got {mass!r}")
        object.__setattr__(self, "alphas", a)


def disintegrate(
    v: EmpiricalVarifold, board: Checkerboard, omega: Domain2D
) -> FittedVarifold:
    """Average the atom cloud over board squares.

    alpha_i is the mass landing in square i divided by |Omega intersect
    Q_i|; nu_i is the conditional angle distribution there.  Empty squares
    get alpha 0 and a placeholder dirac at angle 0.
    """
    owner = board.square_of_points(v.points)
    if np.any(owner < 0):
        raise ValueError("board does not cover the support of the varifold")
    nq = len(board)
    alphas = np.zeros(nq)
    nus: list = [None] * nq
    for i in range(nq):
        sel = owner == i
        mass = float(v.weights[sel].sum())
        area = board.omega_areas[i]
        if mass > 0 and area > 0:
            alphas[i] = mass / area
            nus[i] = AngularMeasure(v.angles[sel], v.weights[sel])
        else:
            nus[i] = AngularMeasure.dirac(0.0)
    return FittedVarifold(board, alphas, nus)


def f_infinity(field_a: TensorField, omega: Domain2D, quad_cells: int = 64) -> dict:
    """Optimal limiting density profile and its normalizer.

    The profile is proportional to 1/sqrt(sigma_max(x)); Z is its integral
    over the domain, computed by midpoint quadrature on a quad_cells^2
    lattice weighted by cell overlap areas.
    """
    if quad_cells < 1:
        raise ValueError("quad_cells must be at least 1")
    x0, y0, x1, y1 = omega.bbox
    nx = ny = int(quad_cells)
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    _, smax, _ = field_a.sigma_range_at(pts)
    vals = 1.0 / np.sqrt(smax)
    weights = np.empty(pts.shape[0])
    k = 0
    for i in range(nx):
        for j in range(ny):
            weights[k] = omega.rect_overlap_area(xs[i], ys[j], xs[i + 1], ys[j + 1])
            k += 1
    z = float(np.dot(vals, weights))
    return {"points": pts, "values": vals / z, "weights": weights, "Z": z}


def F_infinity_min(field_a: TensorField, omega: Domain2D, quad_cells: int = 64) -> float:
    """Unconstrained minimum of the limit functional: (Z / pi)^2 with
    Z the integral of 1/sqrt(sigma_max) over the domain."""
    z = f_infinity(field_a, omega, quad_cells)["Z"]
    return (z / np.pi) ** 2


def F_infinity_fitted(
    fitted: FittedVarifold, field_a: TensorField, samples_per_square: int = 8
) -> float:
    """Limit functional of piecewise-constant data on a checkerboard.

    Per square the integrand is 1 / (alpha_i * pi * mean_norm(x))^2 with
    mean_norm the nu_i-average of sqrt(<A(x) y, y>); the functional is the
    worst (largest) value over squares and over sample points x in the
    square.  A square carrying zero density makes the value infinite.
    """
    worst = 0.0
    k = int(samples_per_square)
    for i, q in enumerate(fitted.board.squares):
        if fitted.board.omega_areas[i] <= 0:
            continue
        a_i = fitted.alphas[i]
        if a_i <= 0:
            return float("inf")
        nu = fitted.nus[i]
        ts = (np.arange(k) + 0.5) / k
        gx, gy = np.meshgrid(q.x0 + ts * q.s, q.y0 + ts * q.s, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        ent = field_a.entries_at(pts)
        norms = riemannian_norm_entries(ent[:, None, :], nu.angles)
        mean_norms = norms @ nu.weights
        local = np.max(1.0 / (a_i * np.pi * mean_norms) ** 2)
        worst = max(worst, float(local))
    return worst


def profile_square_integrals(
    field_a: TensorField, omega: Domain2D, board: Checkerboard, cells_per_square: int = 16
) -> np.ndarray:
    """Integral of 1/sqrt(sigma_max) over Omega intersect Q_i, per square.

    Midpoint quadrature on a per-square sub-lattice weighted by overlap
    areas, so integrals partition the domain exactly and fields that are
    constant per board square are integrated exactly.
    """
    k = int(cells_per_square)
    out = np.zeros(len(board))
    for i, q in enumerate(board.squares):
        xs = q.x0 + q.s * np.arange(k + 1) / k
        ys = q.y0 + q.s * np.arange(k + 1) / k
        cx = 0.5 * (xs[:-1] + xs[1:])
        cy = 0.5 * (ys[:-1] + ys[1:])
        gx, gy = np.meshgrid(cx, cy, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        _, smax, _ = field_a.sigma_range_at(pts)
        vals = 1.0 / np.sqrt(smax)
        w = np.empty(pts.shape[0])
        t = 0
        for a in range(k):
            for b in range(k):
                w[t] = omega.rect_overlap_area(xs[a], ys[b], xs[a + 1], ys[b + 1])
                t += 1
        out[i] = float(np.dot(vals, w))
    return out


def square_sample_point(omega: Domain2D, q, probe: int = 8) -> np.ndarray:
    """A deterministic point of Omega intersect Q: the center when it lies
    inside, otherwise the sub-cell midpoint with the largest overlap."""
    center = np.array(q.center)
    if bool(omega.contains(center[None, :])[0]):
        return center
    xs = q.x0 + q.s * np.arange(probe + 1) / probe
    ys = q.y0 + q.s * np.arange(probe + 1) / probe
    cx = 0.5 * (xs[:-1] + xs[1:])
    gx, gy = np.meshgrid(cx, 0.5 * (ys[:-1] + ys[1:]), indexing="ij")
    mids = np.column_stack([gx.ravel(), gy.ravel()])
    inside = omega.contains(mids)
    areas = np.empty(len(mids))
    t = 0
    for a in range(probe):
        for b in range(probe):
            areas[t] = omega.rect_overlap_area(xs[a], ys[b], xs[a + 1], ys[b + 1])
            t += 1
    # a midpoint inside the domain beats any amount of overlap area
    score = areas + np.where(inside, 2.0 * q.s * q.s, 0.0)
    return mids[int(np.argmax(score))]


def angle_total_variation(
    nu_hat: AngularMeasure, nu_star: AngularMeasure, atom_tol: float = 1e-9
) -> float:
    """Total variation distance between two atomic angle measures, matching
    atoms that agree within atom_tol (angles compared mod pi)."""
    ang = np.concatenate([nu_hat.angles, nu_star.angles])
    w = np.concatenate([nu_hat.weights, -nu_star.weights])
    order = np.argsort(ang)
    ang, w = ang[order], w[order]
    # cluster nearby angles; within a cluster signed weights cancel
    starts = [ang[0]]
    sums = [w[0]]
    for a, b in zip(ang[1:], w[1:]):
        if a - starts[-1] <= atom_tol:
            sums[-1] += b
        else:
            starts.append(a)
            sums.append(b)
    # the first and last cluster can be one direction mod pi
    if len(sums) > 1 and (np.pi - starts[-1]) + starts[0] <= atom_tol:
        sums[0] += sums.pop()
    return 0.5 * float(np.sum(np.abs(sums)))


@dataclass(frozen=True)
class DeviationReport:
    """Per-square comparison of a rib set against the optimal limit data."""

    board: Checkerboard
    length_share: np.ndarray
    target_share: np.ndarray
    angle_tv: np.ndarray
    applicable: np.ndarray
    n_bins: int

    @property
    def max_share_gap(self) -> float:
        if len(self.length_share) == 0:
            return 0.0
        return float(np.max(np.abs(self.length_share - self.target_share)))

    @property
    def max_angle_tv(self) -> float:
        """Worst binned angle distance over squares where orientation is
        both present and meaningful (anisotropic, nonempty)."""
        sel = self.applicable & (self.length_share > 0)
        if not np.any(sel):
            return 0.0
        return float(np.max(self.angle_tv[sel]))


def optimality_deviation(
    c: Continuum,
    field_a: TensorField,
    board: Checkerboard,
    omega: Domain2D,
    n_bins: int = 36,
    cells_per_square: int = 16,
) -> DeviationReport:
    """Compare a concrete rib set against the optimal limit profile.

    Length shares come from exact clipping against each square; target
    shares integrate the optimal density over the square.  The angle score
    is the binned total-variation distance between the square's empirical
    normal histogram and a dirac at the locally optimal orientation, and
    is marked not applicable where the field is isotropic.
    """
    total = c.total_length
    integrals = profile_square_integrals(field_a, omega, board, cells_per_square)
    z = integrals.sum()
    target = integrals / z if z > 0 else integrals
    edges = np.linspace(0.0, np.pi, n_bins + 1)
    nq = len(board)
    share = np.zeros(nq)
    tv = np.zeros(nq)
    applicable = np.zeros(nq, dtype=bool)
    for i, q in enumerate(board.squares):
        x_i = square_sample_point(omega, q)
        smin, smax, xi_angle = (float(v[0]) for v in field_a.sigma_range_at(x_i[None, :]))
        applicable[i] = smax - smin > 1e-12 * smax
        piece = clip(c, q)
        if len(piece) == 0 or total <= 0:
            continue
        lens = piece.lengths
        share[i] = lens.sum() / total
        hist, _ = np.histogram(piece.normal_angles, bins=edges, weights=lens)
        hist = hist / lens.sum()
        star = AngularMeasure.dirac(xi_angle).binned(n_bins)
        tv[i] = 0.5 * float(np.abs(hist - star).sum())
    return DeviationReport(board, share, target, tv, applicable, n_bins)
