"""Constructive rib sets: the fundamental tile, its homogenized fill of a
square, and the patchwork assembly over a general domain.

The tile stacks horizontal bands inside the unit square, one band per
normal direction, and fills each band with a maximal family of equally
spaced parallel segments whose common normal is that direction.  Band
heights and spacings are weighted by the Riemannian norm of the direction
under a frozen tensor, which is what makes the construction adapt to
anisotropy.  Filling a square of side s with target length ell means
building at effective length ell/s on the unit square with spacing
(ell/s)^(-2/3), replicating the tile on an m x m grid with
m = ceil((ell/s)^(1/3) I), and rescaling; the total length then matches
ell to leading order.  A patchwork glues per-square fills (each with its
own frozen tensor and direction data) along shared square sides and the
domain boundary.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Checkerboard,
    Continuum,
    Domain2D,
    Square,
    checkerboard,
    clip,
    merge_collinear,
)
from .tensor import SpdTensor2, TensorField, riemannian_norm_entries
from .varifold import (
    AngularMeasure,
    FittedVarifold,
    profile_square_integrals,
    square_sample_point,
)

__all__ = [
    "TileRecipe",
    "BuiltTile",
    "BuiltSigma",
    "PatchworkPlan",
    "BuiltPatchwork",
    "build_tile",
    "tile_cells",
    "build_sigma_ell",
    "optimal_plan",
    "build_patchwork",
]

_REL_TOL = 1e-12


class TileBuildError(ValueError):
    """Raised when the requested spacing leaves some band without segments."""


@dataclass(frozen=True)
class TileRecipe:
    """Blueprint for one tile: directions, their mass fractions, the frozen
    tensor, and the base spacing.

    Derived quantities: per-direction norms sqrt(<M xi, xi>), their
    beta-weighted sum I, band heights h_j = beta_j norm_j / I (summing to
    one), and spacings eps_j = epsilon * norm_j.
    """

    angles: np.ndarray
    betas: np.ndarray
    matrix: SpdTensor2
    epsilon: float
    norms: np.ndarray = field(init=False)
    total_weight: float = field(init=False)
    heights: np.ndarray = field(init=False)
    spacings: np.ndarray = field(init=False)

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float) % np.pi
        b = np.asarray(self.betas, dtype=float)
        if ang.ndim != 1 or ang.shape != b.shape or ang.size == 0:
            raise ValueError("angles and betas must be matching nonempty 1d arrays")
        if np.any(b <= 0):
            raise ValueError("betas must be positive")
        if abs(b.sum() - 1.0) > 1e-9:
            raise ValueError("betas must sum to one")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        norms = riemannian_norm_entries(self.matrix.entries(), ang)
        total = float(np.dot(b, norms))
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "total_weight", total)
        object.__setattr__(self, "heights", b * norms / total)
        object.__setattr__(self, "spacings", self.epsilon * norms)

    @staticmethod
    def from_measure(nu: AngularMeasure, matrix: SpdTensor2, epsilon: float) -> "TileRecipe":
        return TileRecipe(nu.angles, nu.weights, matrix, epsilon)

    @property
    def n_bands(self) -> int:
        return len(self.angles)

    @property
    def band_edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.heights)])


def _band_projection(angle: float, y_lo: float, y_hi: float) -> tuple[float, float]:
    """Range of <x, n> over the band rectangle [0,1] x [y_lo, y_hi]."""
    n = np.array([np.cos(angle), np.sin(angle)])
    corners = np.array([[0, y_lo], [1, y_lo], [0, y_hi], [1, y_hi]])
    c = corners @ n
    return float(c.min()), float(c.max())


def _clip_level_line(angle: float, c: float, y_lo: float, y_hi: float):
    """Segment of the line {<x, n> = c} inside [0,1] x [y_lo, y_hi]."""
    nx, ny = np.cos(angle), np.sin(angle)
    tx, ty = -ny, nx
    px, py = c * nx, c * ny
    t0, t1 = -np.inf, np.inf
    for p, t, lo, hi in ((px, tx, 0.0, 1.0), (py, ty, y_lo, y_hi)):
        if abs(t) < 1e-15:
            if p < lo - 1e-12 or p > hi + 1e-12:
                return None
        else:
            a, b = (lo - p) / t, (hi - p) / t
            if a > b:
                a, b = b, a
            t0, t1 = max(t0, a), min(t1, b)
    if t1 - t0 <= 1e-13:
        return None
    return (px + t0 * tx, py + t0 * ty, px + t1 * tx, py + t1 * ty)


@dataclass(frozen=True)
class BuiltTile:
    """A tile split into its frame (band walls) and comb (parallel ribs)."""

    frame: Continuum
    comb: Continuum
    comb_band: np.ndarray
    recipe: TileRecipe

    @property
    def combined(self) -> Continuum:
        return self.frame.concat(self.comb)


def build_tile(recipe: TileRecipe) -> BuiltTile:
    """Construct the tile in the unit square.

    The frame is the union of the band-rectangle boundaries (total length
    number-of-bands + 3).  Each band holds the maximal family of segments
    with normal angle xi_j, spaced eps_j apart, anchored one spacing above
    the band corner with the smallest projection onto the normal.
    """
    edges = recipe.band_edges
    comb_rows: list = []
    comb_band: list = []
    for j in range(recipe.n_bands):
        angle = float(recipe.angles[j])
        eps_j = float(recipe.spacings[j])
        y_lo, y_hi = float(edges[j]), float(edges[j + 1])
        c_lo, c_hi = _band_projection(angle, y_lo, y_hi)
        tol = _REL_TOL * max(1.0, abs(c_hi))
        count = 0
        k = 1
        while c_lo + k * eps_j < c_hi - tol:
            seg = _clip_level_line(angle, c_lo + k * eps_j, y_lo, y_hi)
            if seg is not None:
                comb_rows.append(seg)
                comb_band.append(j)
                count += 1
            k += 1
        if count == 0:
            raise TileBuildError(
                f"spacing {eps_j:.6g} leaves band {j} (height {y_hi - y_lo:.6g}) "
                "without interior segments; decrease epsilon"
            )
    frame_rows = [(0.0, 0.0, 1.0, 0.0), (1.0, 0.0, 1.0, 1.0), (1.0, 1.0, 0.0, 1.0), (0.0, 1.0, 0.0, 0.0)]
    frame_rows += [(0.0, float(y), 1.0, float(y)) for y in edges[1:-1]]
    return BuiltTile(
        Continuum(np.array(frame_rows)),
        Continuum(np.array(comb_rows)),
        np.array(comb_band, dtype=np.int64),
        recipe,
    )


def _clip_polygon_halfplane(poly: np.ndarray, n: np.ndarray, c: float, keep_leq: bool) -> np.ndarray:
    """Sutherland-Hodgman step against {<x, n> <= c} (or >= when flipped)."""
    if len(poly) == 0:
        return poly
    proj = poly @ n
    inside = proj <= c + 1e-14 if keep_leq else proj >= c - 1e-14
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        pi, qi = inside[i], inside[(i + 1) % m]
        if pi:
            out.append(p)
        if pi != qi:
            dp, dq = proj[i] - c, proj[(i + 1) % m] - c
            t = dp / (dp - dq)
            out.append(p + t * (q - p))
    return np.array(out).reshape(-1, 2)


def tile_cells(tile: BuiltTile) -> list:
    """Connected components of the tile complement, one entry per cell:
    a dict with the cell polygon, its band, normal angle, and width (its
    extent along the band's normal, at most the band's spacing)."""
    recipe = tile.recipe
    edges = recipe.band_edges
    cells = []
    for j in range(recipe.n_bands):
        angle = float(recipe.angles[j])
        eps_j = float(recipe.spacings[j])
        y_lo, y_hi = float(edges[j]), float(edges[j + 1])
        c_lo, c_hi = _band_projection(angle, y_lo, y_hi)
        n = np.array([np.cos(angle), np.sin(angle)])
        levels = [c_lo]
        tol = _REL_TOL * max(1.0, abs(c_hi))
        k = 1
        while c_lo + k * eps_j < c_hi - tol:
            levels.append(c_lo + k * eps_j)
            k += 1
        levels.append(c_hi)
        rect = np.array([[0.0, y_lo], [1.0, y_lo], [1.0, y_hi], [0.0, y_hi]])
        for lo, hi in zip(levels[:-1], levels[1:]):
            poly = _clip_polygon_halfplane(rect, n, hi, keep_leq=True)
            poly = _clip_polygon_halfplane(poly, n, lo, keep_leq=False)
            if len(poly) >= 3:
                cells.append(
                    {"polygon": poly, "band": j, "angle": angle, "width": hi - lo}
                )
    return cells


@dataclass(frozen=True)
class BuiltSigma:
    """Homogenized fill of one square: tiled frame and comb, with the
    parameters that were actually used."""

    square: Square
    frame: Continuum
    comb: Continuum
    tile: BuiltTile
    ell: float
    eps: float
    m: int
    cell_widths: np.ndarray  # per band, in final (scaled) coordinates

    @property
    def combined(self) -> Continuum:
        return self.frame.concat(self.comb)

    @property
    def h1(self) -> float:
        return self.frame.total_length + self.comb.total_length

    @property
    def max_cell_width(self) -> float:
        return float(np.max(self.cell_widths))


def build_sigma_ell(
    q: Square, nu: AngularMeasure, matrix: SpdTensor2, ell: float
) -> BuiltSigma:
    """Fill the square q with a rib set of target length ell.

    Works on the unit square at effective length ell/s, then rescales.
    The frame is assembled deduplicated: full-length grid lines plus one
    full-width divider per band edge per tile row.
    """
    if not ell > 0:
        raise ValueError("target length must be positive")
    s = q.s
    ell_eff = ell / s
    eps = ell_eff ** (-2.0 / 3.0)
    recipe = TileRecipe.from_measure(nu, matrix, eps)
    # guard the ceiling against float noise at exact integers
    m = int(math.ceil(ell_eff ** (1.0 / 3.0) * recipe.total_weight - 1e-12))
    tile = build_tile(recipe)

    grid = np.arange(m + 1) / m
    frame_rows = [(g, 0.0, g, 1.0) for g in grid]
    frame_rows += [(0.0, g, 1.0, g) for g in grid]
    edges = recipe.band_edges
    for r in range(m):
        for y_e in edges[1:-1]:
            frame_rows.append((0.0, (r + float(y_e)) / m, 1.0, (r + float(y_e)) / m))
    frame = Continuum(np.array(frame_rows))

    base = tile.comb.segs / m
    offs = np.array([(a / m, b / m) for a in range(m) for b in range(m)])
    tiled = (base[None, :, :] + np.tile(offs, 2)[:, None, :]).reshape(-1, 4)
    comb = Continuum(tiled)

    scale = np.array([q.x0, q.y0, q.x0, q.y0])
    frame = Continuum(frame.segs * s + scale)
    comb = Continuum(comb.segs * s + scale)
    return BuiltSigma(q, frame, comb, tile, ell, eps, m, recipe.spacings * (s / m))


@dataclass(frozen=True)
class PatchworkPlan:
    """Per-square build orders: fitted density and direction data, frozen
    tensors, and the global length budget."""

    board: Checkerboard
    fitted: FittedVarifold
    frozen: list
    L: float

    def __post_init__(self):
        if len(self.frozen) != len(self.board):
            raise ValueError("one frozen tensor per board square")
        if not self.L > 0:
            raise ValueError("length budget must be positive")

    def square_lengths(self, L: float | None = None) -> np.ndarray:
        budget = self.L if L is None else L
        return self.board.s**2 * self.fitted.alphas * budget


def optimal_plan(field_a: TensorField, omega: Domain2D, s: float, L: float) -> PatchworkPlan:
    """Discretize the optimal limit data on an s-checkerboard.

    Per square: density alpha_i averages the optimal profile over the
    square's overlap with the domain, the direction is a dirac at the top
    eigendirection at the square's sample point, and the tensor is frozen
    there.
    """
    board = checkerboard(omega, s)
    integrals = profile_square_integrals(field_a, omega, board)
    z = integrals.sum()
    areas = board.omega_areas
    alphas = integrals / (areas * z)
    nus = []
    frozen = []
    for q in board.squares:
        x_i = square_sample_point(omega, q)
        _, _, xi_angle = (float(v[0]) for v in field_a.sigma_range_at(x_i[None, :]))
        nus.append(AngularMeasure.dirac(xi_angle))
        frozen.append(field_a.tensor_at(x_i[0], x_i[1]))
    return PatchworkPlan(board, FittedVarifold(board, alphas, nus), frozen, L)


@dataclass(frozen=True)
class BuiltPatchwork:
    """Assembled rib set over the domain, with build diagnostics."""

    continuum: Continuum  # merged union, ready for measurement
    comb: Continuum  # comb parts only, clipped to the domain
    plan: PatchworkPlan
    builds: list  # per-square BuiltSigma
    L_requested: float
    L_used: float
    renormalized: bool

    @property
    def h1(self) -> float:
        return self.continuum.total_length

    @property
    def max_cell_width(self) -> float:
        return max(b.max_cell_width for b in self.builds)


def _check_boundary_components_not_swallowed(omega: Domain2D, board: Checkerboard):
    rings = [omega.outer] + list(omega.holes)
    for ring in rings:
        r = np.asarray(ring, dtype=float)
        bx0, by0 = r.min(axis=0)
        bx1, by1 = r.max(axis=0)
        for q in board.squares:
            if q.x0 < bx0 and bx1 < q.x1 and q.y0 < by0 and by1 < q.y1:
                raise ValueError(
                    f"a boundary component lies strictly inside square "
                    f"({q.ix},{q.iy}); use a smaller board side"
                )


def _build_one(args):
    i, q, nu, m_i, ell_i = args
    try:
        return i, build_sigma_ell(q, nu, m_i, ell_i)
    except (TileBuildError, ValueError) as exc:
        raise TileBuildError(
            f"square ({q.ix},{q.iy}): target length {ell_i:.6g} is too small: {exc}"
        ) from exc


def _assemble(plan: PatchworkPlan, omega: Domain2D, L_used: float):
    board = plan.board
    ells = plan.square_lengths(L_used)
    jobs = []
    for i, q in enumerate(board.squares):
        if board.omega_areas[i] <= 0:
            continue
        if plan.fitted.alphas[i] <= 0:
            raise ValueError(
                f"infinite-energy plan: zero density on square ({q.ix},{q.iy})"
            )
        jobs.append((i, q, plan.fitted.nus[i], plan.frozen[i], float(ells[i])))
    with ThreadPoolExecutor() as pool:
        done = list(pool.map(_build_one, jobs))
    done.sort(key=lambda t: t[0])
    builds = [b for _, b in done]

    pieces = [omega.boundary_continuum()]
    comb_pieces = []
    for b in builds:
        q = b.square
        interior = omega.rect_overlap_area(q.x0, q.y0, q.x1, q.y1) >= q.s**2 * (1 - 1e-12)
        if interior:
            pieces.append(b.combined)
            comb_pieces.append(b.comb)
        else:
            pieces.append(clip(b.combined, omega))
            comb_pieces.append(clip(b.comb, omega))
    merged = merge_collinear(Continuum(np.vstack([p.segs for p in pieces])))
    comb_rows = np.vstack([c.segs for c in comb_pieces]) if comb_pieces else np.zeros((0, 4))
    return merged, Continuum(comb_rows, drop_degenerate=True), builds


def build_patchwork(plan: PatchworkPlan, omega: Domain2D) -> BuiltPatchwork:
    """Assemble the rib set over the domain: boundary plus per-square fills
    clipped to the domain, merged along shared edges.

    If the measured total length overshoots the budget, the whole assembly
    is rebuilt once with the budget scaled down proportionally.
    """
    _check_boundary_components_not_swallowed(omega, plan.board)
    merged, comb, builds = _assemble(plan, omega, plan.L)
    renormalized = False
    L_used = plan.L
    h1 = merged.total_length
    if h1 > plan.L:
        L_used = plan.L * (plan.L / h1)
        merged, comb, builds = _assemble(plan, omega, L_used)
        renormalized = True
    return BuiltPatchwork(merged, comb, plan, builds, plan.L, L_used, renormalized)
