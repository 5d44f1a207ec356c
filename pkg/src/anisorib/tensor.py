"""Symmetric positive definite 2x2 conductivity tensors and tensor fields.

A tensor is stored by its three independent entries (a11, a12, a22).
Fields evaluate tensors at points of a rectangle that covers the working
domain; evaluation is vectorized over arrays of points throughout, since
the quadrature and assembly loops upstream hand in 1e4..1e6 points at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpdTensor2",
    "SpectralData",
    "TensorField",
    "ConstantField",
    "PiecewiseConstantField",
    "SampledField",
    "eig2",
    "eig2_entries",
    "riemannian_norm",
    "riemannian_norm_entries",
    "ellipticity_constant",
]


@dataclass(frozen=True)
class SpdTensor2:
    """Symmetric positive definite 2x2 matrix with entries

        [[a11, a12],
         [a12, a22]].

    Positivity (a11 > 0 and det > 0) is enforced at construction.
    """

    a11: float
    a12: float
    a22: float

    def __post_init__(self) -> None:
        if not np.isfinite([self.a11, self.a12, self.a22]).all():
            raise ValueError("tensor entries must be finite")
        if self.a11 <= 0.0 or self.det <= 0.0:
            raise ValueError(
                f"matrix [[{self.a11}, {self.a12}], [{self.a12}, {self.a22}]] "
                "is not positive definite"
            )

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    def entries(self) -> np.ndarray:
        return np.array([self.a11, self.a12, self.a22])

    @staticmethod
    def identity() -> "SpdTensor2":
        return SpdTensor2(1.0, 0.0, 1.0)

    @staticmethod
    def diag(a: float, b: float) -> "SpdTensor2":
        return SpdTensor2(a, 0.0, b)

    @staticmethod
    def from_matrix(m: np.ndarray) -> "SpdTensor2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("expected a 2x2 matrix")
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * (1.0 + abs(m[0, 1])):
            raise ValueError("matrix is not symmetric")
        return SpdTensor2(m[0, 0], 0.5 * (m[0, 1] + m[1, 0]), m[1, 1])

    def congruence(self, b: np.ndarray) -> "SpdTensor2":
        """Return B M B^T for a 2x2 matrix B (change of coordinates)."""
        b = np.asarray(b, dtype=float)
        return SpdTensor2.from_matrix(b @ self.as_matrix() @ b.T)

    def inv_sqrt(self) -> np.ndarray:
        """The symmetric inverse square root M^(-1/2) as a 2x2 array."""
        s = eig2(self)
        c, sn = np.cos(s.xi_max_angle), np.sin(s.xi_max_angle)
        # columns: eigenvector of sigma_max, then its orthogonal complement
        q = np.array([[c, -sn], [sn, c]])
        d = np.diag([1.0 / np.sqrt(s.sigma_max), 1.0 / np.sqrt(s.sigma_min)])
        return q @ d @ q.T


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues of an SpdTensor2 and the direction of the largest one.

    ``xi_max_angle`` lies in [0, pi): eigenvectors are only defined up to
    sign, so directions live on the projective line.  Isotropic input gets
    the conventional angle 0.
    """

    sigma_min: float
    sigma_max: float
    xi_max_angle: float


def eig2_entries(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form symmetric 2x2 eigendecomposition, vectorized.

    Parameters
    ----------
    entries : (N, 3) array
        Rows of (a11, a12, a22).

    Returns
    -------
    sigma_min, sigma_max, angle : (N,) arrays
        Eigenvalues sorted ascending and the angle in [0, pi) of the
        eigendirection of ``sigma_max`` (0 where isotropic).
    """
    e = np.atleast_2d(np.asarray(entries, dtype=float))
    a, b, c = e[:, 0], e[:, 1], e[:, 2]
    half_tr = 0.5 * (a + c)
    disc = np.hypot(0.5 * (a - c), b)
    smin = half_tr - disc
    smax = half_tr + disc
    # eigenvector of smax: (b, smax - a), except b == 0 where axes decouple
    vx = np.where(b != 0.0, b, np.where(a >= c, 1.0, 0.0))
    vy = np.where(b != 0.0, smax - a, np.where(a >= c, 0.0, 1.0))
    ang = np.mod(np.arctan2(vy, vx), np.pi)
    ang = np.where(disc <= 1e-15 * np.maximum(a, c), 0.0, ang)
    ang = np.where(np.pi - ang < 1e-12, 0.0, ang)
    return smin, smax, ang


def eig2(m: SpdTensor2) -> SpectralData:
    """Eigenvalues and leading eigendirection of an SPD 2x2 tensor."""
    smin, smax, ang = eig2_entries(m.entries()[None, :])
    return SpectralData(float(smin[0]), float(smax[0]), float(ang[0]))


def riemannian_norm_entries(entries: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """sqrt(<M xi, xi>) for unit vectors xi = (cos a, sin a), vectorized.

    ``entries`` is (N, 3) or (3,) broadcast against ``angles`` (N,).
    """
    e = np.asarray(entries, dtype=float)
    ang = np.asarray(angles, dtype=float)
    if e.ndim == 1:
        e = e[None, :]
    c, s = np.cos(ang), np.sin(ang)
    q = e[..., 0] * c * c + 2.0 * e[..., 1] * c * s + e[..., 2] * s * s
    # clip: q is a Rayleigh quotient of an SPD matrix, >= sigma_min > 0
    return np.sqrt(np.maximum(q, 0.0))


def riemannian_norm(m: SpdTensor2, angle: float) -> float:
    """sqrt(<M xi, xi>) for the unit vector xi = (cos angle, sin angle)."""
    return float(riemannian_norm_entries(m.entries(), np.array([angle], dtype=float))[0])


class TensorField:
    """Base class: an SPD tensor field on a rectangle covering the domain.

    Subclasses implement ``entries_at``; everything else derives from it.
    Queries outside the coverage rectangle are clamped onto it, so boundary
    quadrature points a hair outside the closure evaluate safely.
    """

    #: coverage rectangle (x0, y0, x1, y1)
    bounds: tuple[float, float, float, float]

    def entries_at(self, points: np.ndarray) -> np.ndarray:
        """(N, 2) points -> (N, 3) rows of (a11, a12, a22)."""
        raise NotImplementedError

    def tensor_at(self, x: float, y: float) -> SpdTensor2:
        e = self.entries_at(np.array([[x, y]], dtype=float))[0]
        return SpdTensor2(e[0], e[1], e[2])

    def sigma_range_at(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sigma_min, sigma_max, xi_max_angle) arrays at the given points."""
        return eig2_entries(self.entries_at(points))

    def _clamp(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        x0, y0, x1, y1 = self.bounds
        out = np.empty_like(p)
        out[:, 0] = np.clip(p[:, 0], x0, x1)
        out[:, 1] = np.clip(p[:, 1], y0, y1)
        return out

    @property
    def ellipticity_c(self) -> float:
        """Smallest recorded C with C^-1 |y|^2 <= <A(x) y, y> <= C |y|^2."""
        return ellipticity_constant(self, 33)


class ConstantField(TensorField):
    """Spatially constant tensor field."""

    def __init__(self, m: SpdTensor2, bounds: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)):
        self.m = m
        self.bounds = bounds

    def entries_at(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.tile(self.m.entries(), (p.shape[0], 1))


class PiecewiseConstantField(TensorField):
    """One tensor per cell of an axis-aligned rectangular grid.

    Parameters
    ----------
    x_edges, y_edges : 1D arrays, strictly increasing
        Cell boundaries; the grid must cover the closure of the domain.
    cells : (ny, nx, 3) array
        Entry rows (a11, a12, a22) per cell, indexed [iy, ix].
    """

    def __init__(self, x_edges, y_edges, cells):
        self.x_edges = np.asarray(x_edges, dtype=float)
        self.y_edges = np.asarray(y_edges, dtype=float)
        self.cells = np.asarray(cells, dtype=float)
        if self.x_edges.ndim != 1 or self.y_edges.ndim != 1:
            raise ValueError("edges must be 1D arrays")
        if np.any(np.diff(self.x_edges) <= 0) or np.any(np.diff(self.y_edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        ny, nx = self.y_edges.size - 1, self.x_edges.size - 1
        if self.cells.shape != (ny, nx, 3):
            raise ValueError(f"cells must have shape ({ny}, {nx}, 3)")
        for row in self.cells.reshape(-1, 3):
            SpdTensor2(row[0], row[1], row[2])  # validates positivity
        self.bounds = (
            float(self.x_edges[0]),
            float(self.y_edges[0]),
            float(self.x_edges[-1]),
            float(self.y_edges[-1]),
        )

    def entries_at(self, points: np.ndarray) -> np.ndarray:
        p = self._clamp(points)
        ix = np.clip(np.searchsorted(self.x_edges, p[:, 0], side="right") - 1, 0, self.x_edges.size - 2)
        iy = np.clip(np.searchsorted(self.y_edges, p[:, 1], side="right") - 1, 0, self.y_edges.size - 2)
        return self.cells[iy, ix]


class SampledField(TensorField):
    """Entrywise bilinear interpolation of tensors sampled on a lattice.

    Interpolating the entries of SPD matrices stays SPD (the SPD cone is
    convex), but positivity is re-checked on evaluation anyway to catch
    bad input tables early.
    """

    def __init__(self, xs, ys, values):
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if np.any(np.diff(self.xs) <= 0) or np.any(np.diff(self.ys) <= 0):
            raise ValueError("sample coordinates must be strictly increasing")
        if self.values.shape != (self.ys.size, self.xs.size, 3):
            raise ValueError(f"values must have shape ({self.ys.size}, {self.xs.size}, 3)")
        for row in self.values.reshape(-1, 3):
            SpdTensor2(row[0], row[1], row[2])
        self.bounds = (float(self.xs[0]), float(self.ys[0]), float(self.xs[-1]), float(self.ys[-1]))

    def entries_at(self, points: np.ndarray) -> np.ndarray:
        p = self._clamp(points)
        ix = np.clip(np.searchsorted(self.xs, p[:, 0]) - 1, 0, self.xs.size - 2)
        iy = np.clip(np.searchsorted(self.ys, p[:, 1]) - 1, 0, self.ys.size - 2)
        tx = (p[:, 0] - self.xs[ix]) / (self.xs[ix + 1] - self.xs[ix])
        ty = (p[:, 1] - self.ys[iy]) / (self.ys[iy + 1] - self.ys[iy])
        tx = tx[:, None]
        ty = ty[:, None]
        v00 = self.values[iy, ix]
        v10 = self.values[iy, ix + 1]
        v01 = self.values[iy + 1, ix]
        v11 = self.values[iy + 1, ix + 1]
        out = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11
        smin, _, _ = eig2_entries(out)
        if np.any(smin <= 0.0):
            raise ValueError("interpolated tensor lost positive definiteness")
        return out


def ellipticity_constant(f: TensorField, samples: int) -> float:
    """Smallest C with C^-1 |y|^2 <= <A(x) y, y> <= C |y|^2 on a sample lattice.

    Samples a ``samples`` x ``samples`` lattice (endpoints included) over the
    field's coverage rectangle; exact for constant fields, and exact for
    piecewise-constant fields once the lattice hits every cell.
    """
    if samples < 1:
        raise ValueError("samples must be a positive integer")
    if isinstance(f, ConstantField):
        pts = np.array([[f.bounds[0], f.bounds[1]]])
    else:
        x0, y0, x1, y1 = f.bounds
        gx = np.linspace(x0, x1, samples)
        gy = np.linspace(y0, y1, samples)
        xx, yy = np.meshgrid(gx, gy)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        if isinstance(f, PiecewiseConstantField):
            # lattice points may miss thin cells; include cell centers too
            cx = 0.5 * (f.x_edges[:-1] + f.x_edges[1:])
            cy = 0.5 * (f.y_edges[:-1] + f.y_edges[1:])
            xx2, yy2 = np.meshgrid(cx, cy)
            pts = np.vstack([pts, np.column_stack([xx2.ravel(), yy2.ravel()])])
    smin, smax, _ = eig2_entries(f.entries_at(pts))
    return float(max(smax.max(), 1.0 / smin.min()))
