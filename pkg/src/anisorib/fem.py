"""First Dirichlet eigenvalues of divergence-form operators on meshed
planar domains, with rib sets imposed as nodal constraints.

The mesh is a structured lattice over the domain's bounding box (n cells
per unit length, two right triangles per cell); only cells lying inside
the domain are kept, so curved or re-entrant boundaries are approximated
by a staircase from within.  Ribs are imposed by flagging every node
within half a mesh cell of the set, which thickens the set by O(h); the
callers of asymptotic experiments therefore keep several cells across the
thinnest gap between ribs.  Eigenvalues come from inverse power iteration
with conjugate-gradient inner solves on the constrained system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg

from .geometry import Continuum, Domain2D
from .tensor import ConstantField, SpdTensor2, TensorField

__all__ = [
    "Mesh",
    "EigResult",
    "EigenConvergenceError",
    "build_mesh",
    "mark_dirichlet",
    "assemble",
    "smallest_eig",
    "lambda1_full",
    "lambda1_partial",
]


@dataclass(frozen=True)
class Mesh:
    """Structured triangulation of the inside-cells of a lattice."""

    n: int
    h: float
    origin: tuple[float, float]
    nx: int
    ny: int
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3) node ids
    cell_inside: np.ndarray  # (nx, ny) bool
    node_ids: np.ndarray  # (nx+1, ny+1) -> node id or -1
    node_grid: np.ndarray  # (N, 2) lattice coordinates of each node

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def boundary_node_mask(self) -> np.ndarray:
        """Nodes on the edge of the triangulated patch: any node not
        surrounded by four inside cells."""
        padded = np.zeros((self.nx + 2, self.ny + 2), dtype=bool)
        padded[1:-1, 1:-1] = self.cell_inside
        gi, gj = self.node_grid[:, 0], self.node_grid[:, 1]
        surrounded = (
            padded[gi, gj]
            & padded[gi + 1, gj]
            & padded[gi, gj + 1]
            & padded[gi + 1, gj + 1]
        )
        return ~surrounded


def build_mesh(omega: Domain2D, n: int) -> Mesh:
    """Triangulate the cells of an n-per-unit-length lattice that lie
    inside the domain (all four corners and the center)."""
    if n < 4:
        raise ValueError("need at least 4 cells per unit length")
    x0, y0, x1, y1 = omega.bbox
    h = 1.0 / n
    nx = max(1, int(np.ceil((x1 - x0) / h - 1e-9)))
    ny = max(1, int(np.ceil((y1 - y0) / h - 1e-9)))
    for hole in omega.holes:
        hx = hole[:, 0].max() - hole[:, 0].min()
        hy = hole[:, 1].max() - hole[:, 1].min()
        if min(hx, hy) < 2 * h:
            raise ValueError("mesh too coarse to resolve a hole; increase n")

    gx = x0 + h * np.arange(nx + 1)
    gy = y0 + h * np.arange(ny + 1)
    corners = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1)  # (nx+1, ny+1, 2)
    corner_in = omega.contains(corners.reshape(-1, 2)).reshape(nx + 1, ny + 1)
    centers = np.stack(
        np.meshgrid(gx[:-1] + h / 2, gy[:-1] + h / 2, indexing="ij"), axis=-1
    )
    center_in = omega.contains(centers.reshape(-1, 2)).reshape(nx, ny)
    cell_inside = (
        corner_in[:-1, :-1]
        & corner_in[1:, :-1]
        & corner_in[:-1, 1:]
        & corner_in[1:, 1:]
        & center_in
    )
    if not cell_inside.any():
        raise ValueError("mesh too coarse: no cell fits inside the domain")

    node_used = np.zeros((nx + 1, ny + 1), dtype=bool)
    ci, cj = np.nonzero(cell_inside)
    node_used[ci, cj] = True
    node_used[ci + 1, cj] = True
    node_used[ci, cj + 1] = True
    node_used[ci + 1, cj + 1] = True
    node_ids = np.full((nx + 1, ny + 1), -1, dtype=np.int64)
    gi, gj = np.nonzero(node_used)
    node_ids[gi, gj] = np.arange(len(gi))
    nodes = np.column_stack([gx[gi], gy[gj]])
    node_grid = np.column_stack([gi, gj])

    # two triangles per cell, split along the main diagonal
    a = node_ids[ci, cj]
    b = node_ids[ci + 1, cj]
    c = node_ids[ci + 1, cj + 1]
    d = node_ids[ci, cj + 1]
    triangles = np.vstack(
        [np.column_stack([a, b, c]), np.column_stack([a, c, d])]
    )
    return Mesh((int(n)), h, (x0, y0), nx, ny, nodes, triangles, cell_inside, node_ids, node_grid)


def mark_dirichlet(
    mesh: Mesh, d: Continuum | None, include_outer_boundary: bool
) -> np.ndarray:
    """Boolean node mask: within h/2 of the given set, plus the edge of the
    triangulated patch when the outer boundary carries the condition."""
    flags = np.zeros(mesh.n_nodes, dtype=bool)
    if include_outer_boundary:
        flags |= mesh.boundary_node_mask()
    has_segments = d is not None and len(d) > 0 and d.total_length > 0
    if not include_outer_boundary and not has_segments:
        raise ValueError("a constraint set of positive length is required")
    if not has_segments:
        return flags
    h = mesh.h
    x0, y0 = mesh.origin
    tol = 0.5 * h * (1 + 1e-9)
    segs = d.segs
    lens = d.lengths
    for row, ln in zip(segs, lens):
        n_samp = max(2, int(np.ceil(ln / (0.5 * h))) + 1)
        ts = np.linspace(0.0, 1.0, n_samp)
        pts = row[:2] + np.outer(ts, row[2:] - row[:2])
        gi = np.clip(np.round((pts[:, 0] - x0) / h).astype(np.int64), 0, mesh.nx)
        gj = np.clip(np.round((pts[:, 1] - y0) / h).astype(np.int64), 0, mesh.ny)
        cand = set()
        for i, j in zip(gi, gj):
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii <= mesh.nx and 0 <= jj <= mesh.ny:
                        nid = mesh.node_ids[ii, jj]
                        if nid >= 0:
                            cand.add(int(nid))
        if not cand:
            continue
        ids = np.fromiter(cand, dtype=np.int64)
        p = mesh.nodes[ids]
        # exact distance from candidate nodes to this segment
        dvec = row[2:] - row[:2]
        den = float(dvec @ dvec)
        tt = np.clip(((p - row[:2]) @ dvec) / den, 0.0, 1.0)
        proj = row[:2] + tt[:, None] * dvec
        dist = np.hypot(p[:, 0] - proj[:, 0], p[:, 1] - proj[:, 1])
        flags[ids[dist <= tol]] = True
    return flags


def assemble(mesh: Mesh, field_a: TensorField):
    """P1 stiffness and consistent mass matrices.

    The tensor is evaluated at triangle barycenters, which integrates
    fields that are constant per lattice cell exactly.
    """
    tri = mesh.triangles
    v0 = mesh.nodes[tri[:, 0]]
    v1 = mesh.nodes[tri[:, 1]]
    v2 = mesh.nodes[tri[:, 2]]
    bary = (v0 + v1 + v2) / 3.0
    ent = field_a.entries_at(bary)
    a11, a12, a22 = ent[:, 0], ent[:, 1], ent[:, 2]

    # barycentric gradient coefficients: grad phi_i = (b_i, c_i) / (2 area)
    b = np.stack([v1[:, 1] - v2[:, 1], v2[:, 1] - v0[:, 1], v0[:, 1] - v1[:, 1]], axis=1)
    c = np.stack([v2[:, 0] - v1[:, 0], v0[:, 0] - v2[:, 0], v1[:, 0] - v0[:, 0]], axis=1)
    area2 = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (v2[:, 0] - v0[:, 0]) * (
        v1[:, 1] - v0[:, 1]
    )
    area = 0.5 * np.abs(area2)

    n_nodes = mesh.n_nodes
    rows, cols, kv, mv = [], [], [], []
    for i in range(3):
        for j in range(3):
            kij = (
                a11 * b[:, i] * b[:, j]
                + a12 * (b[:, i] * c[:, j] + c[:, i] * b[:, j])
                + a22 * c[:, i] * c[:, j]
            ) / (4.0 * area)
            mij = area / (6.0 if i == j else 12.0)
            rows.append(tri[:, i])
            cols.append(tri[:, j])
            kv.append(kij)
            mv.append(mij)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    k_mat = sparse.coo_matrix(
        (np.concatenate(kv), (rows, cols)), shape=(n_nodes, n_nodes)
    ).tocsr()
    m_mat = sparse.coo_matrix(
        (np.concatenate(mv), (rows, cols)), shape=(n_nodes, n_nodes)
    ).tocsr()
    return k_mat, m_mat


@dataclass(frozen=True)
class EigResult:
    """Smallest eigenpair of K v = lambda M v on the unconstrained nodes."""

    lambda1: float
    eigenvector: np.ndarray
    residual: float
    mesh_size: float
    iterations: int


class EigenConvergenceError(RuntimeError):
    """Raised when power iteration stalls; carries the last iterate."""

    def __init__(self, message: str, result: EigResult):
        super().__init__(message)
        self.result = result


_RESIDUAL_TOL = 1e-8
_CG_TOL = 1e-10
_MAX_OUTER = 500


def smallest_eig(
    k_mat, m_mat, constrained: np.ndarray, mesh_size: float = float("nan")
) -> EigResult:
    """Inverse power iteration for the smallest generalized eigenvalue.

    Constrained nodes are removed from the system.  Inner solves use
    Jacobi-preconditioned conjugate gradients.  Convergence is declared on
    a relative eigen-residual, with a Rayleigh-quotient stagnation exit
    for systems whose trailing digits are noise-limited.
    """
    n = k_mat.shape[0]
    free = ~np.asarray(constrained, dtype=bool)
    nf = int(free.sum())
    if nf == 0:
        raise ValueError("all nodes constrained; eigenproblem is empty")
    kf = k_mat[free][:, free].tocsr()
    mf = m_mat[free][:, free].tocsr()

    diag = kf.diagonal()
    if np.any(diag <= 0):
        raise ValueError("constrained stiffness is not positive definite")
    precond = sparse.diags(1.0 / diag)

    x = np.ones(nf)
    x /= np.sqrt(x @ (mf @ x))
    lam_prev = np.inf
    stagnant = 0
    lam, res = np.inf, np.inf
    for it in range(1, _MAX_OUTER + 1):
        rhs = mf @ x
        y, info = cg(kf, rhs, x0=x / max(lam_prev, 1.0) if np.isfinite(lam_prev) else x,
                     rtol=_CG_TOL, atol=0.0, M=precond, maxiter=10 * nf)
        if info != 0:
            raise EigenConvergenceError(
                f"inner solve failed to converge (info={info})",
                EigResult(float(lam), _embed(x, free, n), float(res), mesh_size, it),
            )
        norm = np.sqrt(y @ (mf @ y))
        x = y / norm
        ky = kf @ x
        my = mf @ x
        lam = float(x @ ky)
        res = float(np.linalg.norm(ky - lam * my) / (lam * np.linalg.norm(my)))
        if res <= _RESIDUAL_TOL:
            break
        if abs(lam - lam_prev) <= 1e-13 * abs(lam):
            stagnant += 1
            if stagnant >= 3:
                break
        else:
            stagnant = 0
        lam_prev = lam
    else:
        raise EigenConvergenceError(
            f"no convergence after {_MAX_OUTER} iterations (residual {res:.3e})",
            EigResult(float(lam), _embed(x, free, n), float(res), mesh_size, _MAX_OUTER),
        )
    if x.sum() < 0:
        x = -x
    return EigResult(float(lam), _embed(x, free, n), float(res), mesh_size, it)


def _embed(x: np.ndarray, free: np.ndarray, n: int) -> np.ndarray:
    full = np.zeros(n)
    full[free] = x
    return full


def lambda1_full(
    omega: Domain2D, field_a: TensorField, sigma: Continuum | None, n: int
) -> EigResult:
    """First eigenvalue with Dirichlet conditions on the rib set and the
    whole outer boundary."""
    mesh = build_mesh(omega, n)
    flags = mark_dirichlet(mesh, sigma, include_outer_boundary=True)
    k_mat, m_mat = assemble(mesh, field_a)
    return smallest_eig(k_mat, m_mat, flags, mesh.h)


def lambda1_partial(
    omega: Domain2D, matrix: SpdTensor2, d: Continuum, n: int
) -> EigResult:
    """First eigenvalue with Dirichlet conditions on d only; the rest of
    the boundary carries the natural condition."""
    if d is None or len(d) == 0 or not d.total_length > 0:
        raise ValueError("partial problem needs a constraint set of positive length")
    mesh = build_mesh(omega, n)
    flags = mark_dirichlet(mesh, d, include_outer_boundary=False)
    if not flags.any():
        raise ValueError("constraint set does not touch any mesh node")
    k_mat, m_mat = assemble(mesh, ConstantField(matrix))
    return smallest_eig(k_mat, m_mat, flags, mesh.h)
