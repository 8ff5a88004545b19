"""Discrete time-harmonic Maxwell problem on a (sub)domain.

Bilinear form::

    (mu^-1 curl E, curl phi) - eps omega^2 (E, phi)
        + i kappa omega <E_T, phi_T>_{absorbing}
        + c <E_T, phi_T>_{interface}

with the Robin interface coefficient ``c = i omega kappa``. Interface data
``g`` enters the right-hand side as ``-<g, phi_T>_{interface}``; the
incident condition is imposed strongly through per-edge L2 projection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import InvalidArgumentError
from .geometry import BoundaryKind, Mesh, Subdomain, interface_edges, whole_domain
from .nedelec import (
    BasisOrder,
    DofMap,
    distribute_dofs,
    edge_trace_basis,
    tabulate,
)


class FactorizationError(RuntimeError):
    def __init__(self, message, pivot=None):
        super().__init__(message if pivot is None else f"{message} (pivot {pivot})")
        self.pivot = pivot


@dataclass(frozen=True)
class MaterialParams:
    mu: float = 1.0
    eps: complex = 1.49**2
    omega: float = 2 * math.pi / 3.0

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidArgumentError(f"mu must be positive, got {self.mu}")
        if not self.omega > 0:
            raise InvalidArgumentError(f"omega must be positive, got {self.omega}")

    @classmethod
    def from_wavelength(cls, wavelength, mu=1.0, eps=1.49**2):
        return cls(mu=mu, eps=eps, omega=2 * math.pi / wavelength)

    @property
    def kappa(self) -> complex:
        k = complex(np.sqrt(complex(self.eps)))
        return k.real if k.imag == 0 else k

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def robin(self) -> complex:
        """Interface Robin coefficient, also the absorbing coefficient."""
        return 1j * self.omega * self.kappa


@dataclass(frozen=True)
class BoundaryField:
    """Closed-form incident field ``(x, y) -> (Ex, Ey)`` (complex arrays)."""

    ident: str
    func: Callable

    def __call__(self, x, y):
        ex, ey = self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        shape = np.broadcast(x, y).shape
        return (np.broadcast_to(np.asarray(ex, dtype=complex), shape),
                np.broadcast_to(np.asarray(ey, dtype=complex), shape))


ZERO_FIELD = BoundaryField("zero", lambda x, y: (0.0 * x, 0.0 * y))


def plane_wave(omega_kappa, direction, polarization=None, ident="plane_wave") -> BoundaryField:
    """E = p exp(i k d.x) with |d| = 1 and p orthogonal to d."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    p = np.array([-d[1], d[0]]) if polarization is None else np.asarray(polarization, dtype=complex)
    k = omega_kappa

    def f(x, y):
        ph = np.exp(1j * k * (d[0] * x + d[1] * y))
        return p[0] * ph, p[1] * ph

    return BoundaryField(ident, f)


def gauss_square(npts: int):
    """Tensor Gauss-Legendre rule on [0,1]^2: points (q, 2), weights (q,)."""
    x, w = np.polynomial.legendre.leggauss(npts)
    x, w = 0.5 * (x + 1), 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def gauss_line(npts: int):
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1), 0.5 * w


def _cell_geometry(mesh: Mesh, cells):
    v = mesh.vertices[mesh.cells[cells]]  # (c, 4, 2)
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)  # columns
    det = np.linalg.det(J)
    if np.any(np.abs(det) < 1e-300):
        from .nedelec import DegenerateCellError

        raise DegenerateCellError("cell with singular Jacobian")
    JinvT = np.linalg.inv(J).transpose(0, 2, 1)
    return v[:, 0], J, JinvT, det


def _edge_geometry(mesh: Mesh, edge):
    a, b = mesh.vertices[mesh.edges[edge]]
    length = float(np.linalg.norm(b - a))
    return a, b, (b - a) / length, length


def edge_mass(order: BasisOrder, length: float, nq: int | None = None) -> np.ndarray:
    """Tangential trace mass matrix of one edge's functions (physical)."""
    t, w = gauss_line(nq or order.n_edge + 2)
    psi = edge_trace_basis(order, t)
    return (psi * w) @ psi.T / length


def volume_matrices(dof_map: DofMap, nq: int | None = None):
    """Sparse curl-curl and mass matrices (real, with orientation signs)."""
    order = dof_map.order
    mesh, cells = dof_map.mesh, dof_map.sub.cells
    pts, wts = gauss_square(nq or order.p_edge + 2)
    ref_v, ref_c = tabulate(order, pts)
    _, _, JinvT, det = _cell_geometry(mesh, cells)
    vals = np.einsum("cij,kqj->ckqi", JinvT, ref_v)
    curls = ref_c[None] / det[:, None, None]
    w = wts[None] * np.abs(det)[:, None]
    s = dof_map.signs
    K = np.einsum("ckq,cq,clq->ckl", curls, w, curls)
    M = np.einsum("ckqi,cq,clqi->ckl", vals, w, vals)
    ss = s[:, :, None] * s[:, None, :]
    K, M = K * ss, M * ss
    rows = np.repeat(dof_map.cell_dofs, order.n_local, axis=1).ravel()
    cols = np.tile(dof_map.cell_dofs, (1, order.n_local)).ravel()
    N = dof_map.total_dofs
    Ks = sp.csr_matrix((K.ravel(), (rows, cols)), shape=(N, N))
    Ms = sp.csr_matrix((M.ravel(), (rows, cols)), shape=(N, N))
    return Ks, Ms


def boundary_matrix(dof_map: DofMap, edges) -> sp.csr_matrix:
    """Sum of tangential edge mass matrices over ``edges``."""
    order = dof_map.order
    rows, cols, data = [], [], []
    for e in edges:
        d = dof_map.edge_dofs(e)
        Me = edge_mass(order, _edge_geometry(dof_map.mesh, e)[3])
        rows.append(np.repeat(d, len(d)))
        cols.append(np.tile(d, len(d)))
        data.append(Me.ravel())
    N = dof_map.total_dofs
    if not rows:
        return sp.csr_matrix((N, N))
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )


def project_edge_trace(field: BoundaryField, mesh: Mesh, edge: int, order: BasisOrder,
                       nq: int = 16) -> np.ndarray:
    """L2 projection of the tangential component of ``field`` on one edge
    onto the edge's trace space; returns the edge dof coefficients."""
    a, b, tau, length = _edge_geometry(mesh, edge)
    t, w = gauss_line(nq)
    p = a[None] + t[:, None] * (b - a)[None]
    ex, ey = field(p[:, 0], p[:, 1])
    et = ex * tau[0] + ey * tau[1]
    psi = edge_trace_basis(order, t)  # physical trace = psi / length
    rhs = psi @ (w * et)  # int (E.t)(psi/L) ds = int (E.t) psi dt
    G = (psi * w) @ psi.T
    return length * np.linalg.solve(G, rhs)


def project_incident_trace(bc: BoundaryField, edges, dof_map: DofMap, nq: int = 16) -> dict:
    """Map dof -> prescribed value on the given (incident) edges."""
    out = {}
    for e in edges:
        coef = project_edge_trace(bc, dof_map.mesh, e, dof_map.order, nq)
        for d, c in zip(dof_map.edge_dofs(e), coef):
            out[int(d)] = complex(c)
    return out


@dataclass(frozen=True, eq=False)
class FEFunction:
    dof_map: DofMap
    coefficients: np.ndarray

    def __post_init__(self):
        if len(self.coefficients) != self.dof_map.total_dofs:
            raise InvalidArgumentError("coefficient vector does not match the dof map")

    def _locate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mesh = self.dof_map.mesh
        n = mesh.n
        i = np.clip(np.floor(pts[:, 0] * n).astype(int), 0, n - 1)
        j = np.clip(np.floor(pts[:, 1] * n).astype(int), 0, n - 1)
        lookup = np.full(len(mesh.cells), -1)
        lookup[self.dof_map.sub.cells] = np.arange(len(self.dof_map.sub.cells))
        # points on a shared row boundary may fall into the neighbouring strip
        gid = j * n + i
        loc = lookup[gid]
        for shift in (-1, 1):
            bad = loc < 0
            if not bad.any():
                break
            jj = np.clip(j[bad] + shift, 0, n - 1)
            onrow = np.abs(pts[bad, 1] * n - np.round(pts[bad, 1] * n)) < 1e-9
            cand = lookup[jj * n + i[bad]]
            loc[np.flatnonzero(bad)[onrow]] = cand[onrow]
        if np.any(loc < 0):
            raise InvalidArgumentError("evaluation point outside the subdomain")
        return pts, loc

    def evaluate(self, points, with_curl=False):
        """Complex field values (N, 2) at physical points (and curls)."""
        pts, loc = self._locate(points)
        dm = self.dof_map
        cells = dm.sub.cells[loc]
        x0, _, JinvT, det = _cell_geometry(dm.mesh, cells)
        ref = np.einsum("pij,pj->pi", JinvT.transpose(0, 2, 1), pts - x0)
        ref_v, ref_c = tabulate(dm.order, ref)  # (k, p, 2), (k, p)
        coef = self.coefficients[dm.cell_dofs[loc]] * dm.signs[loc]  # (p, k)
        u_ref = np.einsum("pk,kpi->pi", coef, ref_v)
        val = np.einsum("pij,pj->pi", JinvT, u_ref)
        if not with_curl:
            return val
        curl = np.einsum("pk,kp->p", coef, ref_c) / det
        return val, curl

    def restrict(self, dof_map: DofMap) -> "FEFunction":
        """Copy coefficients onto another dof map over a subset of cells."""
        return FEFunction(dof_map, transfer_coefficients(self.dof_map, dof_map, self.coefficients))


def transfer_coefficients(src: DofMap, dst: DofMap, coef) -> np.ndarray:
    if src.order != dst.order or src.mesh is not dst.mesh:
        raise InvalidArgumentError("dof maps use different meshes or orders")
    out = np.zeros(dst.total_dofs, dtype=complex)
    src_pos = {int(c): k for k, c in enumerate(src.sub.cells)}
    for k, c in enumerate(dst.sub.cells):
        if int(c) not in src_pos:
            raise InvalidArgumentError(f"cell {c} missing from the source dof map")
        out[dst.cell_dofs[k]] = coef[src.cell_dofs[src_pos[int(c)]]]
    return out


def l2_norm(fe: FEFunction, exact: BoundaryField | None = None, nq: int = 8) -> float:
    """L2 norm of ``fe`` (or of ``fe - exact``) by cell quadrature."""
    dm = fe.dof_map
    pts, wts = gauss_square(nq)
    ref_v, _ = tabulate(dm.order, pts)
    x0, J, JinvT, det = _cell_geometry(dm.mesh, dm.sub.cells)
    coef = fe.coefficients[dm.cell_dofs] * dm.signs  # (c, k)
    u_ref = np.einsum("ck,kqi->cqi", coef, ref_v)
    val = np.einsum("cij,cqj->cqi", JinvT, u_ref)
    phys = x0[:, None, :] + np.einsum("cij,qj->cqi", J, pts)
    if exact is not None:
        ex, ey = exact(phys[..., 0], phys[..., 1])
        val = val - np.stack([ex, ey], axis=-1)
    dens = (np.abs(val) ** 2).sum(axis=-1)
    return float(np.sqrt(np.sum(dens * wts[None] * np.abs(det)[:, None])))


@dataclass(frozen=True, eq=False)
class ComplexSparseSystem:
    dof_map: DofMap
    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained_dofs: np.ndarray
    constrained_values: np.ndarray

    @property
    def constraints(self) -> dict:
        return dict(zip(self.constrained_dofs.tolist(), self.constrained_values.tolist()))


def interface_mass(dof_map: DofMap) -> list[np.ndarray]:
    return [edge_mass(dof_map.order, _edge_geometry(dof_map.mesh, e)[3])
            for e in interface_edges(dof_map.sub)]


def operator_matrix(dof_map: DofMap, params: MaterialParams, nq: int | None = None) -> sp.csr_matrix:
    K, M = volume_matrices(dof_map, nq)
    sub = dof_map.sub
    A = K.astype(complex) / params.mu - params.eps * params.omega**2 * M
    A = A + 1j * params.kappa * params.omega * boundary_matrix(dof_map, sub.edges_with(BoundaryKind.ABSORBING))
    A = A + params.robin * boundary_matrix(dof_map, interface_edges(sub))
    return A.tocsr()


def interface_rhs(dof_map: DofMap, g) -> np.ndarray:
    """-<g, phi_T> over the interface for trace coefficients ``g`` (n_edges, n_edge)."""
    edges = interface_edges(dof_map.sub)
    g = np.asarray(g, dtype=complex)
    if g.shape != (len(edges), dof_map.order.n_edge):
        raise InvalidArgumentError(
            f"interface data has shape {g.shape}, expected {(len(edges), dof_map.order.n_edge)}"
        )
    b = np.zeros(dof_map.total_dofs, dtype=complex)
    for e, ge, Me in zip(edges, g, interface_mass(dof_map)):
        b[dof_map.edge_dofs(e)] -= Me @ ge
    return b


def _constraints(dof_map: DofMap, bc: BoundaryField):
    cons = project_incident_trace(bc, dof_map.sub.edges_with(BoundaryKind.INCIDENT), dof_map)
    dofs = np.array(sorted(cons), dtype=np.int64)
    vals = np.array([cons[d] for d in dofs], dtype=complex)
    return dofs, vals


def assemble(sub: Subdomain, order: BasisOrder, params: MaterialParams,
             bc: BoundaryField, g_in=None, dof_map: DofMap | None = None) -> ComplexSparseSystem:
    dm = dof_map or distribute_dofs(sub, order)
    A = operator_matrix(dm, params)
    if g_in is None:
        g_in = np.zeros((len(interface_edges(sub)), order.n_edge), dtype=complex)
    b = interface_rhs(dm, g_in)
    dofs, vals = _constraints(dm, bc)
    return ComplexSparseSystem(dm, A, b, dofs, vals)


def _factorize(A: sp.spmatrix):
    A = sp.csc_matrix(A)
    try:
        return spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        pivot = None
        if A.shape[0] <= 4000:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                _, _, U = scipy.linalg.lu(A.toarray())
            zero = np.flatnonzero(np.abs(np.diag(U)) == 0)
            pivot = int(zero[0]) if len(zero) else None
        raise FactorizationError(f"sparse LU failed: {exc}", pivot) from exc


class ReducedSolver:
    """Sparse LU of a system with its constrained rows/columns eliminated.

    The factorization is reused across right-hand sides and constraint
    values, which is how the DDM loop avoids refactoring each step.
    """

    def __init__(self, matrix, constrained_dofs):
        N = matrix.shape[0]
        self.N = N
        self.cdofs = np.asarray(constrained_dofs, dtype=np.int64)
        mask = np.ones(N, dtype=bool)
        mask[self.cdofs] = False
        self.free = np.flatnonzero(mask)
        A = sp.csr_matrix(matrix)
        self.A = A
        self.A_fc = A[self.free][:, self.cdofs]
        self.lu = _factorize(A[self.free][:, self.free])

    def solve(self, rhs, values) -> np.ndarray:
        x = np.zeros(self.N, dtype=complex)
        x[self.cdofs] = values
        b = np.asarray(rhs, dtype=complex)[self.free]
        if len(self.cdofs):
            b = b - self.A_fc @ np.asarray(values, dtype=complex)
        x[self.free] = self.lu.solve(b)
        return x


def solve_direct(system: ComplexSparseSystem) -> FEFunction:
    solver = ReducedSolver(system.matrix, system.constrained_dofs)
    x = solver.solve(system.rhs, system.constrained_values)
    free = solver.free
    b_eff = system.rhs[free] - solver.A_fc @ system.constrained_values
    r = system.matrix[free][:, free] @ x[free] - b_eff
    rel = np.linalg.norm(r) / max(np.linalg.norm(b_eff), 1e-300)
    if np.linalg.norm(r) > 0 and rel > 1e-10:
        raise FactorizationError(f"relative residual {rel:.2e} after LU solve")
    return FEFunction(system.dof_map, x)


def solve_monolithic(mesh: Mesh, order: BasisOrder, params: MaterialParams,
                     bc: BoundaryField, side_kinds=None) -> FEFunction:
    """Single-domain solve; ``side_kinds`` overrides the boundary tagging."""
    return solve_direct(assemble(whole_domain(mesh, side_kinds), order, params, bc))


class SubdomainSolver:
    """Assembled and factorized subdomain operator for repeated solves."""

    def __init__(self, sub: Subdomain, order: BasisOrder, params: MaterialParams):
        self.sub, self.order, self.params = sub, order, params
        self.dof_map = distribute_dofs(sub, order)
        self.matrix = operator_matrix(self.dof_map, params)
        incident = sub.edges_with(BoundaryKind.INCIDENT)
        cdofs = sorted(int(d) for e in incident for d in self.dof_map.edge_dofs(e))
        self._solver = ReducedSolver(self.matrix, cdofs)

    def constraint_values(self, bc: BoundaryField) -> np.ndarray:
        return _constraints(self.dof_map, bc)[1]

    def solve(self, bc: BoundaryField, g_in) -> FEFunction:
        b = interface_rhs(self.dof_map, g_in)
        return FEFunction(self.dof_map, self._solver.solve(b, self.constraint_values(bc)))
