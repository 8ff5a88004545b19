"""Hierarchic H(curl) basis on the unit reference square.

Edge functions are the lowest-order Nedelec function plus gradients of
integrated Legendre edge bubbles; cell functions come in three families
(gradients, the "rotated gradient" combination, and single-component
bubbles). Physical functions are obtained with the covariant Piola map.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import InvalidArgumentError
from .geometry import LOCAL_EDGES, Mesh, Subdomain


class DegenerateCellError(ArithmeticError):
    pass


def legendre(n: int, x):
    """Legendre polynomial P_n by three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)
    p0, p1 = np.ones_like(x), x
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    return p1


def integrated_legendre(n: int, x):
    """L_n(x) = int_{-1}^x P_{n-1}; L_1 = x, L_2 = (x^2 - 1)/2 and
    (n+1) L_{n+1} = (2n-1) x L_n - (n-2) L_{n-1} for n >= 2."""
    if n < 1:
        raise InvalidArgumentError(f"integrated Legendre index must be >= 1, got {n}")
    x = np.asarray(x, dtype=float)
    if n == 1:
        return x.copy()
    lm, l = x, 0.5 * (x * x - 1.0)
    for k in range(2, n):
        lm, l = l, ((2 * k - 1) * x * l - (k - 2) * lm) / (k + 1)
    return l


def _dlegendre_int(n: int, x):
    """d/dx L_n = P_{n-1}."""
    return legendre(n - 1, x)


@dataclass(frozen=True)
class BasisOrder:
    p_edge: int = 3
    p_cell: int = 3

    def __post_init__(self):
        if self.p_edge < 0 or self.p_cell < 0:
            raise InvalidArgumentError(f"negative basis order {self}")

    @property
    def n_edge(self) -> int:
        """Functions per edge: lowest order plus ``p_edge`` bubbles."""
        return 1 + self.p_edge

    @property
    def n_cell(self) -> int:
        return 2 * self.p_cell**2 + 2 * self.p_cell

    @property
    def n_local(self) -> int:
        return 4 * self.n_edge + self.n_cell


class ShapeKind(enum.Enum):
    LOWEST_EDGE = "lowest_edge"
    HIGHER_EDGE = "higher_edge"
    CELL1 = "cell1"
    CELL2 = "cell2"
    CELL3X = "cell3x"
    CELL3Y = "cell3y"


GRADIENT_KINDS = (ShapeKind.HIGHER_EDGE, ShapeKind.CELL1)


@dataclass(frozen=True)
class RefShape:
    """``index`` is the edge bubble index for edge shapes, ``(i, j)`` for
    cell types 1 and 2, and the single Legendre index for type 3."""

    kind: ShapeKind
    edge: int | None = None
    index: int | tuple[int, int] = 0


def local_shapes(order: BasisOrder) -> list[RefShape]:
    """Local ordering: per edge (lowest, bubbles...), then cell families."""
    out = []
    for m in range(4):
        out.append(RefShape(ShapeKind.LOWEST_EDGE, m, 0))
        out += [RefShape(ShapeKind.HIGHER_EDGE, m, i) for i in range(order.p_edge)]
    pc = order.p_cell
    out += [RefShape(ShapeKind.CELL1, None, (i, j)) for i in range(pc) for j in range(pc)]
    out += [RefShape(ShapeKind.CELL2, None, (i, j)) for i in range(pc) for j in range(pc)]
    out += [RefShape(ShapeKind.CELL3X, None, j) for j in range(pc)]
    out += [RefShape(ShapeKind.CELL3Y, None, i) for i in range(pc)]
    return out


# barycentric-type coordinates of the reference cell and their gradients
def _lam(a, x, y):
    fx = (1 - x, x)[a & 1]
    fy = (1 - y, y)[a >> 1]
    return fx * fy


def _grad_lam(a, x, y):
    sx = (-1.0, 1.0)[a & 1]
    sy = (-1.0, 1.0)[a >> 1]
    fx = (1 - x, x)[a & 1]
    fy = (1 - y, y)[a >> 1]
    return sx * fy, sy * fx


def _sigma(a, x, y):
    return (1 - x, x)[a & 1] + (1 - y, y)[a >> 1]


def _grad_sigma(a):
    return (-1.0, 1.0)[a & 1], (-1.0, 1.0)[a >> 1]


def _eval(shape: RefShape, x, y):
    """Return (vx, vy, curl) arrays for one shape at points (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    zero = np.zeros(np.broadcast(x, y).shape)
    kind = shape.kind
    if kind in (ShapeKind.LOWEST_EDGE, ShapeKind.HIGHER_EDGE):
        e1, e2 = LOCAL_EDGES[shape.edge]
        s = _sigma(e2, x, y) - _sigma(e1, x, y)
        g1, g2 = _grad_sigma(e1), _grad_sigma(e2)
        sx, sy = g2[0] - g1[0], g2[1] - g1[1]
        w = _lam(e1, x, y) + _lam(e2, x, y)
        w1, w2 = _grad_lam(e1, x, y), _grad_lam(e2, x, y)
        wx, wy = w1[0] + w2[0], w1[1] + w2[1]
        if kind is ShapeKind.LOWEST_EDGE:
            return 0.5 * sx * w + zero, 0.5 * sy * w + zero, 0.5 * (wx * sy - wy * sx) + zero
        n = shape.index + 2
        L, dL = integrated_legendre(n, s), _dlegendre_int(n, s)
        return dL * sx * w + L * wx + zero, dL * sy * w + L * wy + zero, zero
    xi, eta = 2 * x - 1, 2 * y - 1
    if kind in (ShapeKind.CELL1, ShapeKind.CELL2):
        i, j = shape.index
        a, da = integrated_legendre(i + 2, xi), 2 * _dlegendre_int(i + 2, xi)
        b, db = integrated_legendre(j + 2, eta), 2 * _dlegendre_int(j + 2, eta)
        if kind is ShapeKind.CELL1:
            return da * b, a * db, zero
        return da * b, -a * db, -2.0 * da * db
    k = shape.index + 2
    if kind is ShapeKind.CELL3X:
        return integrated_legendre(k, eta) + zero, zero, -2 * _dlegendre_int(k, eta) + zero
    return zero, integrated_legendre(k, xi) + zero, 2 * _dlegendre_int(k, xi) + zero


def _check(shape: RefShape, order: BasisOrder):
    kind, idx = shape.kind, shape.index
    if kind in (ShapeKind.LOWEST_EDGE, ShapeKind.HIGHER_EDGE):
        if shape.edge not in (0, 1, 2, 3):
            raise InvalidArgumentError(f"edge id {shape.edge} out of range")
        if kind is ShapeKind.HIGHER_EDGE and not 0 <= idx < order.p_edge:
            raise InvalidArgumentError(f"edge bubble index {idx} outside [0, {order.p_edge})")
    elif kind in (ShapeKind.CELL1, ShapeKind.CELL2):
        i, j = idx
        if not (0 <= i < order.p_cell and 0 <= j < order.p_cell):
            raise InvalidArgumentError(f"cell index {idx} outside [0, {order.p_cell})^2")
    elif not 0 <= idx < order.p_cell:
        raise InvalidArgumentError(f"cell index {idx} outside [0, {order.p_cell})")


def ref_shape_value(shape: RefShape, order: BasisOrder, point) -> np.ndarray:
    _check(shape, order)
    vx, vy, _ = _eval(shape, point[0], point[1])
    return np.array([float(vx), float(vy)])


def ref_shape_curl(shape: RefShape, order: BasisOrder, point) -> float:
    _check(shape, order)
    return float(_eval(shape, point[0], point[1])[2])


def tabulate(order: BasisOrder, points) -> tuple[np.ndarray, np.ndarray]:
    """Values ``(n_local, n_pts, 2)`` and curls ``(n_local, n_pts)`` of all
    reference shapes at reference points ``(n_pts, 2)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    shapes = local_shapes(order)
    vals = np.empty((len(shapes), len(pts), 2))
    curls = np.empty((len(shapes), len(pts)))
    for k, s in enumerate(shapes):
        vx, vy, c = _eval(s, pts[:, 0], pts[:, 1])
        vals[k, :, 0], vals[k, :, 1], curls[k] = vx, vy, c
    return vals, curls


def orientation_factors(order: BasisOrder, edge_signs) -> np.ndarray:
    """Per-cell multipliers turning local shapes into globally oriented ones.

    A reversed edge flips the lowest-order function and the odd bubbles
    (L_{i+2} has parity (-1)^i).
    """
    edge_signs = np.atleast_2d(edge_signs)
    f = np.ones((len(edge_signs), order.n_local))
    for m in range(4):
        s = edge_signs[:, m]
        base = m * order.n_edge
        f[:, base] = s
        for i in range(order.p_edge):
            if i % 2:
                f[:, base + 1 + i] = s
    return f


def cell_jacobian(vertices: np.ndarray) -> np.ndarray:
    """Jacobian of the bilinear map at the cell; constant for parallelograms."""
    v = np.asarray(vertices, dtype=float)
    return np.column_stack([v[1] - v[0], v[2] - v[0]])


def piola_map(jacobian, ref_value) -> np.ndarray:
    """Covariant transform u = J^{-T} u_ref."""
    J = np.asarray(jacobian, dtype=float)
    det = np.linalg.det(J)
    if abs(det) < 1e-14 * max(1.0, np.abs(J).max() ** 2):
        raise DegenerateCellError(f"singular cell Jacobian (det = {det:g})")
    return np.linalg.solve(J.T, np.asarray(ref_value, dtype=float).T).T


def piola_curl(jacobian, ref_curl):
    J = np.asarray(jacobian, dtype=float)
    det = np.linalg.det(J)
    if abs(det) < 1e-14 * max(1.0, np.abs(J).max() ** 2):
        raise DegenerateCellError(f"singular cell Jacobian (det = {det:g})")
    return np.asarray(ref_curl) / det


@dataclass(frozen=True, eq=False)
class DofMap:
    """Global numbering of one subdomain's degrees of freedom.

    Edge dofs come first (edge-major, function-minor over the subdomain's
    edges in ascending global edge index), then the cell dofs.
    """

    sub: Subdomain
    order: BasisOrder
    edge_index: dict[int, int]  # global edge -> position among subdomain edges
    cell_dofs: np.ndarray  # (n_sub_cells, n_local) global dof per local shape
    signs: np.ndarray  # (n_sub_cells, n_local)
    total_dofs: int

    @property
    def mesh(self) -> Mesh:
        return self.sub.mesh

    def edge_dofs(self, edge: int) -> np.ndarray:
        p = self.edge_index[edge]
        n = self.order.n_edge
        return np.arange(p * n, (p + 1) * n)

    def key(self, dof: int) -> tuple:
        """Geometric identity of a dof: ('e', edge, k) or ('c', cell, k)."""
        ne = self.order.n_edge
        n_edge_dofs = len(self.edge_index) * ne
        if dof < n_edge_dofs:
            edges = sorted(self.edge_index)
            return ("e", edges[dof // ne], dof % ne)
        r = dof - n_edge_dofs
        nc = self.order.n_cell
        return ("c", int(self.sub.cells[r // nc]), r % nc)


def distribute_dofs(sub: Subdomain, order: BasisOrder = BasisOrder()) -> DofMap:
    mesh = sub.mesh
    c2e = mesh.cell_to_edges[sub.cells]
    edges = np.unique(c2e)
    edge_index = {int(e): k for k, e in enumerate(edges)}
    ne, nc = order.n_edge, order.n_cell
    n_edge_dofs = len(edges) * ne
    cell_dofs = np.empty((len(sub.cells), order.n_local), dtype=np.int64)
    for m in range(4):
        pos = np.array([edge_index[int(e)] for e in c2e[:, m]], dtype=np.int64)
        for k in range(ne):
            cell_dofs[:, m * ne + k] = pos * ne + k
    cell_dofs[:, 4 * ne :] = n_edge_dofs + np.arange(len(sub.cells))[:, None] * nc + np.arange(nc)
    signs = orientation_factors(order, mesh.edge_signs[sub.cells])
    return DofMap(sub, order, edge_index, cell_dofs, signs, n_edge_dofs + len(sub.cells) * nc)


def edge_trace_basis(order: BasisOrder, t) -> np.ndarray:
    """Tangential traces of an edge's functions on the reference edge,
    parametrised by ``t`` in [0, 1] along the global edge direction.

    Row 0 is the lowest-order trace (constant 1), row k >= 1 is
    2 P_k(2t - 1). Physical traces carry an extra factor 1/|edge|.
    """
    t = np.asarray(t, dtype=float)
    rows = [np.ones_like(t)] + [2.0 * legendre(k, 2 * t - 1) for k in range(1, order.n_edge)]
    return np.array(rows)
