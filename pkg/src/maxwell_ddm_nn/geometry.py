"""Structured quadrilateral meshes of the unit square and strip subdomains."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import InvalidArgumentError

# local edge -> (local vertex a, local vertex b); reference-cell ordering
LOCAL_EDGES = ((0, 2), (1, 3), (0, 1), (2, 3))

_MATCH_TOL = 1e-12


class BoundaryKind(enum.Enum):
    INCIDENT = "incident"
    ABSORBING = "absorbing"
    INTERFACE = "interface"


@dataclass(frozen=True)
class Tag:
    kind: BoundaryKind
    neighbor: int | None = None

    def __str__(self):
        if self.kind is BoundaryKind.INTERFACE:
            return f"interface({self.neighbor})"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform ``n x n`` grid of axis-aligned squares on (0,1)^2.

    Vertices are numbered row-major, cell vertices follow the reference
    ordering V0=(0,0), V1=(1,0), V2=(0,1), V3=(1,1), and every edge is
    globally directed from its lower to its higher vertex index.
    """

    n: int
    vertices: np.ndarray  # (nv, 2)
    cells: np.ndarray  # (nc, 4)
    edges: np.ndarray  # (ne, 2), lower index first
    cell_to_edges: np.ndarray  # (nc, 4)
    edge_signs: np.ndarray  # (nc, 4), +1 if local direction == global

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def edge_midpoints(self, edge_ids=None) -> np.ndarray:
        e = self.edges if edge_ids is None else self.edges[np.asarray(edge_ids)]
        return 0.5 * (self.vertices[e[:, 0]] + self.vertices[e[:, 1]])

    def cell_centers(self, cell_ids=None) -> np.ndarray:
        c = self.cells if cell_ids is None else self.cells[np.asarray(cell_ids)]
        return self.vertices[c].mean(axis=1)

    def edge_cells(self) -> list[list[int]]:
        """Cells incident to each edge."""
        out: list[list[int]] = [[] for _ in range(len(self.edges))]
        for c, row in enumerate(self.cell_to_edges):
            for e in row:
                out[e].append(c)
        return out


def build_mesh(n: int) -> Mesh:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"mesh size must be a positive integer, got {n!r}")
    n = int(n)
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)  # row j is y = xs[j]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v0 = (jj * (n + 1) + ii).ravel()
    cells = np.column_stack([v0, v0 + 1, v0 + n + 1, v0 + n + 2])

    index: dict[tuple[int, int], int] = {}
    cell_to_edges = np.empty((len(cells), 4), dtype=np.int64)
    edge_signs = np.empty((len(cells), 4), dtype=np.int64)
    for c, verts in enumerate(cells):
        for m, (a, b) in enumerate(LOCAL_EDGES):
            va, vb = int(verts[a]), int(verts[b])
            key = (min(va, vb), max(va, vb))
            if key not in index:
                index[key] = len(index)
            cell_to_edges[c, m] = index[key]
            edge_signs[c, m] = 1 if va < vb else -1
    edges = np.array(sorted(index, key=index.__getitem__), dtype=np.int64)
    return Mesh(n, vertices, cells, edges, cell_to_edges, edge_signs)


@dataclass(frozen=True, eq=False)
class Subdomain:
    """A set of mesh cells with tagged boundary edges.

    ``tags`` maps every boundary edge of the cell subset to exactly one
    :class:`Tag`; ``normals`` holds the outward unit normal of each.
    """

    mesh: Mesh
    cells: np.ndarray
    tags: dict[int, Tag]
    normals: dict[int, np.ndarray]
    ident: int = 0
    _interface: tuple[int, ...] = field(default=(), repr=False)

    def edges_with(self, kind: BoundaryKind) -> list[int]:
        return sorted(e for e, t in self.tags.items() if t.kind is kind)

    def edge_ids(self) -> np.ndarray:
        return np.unique(self.mesh.cell_to_edges[self.cells])


DEFAULT_SIDE_KINDS = {
    "bottom": BoundaryKind.INCIDENT,
    "top": BoundaryKind.ABSORBING,
    "left": BoundaryKind.ABSORBING,
    "right": BoundaryKind.ABSORBING,
}


def _side_of(mid: np.ndarray) -> str | None:
    x, y = mid
    if abs(y) < _MATCH_TOL:
        return "bottom"
    if abs(y - 1.0) < _MATCH_TOL:
        return "top"
    if abs(x) < _MATCH_TOL:
        return "left"
    if abs(x - 1.0) < _MATCH_TOL:
        return "right"
    return None


def make_subdomain(mesh: Mesh, cells, ident=0, neighbor_of=None, side_kinds=None) -> Subdomain:
    """Tag the boundary of a cell subset.

    Edges on the outer boundary get the kind of their side from
    ``side_kinds``; boundary edges inside the unit square are interface
    edges towards ``neighbor_of(edge)`` (or ``1 - ident`` by default).
    """
    side_kinds = dict(DEFAULT_SIDE_KINDS if side_kinds is None else side_kinds)
    cells = np.asarray(sorted(int(c) for c in cells), dtype=np.int64)
    count: dict[int, list[int]] = {}
    for c in cells:
        for e in mesh.cell_to_edges[c]:
            count.setdefault(int(e), []).append(int(c))

    tags: dict[int, Tag] = {}
    normals: dict[int, np.ndarray] = {}
    for e, owners in count.items():
        if len(owners) != 1:
            continue
        mid = mesh.edge_midpoints([e])[0]
        side = _side_of(mid)
        if side is None:
            nb = (1 - ident) if neighbor_of is None else neighbor_of(e)
            tags[e] = Tag(BoundaryKind.INTERFACE, nb)
        else:
            tags[e] = Tag(side_kinds[side])
        a, b = mesh.vertices[mesh.edges[e]]
        t = (b - a) / np.linalg.norm(b - a)
        nrm = np.array([t[1], -t[0]])
        if np.dot(nrm, mid - mesh.cell_centers([owners[0]])[0]) < 0:
            nrm = -nrm
        normals[e] = nrm

    interface = tuple(
        sorted(
            (e for e, t in tags.items() if t.kind is BoundaryKind.INTERFACE),
            key=lambda e: tuple(mesh.edge_midpoints([e])[0]),
        )
    )
    return Subdomain(mesh, cells, tags, normals, ident, interface)


def whole_domain(mesh: Mesh, side_kinds=None) -> Subdomain:
    """The full square as a single subdomain (no interface)."""
    return make_subdomain(mesh, range(len(mesh.cells)), 0, side_kinds=side_kinds)


def partition_two(mesh: Mesh) -> tuple[Subdomain, Subdomain]:
    """Split into the lower strip y < 0.5 and the upper strip y > 0.5."""
    if mesh.n % 2:
        raise InvalidArgumentError(f"two-strip split needs an even mesh size, got n={mesh.n}")
    yc = mesh.cell_centers()[:, 1]
    lower = np.flatnonzero(yc < 0.5)
    upper = np.flatnonzero(yc >= 0.5)
    return make_subdomain(mesh, lower, 0), make_subdomain(mesh, upper, 1)


def interface_edges(sub: Subdomain) -> list[int]:
    """Interface edges ordered by midpoint x (then y), left to right."""
    return list(sub._interface)


def pair_interface_edges(sub_a: Subdomain, sub_b: Subdomain) -> np.ndarray:
    """Permutation ``p`` with ``interface_edges(sub_b)[p[k]]`` located at
    ``interface_edges(sub_a)[k]``, matched by midpoint coordinates."""
    ea, eb = interface_edges(sub_a), interface_edges(sub_b)
    if len(ea) != len(eb):
        raise InvalidArgumentError("subdomains have different interface sizes")
    ma = sub_a.mesh.edge_midpoints(ea)
    mb = sub_b.mesh.edge_midpoints(eb)
    perm = np.empty(len(ea), dtype=np.int64)
    for k, m in enumerate(ma):
        d = np.abs(mb - m).max(axis=1)
        j = int(np.argmin(d))
        if d[j] > _MATCH_TOL:
            raise InvalidArgumentError(f"interface edge {ea[k]} has no geometric partner")
        perm[k] = j
    return perm


def describe(mesh: Mesh, subs) -> str:
    """Plain-text counts and tag summary used by the ``mesh-info`` command."""
    lines = [
        f"n = {mesh.n}",
        f"vertices = {len(mesh.vertices)}",
        f"cells = {len(mesh.cells)}",
        f"edges = {len(mesh.edges)}",
    ]
    for sub in subs:
        kinds: dict[str, int] = {}
        for t in sub.tags.values():
            kinds[str(t)] = kinds.get(str(t), 0) + 1
        summary = ", ".join(f"{k}: {v}" for k, v in sorted(kinds.items()))
        lines.append(f"subdomain {sub.ident}: cells = {len(sub.cells)}; {summary}")
    return "\n".join(lines)
