"""Training data from DDM runs, the network surrogate solve, and metrics.

Per interface edge, network ``U01`` maps ``(g_0^1, E_0^2)`` (data consumed
by subdomain 0 at step 2 and the step-2 solution trace of subdomain 0) to
``g_1^3`` (data consumed by subdomain 1 at step 4); ``U10`` is the mirror
image. Traces are fed to the networks in field units, i.e. edge dof
coefficients divided by the edge length, so the values do not shrink with
the mesh size.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import InvalidArgumentError
from .ddm import DDMSolver, InterfaceTrace, extract_tangential_trace, interface_jump
from .geometry import Mesh, build_mesh, interface_edges, partition_two
from .nedelec import BasisOrder
from .neural import Network
from .system import BoundaryField, FEFunction, MaterialParams, l2_norm

PI2 = math.pi**2

# (input step for g, input step for E, target step for g)
G_IN_STEP, E_IN_STEP, G_OUT_STEP = 1, 2, 3


def _gauss(c, w):
    return lambda x: np.exp(-((x - c) ** 2) / w)


def _catalog():
    s, c = np.sin, np.cos
    train = {
        "train01": lambda x, y: (_gauss(0.7, 0.008)(x), 0 * x),
        "train02": lambda x, y: (_gauss(0.2, 0.002)(x), 1 + 0 * x),
        "train03": lambda x, y: (_gauss(0.7, 0.003)(x), 1 + 0 * x),
        "train04": lambda x, y: (_gauss(0.8, 0.003)(x), s(PI2 * x)),
        "train05": lambda x, y: (_gauss(0.5, 0.003)(x), c(PI2 * x)),
        "train06": lambda x, y: (c(PI2 * y) + 1j * s(PI2 * x), s(PI2 * y) + 0.5j * c(PI2 * x)),
        "train07": lambda x, y: (s(PI2 * x) + 1j * s(PI2 * x), s(PI2 * y) + 0.5j * c(PI2 * x)),
        "train08": lambda x, y: (s(PI2 * x) + 1j * s(PI2 * x), s(PI2 * x) + 0.5j * c(PI2 * x)),
        "train09": lambda x, y: (c(PI2 * y) + 1j * s(PI2 * x), c(PI2 * x) + 0.5j * c(PI2 * x)),
        "train10": lambda x, y: (c(PI2 * x) + 1j * s(PI2 * x), c(PI2 * y) + 0.5j * c(PI2 * x)),
    }
    test = {
        "test01": lambda x, y: (_gauss(0.5, 0.003)(x), 0 * x),
        "test02": lambda x, y: (c(PI2 * y) + 1j * s(PI2 * x), c(PI2 * y) + 0.5j * c(PI2 * x)),
    }
    return ([BoundaryField(k, f) for k, f in train.items()],
            [BoundaryField(k, f) for k, f in test.items()])


@dataclass(frozen=True)
class BoundaryCatalog:
    train: tuple
    test: tuple

    def by_id(self, ident: str) -> BoundaryField:
        for bc in self.train + self.test + (EXAMPLE_FIELD,):
            if bc.ident == ident:
                return bc
        raise KeyError(ident)


def default_catalog() -> BoundaryCatalog:
    tr, te = _catalog()
    return BoundaryCatalog(tuple(tr), tuple(te))


EXAMPLE_FIELD = BoundaryField(
    "example",
    lambda x, y: (np.cos(PI2 * (y - 0.5)) + 1j * np.sin(PI2 * x),
                  np.cos(PI2 * y) + 0.5j * np.sin(PI2 * x)),
)


def _serialize(values, arity, name):
    z = np.asarray(values, dtype=complex).ravel()
    if z.size != arity:
        raise InvalidArgumentError(f"{name} needs {arity} complex values, got {z.size}")
    return np.column_stack([z.real, z.imag]).ravel()


def feature_vector(g_edge, E_edge) -> np.ndarray:
    """(re g1, im g1, ..., re g4, im g4, re E1, im E1, ..., im E4)."""
    return np.concatenate([_serialize(g_edge, 4, "g"), _serialize(E_edge, 4, "E")])


def target_vector(g_edge) -> np.ndarray:
    return _serialize(g_edge, 4, "g")


def deserialize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.size % 2:
        raise InvalidArgumentError("serialized vector must have even length")
    return v[0::2] + 1j * v[1::2]


@dataclass
class Dataset:
    """Rows of (bc_id, edge, 16 inputs, 8 targets) for one direction."""

    direction: str  # "01" or "10"
    split: str  # "train" or "test"
    bc_ids: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    inputs: np.ndarray = field(default_factory=lambda: np.zeros((0, 16)))
    targets: np.ndarray = field(default_factory=lambda: np.zeros((0, 8)))

    def __len__(self):
        return len(self.bc_ids)

    def header_comment(self) -> str:
        i = int(self.direction[0])
        j = int(self.direction[1])
        return (f"# direction {self.direction}: inputs (g_{i}^{G_IN_STEP}, E_{i}^{E_IN_STEP}) "
                f"from subdomain {i}, target g_{j}^{G_OUT_STEP} consumed by subdomain {j}; "
                f"field units (dof / edge length)")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bc_id", "edge"] + [f"in_{k}" for k in range(16)] + [f"tgt_{k}" for k in range(8)])
        for b, e, x, t in zip(self.bc_ids, self.edges, self.inputs, self.targets):
            w.writerow([b, e] + [f"{v:.17g}" for v in x] + [f"{v:.17g}" for v in t])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, direction="01", split="train") -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        body = [r for r in rows[1:] if r]
        ds = cls(direction, split)
        ds.bc_ids = [r[0] for r in body]
        ds.edges = [int(r[1]) for r in body]
        ds.inputs = np.array([[float(v) for v in r[2:18]] for r in body]).reshape(-1, 16)
        ds.targets = np.array([[float(v) for v in r[18:26]] for r in body]).reshape(-1, 8)
        return ds


def edge_lengths(sub) -> np.ndarray:
    mesh = sub.mesh
    e = np.array(interface_edges(sub))
    v = mesh.vertices[mesh.edges[e]]
    return np.linalg.norm(v[:, 1] - v[:, 0], axis=1)


def edge_features(g: InterfaceTrace, E: FEFunction) -> np.ndarray:
    """Feature rows (n_edges, 16) for one subdomain's data and solution."""
    sub = E.dof_map.sub
    scale = edge_lengths(sub)[:, None]
    t = extract_tangential_trace(E) / scale
    gv = g.values / scale
    return np.array([feature_vector(a, b) for a, b in zip(gv, t)])


def _rows(solver: DDMSolver, bc: BoundaryField):
    hist = solver.run(bc, G_OUT_STEP)
    out = {}
    for i, key in ((0, "01"), (1, "10")):
        j = 1 - i
        X = edge_features(hist.traces[G_IN_STEP][i], hist.solutions[E_IN_STEP][i])
        scale = edge_lengths(solver.subs[j])[:, None]
        T = np.array([target_vector(z) for z in hist.traces[G_OUT_STEP][j].values / scale])
        out[key] = (X, T)
    return out


def generate_dataset(catalog: BoundaryCatalog | None = None, params: MaterialParams = MaterialParams(),
                     order: BasisOrder = BasisOrder(), n: int = 32, solver: DDMSolver | None = None):
    """Return ``{"01": (train, test), "10": (train, test)}``."""
    catalog = catalog or default_catalog()
    if solver is None:
        solver = DDMSolver(partition_two(build_mesh(n)), order, params)
    result = {}
    for split, fields in (("train", catalog.train), ("test", catalog.test)):
        sets = {d: Dataset(d, split) for d in ("01", "10")}
        blocks = {d: ([], []) for d in sets}
        for bc in fields:
            try:
                rows = _rows(solver, bc)
            except Exception as exc:
                raise RuntimeError(f"DDM failed for boundary field {bc.ident}: {exc}") from exc
            for d, (X, T) in rows.items():
                sets[d].bc_ids += [bc.ident] * len(X)
                sets[d].edges += list(range(len(X)))
                blocks[d][0].append(X)
                blocks[d][1].append(T)
        for d, ds in sets.items():
            ds.inputs = np.vstack(blocks[d][0]) if blocks[d][0] else np.zeros((0, 16))
            ds.targets = np.vstack(blocks[d][1]) if blocks[d][1] else np.zeros((0, 8))
            result.setdefault(d, {})[split] = ds
    return {d: (v["train"], v["test"]) for d, v in result.items()}


def nn_solve(params: MaterialParams, bc: BoundaryField, net01, net10,
             order: BasisOrder = BasisOrder(), n: int = 32, solver: DDMSolver | None = None):
    """One DDM step, one more solve, network inference of the step-3 data,
    and a final solve of each subdomain. Returns ``(E0, E1)``.

    ``net01``/``net10`` are any callables mapping (N, 16) -> (N, 8).
    """
    if solver is None:
        solver = DDMSolver(partition_two(build_mesh(n)), order, params)
    if order.n_edge != 4:
        raise InvalidArgumentError("the network features need exactly 4 dofs per interface edge")
    for net in (net01, net10):
        if isinstance(net, Network) and (net.W1.shape[1], net.W2.shape[0]) != (16, 8):
            raise InvalidArgumentError(f"network shape {net.shape} does not match 16 -> 8")
    hist = solver.run(bc, 1)
    g1 = hist.traces[1]
    sols2 = solver.solve_pair(bc, g1, step=2)
    new = []
    for j, (i, net) in ((1, (0, net01)), (0, (1, net10))):
        X = edge_features(g1[i], sols2[i])
        Y = np.asarray(net(X), dtype=float)
        scale = edge_lengths(solver.subs[j])[:, None]
        vals = np.array([deserialize(y) for y in Y]) * scale
        new.append((j, InterfaceTrace(vals, j, (i, j))))
    traces = tuple(t for _, t in sorted(new, key=lambda p: p[0]))
    return solver.solve_pair(bc, traces, step="nn")


class LookupNetwork:
    """Returns recorded targets for recorded inputs (exact match)."""

    def __init__(self, inputs, targets):
        self._table = {np.asarray(x, dtype=float).tobytes(): np.asarray(t, dtype=float)
                       for x, t in zip(inputs, targets)}

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        try:
            return np.array([self._table[x.tobytes()] for x in X])
        except KeyError:
            raise InvalidArgumentError("input not present in the lookup table") from None


@dataclass
class ComparisonReport:
    rel_l2_real: tuple  # per subdomain, ||Re(B - A)|| / ||Re A||
    rel_l2_imag: tuple
    rel_l2: float  # whole domain, complex
    abs_l2: float
    jump_a: float
    jump_b: float
    trace_delta: np.ndarray  # per interface edge, max |coef difference| over both sides

    def lines(self) -> list[str]:
        return [
            f"rel_l2 = {self.rel_l2:.6e}",
            f"abs_l2 = {self.abs_l2:.6e}",
            f"rel_l2_real = {self.rel_l2_real[0]:.6e}, {self.rel_l2_real[1]:.6e}",
            f"rel_l2_imag = {self.rel_l2_imag[0]:.6e}, {self.rel_l2_imag[1]:.6e}",
            f"jump_a = {self.jump_a:.6e}",
            f"jump_b = {self.jump_b:.6e}",
            f"max_trace_delta = {float(np.max(self.trace_delta)):.6e}",
        ]


def sample_points(sample_grid: int):
    s = np.linspace(0.0, 1.0, sample_grid)
    X, Y = np.meshgrid(s, s)
    return np.column_stack([X.ravel(), Y.ravel()])


def sample_field(sol, sample_grid: int) -> np.ndarray:
    """Field values (grid*grid, 2) on the lattice, row-major in y; points
    with y < 0.5 come from subdomain 0, the rest from subdomain 1."""
    pts = sample_points(sample_grid)
    out = np.empty((len(pts), 2), dtype=complex)
    low = pts[:, 1] < 0.5
    out[low] = sol[0].evaluate(pts[low])
    out[~low] = sol[1].evaluate(pts[~low])
    return out


def _ratio(num, den):
    return float(num / den) if den > 0 else (0.0 if num == 0 else math.inf)


def compare(sol_a, sol_b, sample_grid: int = 129) -> ComparisonReport:
    """Lattice-sampled differences of ``sol_b`` against reference ``sol_a``."""
    pts = sample_points(sample_grid)
    fa = sample_field(sol_a, sample_grid)
    fb = sample_field(sol_b, sample_grid)
    low = pts[:, 1] < 0.5
    re, im = [], []
    for mask in (low, ~low):
        d = fb[mask] - fa[mask]
        re.append(_ratio(np.linalg.norm(d.real), np.linalg.norm(fa[mask].real)))
        im.append(_ratio(np.linalg.norm(d.imag), np.linalg.norm(fa[mask].imag)))
    diff = np.linalg.norm(fb - fa)
    dt = [np.abs(extract_tangential_trace(b) - extract_tangential_trace(a)).max(axis=1)
          for a, b in zip(sol_a, sol_b)]
    return ComparisonReport(
        tuple(re), tuple(im),
        _ratio(diff, np.linalg.norm(fa)),
        float(diff / math.sqrt(len(pts))),
        interface_jump(*sol_a), interface_jump(*sol_b),
        np.maximum(dt[0], dt[1]),
    )


def relative_l2(sol_a, sol_b) -> float:
    """Quadrature ||B - A|| / ||A|| over both subdomains."""
    num = den = 0.0
    for a, b in zip(sol_a, sol_b):
        num += l2_norm(FEFunction(a.dof_map, b.coefficients - a.coefficients)) ** 2
        den += l2_norm(a) ** 2
    return _ratio(math.sqrt(num), math.sqrt(den))
