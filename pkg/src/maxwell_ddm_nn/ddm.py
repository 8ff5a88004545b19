"""Two-subdomain non-overlapping Schwarz iteration with Robin transmission.

Subdomain ``i`` solves with interface data ``g[i]``; afterwards the data
for its neighbour ``j`` is::

    g[j] <- -g[i] - 2 c T(E_i),   c = i omega kappa,

where ``T(E_i)`` are the interface-edge coefficients of ``E_i`` (the
discrete tangential trace). Traces are stored in the edge dof basis, so
the update is coefficient-wise.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import InvalidArgumentError
from .geometry import Subdomain, interface_edges, pair_interface_edges
from .nedelec import BasisOrder
from .system import (
    BoundaryField,
    FactorizationError,
    FEFunction,
    MaterialParams,
    SubdomainSolver,
    edge_mass,
    _edge_geometry,
)


@dataclass(frozen=True, eq=False)
class InterfaceTrace:
    """Per interface edge (left to right) the complex edge coefficients.

    ``direction = (i, j)`` means the data was produced from subdomain ``i``
    and is consumed by subdomain ``j``; ``owner`` is the consumer.
    """

    values: np.ndarray  # (n_edges, n_edge_functions) complex
    owner: int
    direction: tuple[int, int]

    @classmethod
    def zeros(cls, n_edges, n_functions, owner, direction):
        return cls(np.zeros((n_edges, n_functions), dtype=complex), owner, direction)

    def flat(self) -> np.ndarray:
        return self.values.ravel()


def extract_tangential_trace(E: FEFunction, sub: Subdomain | None = None) -> np.ndarray:
    """Interface-edge coefficients of ``E`` ordered as ``interface_edges``."""
    dm = E.dof_map
    sub = dm.sub if sub is None else sub
    edges = interface_edges(sub)
    return np.array([E.coefficients[dm.edge_dofs(e)] for e in edges], dtype=complex).reshape(
        len(edges), dm.order.n_edge
    )


def update_trace(g_ij: InterfaceTrace, E_i: FEFunction, params: MaterialParams,
                 neighbor: Subdomain | None = None) -> InterfaceTrace:
    """Data for the neighbour: ``-g_ij - 2 c T(E_i)`` with S = identity."""
    t = extract_tangential_trace(E_i)
    if t.shape != g_ij.values.shape:
        raise InvalidArgumentError(
            f"trace shape {g_ij.values.shape} does not match solution trace {t.shape}"
        )
    new = -g_ij.values - 2.0 * params.robin * t
    i = g_ij.owner
    j = 1 - i if neighbor is None else neighbor.ident
    if neighbor is not None:
        new = new[pair_interface_edges(neighbor, E_i.dof_map.sub)]
    return InterfaceTrace(new, j, (i, j))


def interface_jump(E0: FEFunction, E1: FEFunction) -> float:
    """L2 norm over the interface of the tangential trace mismatch."""
    s0, s1 = E0.dof_map.sub, E1.dof_map.sub
    perm = pair_interface_edges(s0, s1)
    t0 = extract_tangential_trace(E0)
    t1 = extract_tangential_trace(E1)[perm]
    order = E0.dof_map.order
    total = 0.0
    for e, d in zip(interface_edges(s0), t0 - t1):
        Me = edge_mass(order, _edge_geometry(s0.mesh, e)[3])
        total += float(np.real(np.conj(d) @ Me @ d))
    return float(np.sqrt(max(total, 0.0)))


@dataclass
class DDMHistory:
    """``solutions[k]`` holds (E0, E1) after step k (k >= 1; index 0 is
    None); ``traces[k]`` holds (g0, g1) consumed at step k+1."""

    solutions: list = field(default_factory=list)
    traces: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.solutions) - 1

    def to_csv(self) -> str:
        """History as CSV: one row per step with the trace residual and the
        real/imaginary parts of every trace coefficient (both directions)."""
        buf = io.StringIO()
        g0 = self.traces[0]
        n_e, n_f = g0[0].values.shape
        header = ["step", "residual"]
        for side in (0, 1):
            for e in range(n_e):
                for k in range(n_f):
                    header += [f"g{side}_e{e}_k{k}_re", f"g{side}_e{e}_k{k}_im"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for step, pair in enumerate(self.traces):
            res = "" if step == 0 else f"{self.residuals[step - 1]:.17g}"
            row = [str(step), res]
            for g in pair:
                for z in g.values.ravel():
                    row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            w.writerow(row)
        return buf.getvalue()


class DDMSolver:
    """Both subdomain operators factorized once; reused for every step."""

    def __init__(self, subs, order: BasisOrder, params: MaterialParams):
        if len(subs) != 2:
            raise InvalidArgumentError("only the two-subdomain split is implemented")
        self.subs = tuple(subs)
        self.order, self.params = order, params
        self.solvers = tuple(SubdomainSolver(s, order, params) for s in self.subs)
        self.n_iface = len(interface_edges(self.subs[0]))

    def zero_traces(self):
        n, k = self.n_iface, self.order.n_edge
        return (InterfaceTrace.zeros(n, k, 0, (1, 0)), InterfaceTrace.zeros(n, k, 1, (0, 1)))

    def solve_pair(self, bc: BoundaryField, traces, step=None):
        out = []
        for i, (solver, g) in enumerate(zip(self.solvers, traces)):
            try:
                out.append(solver.solve(bc, g.values))
            except FactorizationError as exc:
                raise FactorizationError(f"step {step}, subdomain {i}: {exc}", exc.pivot) from exc
        return tuple(out)

    def update(self, traces, sols):
        g0, g1 = traces
        E0, E1 = sols
        new1 = update_trace(g0, E0, self.params, self.subs[1])
        new0 = update_trace(g1, E1, self.params, self.subs[0])
        return new0, new1

    def run(self, bc: BoundaryField, k_steps: int, traces=None, tol: float | None = None) -> DDMHistory:
        if k_steps < 1:
            raise InvalidArgumentError(f"k_steps must be >= 1, got {k_steps}")
        hist = DDMHistory()
        g = self.zero_traces() if traces is None else traces
        hist.solutions.append(None)
        hist.traces.append(g)
        for k in range(k_steps):
            sols = self.solve_pair(bc, g, step=k + 1)
            new = self.update(g, sols)
            r = float(np.linalg.norm(np.concatenate([(a.values - b.values).ravel() for a, b in zip(new, g)])))
            hist.solutions.append(sols)
            hist.traces.append(new)
            hist.residuals.append(r)
            g = new
            if tol is not None and r <= tol:
                break
        return hist


def ddm_run(subs, order: BasisOrder, params: MaterialParams, bc: BoundaryField,
            k_steps: int, tol: float | None = None) -> DDMHistory:
    """Run ``k_steps`` DDM iterations from zero interface data.

    ``tol`` enables the optional residual stop (off by default).
    """
    return DDMSolver(subs, order, params).run(bc, k_steps, tol=tol)
