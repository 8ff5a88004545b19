import numpy as np
import pytest

from maxwell_ddm_nn import InvalidArgumentError
from maxwell_ddm_nn.geometry import (
    BoundaryKind,
    build_mesh,
    describe,
    interface_edges,
    pair_interface_edges,
    partition_two,
    whole_domain,
)


@pytest.mark.parametrize("n", [1, 2, 5, 32])
def test_counts(n):
    m = build_mesh(n)
    assert len(m.vertices) == (n + 1) ** 2
    assert len(m.cells) == n * n
    assert len(m.edges) == 2 * n * (n + 1)
    assert m.h == pytest.approx(1.0 / n)


def test_edges_directed_low_to_high():
    m = build_mesh(4)
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    # in this grid the local directions always agree with the global ones
    assert np.all(m.edge_signs == 1)


def test_every_interior_edge_has_two_cells():
    m = build_mesh(3)
    counts = np.array([len(c) for c in m.edge_cells()])
    mids = m.edge_midpoints()
    on_bnd = np.any((np.abs(mids) < 1e-12) | (np.abs(mids - 1) < 1e-12), axis=1)
    assert np.all(counts[on_bnd] == 1)
    assert np.all(counts[~on_bnd] == 2)


@pytest.mark.parametrize("bad", [0, -3, 2.5, "4"])
def test_bad_size(bad):
    with pytest.raises(InvalidArgumentError):
        build_mesh(bad)


def test_partition_odd_rejected():
    with pytest.raises(InvalidArgumentError):
        partition_two(build_mesh(3))


@pytest.mark.parametrize("n", [2, 4, 8])
def test_partition_tags(n):
    a, b = partition_two(build_mesh(n))
    assert len(a.cells) == len(b.cells) == n * n // 2
    assert len(a.edges_with(BoundaryKind.INCIDENT)) == n
    assert len(b.edges_with(BoundaryKind.INCIDENT)) == 0
    assert len(a.edges_with(BoundaryKind.ABSORBING)) == n  # left and right
    assert len(b.edges_with(BoundaryKind.ABSORBING)) == 2 * (n // 2) + n
    assert interface_edges(a) == interface_edges(b)
    assert len(interface_edges(a)) == n
    for e in interface_edges(a):
        assert a.tags[e].neighbor == 1 and b.tags[e].neighbor == 0
        np.testing.assert_allclose(a.normals[e], [0, 1])
        np.testing.assert_allclose(b.normals[e], [0, -1])
    xs = a.mesh.edge_midpoints(interface_edges(a))[:, 0]
    assert np.all(np.diff(xs) > 0)
    np.testing.assert_array_equal(pair_interface_edges(a, b), np.arange(n))


def test_every_boundary_edge_tagged_once():
    a, b = partition_two(build_mesh(4))
    for sub in (a, b):
        m = sub.mesh
        counts = {}
        for c in sub.cells:
            for e in m.cell_to_edges[c]:
                counts[int(e)] = counts.get(int(e), 0) + 1
        boundary = {e for e, k in counts.items() if k == 1}
        assert boundary == set(sub.tags)
        for e, nrm in sub.normals.items():
            assert np.linalg.norm(nrm) == pytest.approx(1.0)


def test_whole_domain_custom_sides():
    sides = {s: BoundaryKind.INCIDENT for s in ("bottom", "top", "left", "right")}
    sub = whole_domain(build_mesh(3), sides)
    assert len(sub.edges_with(BoundaryKind.INCIDENT)) == 12
    assert interface_edges(sub) == []


def test_describe():
    m = build_mesh(2)
    text = describe(m, partition_two(m))
    assert "cells = 4" in text
    assert "subdomain 0: cells = 2" in text
    assert "interface(1): 2" in text
