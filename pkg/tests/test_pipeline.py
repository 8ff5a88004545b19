import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from maxwell_ddm_nn import InvalidArgumentError
from maxwell_ddm_nn.ddm import DDMSolver
from maxwell_ddm_nn.nedelec import BasisOrder
from maxwell_ddm_nn.neural import NetworkShape, init_weights
from maxwell_ddm_nn.pipeline import (
    EXAMPLE_FIELD,
    BoundaryCatalog,
    Dataset,
    LookupNetwork,
    compare,
    default_catalog,
    deserialize,
    feature_vector,
    generate_dataset,
    nn_solve,
    relative_l2,
    sample_field,
    target_vector,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
complex4 = hnp.arrays(complex, 4, elements=st.complex_numbers(max_magnitude=1e6, allow_nan=False,
                                                             allow_infinity=False))


@given(complex4, complex4)
def test_feature_roundtrip(g, e):
    v = feature_vector(g, e)
    assert v.shape == (16,)
    np.testing.assert_array_equal(deserialize(v[:8]), g)
    np.testing.assert_array_equal(deserialize(v[8:]), e)
    np.testing.assert_array_equal(deserialize(target_vector(g)), g)


def test_feature_layout():
    v = feature_vector([1 + 2j, 0, 0, 0], [0, 0, 0, 3 - 4j])
    assert v[:2].tolist() == [1, 2] and v[-2:].tolist() == [3, -4]


def test_serialization_errors():
    with pytest.raises(InvalidArgumentError):
        feature_vector(np.zeros(3), np.zeros(4))
    with pytest.raises(InvalidArgumentError):
        deserialize(np.zeros(7))


def test_catalog():
    cat = default_catalog()
    assert len(cat.train) == 10 and len(cat.test) == 2
    assert cat.by_id("test02").ident == "test02"
    assert cat.by_id("example") is EXAMPLE_FIELD
    with pytest.raises(KeyError):
        cat.by_id("nope")
    ids = [b.ident for b in cat.train + cat.test]
    assert len(set(ids)) == len(ids)


@given(hnp.arrays(float, (3, 16), elements=finite), hnp.arrays(float, (3, 8), elements=finite))
def test_dataset_csv_roundtrip(X, T):
    ds = Dataset("01", "train", ["a", "b", "c"], [0, 1, 2], X, T)
    back = Dataset.from_csv(ds.to_csv())
    assert back.bc_ids == ds.bc_ids and back.edges == ds.edges
    np.testing.assert_array_equal(back.inputs, X)
    np.testing.assert_array_equal(back.targets, T)


@pytest.fixture(scope="module")
def small_data(small_split, order, params):
    solver = DDMSolver(small_split, order, params)
    return solver, generate_dataset(params=params, order=order, n=4, solver=solver)


def test_dataset_sizes_small(small_data):
    _, sets = small_data
    for d in ("01", "10"):
        tr, te = sets[d]
        assert (len(tr), len(te)) == (40, 8)
        assert tr.inputs.shape == (40, 16) and tr.targets.shape == (40, 8)
        assert tr.edges[:4] == [0, 1, 2, 3]
        assert np.all(np.isfinite(tr.inputs))
    assert "direction 01" in sets["01"][0].header_comment()


def test_direction_10_is_the_update_rule(small_data):
    # the upper strip's step-1 solution is zero, so its step-3 output
    # is exactly -g - 2c E of the recorded inputs (field units)
    solver, sets = small_data
    X, T = sets["10"][0].inputs, sets["10"][0].targets
    g = np.array([deserialize(x[:8]) for x in X])
    E = np.array([deserialize(x[8:]) for x in X])
    t = np.array([deserialize(y) for y in T])
    np.testing.assert_allclose(t, -g - 2 * solver.params.robin * E, atol=1e-12)


def test_lookup_plugin_reproduces_ddm(small_data):
    solver, _ = small_data
    hist = solver.run(EXAMPLE_FIELD, 4)
    sets = generate_dataset(BoundaryCatalog((EXAMPLE_FIELD,), ()), solver=solver)
    nets = [LookupNetwork(sets[d][0].inputs, sets[d][0].targets) for d in ("01", "10")]
    sol = nn_solve(solver.params, EXAMPLE_FIELD, *nets, solver=solver)
    for a, b in zip(hist.solutions[4], sol):
        assert np.abs(a.coefficients - b.coefficients).max() <= 1e-10 * np.abs(a.coefficients).max()


def test_lookup_unknown_input():
    net = LookupNetwork(np.zeros((1, 16)), np.zeros((1, 8)))
    with pytest.raises(InvalidArgumentError):
        net(np.ones((1, 16)))


def test_nn_solve_shape_checks(small_data):
    solver, _ = small_data
    bad = init_weights(NetworkShape(15, 4, 8), 0)
    good = init_weights(NetworkShape(16, 4, 8), 0)
    with pytest.raises(InvalidArgumentError):
        nn_solve(solver.params, EXAMPLE_FIELD, bad, good, solver=solver)
    with pytest.raises(InvalidArgumentError):
        nn_solve(solver.params, EXAMPLE_FIELD, good, good, order=BasisOrder(2, 2), n=4)


def test_compare_self_is_zero(small_data):
    solver, _ = small_data
    sol = solver.run(EXAMPLE_FIELD, 2).solutions[2]
    rep = compare(sol, sol, sample_grid=9)
    assert rep.rel_l2 == 0 and rep.abs_l2 == 0
    assert rep.jump_a == rep.jump_b
    assert np.all(rep.trace_delta == 0)
    assert relative_l2(sol, sol) == 0
    assert len(rep.lines()) == 7


def test_sample_field_shape(small_data):
    solver, _ = small_data
    sol = solver.run(EXAMPLE_FIELD, 1).solutions[1]
    vals = sample_field(sol, 5)
    assert vals.shape == (25, 2) and np.all(np.isfinite(vals))
