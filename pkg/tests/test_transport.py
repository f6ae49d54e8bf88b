import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import transport_lp
from sspw import (
    BinGeometry,
    ConfigurationError,
    GroundCost,
    Histogram,
    NumericalError,
    build_ground_cost,
    shrink_cost,
    shrink_vector,
    solve_ot,
    solve_ot_1d_closedform,
    wasserstein_distance,
)
from sspw.projection import project_and_shrink


def test_identity_costs_nothing():
    C = build_ground_cost(BinGeometry.line([0, 1, 2]), p=1)
    h = Histogram([0.2, 0.3, 0.5])
    assert solve_ot(h, h, C).objective == 0.0


def test_two_point_masses():
    C = build_ground_cost(BinGeometry.line([0, 1, 2, 3]), p=2)
    a = Histogram([1, 0, 0, 0])
    b = Histogram([0, 0, 0, 1])
    plan = solve_ot(a, b, C)
    assert plan.objective == 9.0
    assert plan.entries == [(0, 3, 1.0)]


def test_hand_computed_plan():
    C = GroundCost(np.array([[0.0, 1.0], [1.0, 0.0]]))
    plan = solve_ot([0.5, 0.5], [0.25, 0.75], C)
    assert plan.objective == pytest.approx(0.25)
    T = plan.to_dense()
    assert np.allclose(T, [[0.25, 0.25], [0.0, 0.5]])


def test_rectangular_problem():
    C = GroundCost(np.array([[1.0, 2.0, 3.0]]))
    plan = solve_ot([1.0], [0.2, 0.3, 0.5], C)
    assert plan.objective == pytest.approx(0.2 + 0.6 + 1.5)


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        solve_ot(Histogram([0.5, 0.5]), Histogram([1.0]), GroundCost(np.eye(2)))


def test_pivot_cap_raises_with_diagnostics():
    rng = np.random.default_rng(0)
    a = rng.dirichlet(np.ones(20))
    b = rng.dirichlet(np.ones(20))
    with pytest.raises(NumericalError) as exc:
        solve_ot(a, b, GroundCost(rng.random((20, 20))), max_pivots=1)
    assert exc.value.diagnostics["max_pivots"] == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10**6))
def test_matches_tableau_lp(m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.ones(m))
    b = rng.dirichlet(np.ones(n))
    C = rng.integers(0, 4, size=(m, n)).astype(float)  # integer costs -> many ties
    ref, _ = transport_lp(a, b, C)
    assert solve_ot(a, b, GroundCost(C)).objective == pytest.approx(ref, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 10**6))
def test_plan_is_feasible(m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.full(m, 0.4))
    b = rng.dirichlet(np.full(n, 0.4))
    C = GroundCost(rng.random((m, n)))
    plan = solve_ot(a, b, C)
    T = plan.to_dense()
    assert np.all(T >= 0)
    assert np.allclose(T.sum(1), Histogram(a).weights, atol=1e-12)
    assert np.allclose(T.sum(0), Histogram(b).weights, atol=1e-12)
    assert plan.objective == pytest.approx(float((T * C.values).sum()), abs=1e-12)
    # a basic solution has at most m + n - 1 positive entries
    assert plan.mass.size <= m + n - 1


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10**6))
def test_one_dimensional_closed_form(n, seed):
    rng = np.random.default_rng(seed)
    geom = BinGeometry.line(np.sort(rng.uniform(0, 10, n)))
    a = Histogram(rng.dirichlet(np.ones(n)), geom)
    b = Histogram(rng.dirichlet(np.ones(n)), geom)
    for p in (1.0, 2.0):
        C = build_ground_cost(geom, p=p)
        assert wasserstein_distance(a, b, C) == pytest.approx(
            solve_ot_1d_closedform(a, b, p), rel=1e-9, abs=1e-9)


def test_closed_form_needs_line():
    g = BinGeometry.grid(1, 2)
    with pytest.raises(ConfigurationError):
        solve_ot_1d_closedform(Histogram([0.5, 0.5], g), Histogram([0.5, 0.5], g))


def test_symmetry_and_triangle_for_p1():
    rng = np.random.default_rng(5)
    geom = BinGeometry.explicit(rng.normal(size=(15, 2)))
    C = build_ground_cost(geom, p=1)
    h = [Histogram(rng.dirichlet(np.ones(15)), geom) for _ in range(3)]
    d = lambda x, y: wasserstein_distance(x, y, C)  # noqa: E731
    assert d(h[0], h[1]) == pytest.approx(d(h[1], h[0]), abs=1e-12)
    assert d(h[0], h[2]) <= d(h[0], h[1]) + d(h[1], h[2]) + 1e-12


def test_shrunk_inputs_agree_with_dense():
    rng = np.random.default_rng(11)
    geom = BinGeometry.explicit(rng.normal(size=(30, 2)))
    C = build_ground_cost(geom)
    a = Histogram(rng.dirichlet(np.ones(30)), geom)
    b = Histogram(rng.dirichlet(np.ones(30)), geom)
    sa = project_and_shrink(a, 0.4)
    sb = project_and_shrink(b, 0.4)
    full = solve_ot(sa.to_dense(), sb.to_dense(), C, drop_zero=False).objective
    via_support = solve_ot(sa, sb, C).objective
    via_matrix = solve_ot(sa, sb, shrink_cost(C, sa.support, sb.support))
    assert via_support == pytest.approx(full, abs=1e-12)
    assert via_matrix.objective == pytest.approx(full, abs=1e-12)
    # the plan comes back in original bin indices either way
    assert set(via_matrix.rows.tolist()) <= set(sa.support.tolist())
    assert via_matrix.row_dim == 30


def test_zero_bins_dropped_by_default():
    C = GroundCost(np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]))
    a = Histogram([0.5, 0.0, 0.5])
    b = Histogram([0.0, 1.0, 0.0])
    keep = solve_ot(a, b, C, drop_zero=False)
    drop = solve_ot(a, b, C)
    assert keep.objective == drop.objective == 1.0
    assert shrink_vector(a).support.tolist() == [0, 2]
