import warnings

import numpy as np
import pytest

from sspw import (
    BarycenterConfig,
    BarycenterConvergenceWarning,
    BinGeometry,
    ConfigurationError,
    EmptyClusterError,
    Histogram,
    barycenter,
    build_ground_cost,
)
from sspw.barycenter import _ibp_log


@pytest.fixture(scope="module")
def grid():
    geom = BinGeometry.grid(6, 6)
    return geom, build_ground_cost(geom)


def _random(geom, rng, n):
    return [Histogram(rng.dirichlet(np.ones(geom.size)), geom) for _ in range(n)]


@pytest.mark.filterwarnings("ignore::sspw.BarycenterConvergenceWarning")
def test_output_on_simplex(grid):
    geom, C = grid
    bar = barycenter(_random(geom, np.random.default_rng(0), 5), C)
    assert abs(bar.weights.sum() - 1) < 1e-12
    assert np.all(bar.weights >= 0)
    assert bar.geometry == geom


def test_single_member_fixed_point(grid):
    geom, C = grid
    h = _random(geom, np.random.default_rng(1), 1)[0]
    cfg = BarycenterConfig(epsilon=1e-3 * C.median_positive())
    bar = barycenter([h], C, cfg)
    assert np.abs(bar.weights - h.weights).sum() < 1e-6


def test_identical_members_fixed_point(grid):
    geom, C = grid
    h = _random(geom, np.random.default_rng(2), 1)[0]
    cfg = BarycenterConfig(epsilon=1e-3 * C.median_positive())
    bar = barycenter([h] * 4, C, cfg)
    assert np.abs(bar.weights - h.weights).sum() < 1e-6


def test_two_point_masses_meet_in_the_middle():
    geom = BinGeometry.line(np.arange(11.0))
    C = build_ground_cost(geom)
    a = Histogram(np.eye(11)[2], geom)
    b = Histogram(np.eye(11)[8], geom)
    bar = barycenter([a, b], C, BarycenterConfig(epsilon=0.5))
    assert int(np.argmax(bar.weights)) == 5


@pytest.mark.filterwarnings("ignore::sspw.BarycenterConvergenceWarning")
def test_member_order_does_not_matter(grid):
    geom, C = grid
    hs = _random(geom, np.random.default_rng(3), 6)
    a = barycenter(hs, C).weights
    b = barycenter(hs[::-1], C).weights
    assert np.array_equal(a, b)


def test_scaling_matches_log_domain(grid):
    geom, C = grid
    hs = _random(geom, np.random.default_rng(4), 4)
    cfg = BarycenterConfig(tol=1e-12, max_iters=5000)
    bar, info = barycenter(hs, C, cfg, return_info=True)
    A = np.stack(sorted((h.weights for h in hs), key=tuple))
    ref, _, ok = _ibp_log(A, C.values, info["epsilon"], 5000, 1e-12)
    assert ok and info["converged"]
    assert np.abs(bar.weights - ref).sum() < 1e-9


def test_small_epsilon_stays_finite(grid):
    geom, C = grid
    hs = _random(geom, np.random.default_rng(5), 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BarycenterConvergenceWarning)
        bar = barycenter(hs, C, BarycenterConfig(epsilon=1e-4 * C.median_positive(), max_iters=50))
    assert np.all(np.isfinite(bar.weights))


def test_warns_when_not_converged(grid):
    geom, C = grid
    hs = _random(geom, np.random.default_rng(6), 3)
    with pytest.warns(BarycenterConvergenceWarning):
        barycenter(hs, C, BarycenterConfig(max_iters=2))


@pytest.mark.filterwarnings("ignore::sspw.BarycenterConvergenceWarning")
def test_sparse_members(grid):
    geom, C = grid
    w = np.zeros(36)
    w[[0, 7]] = 0.5
    v = np.zeros(36)
    v[[20, 35]] = 0.5
    bar = barycenter([Histogram(w, geom), Histogram(v, geom)], C)
    assert abs(bar.weights.sum() - 1) < 1e-12


def test_empty_cluster_raises(grid):
    _, C = grid
    with pytest.raises(EmptyClusterError):
        barycenter([], C)


def test_dimension_mismatch(grid):
    _, C = grid
    with pytest.raises(ConfigurationError):
        barycenter([Histogram([0.5, 0.5])], C)


@pytest.mark.parametrize("kw", [dict(epsilon=0.0), dict(max_iters=0), dict(tol=-1.0),
                                dict(epsilon_scale=0.0)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        BarycenterConfig(**kw)
