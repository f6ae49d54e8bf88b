"""Exact optimal transport between histograms.

The LP ``min <T, C>`` over couplings with marginals ``a`` and ``b`` is solved
by a transportation simplex (north-west corner start, block pricing, Bland's
rule after long degenerate runs). See :mod:`sspw._simplex` for the kernel.
"""

from dataclasses import dataclass

import numpy as np

from ._simplex import STATUS_OPTIMAL, transport_simplex
from .errors import ConfigurationError, NumericalError
from .histogram import GroundCost, Histogram, SparseHistogram

PRUNE_TOL = 1e-14
# reduced costs above -PRICING_TOL * max(C) count as nonnegative
PRICING_TOL = 1e-12


@dataclass(frozen=True)
class TransportPlan:
    """Sparse optimal coupling; ``rows``/``cols`` are original bin indices."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    objective: float
    row_dim: int
    col_dim: int
    pivots: int = 0

    def to_dense(self):
        T = np.zeros((self.row_dim, self.col_dim))
        np.add.at(T, (self.rows, self.cols), self.mass)
        return T

    @property
    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.mass.tolist()))


def _as_sparse(h):
    """(support, weights, original_dim) for any histogram-like input."""
    if isinstance(h, SparseHistogram):
        return h.support, h.weights, h.original_dim
    if isinstance(h, Histogram):
        w = h.weights
    else:
        w = np.asarray(h, dtype=np.float64)
        if w.ndim != 1:
            raise ConfigurationError("histogram input must be one-dimensional")
    return np.arange(w.size, dtype=np.int64), w, w.size


def _index_map(support, weights, dim, n_cost, drop_zero, axis):
    """Cost indices and original bin indices of the entries to transport."""
    if n_cost == dim:
        cost_idx = support
    elif n_cost == support.size:
        cost_idx = np.arange(support.size, dtype=np.int64)
    else:
        raise ConfigurationError(
            f"histogram of dimension {dim} does not match cost {axis} count {n_cost}"
        )
    orig_idx = support
    if drop_zero:
        keep = weights > 0
        if not keep.all():
            cost_idx, weights, orig_idx = cost_idx[keep], weights[keep], orig_idx[keep]
    return cost_idx, weights, orig_idx


def _solve(a, b, cost, drop_zero, max_pivots):
    if not isinstance(cost, GroundCost):
        cost = GroundCost(cost)
    sa, wa, da = _as_sparse(a)
    sb, wb, db = _as_sparse(b)
    rows, wa, orig_r = _index_map(sa, wa, da, cost.shape[0], drop_zero, "row")
    cols, wb, orig_c = _index_map(sb, wb, db, cost.shape[1], drop_zero, "column")
    if wa.size == 0 or wb.size == 0:
        raise ConfigurationError("cannot transport an empty histogram")
    if max_pivots is None:
        max_pivots = 1000 + 50 * wa.size * wb.size
    eps = PRICING_TOL * max(cost.max_value, 1e-300)
    arc_r, arc_c, arc_f, status, pivots = transport_simplex(
        np.ascontiguousarray(wa), np.ascontiguousarray(wb), cost.values, rows, cols,
        max_pivots, eps,
    )
    if status != STATUS_OPTIMAL:
        raise NumericalError(
            "transportation simplex hit its pivot cap",
            {"pivots": int(pivots), "max_pivots": int(max_pivots),
             "m": int(wa.size), "n": int(wb.size)},
        )
    objective = float(np.dot(arc_f, cost.values[rows[arc_r], cols[arc_c]]))
    return objective, orig_r[arc_r], orig_c[arc_c], arc_f, pivots, da, db


def solve_ot(a, b, cost, drop_zero=True, max_pivots=None):
    """Optimal transport plan between ``a`` and ``b``.

    Parameters
    ----------
    a, b : Histogram, SparseHistogram or array
        Source and target marginals. A sparse histogram addresses ``cost``
        through its support when ``cost`` has full size, or position by
        position when ``cost`` was already shrunk to the support.
    cost : GroundCost
        Ground cost with rows indexed like ``a`` and columns like ``b``.
    drop_zero : bool
        Remove zero-mass rows and columns before solving. Disabling it keeps
        the full LP, which only changes the running time.
    max_pivots : int, optional
        Cycling guard; exceeding it raises :class:`NumericalError`.

    Returns
    -------
    TransportPlan
        Plan over the original bin indices of ``a`` and ``b``.
    """
    _, r, c, f, pivots, da, db = _solve(a, b, cost, drop_zero, max_pivots)
    keep = f > PRUNE_TOL
    r, c, f = r[keep], c[keep], f[keep]
    if not isinstance(cost, GroundCost):
        cost = GroundCost(cost)
    order = np.lexsort((c, r))
    r, c, f = r[order], c[order], f[order]
    # objective of the pruned plan, in the cost's own index space
    cr = r if cost.shape[0] == da else np.searchsorted(_as_sparse(a)[0], r)
    cc = c if cost.shape[1] == db else np.searchsorted(_as_sparse(b)[0], c)
    objective = float(np.dot(f, cost.values[cr, cc]))
    return TransportPlan(r, c, f, objective, da, db, int(pivots))


def wasserstein_distance(nu, mu, cost, drop_zero=True):
    """``<T*, C>`` for the optimal plan; no ``1/p`` root is taken."""
    return _solve(nu, mu, cost, drop_zero, None)[0]


def solve_ot_1d_closedform(a, b, p=1.0):
    """Monotone-coupling cost between two histograms on the same line.

    For ``p = 1`` this is the integral of ``|CDF_a - CDF_b|``; for other
    ``p`` it is the cost of the quantile (north-west corner) coupling on
    the sorted bins, optimal for convex costs on the line.
    """
    geom = a.geometry if isinstance(a, Histogram) else None
    if geom is None or geom.kind != "line1d":
        raise ConfigurationError("closed form needs histograms on a line1d geometry")
    if not isinstance(b, Histogram) or b.geometry != geom:
        raise ConfigurationError("both histograms must share the same line geometry")
    x = geom.coordinates[:, 0]
    order = np.argsort(x, kind="stable")
    x = x[order]
    wa = a.weights[order]
    wb = b.weights[order]
    if p == 1:
        gaps = np.diff(x)
        cdf_gap = np.cumsum(wa)[:-1] - np.cumsum(wb)[:-1]
        return float(np.abs(cdf_gap) @ gaps)
    # quantile coupling: on each interval between consecutive CDF break
    # points, mass moves from the bin holding that quantile of a to b's
    ca = np.cumsum(wa)
    cb = np.cumsum(wb)
    breaks = np.unique(np.concatenate([[0.0], ca, cb]))
    breaks = breaks[breaks <= min(ca[-1], cb[-1])]
    mids = 0.5 * (breaks[1:] + breaks[:-1])
    ia = np.minimum(np.searchsorted(ca, mids), x.size - 1)
    ib = np.minimum(np.searchsorted(cb, mids), x.size - 1)
    return float(np.diff(breaks) @ (np.abs(x[ia] - x[ib]) ** p))


def warmup():
    """Load the compiled solver so the first timed solve does not pay for it."""
    solve_ot(np.array([0.5, 0.5]), np.array([0.25, 0.75]), GroundCost(np.array([[0.0, 1.0], [1.0, 0.0]])))
