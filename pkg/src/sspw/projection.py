"""Sparse simplex projection and the shrink operators.

The sparse projection keeps the ``kappa`` largest entries of a histogram,
projects them onto the probability simplex and zeroes everything else.
Shrinking then drops zero bins from a histogram and the matching rows and
columns from the ground cost, which leaves the transport objective
unchanged.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .histogram import GroundCost, Histogram, SparseHistogram


@dataclass(frozen=True)
class ProjectionResult:
    projected: Histogram
    kappa: int
    support: np.ndarray


def kappa_for(n, gamma):
    """Number of retained entries, ``max(1, floor(n * gamma))``."""
    if not 0 < gamma <= 1:
        raise ConfigurationError(f"sparsity ratio must lie in (0, 1], got {gamma!r}")
    # the small slack keeps e.g. 0.3 * 10 from flooring to 2
    return max(1, int(np.floor(n * gamma + 1e-9)))


def project_simplex(y):
    """Euclidean projection of ``y`` onto the probability simplex.

    Sort-based threshold rule: with ``u`` sorted in decreasing order, the
    shift is ``(1 - sum(u[:rho])) / rho`` for the largest ``rho`` that keeps
    ``u[rho - 1]`` positive after shifting; entries are clipped at zero.
    """
    y = np.asarray(y, dtype=np.float64)
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, y.size + 1)
    rho = np.flatnonzero(u + (1.0 - css) / ks > 0)[-1] + 1
    tau = (1.0 - css[rho - 1]) / rho
    return np.maximum(y + tau, 0.0)


def top_k_support(weights, kappa):
    """Sorted indices of the ``kappa`` largest entries, ties to the lower index."""
    order = np.argsort(-weights, kind="stable")
    return np.sort(order[:kappa])


def _sparse_project_array(w, kappa):
    """Projected dense weights and their top-``kappa`` index set."""
    nnz = np.count_nonzero(w)
    if nnz <= kappa:
        # already a point of the target set; projecting would only add rounding
        return w, top_k_support(w, kappa)
    support = top_k_support(w, kappa)
    out = np.zeros_like(w)
    out[support] = project_simplex(w[support])
    return out, support


def sparse_simplex_project(beta, gamma):
    """Project a histogram onto the simplex with at most ``floor(n*gamma)`` nonzeros.

    Parameters
    ----------
    beta : Histogram
        Input point of the simplex.
    gamma : float
        Sparsity ratio in (0, 1].

    Returns
    -------
    ProjectionResult
        ``support`` lists the indices that stay positive, in increasing order.
    """
    kappa = kappa_for(beta.dim, gamma)
    dense, _ = _sparse_project_array(beta.weights, kappa)
    projected = Histogram(dense, beta.geometry)
    return ProjectionResult(projected, kappa, projected.support())


def shrink_vector(h):
    """Drop the zero bins of ``h``; the support keeps original bin indices."""
    w = h.weights if isinstance(h, Histogram) else np.asarray(h, dtype=np.float64)
    support = np.flatnonzero(w > 0)
    return SparseHistogram(support, w[support], w.size)


def inflate(sparse):
    """Scatter a sparse histogram back to a dense weight vector."""
    return sparse.to_dense()


def shrink_cost(cost, row_support, col_support):
    """Rows ``row_support`` and columns ``col_support`` of ``cost`` as a new matrix."""
    rows = np.asarray(row_support, dtype=np.int64)
    cols = np.asarray(col_support, dtype=np.int64)
    n_rows, n_cols = cost.shape
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        raise IndexError("row support out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
        raise IndexError("column support out of range")
    return GroundCost(cost.values[np.ix_(rows, cols)], power=cost.power)


def project_and_shrink(h, gamma=None):
    """Sparse-project ``h`` (skipped when ``gamma`` is None) and shrink it."""
    w = h.weights
    if gamma is not None:
        w, _ = _sparse_project_array(w, kappa_for(w.size, gamma))
    support = np.flatnonzero(w > 0)
    return SparseHistogram(support, w[support], w.size)
