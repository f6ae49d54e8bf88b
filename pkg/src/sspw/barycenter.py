"""Entropic Wasserstein barycenters by iterative Bregman projections.

Each member ``b_i`` gets a coupling ``P_i = diag(u_i) K diag(v_i)`` with
``K = exp(-C / eps)``. The iterations alternate

    u_i = b_i / (K v_i)
    a   = prod_i (K^T u_i) ** (1 / q)
    v_i = a / (K^T u_i)

and ``a`` converges to the barycenter. Scalings that grow too large are
absorbed into log-potentials ``(f_i, g_i)`` and the member kernels become
``exp((f_i + g_i - C) / eps)``, which keeps small ``eps`` representable.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, EmptyClusterError
from .histogram import Histogram

ABSORB_LOG_THRESHOLD = 200.0


class BarycenterConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BarycenterConfig:
    """IBP settings.

    ``epsilon=None`` means ``epsilon_scale * median(positive entries of C)``.
    """

    epsilon: Optional[float] = None
    max_iters: int = 1000
    tol: float = 1e-7
    epsilon_scale: float = 1e-2

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if self.epsilon_scale <= 0:
            raise ConfigurationError("epsilon_scale must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")

    def resolve_epsilon(self, cost):
        if self.epsilon is not None:
            return float(self.epsilon)
        return self.epsilon_scale * cost.median_positive()


def _canonical(members):
    A = np.stack([np.asarray(m.weights, dtype=np.float64) for m in members])
    # sorting rows makes the float reductions independent of member order
    order = np.lexsort(A.T[::-1])
    return A[order]


def _absorb(f, g, u, v, eps, C):
    f = f + eps * np.log(np.where(u > 0, u, 1.0))
    g = g + eps * np.log(np.where(v > 0, v, 1.0))
    K = np.exp((f[:, :, None] + g[:, None, :] - C[None, :, :]) / eps)
    return f, g, (v > 0).astype(np.float64), K


def _ibp_scaling(A, C, eps, max_iters, tol):
    """Scaling-domain IBP with absorption; ``None`` if it cannot stay finite."""
    q, n = A.shape
    K_shared = np.exp(-C / eps)
    K = None  # per-member stabilized kernels, built at the first absorption
    f = np.zeros((q, n))
    g = np.zeros((q, n))
    u = np.ones((q, n))
    v = np.ones((q, n))
    bar_prev = None
    fresh = True  # v carries no unabsorbed scaling
    it = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        while it < max_iters:
            if K is None:
                Kv = v @ K_shared.T
            else:
                Kv = np.matmul(K, v[:, :, None])[:, :, 0]
            u_new = np.where(A > 0, A / Kv, 0.0)
            if K is None:
                KTu = u_new @ K_shared
            else:
                KTu = np.matmul(u_new[:, None, :], K)[:, 0, :]
            log_KTu = np.log(KTu)
            log_bar = np.mean(log_KTu - g / eps, axis=0)
            v_new = np.where(KTu > 0, np.exp(log_bar[None, :] - log_KTu), 0.0)
            bar = np.exp(log_bar)
            total = bar.sum()
            ok = (np.isfinite(u_new).all() and np.isfinite(v_new).all()
                  and np.isfinite(total) and total > 0)
            if not ok:
                if fresh:
                    return None
                # roll back to the last finite scalings and absorb them
                f, g, v, K = _absorb(f, g, u, v, eps, C)
                fresh = True
                continue
            it += 1
            u, v = u_new, v_new
            fresh = False
            bar = bar / total
            if bar_prev is not None and np.abs(bar - bar_prev).sum() < tol:
                return bar, it, True
            bar_prev = bar
            big = max(np.abs(np.log(u[u > 0])).max(initial=0.0),
                      np.abs(np.log(v[v > 0])).max(initial=0.0))
            if big > ABSORB_LOG_THRESHOLD:
                f, g, v, K = _absorb(f, g, u, v, eps, C)
                fresh = True
    return bar_prev, max_iters, False


def _ibp_log(A, C, eps, max_iters, tol):
    """Fully log-domain IBP; slower, used when the scaling iterations fail."""
    q, n = A.shape
    with np.errstate(divide="ignore"):
        log_A = np.log(A)
    g = np.zeros((q, n))
    bar_prev = None
    bar = np.full(n, 1.0 / n)
    for it in range(1, max_iters + 1):
        # f_i(x) = eps * (log b_i(x) - LSE_y (g_i(y) - C(x, y)) / eps)
        f = eps * (log_A - logsumexp((g[:, None, :] - C[None, :, :]) / eps, axis=2))
        f = np.where(A > 0, f, -np.inf)
        lse = logsumexp((f[:, :, None] - C[None, :, :]) / eps, axis=1)
        log_bar = np.mean(lse, axis=0)
        g = eps * (log_bar[None, :] - lse)
        g = np.where(np.isfinite(g), g, -np.inf)
        bar = np.exp(log_bar - logsumexp(log_bar))
        if bar_prev is not None and np.abs(bar - bar_prev).sum() < tol:
            return bar, it, True
        bar_prev = bar
    return bar, max_iters, False


def barycenter(members, cost, cfg=None, return_info=False):
    """Entropic Wasserstein barycenter of ``members`` with uniform weights.

    Parameters
    ----------
    members : sequence of Histogram
        Histograms on the bins of ``cost``.
    cost : GroundCost
        Square ground cost.
    cfg : BarycenterConfig, optional
    return_info : bool
        Also return ``{"iterations", "converged", "epsilon", "method"}``.

    Returns
    -------
    Histogram
        The barycenter, with the geometry of the first member. When
        ``max_iters`` is reached first, the last iterate is returned and a
        :class:`BarycenterConvergenceWarning` is emitted.
    """
    if len(members) == 0:
        raise EmptyClusterError("barycenter of an empty cluster")
    cfg = cfg or BarycenterConfig()
    C = cost.values
    if C.shape[0] != C.shape[1]:
        raise ConfigurationError("barycenter needs a square ground cost")
    if any(m.dim != C.shape[0] for m in members):
        raise ConfigurationError("member dimension does not match the ground cost")
    eps = cfg.resolve_epsilon(cost)
    A = _canonical(members)
    method = "scaling"
    out = _ibp_scaling(A, C, eps, cfg.max_iters, cfg.tol)
    if out is None:
        method = "log"
        out = _ibp_log(A, C, eps, cfg.max_iters, cfg.tol)
    bar, iters, converged = out
    if not converged:
        warnings.warn(
            f"barycenter did not reach tol={cfg.tol} in {cfg.max_iters} iterations",
            BarycenterConvergenceWarning,
            stacklevel=2,
        )
    bar = np.maximum(bar, 0.0)
    result = Histogram(bar / bar.sum(), members[0].geometry)
    if return_info:
        info = {"iterations": iters, "converged": converged, "epsilon": eps, "method": method}
        return result, info
    return result
