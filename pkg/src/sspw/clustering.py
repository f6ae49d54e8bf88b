"""Lloyd, Wasserstein and sparse-projection Wasserstein k-means."""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .barycenter import BarycenterConfig, barycenter
from .errors import ConfigurationError
from .histogram import Histogram
from .projection import project_and_shrink
from .transport import wasserstein_distance

SCHEDULES = ("FIX", "DEC", "INC")


@dataclass(frozen=True)
class SspwConfig:
    k: int
    schedule: str = "FIX"
    gamma_min: float = 1.0
    t_max: int = 10
    project_samples: bool = True
    project_centroids: bool = True
    shrink_enabled: bool = True
    seed: int = 0
    p: float = 2.0
    barycenter_cfg: BarycenterConfig = field(default_factory=BarycenterConfig)
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "schedule", self.schedule.upper())
        if self.schedule not in SCHEDULES:
            raise ConfigurationError(f"unknown schedule {self.schedule!r}")
        if not 0 < self.gamma_min <= 1:
            raise ConfigurationError("gamma_min must lie in (0, 1]")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.t_max < 1:
            raise ConfigurationError("t_max must be >= 1")
        if self.n_jobs < 1:
            raise ConfigurationError("n_jobs must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d.pop("n_jobs")
        return d


@dataclass
class IterationRecord:
    t: int
    gamma: float
    changed_labels: int
    assign_time_s: float
    update_time_s: float
    objective: float
    distances: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class ClusteringRun:
    assignments: np.ndarray
    centroids: List[Histogram]
    iterations: int
    trace: List[IterationRecord]
    converged: bool
    config: dict = field(default_factory=dict)
    label_history: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def wall_time_s(self):
        return sum(r.assign_time_s + r.update_time_s for r in self.trace)

    @property
    def objectives(self):
        return [r.objective for r in self.trace]


def gamma_schedule(mode, gamma_min, t_max, t):
    """Sparsity ratio at outer iteration ``t`` (counted from 0).

    FIX keeps ``gamma_min``; DEC moves linearly from 1 to ``gamma_min`` and
    INC from ``gamma_min`` to 1 over ``t_max`` iterations. ``t`` beyond
    ``t_max`` saturates.
    """
    mode = mode.upper()
    if mode not in SCHEDULES:
        raise ConfigurationError(f"unknown schedule {mode!r}")
    if not 0 < gamma_min <= 1:
        raise ConfigurationError("gamma_min must lie in (0, 1]")
    if t_max < 1 or t < 0:
        raise ConfigurationError("need t_max >= 1 and t >= 0")
    t = min(t, t_max)
    if mode == "FIX":
        return float(gamma_min)
    if t == 0 or t == t_max:
        # exact endpoints; the formula can miss them by one ulp
        return float(gamma_min) if (mode == "DEC") == (t == t_max) else 1.0
    step = (1.0 - gamma_min) * t / t_max
    if mode == "DEC":
        return 1.0 - step
    return gamma_min + step


# ---------------------------------------------------------------- Lloyd

def _sq_dists(X, centers):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeans_pp(X, k, rng):
    q = X.shape[0]
    centers = [X[rng.integers(q)]]
    d2 = _sq_dists(X, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            i = rng.choice(q, p=d2 / total)
        else:
            i = rng.integers(q)
        centers.append(X[i])
        d2 = np.minimum(d2, _sq_dists(X, X[i:i + 1])[:, 0])
    return np.array(centers)


def euclidean_kmeans(samples, k, seed=0, max_iter=300):
    """Lloyd's algorithm on the raw weight vectors, k-means++ seeded.

    Stops when no label changes. An emptied cluster takes over the sample
    farthest from its current centroid.
    """
    X = np.stack([s.weights for s in samples])
    q = X.shape[0]
    if not 1 <= k <= q:
        raise ConfigurationError(f"need 1 <= k <= {q}, got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(X, k, rng)
    labels = None
    trace = []
    history = []
    converged = False
    for it in range(max_iter):
        t0 = time.perf_counter()
        D = _sq_dists(X, centers)
        new = np.argmin(D, axis=1)
        t1 = time.perf_counter()
        changed = q if labels is None else int(np.count_nonzero(new != labels))
        objective = float(D[np.arange(q), new].sum())
        if labels is not None and changed == 0:
            trace.append(IterationRecord(it, 1.0, 0, t1 - t0, 0.0, objective))
            history.append(new)
            converged = True
            break
        labels = new
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(0)
            else:
                far = int(np.argmax(D[np.arange(q), labels]))
                centers[j] = X[far]
        t2 = time.perf_counter()
        trace.append(IterationRecord(it, 1.0, changed, t1 - t0, t2 - t1, objective))
        history.append(labels)
    geom = samples[0].geometry
    centroids = [Histogram(c / c.sum(), geom) for c in centers]
    final = np.argmin(_sq_dists(X, centers), axis=1)
    return ClusteringRun(final, centroids, len(trace), trace, converged,
                         {"method": "kmeans", "k": k, "seed": seed}, history)


# ---------------------------------------------------------- Wasserstein

def _distance_matrix(sample_views, centroid_views, cost, drop_zero, n_jobs):
    def row(sv):
        return [wasserstein_distance(sv, cv, cost, drop_zero=drop_zero) for cv in centroid_views]

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(row, sample_views))
    else:
        rows = [row(sv) for sv in sample_views]
    return np.array(rows, dtype=np.float64)


def _views(hists, gamma, shrink):
    """Histograms as handed to the solver: optionally projected, then shrunk."""
    if gamma is None and not shrink:
        return list(hists)
    views = [project_and_shrink(h, gamma) for h in hists]
    if shrink:
        return views
    return [Histogram(v.to_dense(), h.geometry) for v, h in zip(views, hists)]


def _update(samples, labels, centroids, distances, cost, cfg, n_jobs):
    k = len(centroids)
    q = len(samples)
    groups = [[samples[i] for i in np.flatnonzero(labels == j)] for j in range(k)]

    def bary(j):
        return barycenter(groups[j], cost, cfg) if groups[j] else None

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(bary, range(k)))
    else:
        out = [bary(j) for j in range(k)]
    taken = set()
    own = distances[np.arange(q), labels]
    far_order = np.argsort(-own, kind="stable")
    for j in range(k):
        if out[j] is None:
            # empty cluster: re-seed with the worst-served sample
            i = next(int(i) for i in far_order if int(i) not in taken)
            taken.add(i)
            out[j] = samples[i]
    return out


def _wasserstein_lloyd(samples, cost, k, t_max, bary_cfg, seed, gamma_fn,
                       project_samples, project_centroids, shrink, n_jobs,
                       init_centroids, config):
    q = len(samples)
    if not 1 <= k <= q:
        raise ConfigurationError(f"need 1 <= k <= {q}, got {k}")
    if cost.shape != (samples[0].dim, samples[0].dim):
        raise ConfigurationError("ground cost does not match the sample dimension")
    if init_centroids is None:
        init_centroids = euclidean_kmeans(samples, k, seed).centroids
    centroids = list(init_centroids)
    if len(centroids) != k:
        raise ConfigurationError("need exactly k initial centroids")

    labels = None
    trace = []
    history = []
    converged = False
    sample_cache = {}
    for t in range(t_max):
        gamma = gamma_fn(t)
        t0 = time.perf_counter()
        g_samp = gamma if project_samples else None
        key = (g_samp, shrink)
        if key not in sample_cache:
            sample_cache = {key: _views(samples, g_samp, shrink)}
        s_views = sample_cache[key]
        c_views = _views(centroids, gamma if project_centroids else None, shrink)
        D = _distance_matrix(s_views, c_views, cost, shrink, n_jobs)
        new = np.argmin(D, axis=1)
        t1 = time.perf_counter()
        objective = float(D[np.arange(q), new].sum())
        changed = q if labels is None else int(np.count_nonzero(new != labels))
        history.append(new)
        if labels is not None and changed == 0:
            trace.append(IterationRecord(t, gamma, 0, t1 - t0, 0.0, objective, D))
            converged = True
            break
        labels = new
        centroids = _update(samples, labels, centroids, D, cost, bary_cfg, n_jobs)
        t2 = time.perf_counter()
        trace.append(IterationRecord(t, gamma, changed, t1 - t0, t2 - t1, objective, D))
    return ClusteringRun(labels, centroids, len(trace), trace,
                         converged, config, history)


def wasserstein_kmeans(samples, cost, k, t_max=10, barycenter_cfg=None, seed=0,
                       n_jobs=1, init_centroids=None):
    """Baseline Wasserstein k-means: exact OT assignment, IBP barycenter update.

    Initial centroids come from :func:`euclidean_kmeans` with the same seed
    unless ``init_centroids`` is given.
    """
    bary_cfg = barycenter_cfg or BarycenterConfig()
    config = {"method": "baseline", "k": k, "t_max": t_max, "seed": seed,
              "p": cost.power, "barycenter_cfg": asdict(bary_cfg)}
    return _wasserstein_lloyd(samples, cost, k, t_max, bary_cfg, seed, lambda t: 1.0,
                              False, False, True, n_jobs, init_centroids, config)


def sspw_kmeans(samples, cost, cfg, init_centroids=None):
    """Wasserstein k-means on sparse-projected, shrunk samples and centroids.

    Each outer iteration ``t`` projects the samples and/or centroids with
    ratio ``gamma_schedule(cfg.schedule, cfg.gamma_min, cfg.t_max, t)``,
    drops their zero bins, assigns by exact OT on the reduced problems and
    recomputes barycenters from the original samples.
    """
    config = {"method": "sspw", **cfg.to_dict()}
    return _wasserstein_lloyd(
        samples, cost, cfg.k, cfg.t_max, cfg.barycenter_cfg, cfg.seed,
        lambda t: gamma_schedule(cfg.schedule, cfg.gamma_min, cfg.t_max, t),
        cfg.project_samples, cfg.project_centroids, cfg.shrink_enabled, cfg.n_jobs,
        init_centroids, config,
    )
