"""Histogram value types, bin geometries and ground cost matrices."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError, InvalidDataError

SIMPLEX_TOL = 1e-9
RENORMALIZE_TOL = 1e-6

GEOMETRY_KINDS = ("line1d", "grid2d", "explicit")


def _frozen(arr, dtype=np.float64):
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BinGeometry:
    """Positions of the bins of a histogram.

    ``coordinates`` has one row per bin. ``shape`` is only meaningful for
    ``grid2d`` and records the (rows, cols) layout of the image.
    """

    kind: str
    coordinates: np.ndarray
    shape: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise ConfigurationError(f"unknown geometry kind {self.kind!r}")
        coords = np.asarray(self.coordinates, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise ConfigurationError("geometry needs at least one bin")
        if not np.all(np.isfinite(coords)):
            raise ConfigurationError("bin coordinates must be finite")
        if self.kind == "line1d" and coords.shape[1] != 1:
            raise ConfigurationError("line1d coordinates must be scalars")
        if self.kind == "grid2d":
            if self.shape is None or int(self.shape[0]) * int(self.shape[1]) != coords.shape[0]:
                raise ConfigurationError("grid2d needs a shape matching the bin count")
            object.__setattr__(self, "shape", (int(self.shape[0]), int(self.shape[1])))
        object.__setattr__(self, "coordinates", _frozen(coords))

    @classmethod
    def line(cls, centers):
        return cls("line1d", np.asarray(centers, dtype=np.float64)[:, None])

    @classmethod
    def grid(cls, n_rows, n_cols):
        rr, cc = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing="ij")
        coords = np.stack([rr.ravel(), cc.ravel()], axis=1)
        return cls("grid2d", coords, shape=(n_rows, n_cols))

    @classmethod
    def explicit(cls, points):
        return cls("explicit", points)

    @property
    def size(self):
        return self.coordinates.shape[0]

    @property
    def dim(self):
        return self.coordinates.shape[1]

    def __eq__(self, other):
        if not isinstance(other, BinGeometry):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.shape == other.shape
            and np.array_equal(self.coordinates, other.coordinates)
        )

    def __hash__(self):
        return hash((self.kind, self.shape, self.coordinates.tobytes()))


def _check_simplex(w, what):
    if w.ndim != 1 or w.size < 1:
        raise InvalidDataError(f"{what} must be a nonempty vector")
    if not np.all(np.isfinite(w)):
        raise InvalidDataError(f"{what} contains non-finite values")
    if np.any(w < 0):
        raise InvalidDataError(f"{what} has negative entries")
    total = w.sum()
    drift = abs(total - 1.0)
    if drift > RENORMALIZE_TOL:
        raise InvalidDataError(f"{what} sums to {total!r}, not 1")
    if drift > SIMPLEX_TOL:
        w = w / total
    return w


@dataclass(frozen=True, eq=False)
class Histogram:
    """Dense probability vector on the bins of ``geometry``.

    Weights that miss the simplex by less than 1e-6 are renormalized; larger
    drift raises :class:`InvalidDataError`.
    """

    weights: np.ndarray
    geometry: Optional[BinGeometry] = None

    def __post_init__(self):
        w = _check_simplex(np.asarray(self.weights, dtype=np.float64), "histogram")
        if self.geometry is not None and self.geometry.size != w.size:
            raise ConfigurationError(
                f"histogram has {w.size} bins but geometry has {self.geometry.size}"
            )
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self):
        return self.weights.size

    def support(self):
        return np.flatnonzero(self.weights > 0)

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and self.geometry == other.geometry


@dataclass(frozen=True, eq=False)
class SparseHistogram:
    """Positive weights on a sorted subset ``support`` of ``original_dim`` bins."""

    support: np.ndarray
    weights: np.ndarray
    original_dim: int

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        n = int(self.original_dim)
        if s.ndim != 1 or s.shape != w.shape:
            raise ConfigurationError("support and weights must be 1-D of equal length")
        if s.size > n:
            raise ConfigurationError("support larger than the original dimension")
        if s.size and (s[0] < 0 or s[-1] >= n or np.any(np.diff(s) <= 0)):
            raise ConfigurationError("support must be strictly increasing indices in [0, n)")
        if np.any(w <= 0):
            raise InvalidDataError("sparse histogram weights must be positive")
        w = _check_simplex(w, "sparse histogram")
        object.__setattr__(self, "support", _frozen(s, np.int64))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "original_dim", n)

    def to_dense(self):
        out = np.zeros(self.original_dim)
        out[self.support] = self.weights
        return out


@dataclass(frozen=True, eq=False)
class GroundCost:
    """Cost matrix ``C[u, v] = d(x_u, y_v) ** power``."""

    values: np.ndarray
    power: float = 2.0
    max_value: float = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or 0 in v.shape:
            raise ConfigurationError("ground cost must be a nonempty matrix")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ConfigurationError("ground cost entries must be finite and nonnegative")
        if self.power < 1:
            raise ConfigurationError("cost power p must be >= 1")
        object.__setattr__(self, "values", _frozen(np.ascontiguousarray(v)))
        object.__setattr__(self, "max_value", float(v.max()))

    @property
    def shape(self):
        return self.values.shape

    def median_positive(self):
        pos = self.values[self.values > 0]
        return float(np.median(pos)) if pos.size else 1.0


def build_ground_cost(geom_rows, geom_cols=None, p=2.0):
    """Pairwise Euclidean distances between bin coordinates, raised to ``p``.

    >>> build_ground_cost(BinGeometry.line([0, 1, 2]), p=1).values
    array([[0., 1., 2.],
           [1., 0., 1.],
           [2., 1., 0.]])
    """
    if geom_cols is None:
        geom_cols = geom_rows
    if geom_rows.dim != geom_cols.dim:
        raise ConfigurationError(
            f"coordinate dimensions differ: {geom_rows.dim} vs {geom_cols.dim}"
        )
    if p < 1:
        raise ConfigurationError("cost power p must be >= 1")
    diff = geom_rows.coordinates[:, None, :] - geom_cols.coordinates[None, :, :]
    sq = np.einsum("uvd,uvd->uv", diff, diff)
    if p == 2:
        values = sq
    else:
        values = np.sqrt(sq) ** p
    return GroundCost(values, power=float(p))


def normalize_to_histogram(raw, geometry=None):
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size == 0:
        raise InvalidDataError("raw data must be a nonempty vector")
    if not np.all(np.isfinite(raw)) or np.any(raw < 0):
        raise InvalidDataError("raw data must be finite and nonnegative")
    total = raw.sum()
    if total <= 0:
        raise InvalidDataError("raw data has no positive entry")
    return Histogram(raw / total, geometry)
