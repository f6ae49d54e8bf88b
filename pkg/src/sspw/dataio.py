"""Datasets in and results out.

Dataset files are JSON lines. The first line is a header::

    {"geometry": {"kind": "grid2d", "shape": [16, 16]}, "n": 256, "name": "..."}

(``"centers": [...]`` for line1d, ``"coordinates": [[...], ...]`` for
explicit), followed by one ``{"label": "...", "weights": [...]}`` record per
sample. Floats are written with ``repr`` precision, so a round trip is exact.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .errors import ConfigurationError, InvalidDataError, ParseError
from .histogram import BinGeometry, Histogram

TRACE_FIELDS = ("t", "gamma", "changed_labels", "assign_time_s", "update_time_s", "objective")
TIMING_FIELDS = ("assign_time_s", "update_time_s")


@dataclass(frozen=True)
class LabeledDataset:
    samples: List[Histogram]
    labels: List[str]
    geometry: BinGeometry
    name: str = ""

    def __post_init__(self):
        if not self.samples:
            raise InvalidDataError("dataset has no samples")
        if len(self.labels) != len(self.samples):
            raise ConfigurationError("need one label per sample")
        for h in self.samples:
            if h.geometry != self.geometry:
                raise ConfigurationError("all samples must share the dataset geometry")
        object.__setattr__(self, "samples", list(self.samples))
        object.__setattr__(self, "labels", [str(x) for x in self.labels])

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.labels == other.labels
            and self.geometry == other.geometry
            and all(a == b for a, b in zip(self.samples, other.samples))
        )


# ------------------------------------------------------------------ ingest

def _pixels(matrix):
    m = np.asarray(matrix)
    if m.size == 0:
        raise InvalidDataError("empty pixel matrix")
    if m.ndim != 2:
        raise InvalidDataError("pixel matrix must be two-dimensional")
    return m


def intensity_histogram_1d(pixel_matrix, bins=255, drop_zero=True):
    """Normalized intensity counts on a line of integer intensity bins.

    With ``drop_zero`` the bins cover 1..``bins`` and black pixels are
    ignored; otherwise they cover 0..``bins``.
    """
    m = _pixels(pixel_matrix)
    if not np.all(np.isfinite(m)) or np.any(m != np.round(m)):
        raise InvalidDataError("intensities must be integers")
    m = m.astype(np.int64).ravel()
    lo = 1 if drop_zero else 0
    if m.min() < 0 or m.max() > bins:
        raise InvalidDataError(f"intensities must lie in [0, {bins}]")
    kept = m[m >= lo]
    if kept.size == 0:
        raise InvalidDataError("no pixels left after dropping intensity zero")
    counts = np.bincount(kept - lo, minlength=bins + 1 - lo).astype(np.float64)
    geom = BinGeometry.line(np.arange(lo, bins + 1, dtype=np.float64))
    return Histogram(counts / counts.sum(), geom)


def pixel_histogram_2d(pixel_matrix):
    """Pixel intensities as a histogram on the image grid.

    Inputs with values in [-1, 1] (and some negative) are mapped affinely
    to [0, 255] first.
    """
    m = _pixels(pixel_matrix).astype(np.float64)
    if not np.all(np.isfinite(m)):
        raise InvalidDataError("pixel values must be finite")
    if m.min() < 0:
        if m.min() < -1 or m.max() > 1:
            raise InvalidDataError("negative pixels are only accepted for [-1, 1] inputs")
        m = (m + 1.0) * 127.5
    total = m.sum()
    if total <= 0:
        raise InvalidDataError("image has no positive intensity")
    geom = BinGeometry.grid(*m.shape)
    return Histogram(m.ravel() / total, geom)


def read_pixel_matrix(path):
    """Rows of whitespace-separated numbers from a plain-text file."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                rows.append([float(x) for x in parts])
            except ValueError as exc:
                raise ParseError(f"{path}: non-numeric value", line=lineno) from exc
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"{path}: ragged row", line=lineno)
    if not rows:
        raise ParseError(f"{path}: no data")
    return np.array(rows)


# --------------------------------------------------------------- synthetic

def make_synthetic_dataset(classes=10, per_class=10, n_bins=256, separation=1.0, seed=0,
                           geometry="grid2d"):
    """Noisy Gaussian-mixture histograms, one mixture per class.

    Each class owns two Gaussian bumps. A sample moves each bump by a random
    offset, rescales every bin by log-normal noise and renormalizes; both
    perturbations scale with ``1 / separation``. A small floor keeps every
    bin positive, so the histograms have full support.
    """
    if classes < 2 or per_class < 1:
        raise ConfigurationError("need classes >= 2 and per_class >= 1")
    if separation <= 0:
        raise ConfigurationError("separation must be positive")
    rng = np.random.default_rng(seed)
    if geometry == "grid2d":
        side = math.isqrt(n_bins)
        if side * side != n_bins:
            raise ConfigurationError("grid2d needs a square bin count")
        geom = BinGeometry.grid(side, side)
        extent = float(side - 1)
    elif geometry == "line1d":
        geom = BinGeometry.line(np.arange(n_bins, dtype=np.float64))
        extent = float(n_bins - 1)
    else:
        raise ConfigurationError(f"unsupported synthetic geometry {geometry!r}")
    X = geom.coordinates
    d = X.shape[1]
    scale = extent / 8.0
    samples, labels = [], []
    for c in range(classes):
        centers = rng.uniform(0.15 * extent, 0.85 * extent, size=(2, d))
        widths = rng.uniform(0.6, 1.2, size=2) * scale
        mix = rng.dirichlet([4.0, 4.0])
        for _ in range(per_class):
            shift = rng.normal(0.0, 0.5 * scale / separation, size=(2, d))
            dens = np.zeros(X.shape[0])
            for b in range(2):
                r2 = ((X - centers[b] - shift[b]) ** 2).sum(1)
                dens += mix[b] * np.exp(-0.5 * r2 / widths[b] ** 2)
            dens *= rng.lognormal(0.0, 0.3 / separation, size=dens.size)
            dens /= dens.sum()
            dens += 1e-3 / dens.size
            samples.append(Histogram(dens / dens.sum(), geom))
            labels.append(f"class{c}")
    return LabeledDataset(samples, labels, geom, name=f"synthetic-{classes}x{per_class}-{n_bins}")


# -------------------------------------------------------------- JSONL I/O

def _geometry_header(geom):
    if geom.kind == "line1d":
        return {"kind": "line1d", "centers": geom.coordinates[:, 0].tolist()}
    if geom.kind == "grid2d":
        return {"kind": "grid2d", "shape": list(geom.shape)}
    return {"kind": "explicit", "coordinates": geom.coordinates.tolist()}


def _geometry_from_header(g, lineno):
    if not isinstance(g, dict) or "kind" not in g:
        raise ParseError("geometry must be an object with a kind", line=lineno, field="geometry")
    try:
        if g["kind"] == "line1d":
            return BinGeometry.line(g["centers"])
        if g["kind"] == "grid2d":
            shape = g["shape"]
            return BinGeometry.grid(int(shape[0]), int(shape[1]))
        if g["kind"] == "explicit":
            return BinGeometry.explicit(g["coordinates"])
    except KeyError as exc:
        raise ParseError("geometry is missing a key", line=lineno, field=exc.args[0]) from exc
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"bad geometry: {exc}", line=lineno, field="geometry") from exc
    raise ParseError(f"unknown geometry kind {g['kind']!r}", line=lineno, field="kind")


def save_dataset(dataset, path):
    header = {"geometry": _geometry_header(dataset.geometry), "n": dataset.geometry.size,
              "name": dataset.name}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for label, h in zip(dataset.labels, dataset.samples):
            fh.write(json.dumps({"label": label, "weights": h.weights.tolist()}) + "\n")


def load_dataset(path):
    """Read a JSONL dataset; malformed content raises :class:`ParseError`."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"header is not JSON: {exc.msg}", line=1) from exc
    if not isinstance(header, dict):
        raise ParseError("header must be an object", line=1)
    for key in ("geometry", "n"):
        if key not in header:
            raise ParseError("header is missing a key", line=1, field=key)
    geom = _geometry_from_header(header["geometry"], 1)
    n = header["n"]
    if not isinstance(n, int) or n != geom.size:
        raise ParseError(f"n={n!r} does not match the geometry size {geom.size}", line=1, field="n")
    samples, labels = [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"record is not JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(rec, dict):
            raise ParseError("record must be an object", line=lineno)
        for key in ("label", "weights"):
            if key not in rec:
                raise ParseError("record is missing a key", line=lineno, field=key)
        w = rec["weights"]
        if not isinstance(w, list) or len(w) != n:
            raise ParseError(f"weights must be a list of {n} numbers", line=lineno, field="weights")
        try:
            h = Histogram(np.array(w, dtype=np.float64), geom)
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), line=lineno, field="weights") from exc
        samples.append(h)
        labels.append(str(rec["label"]))
    if not samples:
        raise ParseError(f"{path}: no sample records", line=len(lines))
    return LabeledDataset(samples, labels, geom, name=str(header.get("name", "")))


# ---------------------------------------------------------------- results

def trace_csv(run, timing=True):
    """Per-iteration trace as CSV text; ``timing=False`` omits the clocks."""
    fields = [f for f in TRACE_FIELDS if timing or f not in TIMING_FIELDS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for rec in run.trace:
        row = {"t": rec.t, "gamma": repr(float(rec.gamma)), "changed_labels": rec.changed_labels,
               "assign_time_s": repr(rec.assign_time_s), "update_time_s": repr(rec.update_time_s),
               "objective": repr(rec.objective)}
        w.writerow([row[f] for f in fields])
    return buf.getvalue()


def save_results(run, report, path, timing=True):
    """Write ``<path>.csv`` (trace) and ``<path>.json`` (summary); return both paths."""
    base = str(path)
    for ext in (".csv", ".json"):
        if base.endswith(ext):
            base = base[: -len(ext)]
    # plain concatenation: cell names such as "g0.5" contain dots
    csv_path = Path(base + ".csv")
    json_path = Path(base + ".json")
    csv_path.write_text(trace_csv(run, timing), encoding="utf-8")
    metrics = report.to_dict()
    if not timing:
        metrics.pop("wall_time_s")
    summary = {
        "metrics": metrics,
        "config": run.config,
        "iterations": run.iterations,
        "converged": run.converged,
        "assignments": [int(s) for s in run.assignments],
    }
    if timing:
        summary["total_time_s"] = report.wall_time_s
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path
