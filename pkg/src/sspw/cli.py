"""Command line experiment runner.

``sspw`` runs the Euclidean initializer, the baseline Wasserstein k-means and
every SSPW cell of a schedule x gamma_min x projection grid, repeating each
with seeds ``seed, seed + 1, ...``. All methods in a repeat share one
initialization. Per-run traces land in ``<out>/runs/`` and the mean metrics
per cell in ``<out>/aggregate.csv``.

``sspw-ingest`` converts plain-text pixel matrices into a JSONL dataset.
"""

import argparse
import csv
import io
import json
import logging
import sys
import traceback
import warnings
from pathlib import Path

import numpy as np

from . import dataio
from .barycenter import BarycenterConfig, BarycenterConvergenceWarning
from .clustering import SspwConfig, euclidean_kmeans, sspw_kmeans, wasserstein_kmeans
from .errors import ConfigurationError
from .evaluation import evaluate
from .histogram import build_ground_cost
from .transport import warmup

log = logging.getLogger("sspw")

PROJECT_TARGETS = {
    "sample": (True, False),
    "centroid": (False, True),
    "both": (True, True),
    "none": (False, False),
}
SYNTHETIC_KEYS = {"classes": int, "per_class": int, "bins": int, "sep": float, "seed": int}


def _csv_list(kind):
    def parse(text):
        items = [x.strip() for x in text.split(",") if x.strip()]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        try:
            return [kind(x) for x in items]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _synthetic(text):
    opts = {"classes": 10, "per_class": 10, "bins": 256, "sep": 1.0, "seed": 0}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, _, value = part.partition("=")
        if key not in SYNTHETIC_KEYS or not value:
            raise argparse.ArgumentTypeError(f"bad synthetic option {part!r}")
        try:
            opts[key] = SYNTHETIC_KEYS[key](value)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return opts


def build_parser():
    ap = argparse.ArgumentParser(prog="sspw", description=__doc__.split("\n\n")[1])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", type=Path, help="JSONL dataset file")
    src.add_argument("--synthetic", type=_synthetic, metavar="classes=,per_class=,bins=,sep=",
                     help="generate a synthetic grid dataset")
    ap.add_argument("--k", type=int, help="cluster count (default: number of classes)")
    ap.add_argument("--p", type=float, default=2.0, help="ground cost power")
    ap.add_argument("--schedule", type=_csv_list(str.upper), default=["FIX"],
                    help="comma list of FIX, DEC, INC")
    ap.add_argument("--gamma-min", type=_csv_list(float), default=[0.5])
    ap.add_argument("--project", type=_csv_list(str.lower), default=["both"],
                    help="comma list of sample, centroid, both, none")
    ap.add_argument("--no-shrink", action="store_true")
    ap.add_argument("--tmax", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--jobs", type=int, default=1, help="threads for OT solves and barycenters")
    ap.add_argument("--no-timing", action="store_true",
                    help="leave wall-clock columns out of every output file")
    ap.add_argument("--no-baseline", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _validate(args):
    if args.repeats < 1:
        raise ConfigurationError("--repeats must be >= 1")
    if args.tmax < 1:
        raise ConfigurationError("--tmax must be >= 1")
    for g in args.gamma_min:
        if not 0 < g <= 1:
            raise ConfigurationError(f"gamma_min {g} outside (0, 1]")
    for s in args.schedule:
        if s not in ("FIX", "DEC", "INC"):
            raise ConfigurationError(f"unknown schedule {s!r}")
    for p in args.project:
        if p not in PROJECT_TARGETS:
            raise ConfigurationError(f"unknown projection target {p!r}")


def _cell_name(schedule, gamma, project, shrink):
    return f"sspw-{schedule.lower()}-g{gamma:g}-{project}-{'shrink' if shrink else 'noshrink'}"


def _fmt(x):
    return repr(float(x))


def run_experiment(args):
    """Run the grid described by parsed ``args``; return the process exit code."""
    _validate(args)
    if args.dataset is not None:
        ds = dataio.load_dataset(args.dataset)
    else:
        o = args.synthetic
        ds = dataio.make_synthetic_dataset(o["classes"], o["per_class"], o["bins"], o["sep"],
                                           seed=o["seed"])
    k = args.k or len(set(ds.labels))
    cost = build_ground_cost(ds.geometry, p=args.p)
    bary_cfg = BarycenterConfig()
    shrink = not args.no_shrink
    timing = not args.no_timing
    warmup()
    runs_dir = args.out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    cells = [("kmeans", None)]
    if not args.no_baseline:
        cells.append(("baseline", None))
    for schedule in args.schedule:
        for gamma in args.gamma_min:
            for project in args.project:
                cfg = dict(schedule=schedule, gamma_min=gamma, project=project)
                cells.append((_cell_name(schedule, gamma, project, shrink), cfg))

    results = {name: [] for name, _ in cells}
    failures = []
    for rep in range(args.repeats):
        seed = args.seed + rep
        try:
            init = euclidean_kmeans(ds.samples, k, seed)
        except Exception as exc:  # noqa: BLE001 - recorded and reported
            failures.append({"cell": "kmeans", "repeat": rep, "error": repr(exc)})
            log.error("initialization failed for repeat %d: %s", rep, exc)
            continue
        for name, cfg in cells:
            log.info("repeat %d: %s", rep, name)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", BarycenterConvergenceWarning)
                    if name == "kmeans":
                        run = init
                    elif name == "baseline":
                        run = wasserstein_kmeans(ds.samples, cost, k, args.tmax, bary_cfg, seed,
                                                 n_jobs=args.jobs, init_centroids=init.centroids)
                    else:
                        ps, pc = PROJECT_TARGETS[cfg["project"]]
                        scfg = SspwConfig(k=k, schedule=cfg["schedule"], gamma_min=cfg["gamma_min"],
                                          t_max=args.tmax, project_samples=ps,
                                          project_centroids=pc, shrink_enabled=shrink, seed=seed,
                                          p=args.p, barycenter_cfg=bary_cfg, n_jobs=args.jobs)
                        run = sspw_kmeans(ds.samples, cost, scfg, init_centroids=init.centroids)
                report = evaluate(run, ds.labels)
                dataio.save_results(run, report, runs_dir / f"{name}_r{rep}", timing=timing)
                results[name].append(report)
            except Exception as exc:  # noqa: BLE001 - recorded and reported
                failures.append({"cell": name, "repeat": rep, "error": repr(exc)})
                log.error("%s repeat %d failed: %s", name, rep, exc)
                log.debug("%s", traceback.format_exc())

    (args.out / "aggregate.csv").write_text(
        aggregate_table(cells, results, args.repeats, timing), encoding="utf-8")
    (args.out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n",
                                            encoding="utf-8")
    return 1 if failures else 0


def aggregate_table(cells, results, repeats, timing=True):
    """Mean metrics per cell as CSV text."""
    fields = ["cell", "runs", "failed", "purity", "nmi", "accuracy"]
    if timing:
        fields += ["time_s", "speedup"]
    base = results.get("baseline") or []
    base_time = float(np.mean([r.wall_time_s for r in base])) if base else None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for name, _ in cells:
        reps = results[name]
        row = [name, len(reps), repeats - len(reps)]
        if reps:
            row += [_fmt(np.mean([getattr(r, m) for r in reps])) for m in ("purity", "nmi", "accuracy")]
        else:
            row += ["", "", ""]
        if timing:
            if reps:
                t = float(np.mean([r.wall_time_s for r in reps]))
                row += [_fmt(t), _fmt(base_time / t) if base_time and t > 0 else ""]
            else:
                row += ["", ""]
        w.writerow(row)
    return buf.getvalue()


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return run_experiment(args)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"sspw: error: {exc}", file=sys.stderr)
        return 2


# ------------------------------------------------------------------ ingest

def ingest_main(argv=None):
    ap = argparse.ArgumentParser(
        prog="sspw-ingest",
        description="Build a JSONL dataset from plain-text pixel matrices.")
    ap.add_argument("manifest", type=Path,
                    help="text file with one '<label> <matrix path>' pair per line")
    ap.add_argument("--mode", choices=("1d", "2d"), default="2d",
                    help="1d: intensity histogram; 2d: pixel histogram on the image grid")
    ap.add_argument("--keep-zero", action="store_true", help="1d mode: keep intensity 0")
    ap.add_argument("--name", default="")
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args(argv)
    samples, labels = [], []
    try:
        base = args.manifest.parent
        for lineno, line in enumerate(args.manifest.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise dataio.ParseError(f"{args.manifest}: expected '<label> <path>'", line=lineno)
            label, path = parts[0], Path(parts[1].strip())
            m = dataio.read_pixel_matrix(path if path.is_absolute() else base / path)
            if args.mode == "1d":
                h = dataio.intensity_histogram_1d(m, drop_zero=not args.keep_zero)
            else:
                h = dataio.pixel_histogram_2d(m)
            samples.append(h)
            labels.append(label)
        ds = dataio.LabeledDataset(samples, labels, samples[0].geometry if samples else None,
                                   name=args.name)
        dataio.save_dataset(ds, args.out)
    except (ValueError, OSError) as exc:
        print(f"sspw-ingest: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
