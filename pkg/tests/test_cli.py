import csv
import json

import numpy as np
import pytest

from sspw import build_ground_cost, evaluate, make_synthetic_dataset, save_dataset, wasserstein_kmeans
from sspw.cli import ingest_main, main
from sspw.dataio import load_dataset, trace_csv

pytestmark = pytest.mark.filterwarnings("ignore::sspw.BarycenterConvergenceWarning")

SYN = "classes=3,per_class=4,bins=16,sep=2"


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_grid_run(tmp_path):
    rc = main(["--synthetic", SYN, "--gamma-min", "0.5,1", "--project", "both,sample",
               "--schedule", "fix,dec", "--repeats", "2", "--out", str(tmp_path)])
    assert rc == 0
    rows = _rows(tmp_path / "aggregate.csv")
    names = [r["cell"] for r in rows]
    assert names[:2] == ["kmeans", "baseline"]
    assert len(rows) == 2 + 2 * 2 * 2
    assert all(r["failed"] == "0" and r["runs"] == "2" for r in rows)
    assert float(rows[1]["speedup"]) == 1.0
    assert (tmp_path / "runs" / "sspw-dec-g0.5-sample-shrink_r1.csv").exists()
    assert json.loads((tmp_path / "failures.json").read_text()) == []


def test_gamma_one_cell_equals_baseline(tmp_path):
    main(["--synthetic", SYN, "--gamma-min", "1", "--out", str(tmp_path), "--no-timing"])
    rows = {r["cell"]: r for r in _rows(tmp_path / "aggregate.csv")}
    base, cell = rows["baseline"], rows["sspw-fix-g1-both-shrink"]
    for m in ("purity", "nmi", "accuracy"):
        assert base[m] == cell[m]
    runs = tmp_path / "runs"
    assert (runs / "baseline_r0.csv").read_text() == (runs / "sspw-fix-g1-both-shrink_r0.csv").read_text()


def test_baseline_cell_matches_standalone_run(tmp_path):
    main(["--synthetic", SYN, "--seed", "3", "--out", str(tmp_path), "--no-timing"])
    ds = make_synthetic_dataset(3, 4, 16, 2.0, seed=0)
    run = wasserstein_kmeans(ds.samples, build_ground_cost(ds.geometry), 3, seed=3)
    assert (tmp_path / "runs" / "baseline_r0.csv").read_text() == trace_csv(run, timing=False)
    summary = json.loads((tmp_path / "runs" / "baseline_r0.json").read_text())
    assert summary["metrics"]["purity"] == evaluate(run, ds.labels).purity


def test_aggregate_is_mean_of_runs(tmp_path):
    main(["--synthetic", "classes=3,per_class=4,bins=16,sep=0.5", "--repeats", "3",
          "--out", str(tmp_path)])
    rows = {r["cell"]: r for r in _rows(tmp_path / "aggregate.csv")}
    cell = "sspw-fix-g0.5-both-shrink"
    for metric in ("purity", "nmi", "accuracy"):
        per = [json.loads((tmp_path / "runs" / f"{cell}_r{i}.json").read_text())["metrics"][metric]
               for i in range(3)]
        assert float(rows[cell][metric]) == pytest.approx(np.mean(per), abs=1e-12)
    times = [json.loads((tmp_path / "runs" / f"{cell}_r{i}.json").read_text())["total_time_s"]
             for i in range(3)]
    assert float(rows[cell]["time_s"]) == pytest.approx(np.mean(times), abs=1e-12)


def test_no_timing_is_byte_identical(tmp_path):
    args = ["--synthetic", SYN, "--repeats", "2", "--no-timing", "--gamma-min", "0.4"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b"), "--jobs", "3"])
    for name in ["aggregate.csv"] + [f"runs/{p.name}" for p in (tmp_path / "a" / "runs").iterdir()]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dataset_file_input(tmp_path):
    ds = make_synthetic_dataset(2, 3, 9, seed=2)
    save_dataset(ds, tmp_path / "d.jsonl")
    rc = main(["--dataset", str(tmp_path / "d.jsonl"), "--k", "2", "--project", "none",
               "--no-shrink", "--tmax", "3", "--out", str(tmp_path / "o")])
    assert rc == 0
    assert "sspw-fix-g0.5-none-noshrink" in (tmp_path / "o" / "aggregate.csv").read_text()


def test_failure_is_recorded_and_exit_nonzero(tmp_path):
    # more clusters than samples makes every run fail
    rc = main(["--synthetic", "classes=2,per_class=1,bins=9", "--k", "5", "--out", str(tmp_path)])
    assert rc == 1
    failures = json.loads((tmp_path / "failures.json").read_text())
    assert failures and failures[0]["cell"] == "kmeans"


@pytest.mark.parametrize("bad", [["--gamma-min", "1.5"], ["--schedule", "zig"],
                                 ["--project", "all"], ["--repeats", "0"]])
def test_invalid_arguments(tmp_path, bad):
    assert main(["--synthetic", SYN, "--out", str(tmp_path)] + bad) == 2


def test_bad_synthetic_option(tmp_path):
    with pytest.raises(SystemExit):
        main(["--synthetic", "colors=3", "--out", str(tmp_path)])


def test_ingest(tmp_path):
    rng = np.random.default_rng(0)
    lines = []
    for i in range(3):
        p = tmp_path / f"img{i}.txt"
        np.savetxt(p, rng.integers(0, 256, size=(4, 4)), fmt="%d")
        lines.append(f"digit{i % 2} {p.name}")
    (tmp_path / "manifest.txt").write_text("\n".join(lines) + "\n")
    out = tmp_path / "data.jsonl"
    assert ingest_main([str(tmp_path / "manifest.txt"), "--mode", "2d", "--out", str(out)]) == 0
    ds = load_dataset(out)
    assert len(ds) == 3 and ds.geometry.shape == (4, 4)
    assert ds.labels == ["digit0", "digit1", "digit0"]
    out1 = tmp_path / "data1.jsonl"
    assert ingest_main([str(tmp_path / "manifest.txt"), "--mode", "1d", "--out", str(out1)]) == 0
    assert load_dataset(out1).samples[0].dim == 255
