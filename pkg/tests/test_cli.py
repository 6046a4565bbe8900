import csv
import json

import numpy as np
import pytest

from heatflow.cli import RunConfig, main, read_config
from heatflow.datasets import generate, load_csv

ARTIFACTS = [
    "series.csv",
    "stability.csv",
    "chronodendrogram.json",
    "chronodendrogram.dot",
    "clusters.csv",
    "wgll.csv",
    "run_summary.json",
]
TOY_ARGS = ["--generator", "toy", "--t0", "0.01", "--t-max", "0.4", "--threshold", "0.2"]


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_load_csv_toy(tmp_path):
    ds = load_csv(_write(tmp_path, "a.csv", "-0.8\n0.0\n0.2\n0.5\n0.6\n"))
    assert (ds.N, ds.n) == (5, 1)
    assert ds.points[:, 0].tolist() == [-0.8, 0.0, 0.2, 0.5, 0.6]


def test_load_csv_header(tmp_path):
    ds = load_csv(_write(tmp_path, "a.csv", "x,y\n0,0\n1,1\n"))
    assert ds.points.tolist() == [[0.0, 0.0], [1.0, 1.0]]


def test_load_csv_errors(tmp_path):
    with pytest.raises(ValueError, match="ragged row 2"):
        load_csv(_write(tmp_path, "a.csv", "1,2\n3\n"))
    with pytest.raises(ValueError, match="empty file"):
        load_csv(_write(tmp_path, "b.csv", ""))
    with pytest.raises(ValueError, match="non-numeric"):
        load_csv(_write(tmp_path, "c.csv", "x\n1\nfoo\n"))
    with pytest.raises(ValueError, match="ragged row 4"):
        load_csv(_write(tmp_path, "d.csv", "x,y\n1,2\n\n3\n"))


def test_generate_counts_and_range():
    for seed in (0, 1, 2**63):
        g = generate("noisy1d", seed)
        assert g.dataset.N == 140 and g.dataset.n == 1
        assert np.all(np.abs(g.dataset.points) <= 1)
        c = generate("circles2d", seed)
        assert c.dataset.N == 200 and c.dataset.n == 2
        assert np.bincount(c.labels).tolist() == [150, 25, 25]


def test_generate_determinism_and_errors():
    a, b = generate("circles2d", 7), generate("circles2d", 7)
    assert np.array_equal(a.dataset.points, b.dataset.points)
    assert not np.array_equal(a.dataset.points, generate("circles2d", 8).dataset.points)
    with pytest.raises(ValueError, match="unknown spec"):
        generate("spiral", 0)
    with pytest.raises(ValueError):
        generate("toy", 2**64)


def test_run_toy_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", *TOY_ARGS, "--out", str(out)]) == 0
    for name in ARTIFACTS:
        assert (out / name).is_file()
    B = [float(r["B"]) for r in _rows(out / "stability.csv")]
    assert sum(B) == pytest.approx(1.0, abs=1e-12)
    clusters = _rows(out / "clusters.csv")
    assert sorted(int(r["index"]) for r in clusters) == list(range(5))
    series = _rows(out / "series.csv")
    assert len(series) == 51 and series[0]["M"] == "5" and series[-1]["M"] == "1"
    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["points"] == 5 and summary["times"]["slices"] == 51
    assert summary["consolidation"]["index"] < 51
    assert "clusters written" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "out"
    args = ["run", "--generator", "circles2d", "--seed", "3", "--slices", "8", "--out", str(out)]
    assert main(args) == 0
    first = {n: (out / n).read_bytes() for n in ARTIFACTS}
    assert main(args) == 0
    assert {n: (out / n).read_bytes() for n in ARTIFACTS} == first


def test_degenerate_time_range(tmp_path, capsys):
    cfg = _write(tmp_path, "run.cfg", "generator = toy\nt0 = 0.5\nt-max = 0.4\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "degenerate time range" in capsys.readouterr().err


def test_config_file_and_override(tmp_path):
    cfg = _write(
        tmp_path,
        "run.cfg",
        "# toy run\ngenerator = toy\nt0 = 0.01\nt_max = 0.4\nslices = 20\nthreshold = 0.2 # loose\n",
    )
    vals = read_config(cfg)
    assert vals == {"generator": "toy", "t0": 0.01, "t_max": 0.4, "slices": 20, "threshold": 0.2}
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--slices", "30", "--out", str(out)]) == 0
    assert len(_rows(out / "series.csv")) == 30
    with pytest.raises(ValueError, match="unknown key"):
        read_config(_write(tmp_path, "bad.cfg", "colour = red\n"))


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig().validate()
    with pytest.raises(ValueError):
        RunConfig(generator="toy", band="0.2:0.1").validate()
    with pytest.raises(ValueError):
        RunConfig(generator="toy", threshold=0.0).validate()


def test_generate_and_run_from_csv(tmp_path):
    data = tmp_path / "data"
    assert main(["generate", "--generator", "noisy1d", "--seed", "4", "--out", str(data)]) == 0
    ds = load_csv(data / "points.csv")
    assert ds.N == 140
    out = tmp_path / "o"
    assert main(["run", "--input", str(data / "points.csv"), "--slices", "21", "--out", str(out)]) == 0
    labels = [r["label"] for r in _rows(out / "clusters.csv")]
    assert len(labels) == 140 and all(lab != "" for lab in labels)


def test_wgll_scan_command(tmp_path, capsys):
    out = tmp_path / "w"
    assert main(["wgll-scan", "--generator", "toy", "--t0", "0.01", "--t-max", "0.4", "--out", str(out)]) == 0
    assert "local minimum at t=" in capsys.readouterr().out
    assert len(_rows(out / "wgll.csv")) == 51


def test_missing_input_file(tmp_path, capsys):
    assert main(["run", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("heatflow: error:")
