import csv
import json
import math

import numpy as np
import pytest

from shapegeo import cli, io


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_float_formatting_round_trips():
    for x in (0.1, 1 / 3, math.pi * 1e-300, 2.0**-1074, 1e22, -0.0):
        assert float(io.fmt(x)) == x
    doc = json.loads(io.dumps({"a": 1 / 3, "b": np.float64(2.0), "c": np.arange(3), "d": math.nan}))
    assert doc["a"] == 1 / 3
    assert isinstance(doc["b"], float) and doc["b"] == 2.0
    assert doc["c"] == [0, 1, 2]
    assert doc["d"] is None
    assert '"b": 2.0' in io.dumps({"b": 2.0})


def test_curvature_grid_shirt(tmp_path):
    out = tmp_path / "k.csv"
    assert cli.main(["curvature-grid", "--n", "9", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["x", "y", "f", "lambda", "lap_log_lambda", "K"]
    assert len(rows) == 82
    K = np.array([float(r[5]) for r in rows[1:]])
    assert np.all(K[np.isfinite(K)] <= 0)
    man = json.loads((tmp_path / "k.csv.manifest.json").read_text())
    assert man["command"] == "curvature-grid"
    assert man["inputs"]["bounds"] == [-3.0, 3.0, -3.0, 3.0]
    assert "timestamp" not in json.dumps(man)


def test_curvature_grid_collinear_with_certificate(tmp_path):
    out, cert = tmp_path / "c.csv", tmp_path / "cert.json"
    assert cli.main(["curvature-grid", "--surface", "collinear", "--n", "12", "--collar", "0.01",
                     "--certificate", str(cert), "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["u", "v", "lambda", "K", "in_T"]
    inside = [float(r[3]) for r in rows[1:] if r[4] == "1"]
    assert inside and max(inside) < 0
    recs = json.loads(cert.read_text())
    assert len(recs) == len(inside)
    assert all(v >= 0 for r in recs for v in r["terms"].values())


def test_grid_is_thread_count_independent(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("SHAPEGEO_THREADS", "1")
    cli.main(["curvature-grid", "--n", "15", "--out", str(a)])
    monkeypatch.setattr(cli, "threads", lambda: 4)
    cli.main(["curvature-grid", "--n", "15", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_geodesic_outputs_and_determinism(tmp_path):
    args = ["geodesic", "--x", "0.3", "--y", "0.2", "--angle", "0.7", "--t-end", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.events.csv").read_bytes() == (tmp_path / "b.events.csv").read_bytes()
    ma = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    assert ma.pop("file") == "a.csv" and mb.pop("file") == "b.csv"
    assert ma["events_file"] == "a.events.csv"
    ma.pop("events_file"), mb.pop("events_file")
    assert ma == mb
    rows = _rows(a)
    assert rows[0] == list(io.TRAJECTORY_HEADER)
    drift = np.array([float(r[6]) for r in rows[1:]])
    assert np.max(np.abs(drift)) < 1e-8
    t, charts, states = io.read_trajectory(a)
    assert t[-1] == pytest.approx(5.0)
    assert set(charts) <= {"north", "south"}


def test_collinear_geodesic_stops_on_boundary(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["geodesic", "--surface", "collinear", "--x", "-0.3", "--y", "0.3", "--angle", "-2.4",
                     "--t-end", "50", "--out", str(out)]) == 0
    man = json.loads((tmp_path / "g.csv.manifest.json").read_text())
    assert man["termination"].startswith("boundary:")


def test_syzygies_command(tmp_path):
    out = tmp_path / "s.json"
    assert cli.main(["syzygies", "--x", "0.3", "--y", "0.2", "--angle", "0.7", "--t-end", "40",
                     "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert "".join(doc["letters"]) == "ADADADAD"
    assert doc["reduced"] is True
    assert len(set(doc["dictionary"].values())) == 4


def test_lift_of_meridian_passes_through_square(tmp_path):
    g, lift = tmp_path / "g.csv", tmp_path / "l.csv"
    assert cli.main(["geodesic", "--x", "-0.5", "--y", "0", "--t-end", "2", "--per-step", "8",
                     "--out", str(g)]) == 0
    assert cli.main(["lift", "--trajectory", str(g), "--out", str(lift)]) == 0
    t, _, st = io.read_trajectory(g)
    t_cross = np.interp(0.0, st[:, 0], t)
    rows = _rows(lift)[1:]
    lt = np.array([float(r[0]) for r in rows])
    Q = np.array([[float(v) for v in r[1:9]] for r in rows]).reshape(-1, 4, 2)
    J = np.array([float(r[9]) for r in rows])
    assert np.max(np.abs(J)) <= 1e-6
    q = Q[np.argmin(np.abs(lt - t_cross))]
    r = lambda i, j: np.linalg.norm(q[i] - q[j])
    assert r(0, 1) == pytest.approx(r(0, 3), abs=2e-3)
    assert r(0, 2) == pytest.approx(r(1, 3), rel=1e-9)
    # rectangles throughout the meridian: the diagonals keep equal length
    d1, d2 = Q[:, 2] - Q[:, 0], Q[:, 3] - Q[:, 1]
    assert np.max(np.abs(np.linalg.norm(d1, axis=1) - np.linalg.norm(d2, axis=1))) < 1e-9


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 5, "surface": "shirt"}))
    out = tmp_path / "k.csv"
    assert cli.main(["curvature-grid", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(_rows(out)) == 26
    assert cli.main(["curvature-grid", "--config", str(cfg), "--n", "4", "--out", str(out)]) == 0
    assert len(_rows(out)) == 17


def test_usage_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nn": 3}))
    assert cli.main(["curvature-grid", "--config", str(bad), "--out", "x.csv"]) == 2
    assert "unknown config keys" in capsys.readouterr().err
    assert cli.main(["geodesic", "--y", "0", "--out", str(tmp_path / "g.csv")]) == 2
    assert "--x" in capsys.readouterr().err
    assert cli.main(["geodesic", "--bogus", "1"]) == 2
    assert "valid flags" in capsys.readouterr().err
    assert cli.main([]) == 2
    assert cli.main(["curvature-grid"]) == 2


def test_domain_errors_exit_1(tmp_path):
    assert cli.main(["geodesic", "--surface", "collinear", "--x", "0.5", "--y", "0.5",
                     "--out", str(tmp_path / "g.csv")]) == 1
    assert cli.main(["lift", "--trajectory", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "l.csv")]) == 1


def test_verify_subset_report(tmp_path):
    rep = tmp_path / "r.json"
    assert cli.main(["verify", "--quick", "--only", "syzygy", "roundtrips", "--report", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert {r["suite"] for r in doc} == {"syzygy", "roundtrips"}
    assert all(r["status"] == "pass" for r in doc)
    assert cli.main(["verify", "--only", "nonexistent"]) == 1
