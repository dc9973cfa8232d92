import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from kspme.cli import main
from kspme.io import (
    MAGIC,
    ConfigError,
    SnapshotError,
    load_config,
    loads_config,
    read_series_csv,
    read_snapshot,
    write_series_csv,
    write_snapshot,
)

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"
PME = CONFIGS / "pme_barenblatt.toml"
KS = CONFIGS / "ks_gaussian.toml"

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(
    arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite),
    st.text(min_size=1, max_size=8),
    finite,
    finite,
)
def test_snapshot_round_trip_bit_exact(tmp_path_factory, values, name, h, t):
    p = tmp_path_factory.mktemp("snap") / "a.kspm"
    write_snapshot(p, name, values, h, t)
    s = read_snapshot(p)
    assert s.name == name
    assert s.values.tobytes() == np.ascontiguousarray(values).tobytes()
    assert (s.spacing, s.time) == (h, t) or (np.isnan(h) and np.isnan(s.spacing))


def test_snapshot_rejects_corruption(tmp_path):
    p = tmp_path / "a.kspm"
    write_snapshot(p, "n", np.ones((4, 4)), 0.25, 1.0)
    raw = p.read_bytes()
    (tmp_path / "magic.kspm").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "short.kspm").write_bytes(raw[:-8])
    (tmp_path / "head.kspm").write_bytes(raw[:12])
    bad_version = bytearray(raw)
    bad_version[4] = 99
    (tmp_path / "version.kspm").write_bytes(bytes(bad_version))
    for name, msg in [("magic", "magic"), ("short", "payload"), ("head", "header"), ("version", "version")]:
        with pytest.raises(SnapshotError, match=msg):
            read_snapshot(tmp_path / f"{name}.kspm")
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "missing.kspm")
    assert raw[:4] == MAGIC


def test_series_csv_round_trip(tmp_path):
    t = np.array([0.0, 0.1, 1 / 3])
    cols = {"a": np.array([1e-300, np.pi, -2.5]), "b": np.array([0.0, 1.0, 2.0])}
    write_series_csv(tmp_path / "s.csv", t, cols)
    t2, c2 = read_series_csv(tmp_path / "s.csv")
    assert np.array_equal(t, t2) and all(np.array_equal(cols[k], c2[k]) for k in cols)


# config


def test_config_round_trip_and_hash():
    cfg = load_config(PME)
    again = loads_config(cfg.dumps())
    assert again == cfg and again.hash() == cfg.hash()
    changed = loads_config(cfg.dumps().replace("alpha = 1.0", "alpha = 1.5"))
    assert changed.hash() != cfg.hash()


@pytest.mark.parametrize(
    "edit,where",
    [
        (("[grid]", "[grid]\nbogus = 1"), "grid.bogus"),
        (('kind = "barenblatt"', 'kind = "mystery"'), "initial.n.kind"),
        (('name = "mass"', 'name = "nonsense"'), "monitors[1].name"),
        (("alpha = 1.0", "alpha = -1.0"), "model.alpha"),
        (("t_end = 0.06", "t_end = 0.001"), "time.t_end"),
    ],
)
def test_config_errors_name_the_path(edit, where):
    text = PME.read_text().replace(*edit)
    with pytest.raises(ConfigError) as exc:
        loads_config(text)
    assert any(p.startswith(where) for p in exc.value.problems), exc.value.problems


# CLI


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["version"]) == 0
    bad = tmp_path / "bad.toml"
    bad.write_text(PME.read_text().replace("[grid]", "[grid]\nbogus = 1"))
    assert main(["simulate", str(bad), "--out", str(tmp_path / "r0")]) == 2
    cfl = tmp_path / "cfl.toml"
    cfl.write_text(PME.read_text().replace("[time]", "[time]\ncfl_sigma = 10.0"))
    assert main(["simulate", str(cfl), "--out", str(tmp_path / "r1")]) == 3
    assert json.loads((tmp_path / "r1" / "manifest.json").read_text())["status"] == "cfl_violation"
    assert main(["classify", "--q", "0.5", "--alpha", "1"]) == 2
    (tmp_path / "empty").mkdir()
    assert main(["analyze", str(tmp_path / "empty")]) == 2
    keep = tmp_path / "keep"
    keep.mkdir()
    (keep / "precious.txt").write_text("x")
    assert main(["simulate", str(PME), "--out", str(keep)]) == 2
    assert (keep / "precious.txt").exists()


def test_cli_monitor_failure_exit_1(tmp_path):
    # the weak-2 functional needs (P2); without it the monitor reports a failure
    strict = tmp_path / "strict.toml"
    strict.write_text(KS.read_text().replace('name = "lyapunov1"', 'name = "lyapunov2"'))
    assert main(["simulate", str(strict), "--out", str(tmp_path / "r")]) == 1
    man = json.loads((tmp_path / "r" / "manifest.json").read_text())
    assert man["status"] == "monitor_failure"


def test_simulate_and_analyze(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", str(PME), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["snapshots"] == 6
    assert abs(man["invariants"]["mass_final"] - man["invariants"]["mass_initial"]) < 1e-12
    capsys.readouterr()
    assert main(["analyze", str(out), "--check", "entropy", "--check", "holder"]) == 0
    text = capsys.readouterr().out
    assert "entropy_dissipation: pass" in text and "holder:" in text
    assert (out / "analysis").is_dir()


def test_simulate_coupled_and_drift_analysis(tmp_path, capsys):
    out = tmp_path / "ks"
    assert main(["simulate", str(KS), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["analyze", str(out), "--check", "lyapunov1", "--check", "drift"]) == 0
    assert "drift: pass" in capsys.readouterr().out


def test_reruns_are_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", str(KS), "--out", str(a)]) == 0
    assert main(["simulate", str(KS), "--out", str(b)]) == 0
    fa = sorted((a / "snapshots").iterdir())
    fb = sorted((b / "snapshots").iterdir())
    assert [p.name for p in fa] == [p.name for p in fb]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(fa, fb))
    assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
    # rerunning from the stored config reproduces the same files again
    c = tmp_path / "c"
    assert main(["simulate", str(a / "config.toml"), "--out", str(c)]) == 0
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(fa, sorted((c / "snapshots").iterdir())))


def test_simulate_several_configs_in_parallel(tmp_path, monkeypatch):
    monkeypatch.setenv("KSPME_MAX_WORKERS", "2")
    assert main(["simulate", str(PME), str(KS), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "pme_barenblatt" / "manifest.json").exists()
    assert (tmp_path / "ks_gaussian" / "manifest.json").exists()


def test_classify_single_and_sweep(tmp_path, capsys):
    assert main(["classify", "--q", "1", "--alpha", "0.2", "--no-p2"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert rows[0]["weak_exists"] == "True" and rows[0]["holder_exists"] == "True"
    out = tmp_path / "sweep.csv"
    assert main(["classify", "--sweep", "1", "3", "25", "0", "4", "50", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 * 25 * 50
    # monotone in α along every (p2, q) line
    for i in range(0, len(rows), 50):
        line = [r["holder_exists"] == "True" for r in rows[i : i + 50]]
        assert line == sorted(line)


def test_barenblatt_subcommand(tmp_path, capsys):
    p = tmp_path / "b.kspm"
    assert main(["barenblatt", "--cells", "32", "--out", str(p)]) == 0
    s = read_snapshot(p)
    assert s.values.shape == (32, 32) and s.time == 0.01
    assert main(["barenblatt", "--cells", "4", "--out", str(p)]) == 2
