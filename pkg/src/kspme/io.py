"""Run configuration, binary snapshots and run-directory layout."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w

from .field import Grid, ScalarField, VectorField

MAGIC = b"KSPM"
VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists ``path: message`` diagnostics."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


class SnapshotError(ValueError):
    pass


# ---------------------------------------------------------------- snapshots


def write_snapshot(path, name: str, values: np.ndarray, spacing: float, time: float) -> None:
    values = np.asarray(values, dtype="<f8")
    raw_name = name.encode("utf-8")
    head = MAGIC + struct.pack("<IH", VERSION, len(raw_name)) + raw_name
    head += struct.pack("<B", values.ndim) + struct.pack(f"<{values.ndim}Q", *values.shape)
    head += struct.pack("<dd", float(spacing), float(time))
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(values).tobytes(order="C"))


@dataclass(frozen=True)
class Snapshot:
    name: str
    values: np.ndarray
    spacing: float
    time: float


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise SnapshotError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        if buf[:4] != MAGIC:
            raise SnapshotError(f"{path}: bad magic {buf[:4]!r}")
        version, nlen = struct.unpack_from("<IH", buf, 4)
        if version != VERSION:
            raise SnapshotError(f"{path}: unsupported version {version}")
        pos = 10
        name = buf[pos : pos + nlen].decode("utf-8")
        pos += nlen
        (dim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        shape = struct.unpack_from(f"<{dim}Q", buf, pos)
        pos += 8 * dim
        spacing, time = struct.unpack_from("<dd", buf, pos)
        pos += 16
    except (struct.error, UnicodeDecodeError) as exc:
        raise SnapshotError(f"{path}: truncated or corrupt header ({exc})") from exc
    count = int(np.prod(shape)) if dim else 1
    if len(buf) - pos != 8 * count:
        raise SnapshotError(f"{path}: payload has {len(buf) - pos} bytes, expected {8 * count}")
    values = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
    return Snapshot(name, values, spacing, time)


# ---------------------------------------------------------------- config

_INITIAL_KEYS = {
    "barenblatt": {"mass", "t0"},
    "gaussian": {"amplitude", "width", "center", "background"},
    "constant": {"value"},
    "file": {"path"},
    "random": {"mean", "amplitude"},
    "zero": set(),
}
_VECTOR_INITIAL_KEYS = {"zero": set(), "constant": {"vector"}, "random": {"amplitude"}, "file": {"path"}}
_DRIFT_KEYS = {"none": set(), "constant": {"vector"}, "shear": {"amplitude", "modes"}}
MONITORS = ("entropy", "lyapunov1", "lyapunov2", "mass")


@dataclass
class GridConfig:
    dim: int
    cells: int
    length: float
    origin: float = 0.0

    def build(self) -> Grid:
        return Grid(self.dim, self.cells, self.length, self.origin)


@dataclass
class ModelConfig:
    system: str = "ks"
    alpha: float = 0.5
    q: float = 1.0
    epsilon: float = 0.0
    chi: list[float] = field(default_factory=lambda: [1.0])
    kappa: list[float] = field(default_factory=lambda: [0.0, 1.0])
    kappa0: float = 0.0
    grad_phi: list[float] = field(default_factory=list)
    p1: bool = True
    p2: bool = False
    drift: dict = field(default_factory=lambda: {"kind": "none"})


@dataclass
class TimeConfig:
    t_end: float
    t_start: float = 0.0
    cfl_sigma: float = 0.4
    snapshot_interval: float = 0.0
    record_every: int = 1


@dataclass
class MonitorConfig:
    name: str
    tol: float = 1e-2


@dataclass
class RunConfig:
    grid: GridConfig
    model: ModelConfig
    time: TimeConfig
    initial: dict[str, dict]
    monitors: list[MonitorConfig] = field(default_factory=list)
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["monitors"] = [asdict(m) for m in self.monitors]
        return d

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(canon.encode()).hexdigest()


def _take(section: dict, path: str, spec: dict, problems: list[str]) -> dict:
    """Type-check ``section`` against ``spec = {key: (type, required)}``."""
    out = {}
    for key in section:
        if key not in spec:
            problems.append(f"{path}.{key}: unknown key")
    for key, (typ, required) in spec.items():
        if key not in section:
            if required:
                problems.append(f"{path}.{key}: missing required key")
            continue
        v = section[key]
        if typ is float:
            ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
            v = float(v) if ok else v
        elif typ is int:
            ok = isinstance(v, int) and not isinstance(v, bool)
        elif typ is bool:
            ok = isinstance(v, bool)
        elif typ is str:
            ok = isinstance(v, str)
        elif typ is list:
            ok = isinstance(v, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
            v = [float(x) for x in v] if ok else v
        elif typ is dict:
            ok = isinstance(v, dict)
        else:
            ok = True
        if not ok:
            problems.append(f"{path}.{key}: expected {typ.__name__}, got {type(v).__name__} {v!r}")
            continue
        out[key] = v
    return out


def _check_preset(path: str, spec: dict, allowed: dict, problems: list[str]) -> dict:
    kind = spec.get("kind")
    if kind is None:
        problems.append(f"{path}.kind: missing (choose from {sorted(allowed)})")
        return spec
    if kind not in allowed:
        problems.append(f"{path}.kind: unknown preset {kind!r} (choose from {sorted(allowed)})")
        return spec
    for key, v in spec.items():
        if key == "kind":
            continue
        if key not in allowed[kind]:
            problems.append(f"{path}.{key}: unknown key for preset {kind!r}")
        elif key == "path":
            if not isinstance(v, str):
                problems.append(f"{path}.path: expected a string")
        elif key in ("vector", "center"):
            if not (isinstance(v, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
                problems.append(f"{path}.{key}: expected a list of numbers")
        elif isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            problems.append(f"{path}.{key}: expected a finite number, got {v!r}")
    return spec


def config_from_dict(raw: dict) -> RunConfig:
    problems: list[str] = []
    top = _take(
        raw,
        "config",
        {"seed": (int, False), "grid": (dict, True), "model": (dict, True), "time": (dict, True),
         "initial": (dict, True), "monitors": (object, False)},
        problems,
    )
    g = _take(top.get("grid", {}), "grid", {"dim": (int, True), "cells": (int, True), "length": (float, True),
                                            "origin": (float, False)}, problems)
    m = _take(
        top.get("model", {}),
        "model",
        {"system": (str, False), "alpha": (float, True), "q": (float, False), "epsilon": (float, False),
         "chi": (list, False), "kappa": (list, False), "kappa0": (float, False), "grad_phi": (list, False),
         "p1": (bool, False), "p2": (bool, False), "drift": (dict, False)},
        problems,
    )
    t = _take(top.get("time", {}), "time", {"t_end": (float, True), "t_start": (float, False),
                                            "cfl_sigma": (float, False), "snapshot_interval": (float, False),
                                            "record_every": (int, False)}, problems)
    if g.get("dim") not in (None, 2, 3):
        problems.append(f"grid.dim: must be 2 or 3, got {g['dim']}")
    if g.get("cells") is not None and g["cells"] < 2:
        problems.append(f"grid.cells: must be >= 2, got {g['cells']}")
    if g.get("length") is not None and not g["length"] > 0:
        problems.append(f"grid.length: must be positive, got {g['length']}")
    if m.get("system", "ks") not in ("ks", "pme"):
        problems.append(f"model.system: must be 'ks' or 'pme', got {m.get('system')!r}")
    if m.get("alpha") is not None and m["alpha"] < 0:
        problems.append(f"model.alpha: must be >= 0, got {m['alpha']}")
    if m.get("q", 1.0) < 1:
        problems.append(f"model.q: must be >= 1, got {m.get('q')}")
    if m.get("epsilon", 0.0) < 0:
        problems.append(f"model.epsilon: must be >= 0, got {m.get('epsilon')}")
    if "drift" in m:
        _check_preset("model.drift", m["drift"], _DRIFT_KEYS, problems)
    if t.get("t_end") is not None and not t["t_end"] > t.get("t_start", 0.0):
        problems.append(f"time.t_end: must exceed t_start, got {t['t_end']}")
    if t.get("cfl_sigma", 0.4) <= 0:
        problems.append("time.cfl_sigma: must be positive")
    if t.get("snapshot_interval", 0.0) < 0:
        problems.append("time.snapshot_interval: must be >= 0")
    if t.get("record_every", 1) < 1:
        problems.append("time.record_every: must be >= 1")
    system = m.get("system", "ks")
    initial = top.get("initial", {})
    needed = {"n"} if system == "pme" else {"n", "c", "u"}
    for name in initial:
        if name not in needed:
            problems.append(f"initial.{name}: unknown field for system {system!r}")
    for name in sorted(needed):
        if name not in initial:
            problems.append(f"initial.{name}: missing initial data")
            continue
        spec = initial[name]
        if not isinstance(spec, dict):
            problems.append(f"initial.{name}: expected a table")
            continue
        _check_preset(f"initial.{name}", spec, _VECTOR_INITIAL_KEYS if name == "u" else _INITIAL_KEYS, problems)
    monitors = []
    raw_mon = top.get("monitors", [])
    if not isinstance(raw_mon, list):
        problems.append("monitors: expected an array of tables")
        raw_mon = []
    for i, mon in enumerate(raw_mon):
        if not isinstance(mon, dict):
            problems.append(f"monitors[{i}]: expected a table")
            continue
        mc = _take(mon, f"monitors[{i}]", {"name": (str, True), "tol": (float, False)}, problems)
        if "name" in mc and mc["name"] not in MONITORS:
            problems.append(f"monitors[{i}].name: unknown monitor {mc['name']!r} (choose from {list(MONITORS)})")
        if not mc.get("tol", 1e-2) > 0:
            problems.append(f"monitors[{i}].tol: must be positive")
        if "name" in mc:
            monitors.append(MonitorConfig(**mc))
    if problems:
        raise ConfigError(problems)
    model = ModelConfig(**m)
    if not model.grad_phi:
        model.grad_phi = [0.0] * g["dim"]
    elif len(model.grad_phi) != g["dim"]:
        raise ConfigError([f"model.grad_phi: needs {g['dim']} entries, got {len(model.grad_phi)}"])
    return RunConfig(
        grid=GridConfig(**g),
        model=model,
        time=TimeConfig(**t),
        initial={k: dict(v) for k, v in sorted(initial.items())},
        monitors=monitors,
        seed=top.get("seed", 0),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from exc
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return config_from_dict(raw)


def loads_config(text: str) -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([str(exc)]) from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------- series CSV


def write_series_csv(path, times, columns: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", *columns])
        for i, t in enumerate(times):
            w.writerow([repr(float(t))] + [repr(float(columns[k][i])) for k in columns])


def read_series_csv(path) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "time":
        raise SnapshotError(f"{path}: not a series file")
    head = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:]], float).reshape(-1, len(head))
    return data[:, 0], {k: data[:, j] for j, k in enumerate(head) if j > 0}


def write_rows_csv(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()})


# ---------------------------------------------------------------- run directories

FIELD_NAMES = {2: ("n", "c", "u_x", "u_y"), 3: ("n", "c", "u_x", "u_y", "u_z")}


def snapshot_path(run_dir, index: int, name: str) -> Path:
    return Path(run_dir) / "snapshots" / f"snap_{index:06d}_{name}.kspm"


def write_state_snapshots(run_dir, index: int, state, system: str) -> list[str]:
    grid = state.n.grid
    arrays = {"n": state.n.values}
    if system == "ks":
        arrays["c"] = state.c.values
        for name, a in zip(("u_x", "u_y", "u_z"), state.u.arrays()):
            arrays[name] = a
    out = []
    for name, a in arrays.items():
        p = snapshot_path(run_dir, index, name)
        write_snapshot(p, name, a, grid.spacing, state.time)
        out.append(p.name)
    return out


def list_snapshots(run_dir) -> dict[int, dict[str, Path]]:
    out: dict[int, dict[str, Path]] = {}
    for p in sorted((Path(run_dir) / "snapshots").glob("snap_*_*.kspm")):
        stem = p.stem.split("_", 2)
        try:
            idx = int(stem[1])
        except (IndexError, ValueError):
            raise SnapshotError(f"{p}: unexpected snapshot file name")
        out.setdefault(idx, {})[stem[2]] = p
    return out


def load_state_series(run_dir, grid: Grid, system: str):
    """All snapshot states of a run directory, in index order."""
    from .system import SystemState

    entries = list_snapshots(run_dir)
    if not entries:
        raise SnapshotError(f"{run_dir}: no snapshots found")
    states = []
    for idx in sorted(entries):
        files = entries[idx]
        need = ["n"] if system == "pme" else list(FIELD_NAMES[grid.dim])
        missing = [n for n in need if n not in files]
        if missing:
            raise SnapshotError(f"{run_dir}: snapshot {idx} lacks fields {missing}")
        snaps = {n: read_snapshot(files[n]) for n in need}
        for n, s in snaps.items():
            if s.values.shape != grid.shape or s.spacing != grid.spacing:
                raise SnapshotError(f"{files[n]}: grid does not match the run configuration")
        t = snaps["n"].time
        n = ScalarField(grid, snaps["n"].values)
        if system == "pme":
            c = ScalarField.constant(grid, 0.0)
            u = VectorField.zeros(grid)
        else:
            c = ScalarField(grid, snaps["c"].values)
            u = VectorField.from_arrays(grid, [snaps[k].values for k in FIELD_NAMES[grid.dim][2:]])
        states.append(SystemState(n, c, u, t))
    return states


def write_json(path, obj: Any) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
