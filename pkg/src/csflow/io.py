"""File formats: curve CSV, canonical JSON reports and trajectory directories."""

import json
import math
import os
import re

import numpy as np

from .exceptions import InvalidCurve
from .flow import FlowConfig, FlowState, Trajectory
from .geometry import _make

CURVE_HEADER = "# csflow-curve v1, dim={dim}, closed={closed}"
_HEADER_RE = re.compile(r"^#\s*csflow-curve v1,\s*dim=(\d+),\s*closed=([01])\s*$")
TRAJECTORY_FORMAT = "csflow-trajectory v1"
REPORT_FORMAT = "csflow-report v1"


def _fmt(x):
    return format(float(x), ".17g")


def write_curve(path, curve):
    X = curve.vertices
    lines = [CURVE_HEADER.format(dim=X.shape[1], closed=int(curve.closed))]
    lines += [",".join(_fmt(v) for v in row) for row in X]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        m = _HEADER_RE.match(header)
        if not m:
            raise InvalidCurve(f"{path}: bad header {header!r}")
        dim, closed = int(m.group(1)), m.group(2) == "1"
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [float(v) for v in line.split(",")]
            except ValueError as exc:
                raise InvalidCurve(f"{path}:{lineno}: {exc}") from exc
            if len(row) != dim:
                raise InvalidCurve(f"{path}:{lineno}: expected {dim} values, got {len(row)}")
            rows.append(row)
    return _make(np.array(rows, dtype=float).reshape(-1, dim), closed)


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON-ready objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _emit(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(obj[k], indent, level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        # non-finite values have no JSON literal
        return _fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(obj)


def canonical_json(obj, indent=2):
    """Deterministic JSON text: sorted keys, floats at 17 significant digits."""
    return _emit(_plain(obj), indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def snapshot_record(state):
    d = state.diagnostics
    return {"t": state.t, "L": d.length, "K_t": d.sup_kappa_sq, "tac": d.tac,
            "tac_torsion": d.tac_torsion, "pca_residual": d.pca_residual,
            "sup_tau1": d.sup_tau1}


def save_trajectory(traj, out_dir, extra=None):
    """Write ``snap_<i>.csv`` files and ``trajectory.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    snaps = []
    for i, s in enumerate(traj.snapshots):
        name = f"snap_{i}.csv"
        write_curve(os.path.join(out_dir, name), s.curve)
        rec = snapshot_record(s)
        rec.update(index=i, file=name)
        snaps.append(rec)
    doc = {"format": TRAJECTORY_FORMAT, "config": traj.config.to_dict(),
           "termination_reason": traj.termination_reason, "n_steps": traj.n_steps,
           "resample_events": traj.resample_events, "last_dt": traj.last_dt,
           "snapshots": snaps}
    if extra:
        doc.update(extra)
    write_json(os.path.join(out_dir, "trajectory.json"), doc)
    return doc


def load_trajectory(path):
    """Read a trajectory directory; returns ``(Trajectory, document)``."""
    if not os.path.isdir(path):
        raise FileNotFoundError(f"trajectory directory not found: {path}")
    doc = read_json(os.path.join(path, "trajectory.json"))
    if doc.get("format") != TRAJECTORY_FORMAT:
        raise ValueError(f"{path}: unsupported trajectory format {doc.get('format')!r}")
    cfg = dict(doc["config"])
    cfg["snapshot_times"] = tuple(cfg.get("snapshot_times", ()))
    config = FlowConfig(**cfg)
    states = [FlowState(rec["t"], read_curve(os.path.join(path, rec["file"])))
              for rec in doc["snapshots"]]
    traj = Trajectory(states, config, doc["termination_reason"], doc.get("n_steps", 0),
                      doc.get("last_dt"), doc.get("resample_events", 0))
    return traj, doc
