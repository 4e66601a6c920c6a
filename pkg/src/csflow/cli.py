"""Command-line front end.

Usage: csflow <evolve|entropy|blowup|reference|verify> [--config PATH] [--out DIR] [--seed N]

The config file is flat ``section.key = value`` text; ``#`` starts a comment.
Values are Python literals (numbers, tuples, quoted or bare strings).

Exit codes: 0 ok, 1 config or file error, 2 step failure, 3 undetermined
classification, 4 verification failure.
"""

import argparse
import ast
import math
import os
import sys

import numpy as np

from . import curves, io
from .entropy import EntropySearchConfig, entropy
from .exceptions import (CSFError, InsufficientBlowupData, InvalidCurve,
                         StepFailure, WindowTooShort)
from .flow import FlowConfig, evolve, verify_bernstein, verify_identities
from .geometry import arclength
from .reference import ReferenceLibrary, circle, validate
from .singularity import analyze

EXIT_OK, EXIT_CONFIG, EXIT_STEP, EXIT_UNDETERMINED, EXIT_VERIFY = 0, 1, 2, 3, 4

FLOW_KEYS = ("resample_count", "cfl_safety", "resample_trigger", "stop_kappa_sq",
             "stop_time", "snapshot_stride", "snapshot_times", "max_steps")
ENTROPY_KEYS = ("t0_min", "t0_max", "t0_grid", "x0_candidates", "refine_iters", "refine_tol")


class ConfigError(Exception):
    pass


def parse_value(text):
    text = text.strip()
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def load_config(path):
    """Read ``section.key = value`` lines into ``{section: {key: value}}``."""
    if path is None:
        return {}
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if "." not in key:
                raise ConfigError(f"{path}:{lineno}: key {key!r} has no section")
            section, name = key.split(".", 1)
            out.setdefault(section, {})[name] = parse_value(value)
    return out


def _section(cfg, name, allowed=None):
    sec = dict(cfg.get(name, {}))
    if allowed is not None:
        unknown = set(sec) - set(allowed)
        if unknown:
            raise ConfigError(f"unknown {name} keys: {', '.join(sorted(unknown))}")
    return sec


def build_curve(cfg, seed):
    """Initial curve from the ``curve`` section."""
    sec = _section(cfg, "curve")
    source = sec.pop("source", "circle")
    M = sec.pop("M", 256)
    dim = sec.pop("dim", 2)
    try:
        if source == "file":
            path = sec.pop("path", None)
            if path is None:
                raise ConfigError("curve.path is required for curve.source = file")
            if not os.path.isfile(path):
                raise ConfigError(f"curve file not found: {path}")
            return io.read_curve(path)
        if source == "circle":
            return circle(dim, sec.pop("radius", 1.0), sec.pop("cover", 1), M)
        if source == "ellipse":
            return curves.ellipse(sec.pop("a", 2.0), sec.pop("b", 1.0), dim, M)
        if source == "perturbed":
            return curves.perturbed_circle(sec.pop("amplitudes", (0.1, 0.1)),
                                           sec.pop("modes", (2, 3)), max(dim, 4), M)
        if source == "random":
            return curves.random_low_entropy(max(dim, 2), seed, sec.pop("amplitude", 0.08),
                                             sec.pop("max_mode", 4), M)
        if source == "figure_eight":
            return curves.figure_eight(sec.pop("scale", 1.0), dim, M)
    except (InvalidCurve, ValueError, TypeError) as exc:
        raise ConfigError(f"curve: {exc}") from exc
    raise ConfigError(f"unknown curve.source {source!r}")


def build_flow_config(cfg, default_stop=None):
    sec = _section(cfg, "flow", FLOW_KEYS)
    if "snapshot_times" in sec:
        sec["snapshot_times"] = tuple(np.atleast_1d(sec["snapshot_times"]).tolist())
    if "stop_kappa_sq" not in sec and "stop_time" not in sec and default_stop:
        sec.update(default_stop)
    try:
        return FlowConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"flow: {exc}") from exc


def build_entropy_config(cfg):
    sec = _section(cfg, "entropy", ENTROPY_KEYS)
    try:
        return EntropySearchConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"entropy: {exc}") from exc


def _echo(cfg, seed):
    return {"config": cfg, "seed": seed, "format": io.REPORT_FORMAT}


def cmd_evolve(cfg, out, seed):
    curve = build_curve(cfg, seed)
    fc = build_flow_config(cfg, {"stop_kappa_sq": 100.0})
    try:
        traj = evolve(curve, fc)
    except StepFailure as exc:
        if exc.trajectory is not None:
            io.save_trajectory(exc.trajectory, out, {"run": _echo(cfg, seed)})
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP
    io.save_trajectory(traj, out, {"run": _echo(cfg, seed)})
    print(f"{len(traj)} snapshots, t = {traj.times[-1]:.12g}, {traj.termination_reason}")
    return EXIT_OK


def cmd_entropy(cfg, out, seed):
    curve = build_curve(cfg, seed)
    ec = build_entropy_config(cfg)
    try:
        result = entropy(curve, arclength(curve), ec)
    except ValueError as exc:
        raise ConfigError(f"entropy: {exc}") from exc
    os.makedirs(out, exist_ok=True)
    doc = result.to_dict()
    doc.update(grid=ec.to_dict(), **_echo(cfg, seed))
    io.write_json(os.path.join(out, "entropy.json"), doc)
    print(format(result.value, ".12g"))
    return EXIT_OK


def cmd_blowup(cfg, out, seed):
    curve = build_curve(cfg, seed)
    fc = build_flow_config(cfg, {"stop_kappa_sq": 1e4})
    try:
        traj = evolve(curve, fc)
    except StepFailure as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP
    if traj.termination_reason != "curvature_blowup":
        raise ConfigError(f"trajectory ended by {traj.termination_reason}; "
                          "blowup needs flow.stop_kappa_sq to be reached")
    rho = _section(cfg, "singularity").get("rho", 1.0)
    try:
        report = analyze(traj, rho=rho)
    except InsufficientBlowupData as exc:
        raise ConfigError(str(exc)) from exc
    os.makedirs(os.path.join(out, "rescaled"), exist_ok=True)
    doc = report.to_dict()
    for k, s in enumerate(report.snapshots):
        name = os.path.join("rescaled", f"snap_{k}.csv")
        io.write_curve(os.path.join(out, name), s.curve)
        doc["snapshots"][k]["file"] = name
    for k, s in enumerate(report.continuous):
        name = os.path.join("rescaled", f"continuous_{k}.csv")
        io.write_curve(os.path.join(out, name), s.curve)
        doc["continuous"][k]["file"] = name
    doc.update(_echo(cfg, seed))
    io.write_json(os.path.join(out, "singularity.json"), doc)
    io.save_trajectory(traj, os.path.join(out, "trajectory"), {"run": _echo(cfg, seed)})
    print(f"type {report.type}, omega_hat = {report.omega_hat:.12g}, "
          f"profile {report.profile.tag or report.profile.family}")
    return EXIT_UNDETERMINED if report.type == "undetermined" else EXIT_OK


def cmd_reference(cfg, out, seed):
    sec = _section(cfg, "reference", ("M",))
    lib = ReferenceLibrary.default(sec.get("M", 1024))
    report = validate(lib)
    os.makedirs(out, exist_ok=True)
    members = []
    for prof, check in zip(lib, report.members):
        name = f"{prof.tag.replace('(', '_').replace(')', '').replace(',', '_')}.csv"
        io.write_curve(os.path.join(out, name), prof.curve)
        meta = prof.metadata()
        res = check.checks.get("shrinker_residual", {}).get("value")
        meta.update(file=name, residual=res, passed=check.passed, checks=check.checks)
        members.append(meta)
    io.write_json(os.path.join(out, "library.json"),
                  {"profiles": members, "passed": report.passed, **_echo(cfg, seed)})
    for m in members:
        print(f"{m['file']}: {'pass' if m['passed'] else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def snapshot_consistency(traj, doc, rtol=1e-9):
    """Compare the recorded per-snapshot scalars with values recomputed from the curves."""
    worst, where = 0.0, None
    for s, rec in zip(traj.snapshots, doc["snapshots"]):
        now = io.snapshot_record(s)
        for key, val in now.items():
            old = rec.get(key)
            if old is None or not math.isfinite(val):
                continue
            err = abs(val - old) / max(abs(val), abs(old), 1e-300)
            if err > worst:
                worst, where = err, f"{rec.get('file')}:{key}"
    return {"name": "snapshot_consistency", "max_residual": worst, "tolerance": rtol,
            "passed": worst <= rtol, "where": where}


def cmd_verify(cfg, out, seed):
    sec = _section(cfg, "verify", ("trajectory", "rtol"))
    path = sec.get("trajectory")
    if path is None:
        raise ConfigError("verify.trajectory is required")
    if not os.path.isdir(path):
        raise ConfigError(f"trajectory directory not found: {path}")
    try:
        traj, doc = io.load_trajectory(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    checks = [snapshot_consistency(traj, doc)]
    try:
        rep = verify_identities(traj, rtol=sec.get("rtol", 1e-2))
        checks += [c.to_dict() for c in rep.checks]
    except CSFError as exc:
        checks.append({"name": "identities", "passed": False, "error": str(exc)})
    try:
        b = verify_bernstein(traj)
        checks.append({"name": "bernstein", **b.to_dict()})
    except WindowTooShort as exc:
        checks.append({"name": "bernstein", "passed": True, "skipped": str(exc)})
    passed = all(c["passed"] for c in checks)
    os.makedirs(out, exist_ok=True)
    io.write_json(os.path.join(out, "verify.json"),
                  {"passed": passed, "checks": checks, "trajectory": path,
                   **_echo(cfg, seed)})
    for c in checks:
        print(f"{c['name']}: {'pass' if c['passed'] else 'FAIL'}")
    if not passed:
        names = ", ".join(c["name"] for c in checks if not c["passed"])
        print(f"verification failed: {names}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"evolve": cmd_evolve, "entropy": cmd_entropy, "blowup": cmd_blowup,
            "reference": cmd_reference, "verify": cmd_verify}


def build_parser():
    p = argparse.ArgumentParser(prog="csflow", description="Curve shortening flow laboratory")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key-value config file")
    p.add_argument("--out", default=None, help="output directory (default: run.out or ./out)")
    p.add_argument("--seed", type=int, default=None, help="seed for random curve generators")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        run = _section(cfg, "run", ("out", "seed"))
        seed = args.seed if args.seed is not None else run.get("seed", 0)
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        out = args.out or run.get("out", "out")
        return COMMANDS[args.command](cfg, out, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidCurve, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
