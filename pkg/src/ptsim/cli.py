"""``ptsim`` command line: verification suite, parameter sweeps and datasets.

    ptsim <mode> [--config PATH] [--out DIR] [--seed N] [--jobs K] [--degrees]

Modes: verify, holonomy, dilation, protocol, fig2.  Each mode writes
``<out>/<mode>.csv`` and prints a summary.  Exit status is 0 when every
acceptance threshold of the run passes, 1 on a breach and 2 on a usage or
configuration error.
"""

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import jsonschema
import numpy as np

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from . import __version__
from .errors import ConfigError, PTSimError

MODES = ("verify", "holonomy", "dilation", "protocol", "fig2")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_num_list = {"type": "array", "items": _num, "minItems": 1}
_pos_int = {"type": "integer", "minimum": 1}


def _section(props, required=()):
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "units": _section({"S_over_2pi_kHz": _pos, "time_unit": {"type": "string"}}),
        "verify": _section({"n_random": _pos_int, "seed": {"type": "integer", "minimum": 0}}),
        "holonomy": _section({
            "alpha0": _num_list,
            "directions": {"type": "array", "items": {"enum": [1, -1]}, "minItems": 1},
            "eps": {"type": "array", "items": _pos, "minItems": 2},
            "n_steps": {"type": "integer", "minimum": 100},
            "tolerance": _pos,
        }),
        "dilation": _section({
            "n_samples": _pos_int,
            "S_range": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
            "alpha_max": {"type": "number", "exclusiveMinimum": 0, "maximum": 1.5},
            "t_max": _pos,
            "tolerance": _pos,
        }),
        "protocol": _section({
            "S": _pos,
            "alpha0": _num_list,
            "directions": {"type": "array", "items": {"enum": [1, -1]}, "minItems": 1},
            "branch": {"enum": [1, -1]},
            "loop": {"enum": ["half", "two_ep"]},
            "rate": _pos,
            "ep_zone": {"type": "number", "minimum": 0},
            "ep_slowdown": {"type": "number", "minimum": 1},
            "prep_weight": _pos,
            "n_phi": {"type": "integer", "minimum": 8},
            "noise_sigma": {"type": "number", "minimum": 0},
            "gamma_d": _num_list,
            "tolerance": _pos,
        }),
        "fig2": _section({
            "n_alpha": {"type": "integer", "minimum": 2},
            "alpha_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            "gamma_d": _num_list,
        }),
    },
}

DEFAULTS = {
    "seed": 0,
    "verify": {"n_random": 200},
    "holonomy": {"alpha0": [0.1, 0.4, 0.8, 1.2], "directions": [1, -1],
                 "eps": [1e-2, 1e-3, 1e-4], "n_steps": 1000, "tolerance": 1e-3},
    "dilation": {"n_samples": 1000, "S_range": [0.1, 5.0], "alpha_max": 1.4,
                 "t_max": 10.0, "tolerance": 1e-9},
    "protocol": {"S": 1.0, "alpha0": [0.3], "directions": [1], "branch": 1, "loop": "two_ep",
                 "rate": 1e-3, "ep_zone": 0.25, "ep_slowdown": 4.0, "prep_weight": 1.0,
                 "n_phi": 16, "noise_sigma": 0.0, "gamma_d": [0.0, math.pi / 2],
                 "tolerance": 0.05},
    "fig2": {"n_alpha": 361, "alpha_range": [-math.pi / 2, 3 * math.pi / 2],
             "gamma_d": [0.0, math.pi / 2]},
}


# ---------------------------------------------------------------- config


def _format_error(err):
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{path}: {err.message}"


def parse_config(mode, path=None, seed=None):
    """Validated effective configuration for ``mode`` (file values, then flags)."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    raw = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(raw),
                    key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(_format_error(e) for e in errors))
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in raw.items():
        if isinstance(val, dict):
            cfg.setdefault(key, {}).update(val)
        else:
            cfg[key] = val
    if seed is not None:
        cfg["seed"] = int(seed)
    if cfg["protocol"]["noise_sigma"] > 0 and "seed" not in raw and seed is None:
        raise ConfigError("protocol/noise_sigma: a seed is required when noise_sigma > 0")
    effective = {"mode": mode, "seed": cfg["seed"], mode: cfg[mode]}
    if "units" in cfg:
        effective["units"] = cfg["units"]
    return effective


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- CSV


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def flatten(row):
    """Split complex values into ``_re``/``_im`` columns."""
    out = {}
    for k, v in row.items():
        if isinstance(v, (complex, np.complexfloating)):
            out[f"{k}_re"] = float(v.real)
            out[f"{k}_im"] = float(v.imag)
        else:
            out[k] = v
    return out


def emit_csv(rows, path, columns=None):
    """Write rows as UTF-8 CSV with 17-significant-digit floats."""
    rows = [flatten(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    if rows:
        extra = set().union(*rows) - set(columns)
        if extra:
            raise ValueError(f"rows carry columns outside the schema: {sorted(extra)}")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(r.get(c, "")) for c in columns])
    except OSError as exc:
        raise PTSimError(f"cannot write {path}: {exc}") from exc
    return columns


# ---------------------------------------------------------------- workers


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _holonomy_task(task):
    from .biorthogonal import SweepPath, holonomy_extrapolated
    index, alpha0, direction, eps, n_steps = task
    path = SweepPath.half_loop(alpha0, direction, n_steps=n_steps)
    res = holonomy_extrapolated(path, tuple(eps))
    rows = []
    expected = direction * math.pi / 2
    for j, r in enumerate(res.samples + (res,)):
        rows.append({
            "index": index, "sub": j, "alpha0": alpha0, "direction": direction,
            "half_plane": path.half_plane, "eps": r.eps_used, "extrapolated": r.extrapolated,
            "permutation": r.permutation, "phase_offdiag": r.offdiagonal_phase,
            "expected": expected, "abs_error": abs(r.offdiagonal_phase - expected),
            "T01": complex(r.transport_matrix[0, 1]), "T10": complex(r.transport_matrix[1, 0]),
            "connection_01": complex(r.connection_integral[0, 1]),
        })
    return rows


def _dilation_task(task):
    from .dilation import verify_dilation
    from .pt_core import PTParams
    index, S, alpha, t, v = task
    res = verify_dilation(PTParams(S, alpha), t, np.array(v))
    return [{"index": index, "S": S, "alpha": alpha, "t": t,
             "v0": complex(v[0]), "v1": complex(v[1]), "residual": res}]


def _protocol_task(task):
    from .interferometry import ExperimentSpec, run_protocol
    index, p, alpha0, direction, seed = task
    common = dict(S=p["S"], branch=p["branch"], rate=p["rate"], ep_zone=p["ep_zone"],
                  ep_slowdown=p["ep_slowdown"], prep_weight=p["prep_weight"],
                  n_phi=p["n_phi"], noise_sigma=p["noise_sigma"],
                  gamma_d_choices=tuple(p["gamma_d"]), seed=seed)
    if p["loop"] == "two_ep":
        spec = ExperimentSpec.two_ep_loop(alpha0, direction, **common)
    else:
        spec = ExperimentSpec(alpha0=alpha0, waypoints=(direction * math.pi - alpha0,), **common)
    rep = run_protocol(spec)
    rows = []
    for k, g in enumerate(rep.stage_phases):
        rows.append({
            "index": index, "stage": k, "alpha0": alpha0, "direction": direction,
            "alpha_start": rep.stage_alphas[k], "alpha_end": rep.stage_alphas[k + 1],
            "branch_start": rep.branches[k], "branch_end": rep.branches[k + 1],
            "exchange": rep.exchange_flags[k], "geometric_phase": g,
            "dynamic_phase": rep.stage_dynamic_phases[k], "record": "stage",
        })
    rows.append({
        "index": index, "stage": len(rep.stage_phases), "alpha0": alpha0, "direction": direction,
        "alpha_start": rep.stage_alphas[0], "alpha_end": rep.stage_alphas[-1],
        "branch_start": rep.branches[0], "branch_end": rep.branches[-1],
        "exchange": rep.exchange, "geometric_phase": rep.loop_phase,
        "dynamic_phase": sum(rep.stage_dynamic_phases), "record": "loop",
    })
    return rows


# ---------------------------------------------------------------- modes


def _wrap(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


def run_holonomy(cfg, jobs):
    p = cfg["holonomy"]
    tasks = [(i, a, d, p["eps"], p["n_steps"])
             for i, (a, d) in enumerate((a, d) for a in p["alpha0"] for d in p["directions"])]
    rows = [r for chunk in _map(_holonomy_task, tasks, jobs) for r in chunk]
    ok = all(r["abs_error"] <= p["tolerance"] for r in rows if r["extrapolated"])
    return rows, ok


def run_dilation(cfg, jobs):
    p = cfg["dilation"]
    rng = np.random.default_rng(cfg["seed"])
    tasks = []
    for i in range(p["n_samples"]):
        S = float(rng.uniform(*p["S_range"]))
        a = float(rng.uniform(-p["alpha_max"], p["alpha_max"]))
        t = float(rng.uniform(0.0, p["t_max"]))
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        tasks.append((i, S, a, t, tuple(complex(x) for x in v / np.linalg.norm(v))))
    chunks = max(1, jobs)
    groups = [tasks[k::chunks] for k in range(chunks)]
    rows = [r for g in _map(_dilation_group, groups, jobs) for r in g]
    rows.sort(key=lambda r: r["index"])
    ok = all(r["residual"] <= p["tolerance"] for r in rows)
    return rows, ok


def _dilation_group(tasks):
    return [r for t in tasks for r in _dilation_task(t)]


def run_protocol_mode(cfg, jobs):
    p = cfg["protocol"]
    tasks = [(i, p, a, d, cfg["seed"] + i)
             for i, (a, d) in enumerate((a, d) for a in p["alpha0"] for d in p["directions"])]
    rows = [r for chunk in _map(_protocol_task, tasks, jobs) for r in chunk]
    tol = p["tolerance"]
    ok = True
    for r in rows:
        if r["record"] == "stage" and p["loop"] == "two_ep":
            # +pi/2 at the first EP crossed, -pi/2 at the second
            expected = math.pi / 2 if r["stage"] == 0 else -math.pi / 2
        elif r["record"] == "stage":
            expected = math.pi / 2
        elif p["loop"] == "two_ep":
            expected = math.pi
        else:
            continue
        r["expected"] = expected
        ok &= abs(_wrap(r["geometric_phase"] - expected)) <= tol
    return rows, ok


def run_fig2(cfg, jobs):
    from .interferometry import fig2_rows
    p = cfg["fig2"]
    alphas = np.linspace(p["alpha_range"][0], p["alpha_range"][1], p["n_alpha"])
    rows = fig2_rows(alphas, tuple(p["gamma_d"]))
    return rows, len({r["curve"] for r in rows}) == 4


def run_verify(cfg, jobs):
    from .verify import run_suite
    p = cfg["verify"]
    rows = run_suite(n_random=p["n_random"], seed=p.get("seed", cfg["seed"]))
    return rows, all(r["pass"] for r in rows)


RUNNERS = {"verify": run_verify, "holonomy": run_holonomy, "dilation": run_dilation,
           "protocol": run_protocol_mode, "fig2": run_fig2}


def run(cfg, out_dir, jobs=1, degrees=False, stream=None):
    """Execute ``cfg`` and write ``<out_dir>/<mode>.csv``; returns the exit code."""
    stream = sys.stdout if stream is None else stream
    mode = cfg["mode"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{mode}.csv")
    stamp = {"config_hash": config_hash(cfg), "version": __version__}
    t0 = time.perf_counter()
    try:
        rows, ok = RUNNERS[mode](cfg, jobs)
        failure = None
    except PTSimError as exc:
        rows, ok, failure = [], False, f"{type(exc).__name__}: {exc}"
    rows = [dict(r, **stamp, status="ok") for r in rows]
    if not ok:
        rows.append(dict(stamp, status="FAILED" if failure is None else f"FAILED {failure}"))
    emit_csv(rows, path)
    elapsed = time.perf_counter() - t0
    _summary(mode, rows, ok, path, degrees, stream)
    print(f"elapsed {elapsed:.2f} s", file=sys.stderr)
    return 0 if ok else 1


def _summary(mode, rows, ok, path, degrees, stream):
    scale = 180 / math.pi if degrees else 1.0
    unit = "deg" if degrees else "rad"
    print(f"ptsim {mode}: {len(rows)} rows -> {path}", file=stream)
    if mode == "verify":
        for r in rows:
            if "check" in r:
                mark = "PASS" if r["pass"] else "FAIL"
                print(f"  {mark}  {r['check']:<32} {r['value']:.3e} (<= {r['threshold']:.1e})",
                      file=stream)
    elif mode == "holonomy":
        for r in rows:
            if r.get("extrapolated"):
                print(f"  alpha0={r['alpha0']:.3f} dir={r['direction']:+d} "
                      f"phase={r['phase_offdiag'] * scale:.6f} {unit}", file=stream)
    elif mode == "protocol":
        for r in rows:
            if "geometric_phase" in r:
                print(f"  run {r['index']} {r['record']:<5} {r['stage']} "
                      f"phase={r['geometric_phase'] * scale:+.4f} {unit} "
                      f"exchange={r['exchange']}", file=stream)
    elif mode == "dilation":
        res = [r["residual"] for r in rows if "residual" in r]
        if res:
            print(f"  max residual {max(res):.3e}", file=stream)
    print("PASS" if ok else "FAIL", file=stream)


def build_parser():
    ap = argparse.ArgumentParser(prog="ptsim", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", metavar="PATH", help="TOML configuration file")
    ap.add_argument("--out", metavar="DIR", default="ptsim_out", help="output directory")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config)")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="worker processes (output does not depend on it)")
    ap.add_argument("--degrees", action="store_true", help="print angles in degrees")
    ap.add_argument("--version", action="version", version=f"ptsim {__version__}")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("ptsim: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.mode, args.config, args.seed)
    except ConfigError as exc:
        print(f"ptsim: config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.out, args.jobs, args.degrees)


if __name__ == "__main__":
    sys.exit(main())
