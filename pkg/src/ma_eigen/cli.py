"""Batch experiment driver.

Parses JSON experiment configs (or direct flags for the profile and
check subcommands), dispatches solver, eigensolver, barrier, and
analysis runs, and emits CSV tables with SVG plots rendered alongside.
Outputs are written atomically, one run at a time per output directory,
and every report carries a provenance block so reruns are auditable and
byte-identical.

Exit codes: 0 success, 2 config or schema errors, 1 module errors.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover - hard dependency, declared in metadata
    jsonschema = None

from . import __version__
from .barriers import barrier_from_params, supersolution_det_bound, verify_subsolution
from .eigen import EigenOptions, inverse_iteration, solve_power
from .geometry import Disc, DomainError, domain_from_dict
from .grid import build_grid
from .solver import SolveOptions, solve_dirichlet
from . import analysis, plots

__all__ = ["main", "ConfigError"]

LOCK_NAME = ".ma-eigen.lock"
TASKS = ("solve", "power", "eigen", "barrier-check", "profile", "check",
         "convergence")

# declared data/figure outputs per task; report.json is always written
TASK_OUTPUTS = {
    "solve": ("u.csv",),
    "power": ("u.csv",),
    "eigen": ("u.csv", "history.csv", "history.svg"),
    "barrier-check": ("samples.csv",),
    "profile": ("profile.csv", "profile.svg"),
    "check": ("check.json",),
    "convergence": ("convergence.csv", "convergence.svg"),
}

_NUMBER = {"type": ["number", "string"]}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "task": {"enum": list(TASKS)},
        "domain": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["polygon", "disc"]},
                "vertices": {
                    "type": "array", "minItems": 3,
                    "items": {"type": "array", "minItems": 2, "maxItems": 2,
                              "items": {"type": "number"}},
                },
                "center": {"type": "array", "minItems": 2, "maxItems": 2,
                           "items": {"type": "number"}},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "allow_collinear": {"type": "boolean"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "h": _NUMBER,
        "h_list": {"type": "array", "minItems": 2, "items": _NUMBER},
        "rhs": {"type": ["number", "string"]},
        "p": {"type": "number"},
        "M": {"type": "number", "exclusiveMinimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_outer": {"type": "integer", "minimum": 1},
        "ceiling_factor": {"type": "number", "exclusiveMinimum": 1},
        "method": {"enum": ["gauss_seidel", "damped_newton"]},
        "stencil_width": {"enum": [1, 2]},
        "u0": {"type": "string"},
        "variant": {"type": "string"},
        "params": {"type": "object"},
        "mode": {"enum": ["subsolution", "supersolution"]},
        "c": {"type": "number"},
        "region": {"type": "array", "minItems": 1,
                   "items": {"type": "array", "minItems": 2, "maxItems": 2,
                             "items": {"type": "number"}}},
        "samples": {"type": "integer", "minimum": 1},
        "u": {"type": "string"},
        "bound": {"enum": list(analysis.BOUND_KINDS)},
        "edge": {"type": "integer", "minimum": 0},
        "angle": {"type": "number"},
        "point": {"type": "array", "minItems": 2, "maxItems": 2,
                  "items": {"type": "number"}},
        "n_samples": {"type": "integer", "minimum": 2},
        "d_max": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
    },
    "required": ["task"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Schema, grammar, or geometry error in the experiment config."""


# ---------------------------------------------------------------------------
# config plumbing


def _num(value, label):
    """Float from a JSON number or a fraction string like '1/32'."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        parts = value.split("/")
        try:
            if len(parts) == 1:
                return float(parts[0])
            if len(parts) == 2:
                return float(parts[0]) / float(parts[1])
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(f"{label}: expected a number or fraction, got {value!r}")


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None


def _validate_schema(cfg):
    if jsonschema is None:  # pragma: no cover
        raise ConfigError("jsonschema is required to validate configs")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(k) for k in exc.absolute_path) or "config"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None


def _require(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(
            f"task {cfg['task']!r} needs config field(s): {', '.join(missing)}")


def _domain(cfg):
    _require(cfg, "domain")
    try:
        return domain_from_dict(cfg["domain"])
    except (DomainError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"domain: {exc}") from None


def _rhs(cfg, domain):
    """Right-hand side from the grammar: number | const:c | distpow:p | file.csv."""
    _require(cfg, "rhs")
    spec = cfg["rhs"]
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec), f"const:{float(spec):g}"
    if not isinstance(spec, str):
        raise ConfigError(f"rhs: unsupported value {spec!r}")
    if spec.startswith("const:"):
        return _num(spec[6:], "rhs const"), spec
    if spec.startswith("distpow:"):
        q = _num(spec[8:], "rhs distpow")
        if q < 0:
            raise ConfigError("rhs distpow exponent must be nonnegative")

        def f(x, y):
            return domain.dist_boundary_many(np.column_stack([x, y])) ** q

        return f, spec
    if spec.endswith(".csv"):
        try:
            vals = np.loadtxt(spec, delimiter=",", ndmin=1)
        except OSError as exc:
            raise ConfigError(f"rhs file {spec}: {exc}") from None
        if vals.ndim != 1:
            raise ConfigError(f"rhs file {spec}: expected one value per line")
        if (vals < 0).any():
            raise ConfigError(f"rhs file {spec}: values must be nonnegative")
        return vals, spec
    raise ConfigError(
        f"rhs {spec!r}: expected a number, 'const:<c>', 'distpow:<p>', "
        "or a .csv path")


def _solve_options(cfg):
    try:
        return SolveOptions(
            tol=float(cfg.get("tol", SolveOptions.tol)),
            method=cfg.get("method", "gauss_seidel"),
            stencil_width=int(cfg.get("stencil_width", 1)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _eigen_options(cfg, keep_states=False):
    _require(cfg, "h")
    try:
        return EigenOptions(
            h=_num(cfg["h"], "h"),
            stencil_width=int(cfg.get("stencil_width", 1)),
            tol=float(cfg.get("tol", 1e-6)),
            max_outer=int(cfg.get("max_outer", 200)),
            ceiling_factor=float(cfg.get("ceiling_factor", 10.0)),
            keep_states=keep_states,
            solver=SolveOptions(method=cfg.get("method", "damped_newton")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _domain_center(dom):
    if isinstance(dom, Disc):
        return np.asarray(dom.center, dtype=float)
    v = np.asarray(dom.vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    return np.array([((x + xn) * cross).sum() / (6 * area),
                     ((y + yn) * cross).sum() / (6 * area)])


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(v):
    """Shortest round-trip decimal for CSV cells."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _atomic_write(path: Path, data) -> None:
    if isinstance(data, str):
        data = data.encode()
    tmp = path.parent / f".tmp-{os.getpid()}-{path.name}"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _write_csv(path: Path, header, columns) -> None:
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    if cols:
        for row in zip(*cols):
            lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _render_svg(kind, csv_path: Path, svg_path: Path) -> None:
    # rendering always reads back the CSV just written, so the figure and
    # the delimited data cannot drift apart
    tmp = svg_path.parent / f".tmp-{os.getpid()}-{svg_path.name}"
    plots.render_csv(kind, csv_path, tmp)
    os.replace(tmp, svg_path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def _provenance(cfg):
    canonical = json.dumps(_jsonable(cfg), sort_keys=True,
                           separators=(",", ":")).encode()
    versions = {"ma_eigen": __version__}
    for name in ("numpy", "scipy", "matplotlib"):
        try:
            versions[name] = __import__(name).__version__
        except ImportError:  # pragma: no cover
            versions[name] = None
    return {"config_sha256": hashlib.sha256(canonical).hexdigest(),
            "versions": versions}


@contextlib.contextmanager
def _dir_lock(out_dir: Path):
    """One run at a time per output directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"output directory {out_dir} is locked by another run "
            f"({lock} exists; remove it if that run is gone)") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(OSError):
            os.unlink(lock)


@contextlib.contextmanager
def _thread_limit(n):
    if n is None:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n):
        yield


def _resolve_threads(flag, cfg):
    if flag is not None:
        return int(flag)
    if "threads" in cfg:
        return int(cfg["threads"])
    env = os.environ.get("MA_EIGEN_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(
                f"MA_EIGEN_THREADS={env!r} is not an integer") from None
    return None


def _out_layout(task, out_spec):
    """(out_dir, {default_name: path}) from a directory or filename list."""
    names = TASK_OUTPUTS[task]
    raw = out_spec or "."
    if "," in raw or raw.endswith((".csv", ".json", ".svg")):
        paths = [Path(p) for p in raw.split(",") if p]
        if len(paths) != len(names):
            raise ConfigError(
                f"task {task!r} writes {len(names)} file(s) "
                f"({', '.join(names)}); --out names {len(paths)}")
        for name, path in zip(names, paths):
            if path.suffix != Path(name).suffix:
                raise ConfigError(
                    f"--out entry {path} should carry the {Path(name).suffix} "
                    f"suffix (expected order: {', '.join(names)})")
        out_dir = paths[0].parent
        return out_dir, dict(zip(names, paths))
    out_dir = Path(raw)
    return out_dir, {n: out_dir / n for n in names}


# ---------------------------------------------------------------------------
# task runners; each returns the report dict and writes its data files


def _solve_common(cfg, files, task):
    domain = _domain(cfg)
    _require(cfg, "h")
    h = _num(cfg["h"], "h")
    opts = _solve_options(cfg)
    if task == "power":
        _require(cfg, "p")
        p, M = float(cfg["p"]), float(cfg.get("M", 1.0))
        try:
            eopts = EigenOptions(h=h, stencil_width=opts.stencil_width,
                                 tol=float(cfg.get("tol", 1e-6)),
                                 max_outer=int(cfg.get("max_outer", 200)),
                                 solver=SolveOptions(
                                     method=cfg.get("method", "damped_newton")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        u, rep = solve_power(domain, p, M, eopts)
        extra = {"p": p, "M": M}
        rhs_desc = f"M|u|^p, p={p:g}, M={M:g}"
    else:
        f, rhs_desc = _rhs(cfg, domain)
        try:
            grid = build_grid(domain, h, opts.stencil_width)
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        u, rep = solve_dirichlet(grid, f, opts)
        extra = {}
    _write_csv(files["u.csv"], ("x", "y", "value"),
               (u.grid.xy[:, 0], u.grid.xy[:, 1], u.values))
    return u, {
        "h": h, "rhs": rhs_desc, "method": rep.method,
        "n_nodes": u.grid.n_nodes, "residual": rep.residual,
        "sweeps": rep.sweeps, "converged": rep.converged,
        "monotone": rep.monotone, "sup_norm": u.sup_norm(), **extra,
    }


def _task_solve(cfg, files, seed):
    _, report = _solve_common(cfg, files, "solve")
    return report


def _task_power(cfg, files, seed):
    _, report = _solve_common(cfg, files, "power")
    return report


def _task_eigen(cfg, files, seed):
    domain = _domain(cfg)
    opts = _eigen_options(cfg)
    u0 = cfg.get("u0", "quadratic")
    rep = inverse_iteration(domain, u0, opts)
    u = rep.eigenfunction
    _write_csv(files["u.csv"], ("x", "y", "value"),
               (u.grid.xy[:, 0], u.grid.xy[:, 1], u.values))
    _write_csv(files["history.csv"], plots.HISTORY_HEADER,
               (np.arange(len(rep.history)), np.asarray(rep.history)))
    _render_svg("history", files["history.csv"], files["history.svg"])
    return {
        "h": opts.h, "u0": u0, "eigenvalue": rep.eigenvalue,
        "iterations": rep.iterations, "converged": rep.converged,
        "history": list(rep.history), "n_nodes": rep.n_nodes,
        "ceiling_factor": opts.ceiling_factor,
    }


def _task_barrier_check(cfg, files, seed):
    _require(cfg, "variant", "mode")
    try:
        spec = barrier_from_params(cfg["variant"], dict(cfg.get("params", {})))
    except KeyError as exc:
        raise ConfigError(f"barrier variant is missing parameter {exc}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"barrier variant: {exc}") from None
    samples = int(cfg.get("samples", 10_000))
    region = cfg.get("region")
    if cfg["mode"] == "subsolution":
        _require(cfg, "p", "c", "region")
        rep = verify_subsolution(spec, region, float(cfg["p"]),
                                 float(cfg["c"]), samples=samples, seed=seed)
    else:
        rep = supersolution_det_bound(spec, region, samples=samples, seed=seed)
    table = rep.table
    header = ["sample_index"]
    columns = []
    if table:
        x = np.asarray(table["x"])
        header += [f"x{i + 1}" for i in range(x.shape[1])]
        header += ["value", "det_closed", "det_fd", "margin", "min_minor"]
        columns = [table["sample_index"], *[x[:, i] for i in range(x.shape[1])],
                   table["value"], table["det_closed"], table["det_fd"],
                   table["margin_sub"], table["min_minor"]]
    _write_csv(files["samples.csv"], header, columns)
    return {
        "variant": rep.variant, "mode": rep.mode, "params": rep.params,
        "p": rep.p, "c": rep.c, "region": rep.region, "samples": samples,
        "count": rep.count, "verdict": rep.verdict,
        "conditions": rep.conditions, "min_margin": rep.min_margin,
        "min_minor": rep.min_minor, "max_fd_rel": rep.max_fd_rel,
        "fd_checked": rep.fd_checked,
    }


def _load_solution(cfg):
    """Rebuild the GridFunction behind a u.csv solution table."""
    domain = _domain(cfg)
    _require(cfg, "u", "h")
    h = _num(cfg["h"], "h")
    try:
        data = np.loadtxt(cfg["u"], delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"solution file {cfg['u']}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(
            f"solution file {cfg['u']} is not a numeric x,y,value CSV: "
            f"{exc}") from None
    if data.shape[1] != 3:
        raise ConfigError(
            f"solution file {cfg['u']}: expected columns x,y,value")
    try:
        grid = build_grid(domain, h, int(cfg.get("stencil_width", 1)))
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if len(data) != grid.n_nodes:
        raise ConfigError(
            f"solution file {cfg['u']} holds {len(data)} nodes but the "
            f"h={h:g} grid has {grid.n_nodes}; pass the h it was solved with")
    if np.abs(data[:, :2] - grid.xy).max() > 1e-9 * max(1.0, h):
        raise ConfigError(
            f"solution file {cfg['u']} node coordinates do not match the "
            f"h={h:g} grid on this domain")
    return domain, grid.function(data[:, 2])


def _task_profile(cfg, files, seed):
    domain, u = _load_solution(cfg)
    given = [k for k in ("edge", "angle", "point") if k in cfg]
    if len(given) != 1:
        raise ConfigError(
            "profile needs exactly one target: edge (polygon), "
            "angle (disc), or point")
    if "edge" in cfg:
        if isinstance(domain, Disc):
            raise ConfigError("edge targets need a polygon domain; "
                              "use angle for discs")
        verts = domain.vertices
        i = int(cfg["edge"])
        if i >= len(verts):
            raise ConfigError(
                f"edge {i} out of range for a {len(verts)}-gon")
        point = (verts[i] + verts[(i + 1) % len(verts)]) / 2.0
    elif "angle" in cfg:
        if not isinstance(domain, Disc):
            raise ConfigError("angle targets need a disc domain; "
                              "use edge for polygons")
        point = domain.boundary_point(math.radians(float(cfg["angle"])))
    else:
        point = np.asarray(cfg["point"], dtype=float)
    prof = analysis.profile_normal(
        u, point, n_samples=int(cfg.get("n_samples", 16)),
        d_max=(float(cfg["d_max"]) if "d_max" in cfg else None))
    model = prof.C * prof.d * np.abs(np.log(prof.d)) ** prof.beta
    _write_csv(files["profile.csv"], plots.PROFILE_HEADER,
               (prof.d, prof.abs_u, model))
    _render_svg("profile", files["profile.csv"], files["profile.svg"])
    return {
        "h": prof.h, "point": list(prof.point), "normal": list(prof.normal),
        "n_samples": prof.n_samples, "C": prof.C, "beta": prof.beta,
        "residual": prof.residual,
    }


def _task_check(cfg, files, seed):
    _require(cfg, "bound")
    domain, u = _load_solution(cfg)
    kind = cfg["bound"]
    p = float(cfg["p"]) if "p" in cfg else None
    M = float(cfg.get("M", 1.0))
    violations = analysis.pointwise_bound_check(u, kind, p=p, M=M)
    result = {
        "bound": kind, "p": p, "M": M, "violations": violations,
        "n_nodes": u.grid.n_nodes, "sup_norm": u.sup_norm(),
        "h": u.grid.h,
    }
    _write_json(files["check.json"], result)
    return dict(result)


def _task_convergence(cfg, files, seed):
    domain = _domain(cfg)
    _require(cfg, "h_list", "rhs")
    hs = [_num(v, "h_list entry") for v in cfg["h_list"]]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("h_list must be strictly decreasing")
    f, rhs_desc = _rhs(cfg, domain)
    opts = _solve_options(cfg)
    center = _domain_center(domain)
    centers = []
    prev = None
    for h in hs:
        try:
            grid = build_grid(domain, h, opts.stencil_width)
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        init = None if prev is None else prev(grid.xy)
        u, _ = solve_dirichlet(grid, f, opts, initial=init)
        centers.append(float(u(center)))
        prev = u
    diffs = np.abs(np.diff(centers))
    ratios = np.full(len(hs), np.nan)
    for i in range(2, len(hs)):
        ratios[i] = diffs[i - 2] / diffs[i - 1] if diffs[i - 1] > 0 else np.inf
    _write_csv(files["convergence.csv"], plots.CONVERGENCE_HEADER,
               (np.asarray(hs), np.asarray(centers), ratios))
    _render_svg("convergence", files["convergence.csv"],
                files["convergence.svg"])
    return {
        "h_list": hs, "rhs": rhs_desc, "method": opts.method,
        "center": list(center), "centers": centers,
        "cauchy_ratios": [None if math.isnan(r) else float(r) for r in ratios],
    }


_RUNNERS = {
    "solve": _task_solve,
    "power": _task_power,
    "eigen": _task_eigen,
    "barrier-check": _task_barrier_check,
    "profile": _task_profile,
    "check": _task_check,
    "convergence": _task_convergence,
}


# ---------------------------------------------------------------------------
# entry point


def _merge_flags(cfg, args):
    """Fold flag-style parameters over the config dict."""
    for key in ("domain", "u", "bound", "edge", "angle", "point", "h", "p",
                "M", "d_max", "n_samples"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is None:
            continue
        if key == "domain" and isinstance(val, str):
            try:
                val = json.loads(val)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--domain is not valid JSON: {exc}") from None
        if key == "point" and isinstance(val, str):
            parts = val.split(",")
            if len(parts) != 2:
                raise ConfigError("--point expects 'x,y'")
            val = [_num(parts[0], "point x"), _num(parts[1], "point y")]
        cfg[key] = val
    return cfg


def _emit_error(exc, code, out_dir, task):
    payload = {"error": type(exc).__name__, "message": str(exc),
               "task": task, "exit_code": code}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    if out_dir is not None:
        with contextlib.suppress(OSError):
            _write_json(Path(out_dir) / "error.json", payload)
    return code


def _run_task(task, cfg, args):
    cfg = dict(cfg)
    cfg["task"] = task
    cfg = _merge_flags(cfg, args)
    _validate_schema(cfg)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    threads = _resolve_threads(args.threads, cfg)
    out_spec = args.out or cfg.get("out")
    out_dir, files = _out_layout(task, out_spec)
    with _dir_lock(out_dir):
        try:
            with _thread_limit(threads):
                body = _RUNNERS[task](cfg, files, seed)
        except ConfigError:
            raise
        except Exception as exc:
            _emit_error(exc, 1, out_dir, task)
            return 1
        report = {
            "task": task, "seed": seed, "threads": threads,
            "domain": cfg.get("domain"),
            "outputs": [files[n].name for n in TASK_OUTPUTS[task]],
            "provenance": _provenance(cfg),
            **body,
        }
        _write_json(out_dir / "report.json", report)
    return 0


def _run_accept(args):
    from . import acceptance

    criteria = None
    if args.criteria:
        try:
            criteria = sorted({int(v) for v in args.criteria.split(",")})
        except ValueError:
            raise ConfigError(
                f"--criteria expects comma-separated integers, "
                f"got {args.criteria!r}") from None
        bad = [k for k in criteria if not 1 <= k <= 9]
        if bad:
            raise ConfigError(f"criteria out of range 1..9: {bad}")
    threads = _resolve_threads(args.threads, {})
    out_dir = Path(args.out or ".")
    with _dir_lock(out_dir):
        with _thread_limit(threads):
            results = acceptance.run_criteria(criteria)
        all_pass = all(r.passed for r in results)
        report = {
            "task": "accept", "threads": threads,
            "provenance": _provenance({"task": "accept",
                                       "criteria": criteria or list(range(1, 10))}),
            "all_pass": all_pass,
            "criteria": [{
                "number": r.number, "title": r.title, "passed": r.passed,
                "detail": r.detail, "data": r.data,
            } for r in results],
        }
        _write_json(out_dir / "acceptance_report.json", report)
    for r in results:
        print(f"criterion {r.number}: {'PASS' if r.passed else 'FAIL'} - "
              f"{r.title}: {r.detail}")
    return 0 if all_pass else 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ma-eigen",
        description="Numerical laboratory for the degenerate Monge-Ampere "
                    "equation and its eigenvalue problem on convex 2D domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory, or comma-separated "
                        "output file names for profile/check")
    common.add_argument("--threads", type=int,
                        help="BLAS thread cap (MA_EIGEN_THREADS as fallback)")
    common.add_argument("--seed", type=int, help="sampling seed override")

    for task in TASKS:
        sp = sub.add_parser(task, parents=[common],
                            help=f"run a {task} experiment")
        sp.add_argument("config", nargs="?",
                        help="JSON experiment config (optional when flags "
                             "supply every parameter)")
        if task in ("profile", "check"):
            sp.add_argument("--domain", help="inline domain JSON")
            sp.add_argument("--u", help="solution CSV (x,y,value)")
            sp.add_argument("--h", help="grid spacing the solution was "
                            "computed with (number or fraction)")
        if task == "profile":
            sp.add_argument("--edge", type=int, help="polygon edge index; "
                            "profiles from the edge midpoint")
            sp.add_argument("--angle", type=float,
                            help="disc boundary angle in degrees")
            sp.add_argument("--point", help="explicit boundary point 'x,y'")
            sp.add_argument("--d-max", dest="d_max", type=float,
                            help="largest sample distance")
            sp.add_argument("--n-samples", dest="n_samples", type=int,
                            help="number of profile samples")
        if task == "check":
            sp.add_argument("--bound", choices=list(analysis.BOUND_KINDS),
                            help="bound kind to check")
            sp.add_argument("--p", type=float,
                            help="data growth exponent the solve used")
            sp.add_argument("--M", type=float,
                            help="data magnitude the solve used")

    sp = sub.add_parser("accept", parents=[common],
                        help="run the acceptance suite")
    sp.add_argument("--criteria",
                    help="comma-separated criterion numbers (default: all)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    task = args.command
    try:
        if task == "accept":
            return _run_accept(args)
        cfg = _load_config(args.config) if args.config else {}
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        if "task" in cfg and cfg["task"] != task:
            raise ConfigError(
                f"config task {cfg['task']!r} does not match the "
                f"{task!r} subcommand")
        return _run_task(task, cfg, args)
    except ConfigError as exc:
        return _emit_error(exc, 2, None, task)
    except RuntimeError as exc:
        return _emit_error(exc, 1, None, task)


if __name__ == "__main__":
    sys.exit(main())
