"""Benchmark harness: build problems, run solvers, persist traces, plot them.

Command line::

    proxflow gen shepp_logan size=64 --out data/ --seed 3
    proxflow run --config experiment.json [--seed S] [--out DIR] [--parallel]
    proxflow plot trace1.csv trace2.csv --out fig.svg

An experiment config is JSON::

    {
      "schema_version": 1,
      "seed": 0,
      "lam": 1.0,
      "problem": {"generator": "gaussian",
                  "params": {"n": 600, "p": 2000, "sparsity": 0.1, "noise_variance": 1e-10}},
      "penalty": {"kind": "l1"},
      "budget": {"max_iter": 500, "max_seconds": null, "stop_tol": 1e-10, "window": 10},
      "solvers": [{"name": "ista"}, {"name": "amp"},
                  {"name": "prs", "rho_grid": [0.1, 1, 10], "options": {"gamma": 0.95}}],
      "output_dir": "out"
    }

``problem`` may instead be ``{"files": {"A": "A.bin", "y": "y.bin"}}`` with
matrices in the flat binary format of :mod:`proxflow.formats`; relative
paths resolve against the config file's directory. Each solver entry expands
to one run per ``rho_grid`` value and writes ``<output_dir>/<label>.csv``.

Exit status is 2 for any configuration problem and 0 otherwise; a diverging
solver is recorded in its trace metadata, not treated as an error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from threadpoolctl import threadpool_limits

from . import datagen
from .formats import FormatError, read_matrix, read_trace_csv, write_matrix, write_matrix_csv, write_trace_csv
from .operators import GridShape
from .problem import L1Penalty, Problem, TVPenalty
from .solvers import ALGORITHMS, Budget, ConfigurationError, run

__all__ = [
    "CONFIG_SCHEMA_VERSION",
    "GENERATORS",
    "ConfigError",
    "ExperimentConfig",
    "SolverSpec",
    "parse_config",
    "load_config",
    "build_problem",
    "expand_runs",
    "run_experiment",
    "generate",
    "render_svg",
    "main",
]

CONFIG_SCHEMA_VERSION = 1
THREADS_ENV = "PROXFLOW_THREADS"

# generator name -> (required params, optional params with defaults)
GENERATORS = {
    "gaussian": (("n", "p"), {"sparsity": 0.1, "noise_variance": 1e-10}),
    "product": (("n", "p"), {"sparsity": 0.1, "noise_variance": 1e-10, "rank": None}),
    "shepp_logan": (("size",), {"n_angles": 10, "noise_fraction": 0.01}),
}
_INT_PARAMS = {"n", "p", "rank", "size", "n_angles"}

_BUDGET_KEYS = {"max_iter", "max_seconds", "stop_tol", "window"}


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _normalize_generator(name):
    key = str(name).replace("-", "_").lower()
    if key not in GENERATORS:
        raise ConfigError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    return key


def _generator_params(name, params):
    required, optional = GENERATORS[name]
    if not isinstance(params, dict):
        raise ConfigError("generator params must be an object")
    unknown = set(params) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown {name} parameters: {sorted(unknown)}")
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigError(f"{name} needs parameters {missing}")
    out = {}
    for k in (*required, *optional):
        v = params.get(k, optional.get(k))
        if v is None:
            out[k] = None
            continue
        if k in _INT_PARAMS:
            if isinstance(v, bool) or not float(v).is_integer() or int(v) < 1:
                raise ConfigError(f"{name}.{k} must be a positive integer, got {v!r}")
            v = int(v)
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name}.{k} must be a nonnegative number, got {v!r}")
            v = float(v)
        out[k] = v
    if "sparsity" in out and out["sparsity"] > 1.0:
        raise ConfigError(f"{name}.sparsity must lie in [0, 1]")
    if name == "shepp_logan" and out["size"] < 16:
        raise ConfigError("shepp_logan.size must be >= 16")
    return out


def _parse_budget(raw, base: Budget | None = None) -> Budget:
    base = base or Budget()
    if raw is None:
        return base
    if not isinstance(raw, dict):
        raise ConfigError("budget must be an object")
    unknown = set(raw) - _BUDGET_KEYS
    if unknown:
        raise ConfigError(f"unknown budget keys {sorted(unknown)}")
    max_iter = raw.get("max_iter", base.max_iter)
    max_seconds = raw.get("max_seconds", base.max_seconds)
    stop_tol = raw.get("stop_tol", base.stop_tol)
    window = raw.get("window", base.window)
    if isinstance(max_iter, bool) or not isinstance(max_iter, int) or max_iter < 1:
        raise ConfigError(f"budget.max_iter must be a positive integer, got {max_iter!r}")
    if isinstance(window, bool) or not isinstance(window, int) or window < 1:
        raise ConfigError(f"budget.window must be a positive integer, got {window!r}")
    if max_seconds is not None and not (isinstance(max_seconds, (int, float)) and max_seconds > 0):
        raise ConfigError(f"budget.max_seconds must be positive or null, got {max_seconds!r}")
    if stop_tol is not None and not (isinstance(stop_tol, (int, float)) and stop_tol >= 0):
        raise ConfigError(f"budget.stop_tol must be nonnegative or null, got {stop_tol!r}")
    return Budget(max_iter=max_iter, max_seconds=None if max_seconds is None else float(max_seconds),
                  stop_tol=None if stop_tol is None else float(stop_tol), window=window)


def _budget_dict(b: Budget):
    return {"max_iter": b.max_iter, "max_seconds": b.max_seconds, "stop_tol": b.stop_tol, "window": b.window}


@dataclass
class SolverSpec:
    name: str
    label: str
    options: dict = field(default_factory=dict)
    rho_grid: list | None = None
    budget: dict | None = None

    def to_dict(self):
        d = {"name": self.name, "label": self.label, "options": dict(self.options)}
        if self.rho_grid is not None:
            d["rho_grid"] = list(self.rho_grid)
        if self.budget is not None:
            d["budget"] = dict(self.budget)
        return d


@dataclass
class ExperimentConfig:
    seed: int
    lam: float
    problem: dict
    penalty: dict
    solvers: list[SolverSpec]
    budget: Budget = field(default_factory=Budget)
    output_dir: str = "."
    schema_version: int = CONFIG_SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "lam": self.lam,
            "problem": json.loads(json.dumps(self.problem)),
            "penalty": dict(self.penalty),
            "budget": _budget_dict(self.budget),
            "solvers": [s.to_dict() for s in self.solvers],
            "output_dir": self.output_dir,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_problem(raw):
    if not isinstance(raw, dict):
        raise ConfigError("'problem' must be an object")
    if ("generator" in raw) == ("files" in raw):
        raise ConfigError("'problem' needs exactly one of 'generator' or 'files'")
    if "generator" in raw:
        extra = set(raw) - {"generator", "params"}
        if extra:
            raise ConfigError(f"unknown problem keys {sorted(extra)}")
        name = _normalize_generator(raw["generator"])
        return {"generator": name, "params": _generator_params(name, raw.get("params", {}))}
    files = raw["files"]
    if not isinstance(files, dict) or not {"A", "y"} <= set(files):
        raise ConfigError("'problem.files' needs 'A' and 'y' paths")
    unknown = set(files) - {"A", "y", "x_true"}
    if unknown or set(raw) - {"files"}:
        raise ConfigError(f"unknown problem file keys {sorted(unknown)}")
    return {"files": {k: str(v) for k, v in files.items()}}


def _parse_penalty(raw, problem):
    if raw is None:
        # tomography images default to TV on their own lattice
        if problem.get("generator") == "shepp_logan":
            L = problem["params"]["size"]
            return {"kind": "tv", "grid": [L, L]}
        return {"kind": "l1"}
    if not isinstance(raw, dict) or raw.get("kind") not in ("l1", "tv"):
        raise ConfigError("'penalty' must be {'kind': 'l1'} or {'kind': 'tv', 'grid': [...]}")
    if raw["kind"] == "l1":
        if set(raw) - {"kind"}:
            raise ConfigError("l1 penalty takes no parameters")
        return {"kind": "l1"}
    grid = raw.get("grid")
    try:
        GridShape(tuple(grid))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad TV grid {grid!r}: {exc}") from None
    return {"kind": "tv", "grid": [int(g) for g in grid]}


def _parse_solvers(raw, default_budget):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("'solvers' must be a non-empty list")
    specs, labels = [], set()
    for i, entry in enumerate(raw):
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"solver #{i} needs a 'name'")
        unknown = set(entry) - {"name", "label", "options", "rho_grid", "budget"}
        if unknown:
            raise ConfigError(f"solver #{i}: unknown keys {sorted(unknown)}")
        name = str(entry["name"]).lower()
        if name not in ALGORITHMS:
            raise ConfigError(f"solver #{i}: unknown algorithm {name!r}; choose from {list(ALGORITHMS)}")
        options = entry.get("options", {})
        if not isinstance(options, dict):
            raise ConfigError(f"solver #{i}: 'options' must be an object")
        grid = entry.get("rho_grid")
        if grid is not None:
            if (not isinstance(grid, list) or not grid
                    or not all(isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0 for r in grid)):
                raise ConfigError(f"solver #{i}: 'rho_grid' must be a non-empty list of positive numbers")
            grid = [float(r) for r in grid]
        if name in ("admm", "prs") and grid is None and "rho" not in options:
            raise ConfigError(f"solver #{i}: {name} needs options.rho or a rho_grid")
        budget = entry.get("budget")
        if budget is not None:
            budget = _budget_dict(_parse_budget(budget, default_budget))
        label = str(entry.get("label", name))
        if label in labels:
            raise ConfigError(f"duplicate solver label {label!r}")
        labels.add(label)
        specs.append(SolverSpec(name=name, label=label, options=dict(options), rho_grid=grid, budget=budget))
    return specs


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a decoded JSON config and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    version = raw.get("schema_version")
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {CONFIG_SCHEMA_VERSION})")
    unknown = set(raw) - {"schema_version", "seed", "lam", "problem", "penalty", "budget", "solvers", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    lam = raw.get("lam", 1.0)
    if isinstance(lam, bool) or not isinstance(lam, (int, float)) or not lam >= 0 or not math.isfinite(lam):
        raise ConfigError(f"lam must be a nonnegative number, got {lam!r}")
    if "problem" not in raw:
        raise ConfigError("missing 'problem'")
    problem = _parse_problem(raw["problem"])
    penalty = _parse_penalty(raw.get("penalty"), problem)
    budget = _parse_budget(raw.get("budget"))
    solvers = _parse_solvers(raw.get("solvers"), budget)
    if penalty["kind"] == "tv":
        bad = [s.name for s in solvers if s.name in ("ista", "amp")]
        if bad:
            raise ConfigError(f"solvers {bad} do not support the TV penalty")
    return ExperimentConfig(seed=seed, lam=float(lam), problem=problem, penalty=penalty, solvers=solvers,
                            budget=budget, output_dir=str(raw.get("output_dir", ".")))


def load_config(path) -> tuple[ExperimentConfig, Path]:
    """Read and validate a config file; returns it with the directory paths resolve against."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(raw), path.resolve().parent


# -- problems -------------------------------------------------------------------

def generate(name: str, params: dict, seed: int) -> dict:
    """Run a generator; returns arrays ``A``, ``x_true``, ``y`` and a metadata dict."""
    name = _normalize_generator(name)
    prm = _generator_params(name, params)
    if name == "shepp_logan":
        inst = datagen.tomography_instance(prm["size"], prm["n_angles"], prm["noise_fraction"], seed)
        meta = {"noise_variance": inst.noise_variance, "angles": inst.angles.tolist()}
        return {"A": inst.radon, "x_true": inst.phantom, "y": inst.y, "meta": meta}
    inst = datagen.synthetic_instance(prm["n"], prm["p"], prm["sparsity"], prm["noise_variance"], seed,
                                      matrix=name, rank=prm.get("rank"))
    return {"A": inst.A, "x_true": inst.x_true, "y": inst.y, "meta": {"noise_variance": inst.noise_variance}}


def build_problem(cfg: ExperimentConfig, base_dir=".") -> Problem:
    if "generator" in cfg.problem:
        data = generate(cfg.problem["generator"], cfg.problem["params"], cfg.seed)
        A, y = data["A"], data["y"]
    else:
        files = cfg.problem["files"]
        try:
            A = read_matrix(Path(base_dir) / files["A"])
            y = read_matrix(Path(base_dir) / files["y"]).ravel()
        except FileNotFoundError as exc:
            raise ConfigError(f"missing data file: {exc.filename}") from None
        except FormatError as exc:
            raise ConfigError(str(exc)) from None
    if cfg.penalty["kind"] == "tv":
        penalty = TVPenalty(GridShape(tuple(cfg.penalty["grid"])))
    else:
        penalty = L1Penalty()
    try:
        return Problem(y=y, A=A, lam=cfg.lam, penalty=penalty)
    except ValueError as exc:
        raise ConfigError(f"inconsistent problem: {exc}") from None


@dataclass
class RunSpec:
    label: str
    algorithm: str
    options: dict
    budget: Budget


def expand_runs(cfg: ExperimentConfig) -> list[RunSpec]:
    """One run per solver entry and ``rho_grid`` value."""
    runs = []
    for s in cfg.solvers:
        budget = _parse_budget(s.budget, cfg.budget)
        if s.rho_grid is None:
            runs.append(RunSpec(s.label, s.name, dict(s.options), budget))
            continue
        key = "rho0" if s.name == "vamp" else "rho"
        for rho in s.rho_grid:
            runs.append(RunSpec(f"{s.label}_rho{rho:g}", s.name, {**s.options, key: rho}, budget))
    return runs


def _thread_cap():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _execute(problem: Problem, spec: RunSpec, threads: int):
    with threadpool_limits(limits=threads):
        return run(problem, spec.algorithm, spec.options, spec.budget)


def run_experiment(cfg: ExperimentConfig, base_dir=".", *, parallel=False, out_dir=None) -> list[Path]:
    """Run every configured solver and write one CSV per run plus ``summary.json``."""
    threads = _thread_cap()
    problem = build_problem(cfg, base_dir)
    runs = expand_runs(cfg)
    out = Path(out_dir) if out_dir is not None else Path(base_dir) / cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        if parallel and len(runs) > 1:
            with ProcessPoolExecutor() as pool:
                futures = [pool.submit(_execute, problem, spec, threads) for spec in runs]
                traces = [f.result() for f in futures]
        else:
            traces = [_execute(problem, spec, threads) for spec in runs]
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None

    digest = cfg.digest()
    paths, summary = [], []
    for spec, trace in zip(runs, traces):
        path = out / f"{spec.label}.csv"
        write_trace_csv(path, trace, {"label": spec.label, "config_hash": digest, "seed": cfg.seed})
        paths.append(path)
        summary.append({"label": spec.label, "solver": spec.algorithm, "trace": path.name,
                        "final_objective": _json_float(trace.final_objective),
                        "iterations": trace.meta["iterations"], "diverged": trace.diverged,
                        "preprocessing_seconds": trace.meta["preprocessing_seconds"]})
    (out / "summary.json").write_text(json.dumps({"config_hash": digest, "config": cfg.to_dict(),
                                                  "runs": summary}, indent=2) + "\n")
    return paths


def _json_float(v):
    return v if math.isfinite(v) else None


# -- plotting -------------------------------------------------------------------

_W, _H = 800, 500
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 170, 50, 60
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def render_svg(traces, labels=None) -> str:
    """Objective gap ``f - f_min`` (log10) against wall-clock seconds.

    ``f_min`` is the smallest finite objective over all traces; gaps at or
    below ``1e-16 * max(1, |f_min|)`` are drawn at that floor.
    """
    if not traces:
        raise ValueError("need at least one trace")
    labels = labels or [t.meta.get("label", t.meta.get("solver", f"trace {i}")) for i, t in enumerate(traces)]
    series = []
    for t in traces:
        secs, objs = t.column("seconds"), t.column("objective")
        ok = np.isfinite(secs) & np.isfinite(objs)
        series.append((secs[ok], objs[ok]))
    finite = [o for _, o in series if o.size]
    baseline = min(float(o.min()) for o in finite) if finite else 0.0
    floor = 1e-16 * max(1.0, abs(baseline))
    gaps = [(s, np.log10(np.maximum(o - baseline, floor))) for s, o in series]

    xs = np.concatenate([s for s, _ in gaps]) if finite else np.zeros(1)
    ys = np.concatenate([g for _, g in gaps]) if finite else np.zeros(1)
    xlo, xhi = 0.0, max(float(xs.max()), 1e-9)
    ylo, yhi = math.floor(float(ys.min())), math.ceil(float(ys.max()))
    if yhi <= ylo:
        yhi = ylo + 1
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        return _LEFT + pw * (x - xlo) / (xhi - xlo)

    def py(y):
        return _TOP + ph * (1.0 - (y - ylo) / (yhi - ylo))

    title = f"objective gap f - f_min, f_min = {baseline:.12g} (minimum over all traces)"
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" width="{_W}" height="{_H}" '
        'font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="25" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    ystep = max(1, math.ceil((yhi - ylo) / 10))
    for e in range(ylo, yhi + 1, ystep):
        y = py(e)
        parts.append(f'<line x1="{_LEFT}" y1="{y:.2f}" x2="{_LEFT + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        parts.append(f'<text x="{_LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    for xt in _nice_ticks(xlo, xhi):
        x = px(xt)
        parts.append(f'<line x1="{x:.2f}" y1="{_TOP + ph}" x2="{x:.2f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{_TOP + ph + 20}" text-anchor="middle">{xt:g}</text>')
    parts.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 15}" text-anchor="middle">wall-clock seconds</text>')
    parts.append(f'<text x="20" y="{_TOP + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {_TOP + ph / 2:.1f})">objective gap (log10)</text>')
    for k, ((s, g), label) in enumerate(zip(gaps, labels)):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s, g))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}">'
                     f"<title>{escape(str(label))}</title></polyline>")
        ly = _TOP + 10 + 18 * k
        lx = _LEFT + pw + 12
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(str(label))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- command line ---------------------------------------------------------------

def _parse_kv(items):
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            raise ConfigError(f"value for {key!r} is not a number: {value!r}") from None
    return out


def _cmd_gen(args):
    if args.config:
        cfg, _ = load_config(args.config)
        if "generator" not in cfg.problem:
            raise ConfigError("config problem has no generator")
        name, params, seed = cfg.problem["generator"], cfg.problem["params"], cfg.seed
    else:
        if not args.generator:
            raise ConfigError("gen needs a generator name or --config")
        name, params, seed = args.generator, _parse_kv(args.params), 0
    if args.seed is not None:
        seed = args.seed
    name = _normalize_generator(name)
    data = generate(name, params, seed)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for key in ("A", "x_true", "y"):
        path = out / f"{key}.bin"
        write_matrix(path, data[key])
        arr = np.asarray(data[key])
        files[key] = {"path": path.name, "rows": arr.shape[0], "cols": arr.shape[1] if arr.ndim == 2 else 1,
                      "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}
        if args.csv:
            write_matrix_csv(out / f"{key}.csv", data[key])
    meta = {"generator": name, "params": _generator_params(name, params), "seed": seed, "files": files,
            **data["meta"]}
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_run(args):
    if not args.config:
        raise ConfigError("run needs --config")
    cfg, base = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    t0 = time.perf_counter()
    paths = run_experiment(cfg, base, parallel=args.parallel, out_dir=args.out)
    for p in paths:
        print(p)
    print(f"{len(paths)} trace(s) in {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return 0


def _cmd_plot(args):
    if not args.traces:
        raise ConfigError("plot needs at least one trace CSV")
    try:
        traces = [read_trace_csv(p) for p in args.traces]
    except FileNotFoundError as exc:
        raise ConfigError(f"missing trace file: {exc.filename}") from None
    except FormatError as exc:
        raise ConfigError(str(exc)) from None
    svg = render_svg(traces)
    if args.out:
        Path(args.out).write_text(svg)
    else:
        sys.stdout.write(svg)
    return 0


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="proxflow", description="Run and plot solver benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated instance in the flat binary format")
    g.add_argument("generator", nargs="?", help=f"one of {sorted(GENERATORS)}")
    g.add_argument("params", nargs="*", help="generator parameters as key=value")
    g.add_argument("--config", help="take generator, params and seed from an experiment config")
    g.add_argument("--seed", type=_u64)
    g.add_argument("--out", help="output directory (default: current)")
    g.add_argument("--csv", action="store_true", help="also write CSV copies")
    g.set_defaults(func=_cmd_gen)

    r = sub.add_parser("run", help="run the solvers of an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=_u64, help="override the config seed")
    r.add_argument("--out", help="override the output directory")
    r.add_argument("--parallel", action="store_true", help="run solvers in separate processes")
    r.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot", help="plot trace CSVs as an SVG")
    p.add_argument("traces", nargs="+")
    p.add_argument("--out", help="SVG path (default: stdout)")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"proxflow {args.command}: {exc}", file=sys.stderr)
        return 2
