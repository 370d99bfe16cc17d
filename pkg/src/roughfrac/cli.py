"""Batch front end: parse config, dispatch experiments, emit CSV tables.

Subcommands: norms, dini, identity, limit, vector-limit, opnorm, young,
types, reduce.  Exit codes: 0 success, 2 configuration error (the message
names the offending key), 1 numeric failure (the message names the
failing point).  Outputs are written only after a run completes, so an
invalid configuration never leaves partial files; identical configs
produce byte-identical CSV tables for any worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericError, ParameterError
from .fields import Exponents, homog_weak_norm_closed
from .functions import VectorTestFunction, make_test_function, parse_function, \
    rescale
from .kernels import dini_integral, parse_kernel, sphere_norm
from .lorentz import weak_quasinorm
from .operators import annulus_grid, QuadratureSpec, uniform_grid
from .experiments import convergence_types, default_run_grid, identity_check, \
    identity_grid, limit_run, opnorm_lower_bound, reduction_decomposition, \
    vector_limit_run, young_monitor
from .functions import eval_test_function

SUBCOMMANDS = ("norms", "dini", "identity", "limit", "vector-limit",
               "opnorm", "young", "types", "reduce")

CSV_HEADERS = {
    "limit": "t,beta,D,bound,slope_so_far,tail_cert,config_hash",
    "vector-limit": "t,beta,D,bound,slope_so_far,tail_cert,config_hash",
    "identity": "closed_form,numeric,rel_err,config_hash",
    "dini": "t,omega,partial_integral,verdict,config_hash",
    "types": "t,lambda,type1,type2,type3,config_hash",
    "norms": "q,sphere_norm,weak_norm_closed,config_hash",
    "opnorm": "entry,l1,weak_norm,ratio,config_hash",
    "young": "entry,l1,weak_norm,ratio,config_hash",
    "reduce": "eps,kernel_dist,d_rough,d_smooth,cross_term,field_term,rhs,holds,config_hash",
}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".9g")
    return str(value)


# ----------------------------------------------------------------------------
# Configuration

DEFAULTS = {
    "dim": 1,
    "alpha": 0.5,
    "kernel": "const:1",
    "f": ["indicator:0.5"],
    "r": 2.0,
    "rho": 1.0,
    "t": "geo:0.2,0.5,4",
    "grid_res": None,
    "rmax_mult": 64.0,
    "workers": 1,
    "out": None,
    "q": None,
    "s": 0.0,
    "levels": 12,
    "family": "translate",
    "lambdas": "0.25,0.5,0.75",
    "extent": 8.0,
    "eps": "0.4,0.2,0.1",
    "angular_nodes": 256,
    "radial_panels": 64,
    "maximal_radius_samples": 64,
    "refinement_passes": 2,
}

_CONFIG_KEYS = {
    "run.dim": "dim", "run.alpha": "alpha", "run.kernel": "kernel",
    "run.f": "f", "run.r": "r", "run.rho": "rho", "run.t": "t",
    "run.workers": "workers", "run.out": "out",
    "grid.resolution": "grid_res", "grid.rmax_mult": "rmax_mult",
    "quad.angular_nodes": "angular_nodes",
    "quad.radial_panels": "radial_panels",
    "quad.maximal_radius_samples": "maximal_radius_samples",
    "quad.refinement_passes": "refinement_passes",
    "dini.q": "q", "dini.s": "s", "dini.levels": "levels",
    "types.family": "family", "types.lambdas": "lambdas",
    "types.extent": "extent",
    "reduce.eps": "eps",
}


def _read_config_file(path: str) -> dict:
    """Line-oriented ``key = value`` with ``[section]`` headers."""
    out = {}
    section = "run"
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"config: cannot read '{path}' ({exc})") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"config: line {lineno} is not 'key = value'")
        dotted = f"{section}.{key.strip().lower()}"
        if dotted not in _CONFIG_KEYS:
            raise ParameterError(f"config: unknown key '{dotted}'")
        out[_CONFIG_KEYS[dotted]] = value.strip()
    return out


@dataclass
class RunConfig:
    command: str
    values: dict = dc_field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None


def _parse_schedule(text: str) -> list:
    text = text.strip()
    if text.startswith("geo:"):
        parts = text[4:].split(",")
        if len(parts) != 3:
            raise ParameterError("t_schedule: geo form is geo:<t0>,<ratio>,<count>")
        t0, ratio, count = float(parts[0]), float(parts[1]), int(parts[2])
        if t0 <= 0 or not 0 < ratio < 1 or count < 1:
            raise ParameterError("t_schedule: need t0 > 0, 0 < ratio < 1, count >= 1")
        return [t0 * ratio ** i for i in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"t_schedule: cannot parse '{text}'") from exc


def _parse_floats(text: str, key: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ParameterError(f"{key}: cannot parse '{text}'") from exc


def resolve_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and flags (flags win)."""
    values = dict(DEFAULTS)
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for key in list(values):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(command, values)
    v = cfg.values
    try:
        v["dim"] = int(v["dim"])
        v["alpha"] = float(v["alpha"])
        v["r"] = float(v["r"])
        v["rho"] = float(v["rho"])
        v["rmax_mult"] = float(v["rmax_mult"])
        v["workers"] = int(v["workers"])
        v["levels"] = int(v["levels"])
        v["s"] = float(v["s"])
        v["extent"] = float(v["extent"])
        for key in ("angular_nodes", "radial_panels",
                    "maximal_radius_samples", "refinement_passes"):
            v[key] = int(v[key])
        if v["grid_res"] is not None:
            v["grid_res"] = int(v["grid_res"])
        if v["q"] is not None:
            v["q"] = float(v["q"])
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"config: bad numeric value ({exc})") from exc
    if isinstance(v["f"], str):
        v["f"] = [part.strip() for part in v["f"].split("|") if part.strip()]
    if v["dim"] not in (1, 2):
        raise ParameterError("dim: must be 1 or 2")
    if not 0 < v["alpha"] < v["dim"]:
        raise ParameterError("alpha: must lie in (0, dim)")
    if v["rho"] <= 0:
        raise ParameterError("rho: must be positive")
    if v["rmax_mult"] <= 1:
        raise ParameterError("rmax_mult: must exceed 1")
    if v["workers"] < 1:
        raise ParameterError("workers: must be at least 1")
    return cfg


_VOLATILE_KEYS = ("out", "workers")   # do not affect the computed numbers


def _config_hash(cfg: RunConfig) -> str:
    blob = repr(sorted((k, str(val)) for k, val in cfg.values.items()
                       if k not in _VOLATILE_KEYS))
    return hashlib.sha256((cfg.command + blob).encode()).hexdigest()[:12]


def _quad_from(cfg: RunConfig) -> QuadratureSpec:
    return QuadratureSpec(
        angular_nodes=cfg.angular_nodes,
        radial_panels=cfg.radial_panels,
        maximal_radius_samples=cfg.maximal_radius_samples,
        refinement_passes=cfg.refinement_passes)


def _grid_from(cfg: RunConfig):
    res = cfg.grid_res
    if res is None:
        return default_run_grid(cfg.dim, cfg.rho,
                                r_max=cfg.rmax_mult * cfg.rho)
    return annulus_grid(cfg.dim, cfg.rho, cfg.rmax_mult * cfg.rho, res)


# ----------------------------------------------------------------------------
# Subcommand runners: each returns a list of CSV rows (without hash)

def _run_limit(cfg: RunConfig):
    e = Exponents(cfg.dim, cfg.alpha)
    k = parse_kernel(cfg.kernel, cfg.dim)
    ts = _parse_schedule(cfg.t)
    quad = _quad_from(cfg)
    grid = _grid_from(cfg)
    if cfg.command == "vector-limit":
        entries = tuple(parse_function(s, cfg.dim) for s in cfg.f)
        vf = VectorTestFunction(entries, cfg.r)
        run = vector_limit_run(cfg.command_op, k, e, vf, cfg.rho, ts,
                               grid, quad, cfg.workers)
    else:
        f = parse_function(cfg.f[0], cfg.dim)
        run = limit_run(cfg.command_op, k, e, f, cfg.rho, ts, grid, quad,
                        cfg.workers)
    rows = []
    for i, t in enumerate(run.t_schedule):
        if i >= 1:
            span = run.t_schedule[:i + 1]
            ds = run.metrics[:i + 1]
            pos = [(tt, dd) for tt, dd in zip(span, ds) if dd > 0]
            if len(pos) >= 2:
                slope = float(np.polyfit(np.log([p[0] for p in pos]),
                                         np.log([p[1] for p in pos]), 1)[0])
            else:
                slope = math.nan
        else:
            slope = math.nan
        cert = run.tail_certificates[i]
        rows.append([t, run.betas[i], run.metrics[i], run.bounds[i],
                     slope, math.nan if cert is None else cert])
    return rows


def _run_identity(cfg: RunConfig):
    e = Exponents(cfg.dim, cfg.alpha)
    k = parse_kernel(cfg.kernel, cfg.dim)
    if cfg.grid_res is None:
        grid = identity_grid(cfg.dim)
    else:
        grid = annulus_grid(cfg.dim, cfg.rho / cfg.rmax_mult,
                            cfg.rho * cfg.rmax_mult, cfg.grid_res)
    rep = identity_check(k, e, grid)
    return [[rep.closed_form, rep.numeric, rep.rel_err]]


def _run_norms(cfg: RunConfig):
    e = Exponents(cfg.dim, cfg.alpha)
    k = parse_kernel(cfg.kernel, cfg.dim)
    q = e.q
    return [[q, sphere_norm(k, q), homog_weak_norm_closed(k, e)]]


def _run_dini(cfg: RunConfig):
    k = parse_kernel(cfg.kernel, cfg.dim)
    e = Exponents(cfg.dim, cfg.alpha)
    q = cfg.q if cfg.q is not None else e.q
    rep = dini_integral(k, q, cfg.s, levels=cfg.levels)
    rows = []
    for t, om, part in zip(rep.t_grid, rep.omega, rep.partials):
        rows.append([t, om, part, rep.verdict])
    return rows


def _run_sweep(cfg: RunConfig):
    e = Exponents(cfg.dim, cfg.alpha)
    k = parse_kernel(cfg.kernel, cfg.dim)
    quad = _quad_from(cfg)
    grid = _grid_from(cfg)
    family = [parse_function(s, cfg.dim) for s in cfg.f]
    if cfg.command == "opnorm":
        rep = opnorm_lower_bound("M", k, e, family, grid, quad, cfg.workers)
    else:
        rep = young_monitor(k, e, family, grid, quad, cfg.workers)
    return [[cfg.f[i], l1, weak, ratio] for (i, l1, weak, ratio) in rep.ratios]


def _run_types(cfg: RunConfig):
    e = Exponents(cfg.dim, cfg.alpha)
    lambdas = _parse_floats(cfg.lambdas, "lambdas")
    ts = _parse_schedule(cfg.t)
    res = cfg.grid_res if cfg.grid_res is not None else 1600
    grid = uniform_grid(cfg.dim, cfg.extent, res)
    f = parse_function(cfg.f[0], cfg.dim)
    target = eval_test_function(f, grid.points)
    family = {}
    for t in ts:
        if cfg.family == "translate":
            shift = (t,) + (0.0,) * (cfg.dim - 1)
        elif cfg.family == "disjoint":
            gap = 2.0 * f.support_radius + 1.0
            shift = (gap,) + (0.0,) * (cfg.dim - 1)
        else:
            raise ParameterError("family: must be 'translate' or 'disjoint'")
        moved = make_test_function(cfg.dim, [
            c.__class__(c.kind, c.weight, c.radius,
                        tuple(s + d for s, d in zip(c.shift, shift)), c.sigma)
            for c in f.components])
        family[t] = eval_test_function(moved, grid.points)
    rows_out = []
    for row in convergence_types(family, target, lambdas, grid.measures, e.q):
        for lam in lambdas:
            rows_out.append([row.t, lam, row.type1, row.type2[lam],
                             row.type3[lam]])
    return rows_out


def _run_reduce(cfg: RunConfig):
    e = Exponents(cfg.dim, cfg.alpha)
    k = parse_kernel(cfg.kernel, cfg.dim)
    quad = _quad_from(cfg)
    grid = _grid_from(cfg)
    f = parse_function(cfg.f[0], cfg.dim)
    eps = _parse_floats(cfg.eps, "eps")
    ts = _parse_schedule(cfg.t)
    rows = reduction_decomposition(k, eps, e, f, cfg.rho, ts[-1], grid, quad,
                                   cfg.workers)
    return [[r.eps, r.kernel_dist, r.d_rough, r.d_smooth, r.cross_term,
             r.field_term, 4.0 * (r.d_smooth + r.cross_term + r.field_term),
             r.holds] for r in rows]


# ----------------------------------------------------------------------------
# Driver

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roughfrac",
        description="Rough-kernel fractional operator experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--dim", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--kernel")
        p.add_argument("--f", action="append")
        p.add_argument("--r", type=float)
        p.add_argument("--rho", type=float)
        p.add_argument("--t")
        p.add_argument("--grid-res", dest="grid_res", type=int)
        p.add_argument("--rmax-mult", dest="rmax_mult", type=float)
        p.add_argument("--out")
        p.add_argument("--config")
        p.add_argument("--workers", type=int)
        if name in ("limit", "vector-limit"):
            p.add_argument("--op", choices=("M", "T_abs", "T_signed"))
        if name == "dini":
            p.add_argument("--q", type=float)
            p.add_argument("--s", type=float)
            p.add_argument("--levels", type=int)
        if name == "types":
            p.add_argument("--family")
            p.add_argument("--lambdas")
            p.add_argument("--extent", type=float)
        if name == "reduce":
            p.add_argument("--eps")
    return parser


_RUNNERS = {
    "limit": _run_limit,
    "vector-limit": _run_limit,
    "identity": _run_identity,
    "norms": _run_norms,
    "dini": _run_dini,
    "opnorm": _run_sweep,
    "young": _run_sweep,
    "types": _run_types,
    "reduce": _run_reduce,
}


def _write_outputs(cfg: RunConfig, rows, elapsed: float):
    out = cfg.out or f"{cfg.command.replace('-', '_')}.csv"
    out_path = Path(out)
    chash = _config_hash(cfg)
    lines = [CSV_HEADERS[cfg.command]]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row) + f",{chash}")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines) + "\n")
    manifest = out_path.with_suffix(".manifest.txt")
    mlines = [f"command = {cfg.command}", f"tool_version = {__version__}",
              f"config_hash = {chash}"]
    for key in sorted(cfg.values):
        mlines.append(f"{key} = {cfg.values[key]}")
    mlines.append(f"wall_clock_seconds = {elapsed:.3f}")
    manifest.write_text("\n".join(mlines) + "\n")
    return out_path


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on unknown subcommands or flags, 0 on --help
        code = exc.code or 0
        return 2 if code else 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    started = time.perf_counter()
    try:
        cfg = resolve_config(args.command, args)
        cfg.values["command_op"] = getattr(args, "op", None) or "T_abs"
        rows = _RUNNERS[args.command](cfg)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    out_path = _write_outputs(cfg, rows, time.perf_counter() - started)
    print(f"wrote {out_path}")
    return 0


def main() -> None:
    sys.exit(run_cli())
