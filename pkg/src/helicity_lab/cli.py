"""Command-line harness: synthesis, measurement, smoothing sweeps, helicity
reports, regime verdicts, trajectory runs, and sweep aggregation.

Every subcommand that writes files also writes `<base>.manifest.json`
recording the configuration, SHA-256 digests of inputs and outputs, and wall
time; the manifest lands atomically after the outputs it describes. Replaying
a manifest's configuration byte-reproduces the outputs. Exit codes: 0 on
success, 1 on configuration or precondition errors, 2 on numerical failure.
CSV floats are rendered with %.17g so parsing them back is lossless.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .fieldio import atomic_write_text, read_field, sha256_file, write_field
from .functionals import helicity_summary
from .generators import LacunarySpec, abc_flow, lacunary_field, prescribed_sobolev_field, taylor_green
from .grid import BlowUpError, Grid3, PeriodicField, PreconditionError
from .mollify import rate_sweep
from .norms import (
    besov_seminorm,
    exponent_estimate,
    gagliardo_seminorm_full,
    gagliardo_seminorm_local,
    holder_seminorm,
    lp_norm,
    spectral_sobolev_seminorm,
)
from .operators import leray_project
from .regimes import ExponentRegime
from .solver import evolve, flux_identity_check, format_order

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_NUMERICAL = 2


class CliError(PreconditionError):
    """Configuration or usage error; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _parse_order(text: str) -> float:
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"cannot parse order {text!r}") from exc


def _parse_cells(text: str) -> list:
    try:
        cells = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise CliError(f"cannot parse cell list {text!r}") from exc
    if not cells:
        raise CliError("empty cell list")
    return cells


def _parse_pq(text: str) -> tuple:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise CliError(f"expected 'p,q', got {text!r}")
    return _parse_order(parts[0]), _parse_order(parts[1])


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not text.strip():
        raise CliError(f"config file {path} is empty")
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return config


_CURRENT_ARGV = None


def _write_manifest(base: str, subcommand: str, config: dict,
                    inputs: dict, outputs: list, t0: float) -> str:
    manifest = {
        "schema": "manifest/v1",
        "tool": "helicity-lab",
        "version": __version__,
        "subcommand": subcommand,
        "argv": list(_CURRENT_ARGV) if _CURRENT_ARGV is not None else None,
        "config": config,
        "inputs": {path: sha256_file(path) for path in inputs},
        "outputs": {os.path.basename(path): sha256_file(path) for path in outputs},
        "wall_time_s": time.perf_counter() - t0,
    }
    path = base + ".manifest.json"
    atomic_write_text(path, json.dumps(manifest, indent=2) + "\n")
    return path


def _print_json(obj: dict, out_path=None) -> None:
    text = json.dumps(obj, indent=2)
    print(text)
    if out_path:
        atomic_write_text(out_path, text + "\n")


def _read_vector_field(path) -> PeriodicField:
    f = read_field(path)
    if f.rank != "vector3":
        raise CliError(f"{path}: expected a vector3 field, got {f.rank}")
    return f


# -- synthesize ---------------------------------------------------------------


def _build_field(kind: str, n: int, params: dict) -> PeriodicField:
    grid = Grid3(n)
    if kind == "abc":
        return abc_flow(grid, params.get("a", 1.0), params.get("b", 1.0),
                        params.get("c", 1.0))
    if kind in ("tg", "taylor-green"):
        return taylor_green(grid)
    if kind == "lacunary":
        spec = LacunarySpec(
            exponent=float(params["exponent"]),
            octaves=int(params["octaves"]),
            seed=int(params.get("seed", 0)),
            divergence_free=bool(params.get("divergence_free", True)),
            normalization=float(params.get("normalization", 1.0)),
            rank=params.get("rank", "vector3"),
        )
        return lacunary_field(spec, grid)
    if kind == "sobolev":
        return prescribed_sobolev_field(
            alpha=float(params["alpha"]),
            q_target=_parse_order(params.get("q_target", "2")),
            grid=grid,
            seed=int(params.get("seed", 0)),
            octaves=int(params.get("octaves", 4)),
            normalization=float(params.get("normalization", 1.0)),
            rank=params.get("rank", "vector3"),
            divergence_free=bool(params.get("divergence_free", True)),
        )
    raise CliError(f"unknown field kind {kind!r}")


def _cmd_synthesize(args) -> int:
    t0 = time.perf_counter()
    params = {
        "a": args.a, "b": args.b, "c": args.c,
        "exponent": args.exponent, "alpha": args.alpha,
        "octaves": args.octaves, "seed": args.seed,
        "normalization": args.normalization,
        "q_target": args.q_target,
        "divergence_free": not args.no_divergence_free,
        "rank": "scalar" if args.scalar else "vector3",
    }
    if args.kind == "lacunary" and args.exponent is None:
        raise CliError("lacunary synthesis needs --exponent")
    if args.kind == "sobolev" and args.alpha is None:
        raise CliError("sobolev synthesis needs --alpha")
    field = _build_field(args.kind, args.n, params)
    write_field(args.out, field)
    config = {"kind": args.kind, "N": args.n, **params}
    _write_manifest(args.out, "synthesize", config, {}, [args.out], t0)
    return EXIT_OK


# -- norms --------------------------------------------------------------------


def _cmd_norms(args) -> int:
    t0 = time.perf_counter()
    f = read_field(args.field)
    kind = args.kind
    if kind == "lp":
        if args.p is None:
            raise CliError("lp needs --p")
        rec = lp_norm(f, _parse_order(args.p))
    elif kind == "holder":
        if args.exponent is None:
            raise CliError("holder needs --exponent")
        rec = holder_seminorm(f, args.exponent, cutoff_radius=args.cutoff)
    elif kind == "besov":
        if args.exponent is None or args.p is None:
            raise CliError("besov needs --exponent and --p")
        rec = besov_seminorm(f, args.exponent, _parse_order(args.p))
    elif kind == "gagliardo":
        if None in (args.exponent, args.p, args.delta):
            raise CliError("gagliardo needs --exponent, --p, and --delta")
        rec = gagliardo_seminorm_local(f, args.exponent, _parse_order(args.p),
                                       args.delta)
    elif kind == "gagliardo-full":
        if args.exponent is None or args.p is None:
            raise CliError("gagliardo-full needs --exponent and --p")
        rec = gagliardo_seminorm_full(f, args.exponent, _parse_order(args.p))
    elif kind == "sobolev":
        if args.exponent is None:
            raise CliError("sobolev needs --exponent")
        rec = spectral_sobolev_seminorm(f, args.exponent)
    elif kind == "exponent-estimate":
        p = math.inf if args.p is None else _parse_order(args.p)
        lags = tuple(_parse_cells(args.lags)) if args.lags else (2, 4, 8, 16, 32)
        est = exponent_estimate(f, p=p, lag_cells=lags)
        out = {
            "schema": "norms/v1",
            "field": args.field,
            "grid_n": f.grid.n,
            "records": [{
                "kind": "exponent-estimate",
                "exponent": est.slope,
                "p": "inf" if p == math.inf else p,
                "delta": None,
                "value": est.slope,
                "residual": est.residual,
                "lags": list(map(int, est.lags)),
                "moduli": list(map(float, est.moduli)),
            }],
        }
        _print_json(out, args.out)
        if args.out:
            _write_manifest(args.out, "norms", _args_config(args),
                            {args.field: None}, [args.out], t0)
        return EXIT_OK
    else:
        raise CliError(f"unknown norm kind {kind!r}")
    out = {
        "schema": "norms/v1",
        "field": args.field,
        "grid_n": f.grid.n,
        "records": [rec.as_dict()],
    }
    _print_json(out, args.out)
    if args.out:
        _write_manifest(args.out, "norms", _args_config(args),
                        {args.field: None}, [args.out], t0)
    return EXIT_OK


def _args_config(args) -> dict:
    skip = {"func", "out"}
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        config[key] = value
    return config


# -- mollify-sweep ------------------------------------------------------------


def _cmd_mollify_sweep(args) -> int:
    t0 = time.perf_counter()
    f = read_field(args.field)
    inputs = {args.field: None}
    g = None
    if args.pair:
        g = read_field(args.pair)
        inputs[args.pair] = None
    h = f.grid.h
    deltas = [m * h for m in _parse_cells(args.deltas)]
    norms = tuple(s.strip() for s in args.norms.split(",") if s.strip())
    sweeps = rate_sweep(args.quantity, f, deltas, norms=norms, g=g,
                        theoretical=args.theoretical)
    csv_path = args.out + ".sweep.csv"
    json_path = args.out + ".sweep.json"
    lines = ["quantity,delta,norm_kind,value"]
    for sw in sweeps:
        for d, v in zip(sw.deltas, sw.values):
            lines.append(f"{sw.quantity},{_fmt(d)},{sw.norm_kind},{_fmt(v)}")
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    summary = {
        "schema": "sweep/v1",
        "field": args.field,
        "grid_n": f.grid.n,
        "quantity": args.quantity,
        "delta_cells": _parse_cells(args.deltas),
        "fits": [
            {
                "norm_kind": sw.norm_kind,
                "slope": sw.slope,
                "residual": sw.residual,
                "theoretical_exponent": sw.theoretical,
            }
            for sw in sweeps
        ],
    }
    atomic_write_text(json_path, json.dumps(summary, indent=2) + "\n")
    _write_manifest(args.out, "mollify-sweep", _args_config(args), inputs,
                    [csv_path, json_path], t0)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# -- helicity -----------------------------------------------------------------


def _cmd_helicity(args) -> int:
    t0 = time.perf_counter()
    u = _read_vector_field(args.field)
    div_rel = _relative_divergence(u)
    projected = False
    if div_rel > 1e-12 and not args.no_project:
        u = leray_project(u)
        projected = True
    else:
        u = PeriodicField.from_spectral(u.grid, u.hat, solenoidal=div_rel <= 1e-12)
    h = u.grid.h
    deltas = [m * h for m in _parse_cells(args.deltas)] if args.deltas else []
    pq_pairs = [_parse_pq(s) for s in (args.pq or [])]
    report = helicity_summary(u, deltas=deltas, pq_pairs=pq_pairs)
    out = {
        "schema": "helicity/v1",
        "field": args.field,
        "grid_n": u.grid.n,
        "projected": projected,
        "divergence_rel": div_rel,
        **report,
    }
    _print_json(out, args.out)
    if args.out:
        _write_manifest(args.out, "helicity", _args_config(args),
                        {args.field: None}, [args.out], t0)
    return EXIT_OK


def _relative_divergence(u: PeriodicField) -> float:
    g = u.grid
    kx, ky, kz = g.k_derivative
    div = kx * u.hat[0] + ky * u.hat[1] + kz * u.hat[2]
    num = float(np.sqrt(np.sum(g.parseval_weights * np.abs(div) ** 2)))
    den = float(np.sqrt(np.sum(g.parseval_weights
                               * (np.sqrt(g.k_sq) * np.abs(u.hat)) ** 2)))
    return num / den if den > 0 else 0.0


# -- regime-check -------------------------------------------------------------


def _cmd_regime_check(args) -> int:
    if args.config:
        cfg = _load_config(args.config)
        theta = cfg.get("theta")
        alpha = cfg.get("alpha")
        orders = {k: cfg.get(k, "2") for k in ("p", "q", "r", "kappa")}
    else:
        theta, alpha = args.theta, args.alpha
        orders = {"p": args.p, "q": args.q, "r": args.r, "kappa": args.kappa}
    if theta is None or alpha is None:
        raise CliError("regime-check needs theta and alpha")
    regime = ExponentRegime(theta=theta, alpha=alpha, **orders)
    _print_json(regime.as_dict(), args.out)
    return EXIT_OK


# -- evolve -------------------------------------------------------------------


def _cmd_evolve(args) -> int:
    t0 = time.perf_counter()
    cfg = _load_config(args.config)
    for key in ("N", "dt", "T"):
        if key not in cfg:
            raise CliError(f"evolve config needs {key!r}")
    n = int(cfg["N"])
    dt = float(cfg["dt"])
    t_end = float(cfg["T"])
    initial = cfg.get("initial", "abc")
    params = dict(cfg.get("initial_params", {}))
    if "seed" in cfg and "seed" not in params:
        params["seed"] = cfg["seed"]
    inputs = {}
    if initial == "file":
        path = params.get("path")
        if not path:
            raise CliError("initial 'file' needs initial_params.path")
        u0 = _read_vector_field(path)
        u0 = leray_project(u0)
        inputs[path] = None
    else:
        u0 = _build_field(initial, n, params)
        if u0.grid.n != n:
            raise CliError("initial field does not match configured N")
    delta_cells = [int(m) for m in cfg.get("delta_list", [])]
    grid = u0.grid
    deltas = [m * grid.h for m in delta_cells]
    pq_pairs = [
        (_parse_order(str(p)), _parse_order(str(q)))
        for p, q in cfg.get("pq_pairs", [])
    ]
    sample_every = int(cfg.get("sample_every", 1))
    checkpoint_every = int(cfg.get("checkpoint_every", 0))

    outputs = []

    def on_sample(step, state):
        if checkpoint_every and step % checkpoint_every == 0 and step > 0:
            path = f"{args.out}.ckpt{step:08d}.f1"
            write_field(path, state.velocity())
            outputs.append(path)

    traj = evolve(
        u0, dt, t_end,
        sample_every=sample_every,
        deltas=deltas,
        pq_pairs=pq_pairs,
        on_sample=on_sample if checkpoint_every else None,
    )
    csv_path = args.out + ".traj.csv"
    traj.write_csv(csv_path)
    outputs.insert(0, csv_path)

    flux_checks = {}
    for m in traj.delta_cells:
        try:
            flux_checks[str(m)] = traj.flux_check(m)
        except PreconditionError as exc:
            flux_checks[str(m)] = {"error": str(exc)}
    e0, e1 = traj.energy[0], traj.energy[-1]
    h0, h1 = traj.helicity[0], traj.helicity[-1]
    summary = {
        "schema": "traj/v1",
        "grid_n": n,
        "config": cfg,
        "samples": int(len(traj.times)),
        "initial_energy": float(e0),
        "final_energy": float(e1),
        "energy_drift_rel": abs(e1 - e0) / max(abs(e0), 1e-300),
        "initial_helicity": float(h0),
        "final_helicity": float(h1),
        "helicity_drift_rel": abs(h1 - h0) / max(abs(h0), 1e-300),
        "flux_checks": flux_checks,
    }
    json_path = args.out + ".traj.json"
    atomic_write_text(json_path, json.dumps(summary, indent=2) + "\n")
    outputs.append(json_path)
    _write_manifest(args.out, "evolve", cfg, inputs, outputs, t0)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# -- report -------------------------------------------------------------------


def _verify_run_dir(run_dir: str) -> None:
    for man_path in sorted(glob.glob(os.path.join(run_dir, "*.manifest.json"))):
        with open(man_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        for name, digest in manifest.get("outputs", {}).items():
            path = os.path.join(os.path.dirname(man_path), name)
            if not os.path.exists(path):
                raise CliError(f"{man_path}: recorded output {name} is missing")
            actual = sha256_file(path)
            if actual != digest:
                raise CliError(
                    f"{man_path}: digest mismatch for {name} "
                    f"(recorded {digest[:12]}, found {actual[:12]})"
                )


def _cmd_report(args) -> int:
    t0 = time.perf_counter()
    rows = {}
    fits = []
    sources = []
    for run_dir in args.run_dirs:
        if not os.path.isdir(run_dir):
            raise CliError(f"{run_dir} is not a directory")
        _verify_run_dir(run_dir)
        for csv_path in sorted(glob.glob(os.path.join(run_dir, "*.sweep.csv"))):
            sources.append(csv_path)
            with open(csv_path, newline="") as fh:
                reader = csv.DictReader(fh)
                needed = {"quantity", "delta", "norm_kind", "value"}
                if reader.fieldnames is None or not needed <= set(reader.fieldnames):
                    raise CliError(f"{csv_path}: missing sweep columns")
                for line in reader:
                    key = (line["quantity"], line["norm_kind"],
                           float(line["delta"]))
                    value = float(line["value"])
                    if key in rows:
                        old = rows[key]
                        if abs(old - value) > 1e-12 * max(1.0, abs(old)):
                            raise CliError(
                                f"conflicting duplicate for {key}: "
                                f"{old!r} vs {value!r}"
                            )
                    else:
                        rows[key] = value
        for json_path in sorted(glob.glob(os.path.join(run_dir, "*.sweep.json"))):
            with open(json_path, "r", encoding="utf-8") as fh:
                summary = json.load(fh)
            for fit in summary.get("fits", []):
                record = {
                    "quantity": summary.get("quantity"),
                    "grid_n": summary.get("grid_n"),
                    **fit,
                }
                if record not in fits:
                    fits.append(record)
    if not rows:
        raise CliError("no sweep rows found in the given run directories")
    csv_path = args.out + ".report.csv"
    lines = ["quantity,delta,norm_kind,value"]
    for (quantity, norm_kind, delta) in sorted(rows):
        value = rows[quantity, norm_kind, delta]
        lines.append(f"{quantity},{_fmt(delta)},{norm_kind},{_fmt(value)}")
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    json_path = args.out + ".report.json"
    merged = {
        "schema": "report/v1",
        "sources": sources,
        "fits": fits,
    }
    atomic_write_text(json_path, json.dumps(merged, indent=2) + "\n")
    _write_manifest(args.out, "report", {"run_dirs": list(args.run_dirs)},
                    {}, [csv_path, json_path], t0)
    print(json.dumps(merged, indent=2))
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="helicity-lab",
                     description="Spectral helicity diagnostics for periodic flow")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synthesize", help="generate a field/v1 file")
    p.add_argument("--kind", required=True,
                   choices=["abc", "tg", "taylor-green", "lacunary", "sobolev"])
    p.add_argument("--N", dest="n", type=int, required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--exponent", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--octaves", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalization", type=float, default=1.0)
    p.add_argument("--q-target", default="2")
    p.add_argument("--scalar", action="store_true")
    p.add_argument("--no-divergence-free", action="store_true")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("norms", help="measure one (semi)norm of a field")
    p.add_argument("field")
    p.add_argument("--kind", required=True,
                   choices=["lp", "holder", "besov", "gagliardo",
                            "gagliardo-full", "sobolev", "exponent-estimate"])
    p.add_argument("--exponent", type=float, default=None)
    p.add_argument("--p", default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--cutoff", type=float, default=None)
    p.add_argument("--lags", default=None)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=_cmd_norms)

    p = sub.add_parser("mollify-sweep", help="dyadic smoothing-rate sweep")
    p.add_argument("field")
    p.add_argument("--quantity", required=True,
                   choices=["grad_mollified", "grad_curl_mollified",
                            "commutator_scalar", "commutator_tensor"])
    p.add_argument("--deltas", required=True,
                   help="comma-separated radii in grid cells, e.g. 4,8,16,32")
    p.add_argument("--norms", default="inf",
                   help="comma-separated orders, e.g. inf,2,1")
    p.add_argument("--pair", default=None,
                   help="second field for commutator quantities")
    p.add_argument("--theoretical", type=float, default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_mollify_sweep)

    p = sub.add_parser("helicity", help="energy/helicity report for a field")
    p.add_argument("field")
    p.add_argument("--deltas", default=None,
                   help="smoothing radii in grid cells")
    p.add_argument("--pq", action="append", default=None,
                   help="conjugate pair 'p,q'; repeatable")
    p.add_argument("--no-project", action="store_true")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=_cmd_helicity)

    p = sub.add_parser("regime-check", help="exact exponent-regime verdicts")
    p.add_argument("--config", default=None)
    p.add_argument("--theta", default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--p", default="2")
    p.add_argument("--q", default="2")
    p.add_argument("--r", default="2")
    p.add_argument("--kappa", default="2")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=_cmd_regime_check)

    p = sub.add_parser("evolve", help="integrate the truncated ideal flow")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("report", help="merge sweep outputs from run dirs")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    global _CURRENT_ARGV
    _CURRENT_ARGV = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except BlowUpError as exc:
        _emit_error("numerical", str(exc))
        return EXIT_NUMERICAL
    except FloatingPointError as exc:
        _emit_error("numerical", str(exc))
        return EXIT_NUMERICAL
    except PreconditionError as exc:
        _emit_error("precondition", str(exc))
        return EXIT_PRECONDITION
    except (OSError, KeyError, ValueError, TypeError) as exc:
        _emit_error("precondition", f"{type(exc).__name__}: {exc}")
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
