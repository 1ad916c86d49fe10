"""Command line front end.

Subcommands:

* ``moments``   exact limiting moment polynomials and their limits
* ``limit``     stationary moments, quadrature, resolvent samples
* ``simulate``  Monte Carlo paths, traces written as CSV or JSON
* ``verify``    the full convergence battery with pass/fail verdict
* ``report``    re-render a saved verification summary

Options can come from a ``key = value`` config file (--config); explicit
flags win over the file, the file wins over built-in defaults.  Exit
codes: 0 success, 1 verification or integration failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .experiments import (DEFAULT_KS_TOLERANCE, DEFAULT_PASS_FRACTION,
                          DEFAULT_REL_TOLERANCE, DEFAULT_TOLERANCE_FACTOR,
                          ExperimentSpec, VerificationSummary, emit_results,
                          longtime_check, martingale_sweep, size_sweep,
                          uniform_grid)
from .hierarchy import (carleman_diagnostic, hankel_psd_check, lambda_bounds,
                        limiting_constants, solve_hierarchy)
from .model import InitialCondition, IntegrationError, ModelParams
from .sde import SCHEMES, SchemeConfig, simulate_path
from .spectrum import (build_jacobi, quadrature_from_jacobi,
                       self_convolutive_moments, stieltjes_resolvent)

_FIELD_TYPES = {
    "alpha": float, "c": float, "n_particles": int, "dt": float,
    "t_max": float, "k_max": int, "replicas": int, "seed": int,
    "scheme": str, "out": str, "format": str,
}

_DEFAULTS = {
    "moments": {"alpha": 1.0, "c": 1.0, "k_max": 5, "format": "text"},
    "limit": {"alpha": 1.0, "c": 1.0, "k_max": 5, "format": "text"},
    "simulate": {"alpha": 1.0, "c": 1.0, "n_particles": 1000, "dt": 1e-3,
                 "t_max": 3.0, "k_max": 3, "replicas": 1, "seed": 0,
                 "scheme": "direct_lambda", "out": None, "format": "csv"},
    "verify": {"alpha": 1.0, "c": 1.0, "n_particles": 1000, "dt": 1e-3,
               "t_max": 3.0, "k_max": 3, "replicas": 20, "seed": 0,
               "scheme": "direct_lambda", "out": None, "format": "both"},
}


class _UsageError(Exception):
    pass


def _read_config(path: str) -> dict:
    """Parse a file of ``key = value`` lines; # starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _FIELD_TYPES:
            raise _UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val.strip()
    return values


def _resolve(args: argparse.Namespace, command: str) -> dict:
    """Defaults, overridden by config file, overridden by explicit flags."""
    merged = dict(_DEFAULTS[command])
    if getattr(args, "config", None):
        for key, raw in _read_config(args.config).items():
            if key not in merged:
                continue  # keys for other subcommands are allowed in one file
            try:
                merged[key] = _FIELD_TYPES[key](raw)
            except ValueError:
                raise _UsageError(f"config value for {key} is not a valid "
                                  f"{_FIELD_TYPES[key].__name__}: {raw!r}")
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _poly_str(poly, k: int) -> str:
    parts = [str(poly.constant)]
    for i, coef in enumerate(poly.coeffs):
        if i == 0 or coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        unit = "exp(-t)" if i == 1 else f"exp(-{i}t)"
        body = unit if mag == 1 else f"{mag} {unit}"
        parts.append(f"{sign} {body}")
    return f"m_{k}(t) = " + " ".join(parts)


def _cmd_moments(args) -> int:
    opts = _resolve(args, "moments")
    if opts["format"] not in ("text", "json"):
        raise _UsageError("moments prints text or json")
    k_max = opts["k_max"]
    a = [Fraction(1)] * k_max  # unit point mass initial data
    polys = solve_hierarchy(opts["alpha"], opts["c"], a, k_max)
    limits = limiting_constants(polys, opts["alpha"], opts["c"])
    if opts["format"] == "json":
        payload = {
            "alpha": opts["alpha"], "c": opts["c"], "k_max": k_max,
            "coefficients": [[str(c) for c in p.coeffs] for p in polys[1:]],
            "limits": [str(v) for v in limits.values],
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    for k in range(1, k_max + 1):
        print(_poly_str(polys[k], k))
    print("limits (t -> infinity):", ", ".join(str(v) for v in limits.values[1:]))
    print("constant terms verified against the stationary moment recursion: ok")
    return 0


def _cmd_limit(args) -> int:
    opts = _resolve(args, "limit")
    if opts["format"] not in ("text", "json"):
        raise _UsageError("limit prints text or json")
    k_max = opts["k_max"]
    alpha, c = opts["alpha"], opts["c"]
    u = self_convolutive_moments(alpha, c, k_max)
    n = k_max + 1
    quad = quadrature_from_jacobi(build_jacobi(alpha, c, n), n)
    rel = max(abs(quad.moment(k) - float(u[k])) / float(u[k])
              for k in range(1, min(k_max, 2 * n - 1) + 1))
    zs = [1j, 1 + 1j, -2 + 0.5j]
    res = [stieltjes_resolvent(alpha, c, z) for z in zs]
    if opts["format"] == "json":
        payload = {
            "alpha": alpha, "c": c,
            "stationary_moments": [str(v) for v in u.values],
            "quadrature": {"nodes": list(quad.nodes), "weights": list(quad.weights)},
            "quadrature_max_rel_error": rel,
            "resolvent": [{"z": [z.real, z.imag], "value": [g.real, g.imag]}
                          for z, g in zip(zs, res)],
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    print("stationary moments:", ", ".join(str(v) for v in u.values))
    print(f"quadrature ({n} nodes), max relative moment error {rel:.3e}:")
    for x, w in zip(quad.nodes, quad.weights):
        print(f"  node {x:14.8f}   weight {w:.8e}")
    for z, g in zip(zs, res):
        print(f"resolvent at z = {z}: {g.real:+.8f} {g.imag:+.8f}i")
    return 0


def _cmd_simulate(args) -> int:
    opts = _resolve(args, "simulate")
    if opts["scheme"] not in SCHEMES:
        raise _UsageError(f"scheme must be one of {SCHEMES}, got {opts['scheme']!r}")
    if opts["format"] not in ("csv", "json"):
        raise _UsageError("simulate writes csv or json")
    params = ModelParams(opts["alpha"], opts["c"], opts["n_particles"])
    config = SchemeConfig(dt=opts["dt"], scheme=opts["scheme"], seed=opts["seed"])
    grid = uniform_grid(opts["t_max"], opts["dt"])
    init = InitialCondition.point_mass(1.0)
    spec = ExperimentSpec(params=params, init=init, scheme=config, grid=grid,
                          k_max=opts["k_max"],
                          seeds=tuple(opts["seed"] + r for r in range(opts["replicas"])))
    traces = []
    for seed in spec.seeds:
        cfg = SchemeConfig(dt=opts["dt"], scheme=opts["scheme"], seed=seed)
        try:
            traces.append(simulate_path(params, init, grid, cfg, opts["k_max"]))
        except IntegrationError as exc:
            print(f"integration failed for seed {seed}: {exc}", file=sys.stderr)
            return 1
    for seed, trace in zip(spec.seeds, traces):
        final = ", ".join(f"S_{k}={trace.order(k)[-1]:.6f}"
                          for k in range(1, opts["k_max"] + 1))
        print(f"seed {seed}: t={grid[-1]:g}, {final}")
    if opts["out"]:
        path = Path(opts["out"])
        if path.parent != Path("") and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        rid = spec.run_id
        if opts["format"] == "csv":
            target = path.with_suffix(".csv")
            with open(target, "w", newline="\n", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["run_id", "k", "N", "seed", "time", "value"])
                for seed, trace in zip(spec.seeds, traces):
                    for k in range(1, opts["k_max"] + 1):
                        row_k = trace.order(k)
                        for t, v in zip(grid, row_k):
                            writer.writerow([rid, k, params.n_particles, seed,
                                             repr(float(t)), repr(float(v))])
            print(f"trace written to {target}")
        else:
            target = path.with_suffix(".json")
            payload = {
                "spec": dict(run_id=rid, **spec.to_dict()),
                "traces": [{"seed": seed, "grid": list(map(float, grid)),
                            "values": [list(map(float, trace.order(k)))
                                       for k in range(opts["k_max"] + 1)]}
                           for seed, trace in zip(spec.seeds, traces)],
            }
            with open(target, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            print(f"trace written to {target}")
    return 0


def _structure_checks(alpha: float, c: float) -> tuple:
    """Cheap stationary-measure structure checks used by verify."""
    lines = []
    ok = True

    u16 = self_convolutive_moments(alpha, c, 16)
    hank = hankel_psd_check(u16)
    ok &= hank.passed
    lines.append(("moment structure: Hankel and shifted Hankel PSD "
                  f"(order {hank.order}, min eig {hank.min_eig:.3e})", hank.passed))

    quad_ok = True
    worst = 0.0
    for n in range(1, 9):
        quad = quadrature_from_jacobi(build_jacobi(alpha, c, n), n)
        u = self_convolutive_moments(alpha, c, 2 * n - 1).as_floats()
        rel = max(abs(quad.moment(k) - u[k]) / abs(u[k]) for k in range(2 * n))
        worst = max(worst, rel)
        quad_ok &= rel <= 1e-9 and quad.nodes[0] > 0
    ok &= quad_ok
    lines.append((f"quadrature: moments reproduced to {worst:.2e}, nodes positive "
                  "(n <= 8)", quad_ok))

    herglotz = all(stieltjes_resolvent(alpha, c, complex(x, y)).imag > 0
                   for x in np.linspace(-5, 15, 20) for y in np.linspace(0.5, 5, 5))
    u1 = float(u16[1])
    tail_ok = True
    for theta in (0.5, 1.5, 2.5):
        z = 1e3 * complex(np.cos(theta), np.sin(theta))
        target = -1 / z - u1 / z ** 2
        tail_ok &= abs(stieltjes_resolvent(alpha, c, z) - target) <= 0.01 * abs(target)
    ok &= herglotz and tail_ok
    lines.append(("resolvent: Herglotz sign on 100-point grid, far-field expansion "
                  "within 1%", herglotz and tail_ok))
    return lines, ok


def _cmd_verify(args) -> int:
    opts = _resolve(args, "verify")
    if opts["scheme"] not in SCHEMES:
        raise _UsageError(f"scheme must be one of {SCHEMES}, got {opts['scheme']!r}")
    if opts["format"] not in ("csv", "json", "both"):
        raise _UsageError("verify writes csv, json, or both")
    alpha, c, n_top = opts["alpha"], opts["c"], opts["n_particles"]
    init = InitialCondition.point_mass(1.0)
    config = SchemeConfig(dt=opts["dt"], scheme=opts["scheme"], seed=opts["seed"])
    seeds = tuple(opts["seed"] + r for r in range(opts["replicas"]))
    lines = []

    struct_lines, struct_ok = _structure_checks(alpha, c)
    lines.extend(struct_lines)

    grid = uniform_grid(opts["t_max"], opts["dt"])
    params = ModelParams(alpha, c, n_top)
    spec = ExperimentSpec(params=params, init=init, scheme=config, grid=grid,
                          k_max=opts["k_max"], seeds=seeds)
    sizes = tuple(sorted({max(n_top // 4, 2), max(n_top // 2, 3), n_top}))
    sweep = size_sweep(spec, sizes)
    top = sweep.reports[-1]
    lines.append((f"convergence: {int(top.seed_passed.sum())}/{top.spec.replicas} seeds "
                  f"within {DEFAULT_TOLERANCE_FACTOR:g}*Lambda_k at N={n_top}, "
                  f"medians decreasing over {sizes}: {sweep.medians_decreasing}",
                  sweep.passed))

    long_grid = uniform_grid(15.0, 0.05)
    long_spec = ExperimentSpec(params=params, init=init, scheme=config,
                               grid=long_grid, k_max=opts["k_max"],
                               seeds=(opts["seed"],))
    longtime = longtime_check(long_spec)
    worst_rel = float(np.nanmax(longtime.rel_error)) if longtime.rel_error.size else float("nan")
    worst_ks = float(np.nanmax(longtime.ks_distance))
    lines.append((f"stationarity: window moments within {DEFAULT_REL_TOLERANCE:.0%} "
                  f"(worst {worst_rel:.3%}), CDF distance {worst_ks:.4f} <= "
                  f"{DEFAULT_KS_TOLERANCE}", longtime.passed))

    # doubling ladder anchored at N/10 so the battery scales with --n-particles
    mart_sizes = tuple(sorted({max(n_top // 10, 4), max(n_top // 5, 6),
                               max(2 * n_top // 5, 8)}))
    mart = martingale_sweep(alpha, c, init, sizes=mart_sizes,
                            seeds=tuple(range(2 * opts["replicas"])), t_max=1.0,
                            scheme=SchemeConfig(dt=opts["dt"], scheme=opts["scheme"]))
    lines.append((f"martingale scaling: N*Var(M_1) = "
                  + ", ".join(f"{v:.3f}" for v in mart.n_times_var)
                  + f", ratio {mart.ratio:.3f} <= {mart.ratio_limit}", mart.passed))

    summary = VerificationSummary.combine([sweep, longtime, mart])
    all_ok = summary.passed and struct_ok

    for text, ok in lines:
        print(("PASS  " if ok else "FAIL  ") + text)
    for note in summary.anomalies:
        print("ANOMALY  " + note)
    print("verdict:", "pass" if all_ok else "fail")
    if opts["out"]:
        written = emit_results(summary, opts["out"], opts["format"])
        for w in written:
            print(f"results written to {w}")
    return 0 if all_ok else 1


def _cmd_report(args) -> int:
    try:
        payload = json.loads(Path(args.path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot load {args.path}: {exc}", file=sys.stderr)
        return 2
    for key in ("spec", "results", "pass"):
        if key not in payload:
            print(f"{args.path} is not a results summary (missing {key!r})",
                  file=sys.stderr)
            return 2
    specs = payload["spec"]
    print(f"runs: {len(specs)}")
    for entry in specs:
        print(f"  {entry['run_id']}: alpha={entry['alpha']:g} c={entry['c']:g} "
              f"N={entry['n_particles']} k_max={entry['k_max']} "
              f"seeds={len(entry['seeds'])} t_max={entry['grid']['stop']:g}")
    for name, th in payload.get("thresholds", {}).items():
        print(f"thresholds [{name}]: {json.dumps(th, sort_keys=True)}")
    rows = payload["results"]
    aggregates = [r for r in rows if r["seed"] == -1 and r["metric"] not in
                  ("lambda_bound", "tolerance", "stationary_target")]
    for r in aggregates:
        scope = f"k={r['k']}" if r["k"] != -1 else "all k"
        scope += f", N={r['N']}" if r["N"] != -1 else ", all N"
        print(f"  {r['metric']} ({scope}): {r['value']}")
    for note in payload.get("anomalies", []):
        print("ANOMALY  " + note)
    print("verdict:", "pass" if payload["pass"] else "fail")
    return 0 if payload["pass"] else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bll",
        description="High-temperature Laguerre ensembles: simulation, exact "
                    "moment hierarchy, limit measure, and verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *names):
        p.add_argument("--config", help="key = value file of defaults")
        for name in names:
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, type=_FIELD_TYPES[name], default=None)

    p = sub.add_parser("moments", help="exact limiting moment polynomials")
    add_common(p, "alpha", "c", "k_max", "format")
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("limit", help="stationary moments, quadrature, resolvent")
    add_common(p, "alpha", "c", "k_max", "format")
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("simulate", help="Monte Carlo paths and moment traces")
    add_common(p, "alpha", "c", "n_particles", "dt", "t_max", "k_max",
               "replicas", "seed", "scheme", "out", "format")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="full convergence battery, exit 1 on failure")
    add_common(p, "alpha", "c", "n_particles", "dt", "t_max", "k_max",
               "replicas", "seed", "scheme", "out", "format")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("report", help="re-render a saved results JSON")
    p.add_argument("path", help="summary .json written by verify --out")
    p.set_defaults(func=_cmd_report)
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(cli_main())
