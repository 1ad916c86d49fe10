"""Verification experiments: empirical moments against the exact hierarchy.

The chain under test has two arrows.  As N grows, empirical moment traces
should track the hierarchy solution on [0, T]; as t grows, the ensemble
should settle into the stationary law whose moments the self-convolutive
recursion gives.  Convergence in probability is operationalized as a
declared triple (tolerance, pass fraction, seed count): a run passes when
enough seeds beat the tolerance.  Every threshold used for a pass/fail
decision is echoed into the emitted JSON, so reports contain no hidden
constants.

Replicas are independent and may run on a thread pool (BLL_THREADS caps
the width); results are assembled in seed order, so reports are identical
whatever the scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hierarchy import (carleman_diagnostic, eval_moment, lambda_bounds,
                        solve_hierarchy)
from .model import InitialCondition, ModelParams
from .sde import SchemeConfig, martingale_qv_target, martingale_residual, simulate_path
from .spectrum import (build_jacobi, kolmogorov_distance,
                       quadrature_from_jacobi, self_convolutive_moments)

DEFAULT_TOLERANCE_FACTOR = 0.05   # sup-norm tolerance = factor * Lambda_k
DEFAULT_PASS_FRACTION = 0.95      # fraction of seeds that must beat it
DEFAULT_REL_TOLERANCE = 0.05      # stationary moment window, relative
DEFAULT_KS_TOLERANCE = 0.05       # empirical vs quadrature CDF
DEFAULT_QUADRATURE_SIZE = 400
CARLEMAN_THRESHOLD = 1.5          # partial sum above this arms the anomaly check
MARTINGALE_RATIO_LIMIT = 2.0      # max/min of N*Var across sizes

AGGREGATE = -1  # sentinel for the seed / k / N columns of aggregate rows

CSV_HEADER = ("run_id", "k", "N", "seed", "metric", "value")


def thread_count(explicit: int | None = None) -> int:
    """Worker threads for replica execution; BLL_THREADS caps it."""
    if explicit is not None:
        if explicit < 1:
            raise ValueError("thread count must be >= 1")
        width = explicit
    else:
        width = os.cpu_count() or 1
    cap = os.environ.get("BLL_THREADS")
    if cap is not None:
        cap = int(cap)
        if cap < 1:
            raise ValueError(f"BLL_THREADS must be >= 1, got {cap}")
        width = min(width, cap)
    return width


def uniform_grid(t_max: float, step: float) -> np.ndarray:
    """Output grid 0, step, 2 step, ..., t_max."""
    if not 0 < step <= t_max:
        raise ValueError("need 0 < step <= t_max")
    n = int(round(t_max / step))
    if abs(n * step - t_max) > 1e-9 * t_max:
        raise ValueError("t_max must be a multiple of step")
    return np.linspace(0.0, t_max, n + 1)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Everything a replicated simulation run depends on.

    Replica r runs with seeds[r] substituted into the scheme config, so a
    spec plus nothing else reproduces the full report.
    """

    params: ModelParams
    init: InitialCondition
    scheme: SchemeConfig
    grid: np.ndarray
    k_max: int
    seeds: tuple

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 points")
        if grid[0] != 0.0:
            raise ValueError("grid must start at 0")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValueError(f"k_max must be an integer >= 1, got {self.k_max}")
        seeds = tuple(int(s) for s in self.seeds)
        if len(seeds) == 0 or any(s < 0 for s in seeds):
            raise ValueError("seeds must be a nonempty tuple of nonnegative integers")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "k_max", int(self.k_max))
        object.__setattr__(self, "seeds", seeds)

    @property
    def replicas(self) -> int:
        return len(self.seeds)

    def to_dict(self) -> dict:
        g = self.grid
        uniform = bool(np.allclose(np.diff(g), g[1] - g[0], rtol=0, atol=1e-12))
        grid_info = {"start": float(g[0]), "stop": float(g[-1]),
                     "n_points": int(g.size), "uniform": uniform}
        if not uniform:
            grid_info["sha1"] = hashlib.sha1(g.tobytes()).hexdigest()
        init = {"kind": self.init.kind}
        if self.init.kind == "explicit":
            init["lambdas"] = [float(x) for x in self.init.lambdas]
        else:
            init["lo"] = self.init.lo
            init["hi"] = self.init.hi
        return {
            "alpha": self.params.alpha,
            "c": self.params.c,
            "n_particles": self.params.n_particles,
            "init": init,
            "scheme": dataclasses.asdict(self.scheme),
            "grid": grid_info,
            "k_max": self.k_max,
            "seeds": list(self.seeds),
        }

    @property
    def run_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


def _replica_config(spec: ExperimentSpec, seed: int) -> SchemeConfig:
    return dataclasses.replace(spec.scheme, seed=seed)


def _run_replicas(worker, seeds, threads):
    width = thread_count(threads)
    if width == 1:
        return [worker(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=width) as pool:
        return list(pool.map(worker, seeds))


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Sup-norm moment errors of each replica against the exact hierarchy."""

    spec: ExperimentSpec
    lambda_env: tuple          # Lambda_1..Lambda_K envelope values
    tolerances: tuple          # tolerance_factor * Lambda_k
    tolerance_factor: float
    pass_fraction: float
    sup_error: np.ndarray      # (replicas, k_max), NaN for failed replicas
    residual_final: np.ndarray  # martingale residual M_k at t_max, same shape
    seed_passed: np.ndarray    # (replicas,) bool
    failures: tuple            # (seed, message) for replicas that raised
    passed: bool

    @property
    def run_id(self) -> str:
        return self.spec.run_id

    @property
    def anomalies(self) -> tuple:
        return ()

    def median_errors(self) -> np.ndarray:
        """Per-order medians of the sup errors over surviving replicas."""
        with warnings.catch_warnings():
            # an all-failed column legitimately medians to NaN
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmedian(self.sup_error, axis=0)

    def rows(self):
        rid = self.run_id
        n = self.spec.params.n_particles
        out = []
        for k in range(1, self.spec.k_max + 1):
            out.append((rid, k, n, AGGREGATE, "lambda_bound", self.lambda_env[k - 1]))
            out.append((rid, k, n, AGGREGATE, "tolerance", self.tolerances[k - 1]))
        for r, seed in enumerate(self.spec.seeds):
            for k in range(1, self.spec.k_max + 1):
                out.append((rid, k, n, seed, "sup_error", self.sup_error[r, k - 1]))
                out.append((rid, k, n, seed, "residual_final", self.residual_final[r, k - 1]))
            out.append((rid, AGGREGATE, n, seed, "seed_passed", float(self.seed_passed[r])))
        med = self.median_errors()
        for k in range(1, self.spec.k_max + 1):
            out.append((rid, k, n, AGGREGATE, "median_sup_error", med[k - 1]))
        for seed, _ in self.failures:
            out.append((rid, AGGREGATE, n, seed, "failed", 1.0))
        out.append((rid, AGGREGATE, n, AGGREGATE, "pass_fraction_observed",
                    float(self.seed_passed.mean())))
        out.append((rid, AGGREGATE, n, AGGREGATE, "pass", float(self.passed)))
        return out

    def spec_entries(self) -> list:
        return [dict(run_id=self.run_id, **self.spec.to_dict())]

    def thresholds(self) -> dict:
        return {
            "tolerance_factor": self.tolerance_factor,
            "pass_fraction": self.pass_fraction,
            "tolerances": {str(k): self.tolerances[k - 1]
                           for k in range(1, self.spec.k_max + 1)},
        }


def run_experiment(spec: ExperimentSpec,
                   tolerance_factor: float = DEFAULT_TOLERANCE_FACTOR,
                   pass_fraction: float = DEFAULT_PASS_FRACTION,
                   threads: int | None = None) -> ConvergenceReport:
    """Run all replicas and score them against the limiting hierarchy.

    A replica passes when sup_t |S_k(t) - m_k(t)| <= tolerance_factor *
    Lambda_k for every order k <= spec.k_max; the report passes when at
    least pass_fraction of the seeds do.  Integration failures are
    recorded per replica, counted as non-passing, and never abort the
    sweep.  Traces carry orders up to 2 k_max - 1 so every residual has
    its quadratic-variation partner available.
    """
    params, init, k_max = spec.params, spec.init, spec.k_max
    a = init.target_moments(k_max)
    polys = solve_hierarchy(params.alpha, params.c, a, k_max)
    exact = np.array([eval_moment(polys[k], spec.grid) for k in range(1, k_max + 1)])
    env = lambda_bounds(params.alpha, params.c, a, k_max).values
    tol = tolerance_factor * env
    sim_order = 2 * k_max - 1

    def worker(seed):
        try:
            trace = simulate_path(params, init, spec.grid, _replica_config(spec, seed),
                                  sim_order)
        except Exception as exc:  # a broken replica is data, not a crash
            return None, None, f"{type(exc).__name__}: {exc}"
        sup = np.array([np.max(np.abs(trace.order(k) - exact[k - 1]))
                        for k in range(1, k_max + 1)])
        res = np.array([martingale_residual(trace, params, k)[-1]
                        for k in range(1, k_max + 1)])
        return sup, res, None

    results = _run_replicas(worker, spec.seeds, threads)

    sup_error = np.full((spec.replicas, k_max), np.nan)
    residual_final = np.full((spec.replicas, k_max), np.nan)
    failures = []
    for r, (sup, res, err) in enumerate(results):
        if err is not None:
            failures.append((spec.seeds[r], err))
        else:
            sup_error[r] = sup
            residual_final[r] = res
    with np.errstate(invalid="ignore"):
        seed_passed = np.all(sup_error <= tol, axis=1) & ~np.isnan(sup_error).any(axis=1)
    need = math.ceil(pass_fraction * spec.replicas - 1e-9)
    return ConvergenceReport(
        spec=spec, lambda_env=tuple(env), tolerances=tuple(tol),
        tolerance_factor=tolerance_factor, pass_fraction=pass_fraction,
        sup_error=sup_error, residual_final=residual_final,
        seed_passed=seed_passed, failures=tuple(failures),
        passed=bool(seed_passed.sum() >= need))


@dataclass(frozen=True, eq=False)
class SweepReport:
    """Convergence reports across ensemble sizes, plus the trend check."""

    reports: tuple
    sizes: tuple
    medians_decreasing: bool
    passed: bool

    @property
    def anomalies(self) -> tuple:
        return ()

    def rows(self):
        out = []
        for rep in self.reports:
            out.extend(rep.rows())
        rid = self.reports[-1].run_id
        out.append((rid, AGGREGATE, AGGREGATE, AGGREGATE, "medians_decreasing",
                    float(self.medians_decreasing)))
        out.append((rid, AGGREGATE, AGGREGATE, AGGREGATE, "sweep_pass", float(self.passed)))
        return out

    def spec_entries(self) -> list:
        return [e for rep in self.reports for e in rep.spec_entries()]

    def thresholds(self) -> dict:
        t = self.reports[-1].thresholds()
        t["sizes"] = list(self.sizes)
        return t


def size_sweep(spec: ExperimentSpec, sizes,
               tolerance_factor: float = DEFAULT_TOLERANCE_FACTOR,
               pass_fraction: float = DEFAULT_PASS_FRACTION,
               threads: int | None = None) -> SweepReport:
    """run_experiment at several ensemble sizes, largest judged for the
    pass fraction, all judged for a strictly decreasing median error."""
    sizes = tuple(int(n) for n in sizes)
    if len(sizes) < 2 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be at least two, strictly increasing")
    reports = []
    for n in sizes:
        params = ModelParams(spec.params.alpha, spec.params.c, n)
        sub = ExperimentSpec(params=params, init=spec.init, scheme=spec.scheme,
                             grid=spec.grid, k_max=spec.k_max, seeds=spec.seeds)
        reports.append(run_experiment(sub, tolerance_factor, pass_fraction, threads))
    med = np.array([rep.median_errors() for rep in reports])
    decreasing = bool(np.all(np.diff(med, axis=0) < 0))
    return SweepReport(reports=tuple(reports), sizes=sizes,
                       medians_decreasing=decreasing,
                       passed=bool(reports[-1].passed and decreasing))


@dataclass(frozen=True, eq=False)
class LongtimeReport:
    """Stationarity check: windowed moments and final-time CDF distance."""

    spec: ExperimentSpec
    window: tuple              # (t0, t1) of the time average
    stationary: tuple          # u_1..u_K targets
    rel_error: np.ndarray      # (replicas, k_max) relative window errors
    ks_distance: np.ndarray    # (replicas,)
    rel_tolerance: float
    ks_tolerance: float
    quadrature_size: int
    carleman_sum: float
    anomalies: tuple
    failures: tuple
    passed: bool

    @property
    def run_id(self) -> str:
        return self.spec.run_id

    def rows(self):
        rid = self.run_id
        n = self.spec.params.n_particles
        out = []
        for k in range(1, self.spec.k_max + 1):
            out.append((rid, k, n, AGGREGATE, "stationary_target", self.stationary[k - 1]))
        for r, seed in enumerate(self.spec.seeds):
            for k in range(1, self.spec.k_max + 1):
                out.append((rid, k, n, seed, "window_rel_error", self.rel_error[r, k - 1]))
            out.append((rid, AGGREGATE, n, seed, "kolmogorov_distance",
                        self.ks_distance[r]))
        for seed, _ in self.failures:
            out.append((rid, AGGREGATE, n, seed, "failed", 1.0))
        out.append((rid, AGGREGATE, n, AGGREGATE, "carleman_sum", self.carleman_sum))
        out.append((rid, AGGREGATE, n, AGGREGATE, "pass", float(self.passed)))
        return out

    def spec_entries(self) -> list:
        return [dict(run_id=self.run_id, **self.spec.to_dict())]

    def thresholds(self) -> dict:
        return {
            "rel_tolerance": self.rel_tolerance,
            "ks_tolerance": self.ks_tolerance,
            "window": list(self.window),
            "quadrature_size": self.quadrature_size,
            "carleman_threshold": CARLEMAN_THRESHOLD,
        }


def longtime_check(spec: ExperimentSpec,
                   rel_tolerance: float = DEFAULT_REL_TOLERANCE,
                   ks_tolerance: float = DEFAULT_KS_TOLERANCE,
                   quadrature_size: int = DEFAULT_QUADRATURE_SIZE,
                   threads: int | None = None) -> LongtimeReport:
    """Late-time comparison against the stationary law.

    Time-averages each S_k over the last fifth of the run and compares to
    the stationary moments, relative; compares the final empirical CDF to
    the quadrature CDF of the limit measure, Kolmogorov.  The run must
    reach at least t = 10 for the window to mean anything.

    When all window errors pass and the determinacy diagnostic is healthy
    (partial Carleman sum above threshold) but the CDF check fails, the
    two views of convergence disagree; that contradiction is recorded in
    ``anomalies`` rather than averaged away.
    """
    t_long = float(spec.grid[-1])
    if t_long < 10:
        raise ValueError(f"long-time check needs t_max >= 10, got {t_long}")
    params, init, k_max = spec.params, spec.init, spec.k_max
    window = (0.8 * t_long, t_long)
    u = self_convolutive_moments(params.alpha, params.c, k_max).as_floats()[1:]
    quad = quadrature_from_jacobi(build_jacobi(params.alpha, params.c, quadrature_size),
                                  quadrature_size)
    a = init.target_moments(k_max)
    carleman = float(carleman_diagnostic(lambda_bounds(params.alpha, params.c, a, k_max))[-1])

    def worker(seed):
        try:
            trace, states = simulate_path(params, init, spec.grid,
                                          _replica_config(spec, seed), k_max,
                                          return_states=True)
        except Exception as exc:
            return None, None, f"{type(exc).__name__}: {exc}"
        rel = np.array([abs(trace.window_average(k, *window) - u[k - 1]) / u[k - 1]
                        for k in range(1, k_max + 1)])
        ks = kolmogorov_distance(states[-1].lambdas, quad)
        return rel, ks, None

    results = _run_replicas(worker, spec.seeds, threads)

    rel_error = np.full((spec.replicas, k_max), np.nan)
    ks_distance = np.full(spec.replicas, np.nan)
    failures = []
    anomalies = []
    for r, (rel, ks, err) in enumerate(results):
        if err is not None:
            failures.append((spec.seeds[r], err))
            continue
        rel_error[r] = rel
        ks_distance[r] = ks
        moments_ok = bool(np.all(rel <= rel_tolerance))
        if moments_ok and carleman > CARLEMAN_THRESHOLD and ks > ks_tolerance:
            anomalies.append(
                f"seed {spec.seeds[r]}: window moments pass and the determinacy "
                f"diagnostic is healthy ({carleman:.3f} > {CARLEMAN_THRESHOLD}) "
                f"but the CDF distance {ks:.4f} exceeds {ks_tolerance}")
    ok = (not failures
          and bool(np.all(rel_error <= rel_tolerance))
          and bool(np.all(ks_distance <= ks_tolerance)))
    return LongtimeReport(
        spec=spec, window=window, stationary=tuple(u), rel_error=rel_error,
        ks_distance=ks_distance, rel_tolerance=rel_tolerance,
        ks_tolerance=ks_tolerance, quadrature_size=quadrature_size,
        carleman_sum=carleman, anomalies=tuple(anomalies),
        failures=tuple(failures), passed=ok)


@dataclass(frozen=True, eq=False)
class MartingaleReport:
    """Scaling of the order-1 residual variance across ensemble sizes."""

    specs: tuple               # one ExperimentSpec per size
    sizes: tuple
    residual_final: np.ndarray  # (sizes, replicas) M_1 at t_max
    qv_mean: np.ndarray        # (sizes,) mean quadratic-variation target
    n_times_var: np.ndarray    # (sizes,) N * Var(M_1(t_max))
    ratio: float               # max / min of n_times_var
    ratio_limit: float
    failures: tuple
    passed: bool

    @property
    def anomalies(self) -> tuple:
        return ()

    def rows(self):
        out = []
        for i, (spec, n) in enumerate(zip(self.specs, self.sizes)):
            rid = spec.run_id
            for r, seed in enumerate(spec.seeds):
                out.append((rid, 1, n, seed, "residual_final", self.residual_final[i, r]))
            out.append((rid, 1, n, AGGREGATE, "qv_target_mean", self.qv_mean[i]))
            out.append((rid, 1, n, AGGREGATE, "n_times_var", self.n_times_var[i]))
        rid = self.specs[-1].run_id
        for n, seed, _ in self.failures:
            out.append((self.specs[self.sizes.index(n)].run_id, AGGREGATE, n, seed,
                        "failed", 1.0))
        out.append((rid, 1, AGGREGATE, AGGREGATE, "nvar_ratio", self.ratio))
        out.append((rid, AGGREGATE, AGGREGATE, AGGREGATE, "pass", float(self.passed)))
        return out

    def spec_entries(self) -> list:
        return [dict(run_id=s.run_id, **s.to_dict()) for s in self.specs]

    def thresholds(self) -> dict:
        return {"ratio_limit": self.ratio_limit, "sizes": list(self.sizes)}


def martingale_sweep(alpha: float, c: float, init: InitialCondition, sizes, seeds,
                     t_max: float = 1.0, scheme: SchemeConfig | None = None,
                     ratio_limit: float = MARTINGALE_RATIO_LIMIT,
                     threads: int | None = None) -> MartingaleReport:
    """Check that N * Var(M_1(t_max)) stays flat across ensemble sizes.

    The residual of a single replica shrinks like 1/sqrt(N), so the
    N-scaled variance over seeds should be size-independent up to
    sampling noise; the report passes when max/min <= ratio_limit.
    """
    scheme = scheme or SchemeConfig()
    sizes = tuple(int(n) for n in sizes)
    seeds = tuple(int(s) for s in seeds)
    if len(sizes) < 2:
        raise ValueError("need at least two sizes")
    if len(seeds) < 3:
        raise ValueError("need at least three seeds for a variance")
    grid = uniform_grid(t_max, scheme.dt)
    specs = []
    residuals = np.full((len(sizes), len(seeds)), np.nan)
    qv_mean = np.full(len(sizes), np.nan)
    failures = []
    for i, n in enumerate(sizes):
        params = ModelParams(alpha, c, n)
        spec = ExperimentSpec(params=params, init=init, scheme=scheme, grid=grid,
                              k_max=1, seeds=seeds)
        specs.append(spec)

        def worker(seed, params=params, spec=spec):
            try:
                trace = simulate_path(params, init, grid, _replica_config(spec, seed), 1)
            except Exception as exc:
                return None, None, f"{type(exc).__name__}: {exc}"
            m1 = martingale_residual(trace, params, 1)[-1]
            qv = martingale_qv_target(trace, params, 1)[-1]
            return m1, qv, None

        results = _run_replicas(worker, seeds, threads)
        qvs = []
        for r, (m1, qv, err) in enumerate(results):
            if err is not None:
                failures.append((n, seeds[r], err))
            else:
                residuals[i, r] = m1
                qvs.append(qv)
        if qvs:
            qv_mean[i] = float(np.mean(qvs))
    with np.errstate(all="ignore"):
        n_times_var = np.array([n * np.nanvar(residuals[i], ddof=1)
                                for i, n in enumerate(sizes)])
    finite = n_times_var[np.isfinite(n_times_var)]
    ratio = float(finite.max() / finite.min()) if finite.size == len(sizes) else math.inf
    return MartingaleReport(
        specs=tuple(specs), sizes=sizes, residual_final=residuals, qv_mean=qv_mean,
        n_times_var=n_times_var, ratio=ratio, ratio_limit=ratio_limit,
        failures=tuple(failures), passed=bool(ratio <= ratio_limit and not failures))


@dataclass(frozen=True, eq=False)
class VerificationSummary:
    """Bundle of reports forming one verdict, ready for serialization."""

    reports: tuple
    passed: bool
    anomalies: tuple

    @classmethod
    def combine(cls, reports) -> "VerificationSummary":
        reports = tuple(reports)
        anomalies = tuple(a for rep in reports for a in rep.anomalies)
        return cls(reports=reports, passed=bool(all(r.passed for r in reports)),
                   anomalies=anomalies)

    def rows(self):
        return [row for rep in self.reports for row in rep.rows()]

    def spec_entries(self) -> list:
        return [e for rep in self.reports for e in rep.spec_entries()]

    def thresholds(self) -> dict:
        return {type(rep).__name__: rep.thresholds() for rep in self.reports}


def _format_value(v) -> str:
    f = float(v)
    if math.isnan(f):
        return "nan"
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def emit_results(report, path, fmt: str = "both") -> list:
    """Serialize a report (or summary) next to ``path``.

    ``path`` is a prefix: emit_results(rep, "out/run", "both") writes
    out/run.csv and out/run.json.  The CSV has the fixed header
    run_id,k,N,seed,metric,value with one row per recorded quantity;
    aggregate rows use -1 in the k, N, or seed column.  The JSON carries
    the full spec echo, every threshold, the same rows, anomalies, and
    the overall verdict.  Writing is deterministic: the same report
    serializes to identical bytes.
    """
    if fmt not in ("csv", "json", "both"):
        raise ValueError(f"format must be csv, json, or both, got {fmt!r}")
    path = Path(path)
    if path.parent != Path("") and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    rows = report.rows()
    written = []
    if fmt in ("csv", "both"):
        target = path.with_suffix(".csv")
        try:
            with open(target, "w", newline="\n", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_HEADER)
                for rid, k, n, seed, metric, value in rows:
                    writer.writerow([rid, k, n, seed, metric, _format_value(value)])
        except OSError as exc:
            raise OSError(f"cannot write CSV to {target}: {exc}") from exc
        written.append(target)
    if fmt in ("json", "both"):
        target = path.with_suffix(".json")
        payload = {
            "spec": report.spec_entries(),
            "thresholds": report.thresholds(),
            "results": [
                {"run_id": rid, "k": k, "N": n, "seed": seed, "metric": metric,
                 "value": None if (isinstance(value, float) and math.isnan(value))
                 else float(value)}
                for rid, k, n, seed, metric, value in rows
            ],
            "anomalies": list(report.anomalies),
            "pass": report.passed,
        }
        try:
            with open(target, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write JSON to {target}: {exc}") from exc
        written.append(target)
    return written
