"""Monte Carlo engine for the interacting square-root particle system.

Two schemes integrate the same ensemble:

* ``direct_lambda``: Euler steps on the positions themselves.  The noise
  coefficient sqrt(2 lambda) is degenerate at the origin, so coefficients
  are evaluated at the clipped positions max(lambda, 0) and accepted
  states are clipped back to [0, inf) (truncated Euler for square-root
  diffusions).
* ``radial_square``: Euler steps on x_i with lambda_i = x_i^2 / 2.  The
  noise is additive and the origin is handled by reflection, so this
  scheme has no negativity problem at all and serves as a cross-check.

Both share an adaptive substep controller.  A proposal is rejected when it
moves any particle further than step_fraction * (1 + position) or (direct
scheme) drives one below -CLAMP_TOLERANCE; rejection halves the substep,
and sustained success doubles it back, up to ``max_substeps`` halvings.

Pair denominators are floored: for sorted positions the difference
lambda_i - lambda_j (i > j) is replaced by max(difference, eps).  Exact
ties therefore break by index order, which keeps the pair forces
antisymmetric.  The floor eps combines the configured relative term with
a noise-scale term beta * sqrt((1 + mean) h / 2); the latter caps the kick
a coincident pair can receive in one substep at the diffusive separation
scale, so clustered initial data (a point mass, say) spreads at the
physical rate instead of exploding.

Reproducibility: every Gaussian block is indexed by (seed, position) in a
counter-based generator, so a path is a pure function of its seed and
grid, independent of thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import (CLAMP_TOLERANCE, EnsembleState, InitialCondition,
                    IntegrationError, ModelParams, MomentTrace,
                    empirical_moments, normalize_state)

DEFAULT_DT = 1e-3
DEFAULT_EPS_REL = 1e-12
DEFAULT_MAX_SUBSTEPS = 24
DEFAULT_STEP_FRACTION = 0.5
_SAFETY_SUBSTEPS = 10 ** 6  # hard cap per base step, against pathological configs

SCHEMES = ("direct_lambda", "radial_square")


@dataclass(frozen=True)
class SchemeConfig:
    """Discretization knobs shared by both schemes."""

    dt: float = DEFAULT_DT
    scheme: str = "direct_lambda"
    denom_epsilon: float = DEFAULT_EPS_REL
    max_substeps: int = DEFAULT_MAX_SUBSTEPS
    seed: int = 0
    step_fraction: float = DEFAULT_STEP_FRACTION

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.denom_epsilon > 0:
            raise ValueError(f"denom_epsilon must be > 0, got {self.denom_epsilon}")
        if int(self.max_substeps) != self.max_substeps or self.max_substeps < 1:
            raise ValueError(f"max_substeps must be an integer >= 1, got {self.max_substeps}")
        if not 0 < self.step_fraction <= 1:
            raise ValueError(f"step_fraction must lie in (0, 1], got {self.step_fraction}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        object.__setattr__(self, "max_substeps", int(self.max_substeps))
        object.__setattr__(self, "seed", int(self.seed))


class NoiseStream:
    """Counter-based Gaussian stream: (seed, position) determines each block."""

    def __init__(self, seed: int, position: int = 0):
        if seed < 0 or position < 0:
            raise ValueError("seed and position must be nonnegative")
        self.seed = int(seed)
        self.position = int(position)

    def normal(self, n: int) -> np.ndarray:
        """Next block of n standard normals; advances the position."""
        block = self.at(self.position, n)
        self.position += 1
        return block

    def at(self, position: int, n: int) -> np.ndarray:
        """The block at an explicit position, without touching the cursor."""
        gen = np.random.Generator(np.random.Philox(key=self.seed,
                                                   counter=position << 128))
        return gen.standard_normal(n)


class ZeroNoise(NoiseStream):
    """Noise-free stream, for integrating the drift flow alone."""

    def __init__(self):
        super().__init__(0)

    def at(self, position: int, n: int) -> np.ndarray:
        return np.zeros(n)


class BrownianTable:
    """Brownian increments pre-drawn on a fine lattice.

    Every step size that is a multiple of the lattice spacing sees the
    same underlying path, which is what a strong refinement study needs.
    """

    def __init__(self, seed: int, t_max: float, n_particles: int, h_fine: float):
        steps = int(round(t_max / h_fine))
        if abs(steps * h_fine - t_max) > 1e-9 * t_max:
            raise ValueError("t_max must be a multiple of h_fine")
        gen = np.random.Generator(np.random.Philox(key=seed))
        self._dw = gen.standard_normal((steps, n_particles)) * math.sqrt(h_fine)
        self._h = h_fine
        self._t_max = t_max

    def increment(self, t0: float, h: float) -> np.ndarray:
        i0 = t0 / self._h
        i1 = (t0 + h) / self._h
        j0, j1 = int(round(i0)), int(round(i1))
        if abs(i0 - j0) > 1e-6 or abs(i1 - j1) > 1e-6:
            raise ValueError(f"step [{t0}, {t0 + h}] is off the noise lattice")
        if j1 > self._dw.shape[0]:
            raise ValueError("step runs past the end of the noise table")
        return self._dw[j0:j1].sum(axis=0)


def _brownian(noise, t: float, h: float, n: int) -> np.ndarray:
    if isinstance(noise, BrownianTable):
        return noise.increment(t, h)
    return noise.normal(n) * math.sqrt(h)


# ---------------------------------------------------------------- kernels

@njit(cache=True, nogil=True)
def _pair_sum_lambda(lam, eps):
    # sum_{j != i} 2 lam_i / (lam_i - lam_j) on a sorted vector; the floor
    # on each difference breaks exact ties by index order
    n = lam.size
    out = np.empty(n)
    for i in range(n):
        li = lam[i]
        acc = 0.0
        for j in range(i):
            d = li - lam[j]
            if d < eps:
                d = eps
            acc += li / d
        for j in range(i + 1, n):
            d = lam[j] - li
            if d < eps:
                d = eps
            acc -= li / d
        out[i] = 2.0 * acc
    return out


@njit(cache=True, nogil=True)
def _pair_sum_radial(x, eps):
    # sum_{j != i} 2 x_i / (x_i^2 - x_j^2); the difference factor gets the
    # same floor as the direct scheme, the sum factor only guards 0 + 0
    n = x.size
    out = np.empty(n)
    for i in range(n):
        xi = x[i]
        acc = 0.0
        for j in range(i):
            d = xi - x[j]
            if d < eps:
                d = eps
            s = xi + x[j]
            if s < eps:
                s = eps
            acc += xi / (d * s)
        for j in range(i + 1, n):
            d = x[j] - xi
            if d < eps:
                d = eps
            s = x[j] + xi
            if s < eps:
                s = eps
            acc -= xi / (d * s)
        out[i] = 2.0 * acc
    return out


# ------------------------------------------------------------------ drift

def _pair_floor(mean_pos: float, beta: float, h: float, rel: float) -> float:
    # relative floor plus the noise-scale floor (see module docstring)
    return max(rel * (1.0 + mean_pos), beta * math.sqrt(0.5 * (1.0 + mean_pos) * h))


def drift_lambda(state, params: ModelParams, denom_epsilon: float | None = None) -> np.ndarray:
    """Drift -lambda_i + alpha + (beta/2) sum_{j != i} 2 lambda_i / (lambda_i - lambda_j).

    ``state`` is an EnsembleState or a sorted nonnegative vector.  With
    ``denom_epsilon`` unset, differences are floored at
    1e-12 * (1 + mean position).
    """
    lam = state.lambdas if isinstance(state, EnsembleState) else np.asarray(state, dtype=float)
    if lam.size > 1 and np.any(np.diff(lam) < 0):
        raise ValueError("positions must be sorted ascending")
    eps = DEFAULT_EPS_REL * (1.0 + lam.mean()) if denom_epsilon is None else denom_epsilon
    return -lam + params.alpha + 0.5 * params.beta * _pair_sum_lambda(lam, eps)


def drift_radial(state, params: ModelParams, denom_epsilon: float | None = None,
                 zero_epsilon: float | None = None) -> np.ndarray:
    """Radial drift k1/x_i + k2 sum_{j != i} 2 x_i/(x_i^2 - x_j^2) - x_i/2.

    The origin term is evaluated at max(x, zero_epsilon); zero_epsilon
    defaults to the same relative floor as the pair term.
    """
    x = state.lambdas if isinstance(state, EnsembleState) else np.asarray(state, dtype=float)
    if x.size > 1 and np.any(np.diff(x) < 0):
        raise ValueError("positions must be sorted ascending")
    eps = DEFAULT_EPS_REL * (1.0 + x.mean()) if denom_epsilon is None else denom_epsilon
    eps0 = eps if zero_epsilon is None else zero_epsilon
    wall = params.k1 / np.maximum(x, eps0)
    return wall + params.k2 * _pair_sum_radial(x, eps) - 0.5 * x


# ------------------------------------------------------------ integrators

def _advance_lambda(lam: np.ndarray, t: float, span: float, params: ModelParams,
                    config: SchemeConfig, noise) -> np.ndarray:
    """Advance sorted nonnegative positions by ``span`` with substeps <= dt."""
    n = lam.size
    alpha, beta = params.alpha, params.beta
    frac = config.step_fraction
    base = min(config.dt, span)
    remaining = span
    depth = 0
    streak = 0
    taken = 0
    h = base
    while remaining > 1e-12 * span:
        h_eff = min(h, remaining)
        eps = _pair_floor(lam.mean(), beta, h_eff, config.denom_epsilon)
        drift = -lam + alpha + 0.5 * beta * _pair_sum_lambda(lam, eps)
        dw = _brownian(noise, t, h_eff, n)
        prop = lam + h_eff * drift + np.sqrt(2.0 * lam) * dw
        move_ok = np.all(np.abs(prop - lam) <= frac * (1.0 + lam))
        if not move_ok or prop.min() < -CLAMP_TOLERANCE:
            depth += 1
            streak = 0
            if depth > config.max_substeps:
                raise IntegrationError(
                    f"substep controller exhausted {config.max_substeps} halvings at t={t:.6g}")
            h = h_eff / 2.0
            continue
        np.maximum(prop, 0.0, out=prop)
        prop.sort()
        lam = prop
        t += h_eff
        remaining -= h_eff
        taken += 1
        if taken > _SAFETY_SUBSTEPS:
            raise IntegrationError(f"more than {_SAFETY_SUBSTEPS} substeps in one base step")
        if depth > 0:
            streak += 1
            if streak >= 2:  # hysteresis before growing the step back
                h = min(2.0 * h, base)
                depth -= 1
                streak = 0
    return lam


def _advance_radial(x: np.ndarray, t: float, span: float, params: ModelParams,
                    config: SchemeConfig, noise) -> np.ndarray:
    """Advance sorted nonnegative radial positions by ``span``."""
    n = x.size
    k1, k2 = params.k1, params.k2
    frac = config.step_fraction
    base = min(config.dt, span)
    remaining = span
    depth = 0
    streak = 0
    taken = 0
    h = base
    while remaining > 1e-12 * span:
        h_eff = min(h, remaining)
        eps = _pair_floor(x.mean(), 2.0 * k2, h_eff, config.denom_epsilon)
        eps0 = max(eps, math.sqrt(k1 * h_eff))  # escape scale of the origin wall
        drift = k1 / np.maximum(x, eps0) + k2 * _pair_sum_radial(x, eps) - 0.5 * x
        dw = _brownian(noise, t, h_eff, n)
        prop = x + h_eff * drift + dw
        if not np.all(np.abs(prop - x) <= frac * (1.0 + x)):
            depth += 1
            streak = 0
            if depth > config.max_substeps:
                raise IntegrationError(
                    f"substep controller exhausted {config.max_substeps} halvings at t={t:.6g}")
            h = h_eff / 2.0
            continue
        np.abs(prop, out=prop)  # reflect at the origin
        prop.sort()
        x = prop
        t += h_eff
        remaining -= h_eff
        taken += 1
        if taken > _SAFETY_SUBSTEPS:
            raise IntegrationError(f"more than {_SAFETY_SUBSTEPS} substeps in one base step")
        if depth > 0:
            streak += 1
            if streak >= 2:
                h = min(2.0 * h, base)
                depth -= 1
                streak = 0
    return x


def step_lambda(state: EnsembleState, params: ModelParams, config: SchemeConfig,
                noise: NoiseStream) -> EnsembleState:
    """One base step of the direct scheme, dt wide."""
    lam = _advance_lambda(state.lambdas.copy(), state.time, config.dt, params, config, noise)
    return normalize_state(lam, state.time + config.dt)


def step_radial(state: EnsembleState, params: ModelParams, config: SchemeConfig,
                noise: NoiseStream) -> EnsembleState:
    """One base step of the radial scheme; the state carries x, not lambda."""
    x = _advance_radial(state.lambdas.copy(), state.time, config.dt, params, config, noise)
    return normalize_state(x, state.time + config.dt)


def lambda_from_radial(state: EnsembleState) -> EnsembleState:
    """Map radial positions x to lambda = x^2 / 2."""
    return EnsembleState(time=state.time, lambdas=0.5 * state.lambdas ** 2)


def simulate_path(params: ModelParams, init, grid: np.ndarray, config: SchemeConfig,
                  k_max: int, noise=None, return_states: bool = False):
    """Integrate one replica and record empirical moments on the grid.

    Parameters
    ----------
    init : InitialCondition or array
        Starting ensemble; arrays are taken as explicit positions.
    grid : array
        Strictly increasing output times; grid[0] is the initial time.
    k_max : int
        Highest moment order recorded (row 0 is always present).
    noise : optional
        NoiseStream, ZeroNoise or BrownianTable; defaults to a fresh
        NoiseStream(config.seed).

    Returns the MomentTrace, or (trace, states) with ``return_states``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonempty and strictly increasing")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if not isinstance(init, InitialCondition):
        init = InitialCondition.explicit(init)
    if noise is None:
        noise = NoiseStream(config.seed)

    lam0 = init.sample(params.n_particles)
    radial = config.scheme == "radial_square"
    pos = np.sqrt(2.0 * lam0) if radial else lam0.copy()
    pos.sort()

    values = np.empty((k_max + 1, grid.size))
    states = []

    def record(j, pos, t):
        lam = 0.5 * pos ** 2 if radial else pos
        values[:, j] = empirical_moments(lam, k_max)
        if return_states:
            states.append(EnsembleState(time=t, lambdas=np.sort(lam)))

    record(0, pos, grid[0])
    advance = _advance_radial if radial else _advance_lambda
    for j in range(1, grid.size):
        pos = advance(pos, grid[j - 1], grid[j] - grid[j - 1], params, config, noise)
        record(j, pos, grid[j])

    trace = MomentTrace(grid=grid, values=values)
    return (trace, states) if return_states else trace


# ----------------------------------------------------------- diagnostics

def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def forcing_term(trace: MomentTrace, params: ModelParams, k: int) -> np.ndarray:
    """Finite-N drift of S_k:

    F_k = (k(alpha+k-1) - c k^2/N) S_{k-1} + c k sum_{i=0}^{k-1} S_i S_{k-1-i}.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if trace.k_max < k - 1:
        raise ValueError(f"trace lacks order {k - 1}")
    S = trace.values
    N = params.n_particles
    conv = np.zeros_like(S[0])
    for i in range(k):
        conv += S[i] * S[k - 1 - i]
    lead = k * (params.alpha + k - 1) - params.c * k * k / N
    return lead * S[k - 1] + params.c * k * conv


def martingale_residual(trace: MomentTrace, params: ModelParams, k: int) -> np.ndarray:
    """Residual path M_k(t) = S_k(t) - S_k(0) + k int S_k - int F_k.

    For the exact dynamics this is a martingale whose size shrinks like
    1/sqrt(N); on a trace it is computed with trapezoid integrals, so
    quadrature error of order (grid spacing)^2 rides along.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if trace.k_max < k:
        raise ValueError(f"trace lacks order {k}")
    S_k = trace.order(k)
    F = forcing_term(trace, params, k)
    return S_k - S_k[0] + k * _cumtrapz(S_k, trace.grid) - _cumtrapz(F, trace.grid)


def martingale_qv_target(trace: MomentTrace, params: ModelParams, k: int) -> np.ndarray:
    """Expected quadratic variation (2 k^2 / N) int S_{2k-1} of the residual."""
    if trace.k_max < 2 * k - 1:
        raise ValueError(f"quadratic variation of order {k} needs moments up to {2 * k - 1}")
    return (2.0 * k * k / params.n_particles) * _cumtrapz(trace.order(2 * k - 1), trace.grid)
