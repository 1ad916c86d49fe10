"""Core types for the high-temperature Laguerre particle system.

Parameters, particle states, initial conditions, and gridded moment
traces.  Everything here is an immutable value object so that replicas
can share them freely across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# negativity forgiveness for simulated states: the truncated Euler scheme
# can round to tiny negatives; anything larger indicates instability
CLAMP_TOLERANCE = 1e-10


class IntegrationError(RuntimeError):
    """Adaptive substep controller exhausted its halving budget."""


class ConditioningError(ValueError):
    """A moment-to-recurrence factorization lost all significant digits."""


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the N-particle system.

    alpha is the shape parameter (> 1/2), c the rescaled coupling (> 0).
    The pair coupling per particle is beta = 2c/N, which keeps the total
    interaction of the same order as the confinement for every N.
    """

    alpha: float
    c: float
    n_particles: int

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise ValueError(f"alpha must be > 1/2, got {self.alpha}")
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ValueError(f"n_particles must be an integer >= 1, got {self.n_particles}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "n_particles", int(self.n_particles))

    @property
    def beta(self) -> float:
        return 2.0 * self.c / self.n_particles

    @property
    def k1(self) -> float:
        # radial form: strength of the repelling wall at the origin
        return self.alpha - 0.5

    @property
    def k2(self) -> float:
        # radial form: pair coupling
        return self.c / self.n_particles


def validate_params(alpha: float, c: float, n_particles: int) -> ModelParams:
    """Check parameter domains and return an immutable parameter set."""
    return ModelParams(alpha, c, n_particles)


@dataclass(frozen=True)
class EnsembleState:
    """Sorted nonnegative particle positions at a fixed time."""

    time: float
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a nonempty 1-d vector")
        if not self.time >= 0:
            raise ValueError(f"time must be >= 0, got {self.time}")
        if lam[0] < 0:
            raise ValueError(f"negative particle position {lam[0]}")
        if np.any(np.diff(lam) < 0):
            raise ValueError("lambdas must be sorted ascending")
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n(self) -> int:
        return self.lambdas.size

    def moments(self, k_max: int) -> np.ndarray:
        """Empirical moments S_0..S_{k_max}, S_k = mean(lambda^k)."""
        return empirical_moments(self.lambdas, k_max)


def empirical_moments(lam: np.ndarray, k_max: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        raise ValueError("cannot take moments of an empty ensemble")
    out = np.empty(k_max + 1)
    out[0] = 1.0
    p = np.ones_like(lam)
    for k in range(1, k_max + 1):
        p = p * lam
        out[k] = p.mean()
    return out


def normalize_state(raw: np.ndarray, time: float,
                    clamp_tolerance: float = CLAMP_TOLERANCE) -> EnsembleState:
    """Sort a raw position vector and clamp tiny negatives to zero.

    Entries below ``-clamp_tolerance`` are treated as an integration
    failure and raise ValueError rather than being hidden.
    """
    lam = np.array(raw, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("raw positions must be a nonempty 1-d vector")
    low = lam.min()
    if low < -clamp_tolerance:
        raise ValueError(f"position {low} below -clamp_tolerance; scheme unstable")
    np.maximum(lam, 0.0, out=lam)
    lam.sort()
    return EnsembleState(time=time, lambdas=lam)


@dataclass(frozen=True)
class InitialCondition:
    """Starting ensemble, either an explicit vector or a named distribution.

    Named forms are sampled by deterministic quantiles so a run is a pure
    function of its seed.  Their exact moments feed the limiting hierarchy;
    being moments of an actual nonnegative distribution they are always a
    valid Stieltjes sequence.
    """

    kind: str                      # "explicit" | "point_mass" | "uniform"
    lambdas: tuple | None = None
    lo: float = 0.0
    hi: float = 0.0

    def __post_init__(self):
        if self.kind == "explicit":
            vec = np.array(self.lambdas, dtype=float)
            if vec.ndim != 1 or vec.size == 0:
                raise ValueError("explicit initial data must be a nonempty vector")
            if vec.min() < 0:
                raise ValueError("explicit initial data must be nonnegative")
            vec.sort()
            object.__setattr__(self, "lambdas", tuple(vec))
        elif self.kind == "point_mass":
            if not self.lo >= 0:
                raise ValueError("point mass location must be >= 0")
        elif self.kind == "uniform":
            if not (0 <= self.lo < self.hi):
                raise ValueError("uniform support needs 0 <= lo < hi")
        else:
            raise ValueError(f"unknown initial condition kind {self.kind!r}")

    @classmethod
    def explicit(cls, lambdas) -> "InitialCondition":
        return cls(kind="explicit", lambdas=tuple(np.asarray(lambdas, float)))

    @classmethod
    def point_mass(cls, x0: float) -> "InitialCondition":
        return cls(kind="point_mass", lo=float(x0))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "InitialCondition":
        return cls(kind="uniform", lo=float(lo), hi=float(hi))

    def sample(self, n: int) -> np.ndarray:
        """Sorted positions for an N-particle run."""
        if self.kind == "explicit":
            if len(self.lambdas) != n:
                raise ValueError(f"explicit initial data has {len(self.lambdas)} entries, need {n}")
            return np.array(self.lambdas, dtype=float)
        if self.kind == "point_mass":
            return np.full(n, self.lo)
        # mid-quantile sample of the uniform law
        q = (np.arange(n) + 0.5) / n
        return self.lo + (self.hi - self.lo) * q

    def target_moments(self, k_max: int) -> list:
        """Exact moments a_1..a_{k_max} of the initial law (Fractions)."""
        if self.kind == "explicit":
            vec = [Fraction(x) for x in self.lambdas]
            n = len(vec)
            out = []
            p = list(vec)
            for _ in range(k_max):
                out.append(sum(p) / n)
                p = [pi * xi for pi, xi in zip(p, vec)]
            return out
        if self.kind == "point_mass":
            x0 = Fraction(self.lo)
            return [x0 ** k for k in range(1, k_max + 1)]
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        # mean of x^k over [lo, hi]
        return [(hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * (hi - lo))
                for k in range(1, k_max + 1)]

    def describe(self) -> str:
        if self.kind == "explicit":
            return f"explicit[{len(self.lambdas)}]"
        if self.kind == "point_mass":
            return f"point_mass:{self.lo:g}"
        return f"uniform:{self.lo:g},{self.hi:g}"


@dataclass(frozen=True)
class MomentTrace:
    """Empirical moments S_0..S_K sampled on a time grid.

    values[k, j] is S_k at grid[j]; row 0 is identically one and every
    entry is nonnegative because the particles are.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        vals = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise ValueError("grid must be a nonempty 1-d vector")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if vals.ndim != 2 or vals.shape[1] != grid.size:
            raise ValueError("values must have shape (k_max+1, len(grid))")
        if not np.all(vals[0] == 1.0):
            raise ValueError("order-0 row must be identically 1")
        if vals.min() < 0:
            raise ValueError("moment values must be nonnegative")
        grid.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)

    @property
    def k_max(self) -> int:
        return self.values.shape[0] - 1

    def order(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.k_max:
            raise ValueError(f"trace holds orders 0..{self.k_max}, requested {k}")
        return self.values[k]

    def window_average(self, k: int, t0: float, t1: float) -> float:
        """Trapezoid time average of S_k over [t0, t1]."""
        sel = (self.grid >= t0) & (self.grid <= t1)
        if sel.sum() < 2:
            raise ValueError("averaging window contains fewer than 2 grid points")
        t = self.grid[sel]
        return float(np.trapezoid(self.order(k)[sel], t) / (t[-1] - t[0]))
