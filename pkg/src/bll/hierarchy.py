"""Closed-form solver for the limiting moment hierarchy.

In the large-N limit the moments m_k(t) of the empirical measure obey

    m_k' = -k m_k + k [ (alpha + k - 1) m_{k-1} + c sum_{i=0}^{k-1} m_i m_{k-1-i} ],

with m_0 = 1 and m_k(0) = a_k.  By induction the forcing at order k is a
polynomial in e^{-t} of degree k - 1, so integrating the linear equation
term by term makes m_k itself such a polynomial of degree k; no resonant
terms appear because the forcing frequencies 0..k-1 never hit k.  All
coefficient arithmetic is exact over the rationals.  Float parameters are
converted to the dyadic rational they represent, so the recursion itself
never loses precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# default minimal eigenvalue slack for Hankel tests, relative to trace/n
HANKEL_RTOL = 1e-8


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


@dataclass(frozen=True)
class ExpPolynomial:
    """Polynomial in e^{-t}: coeffs[i] multiplies exp(-i*t)."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(_rat(c) for c in self.coeffs)
        if len(cs) == 0:
            raise ValueError("ExpPolynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", cs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def constant(self) -> Fraction:
        """Value at t = +infinity."""
        return self.coeffs[0]

    def initial_value(self) -> Fraction:
        return sum(self.coeffs, Fraction(0))

    def __call__(self, t):
        return eval_moment(self, t)

    def eval_exact(self, x: Fraction) -> Fraction:
        """Exact value as a function of x = e^{-t}, for rational x."""
        x = _rat(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "ExpPolynomial":
        return ExpPolynomial(tuple(-i * c for i, c in enumerate(self.coeffs)))

    def __add__(self, other: "ExpPolynomial") -> "ExpPolynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return ExpPolynomial(tuple(out))

    def __sub__(self, other: "ExpPolynomial") -> "ExpPolynomial":
        return self + other.scale(-1)

    def __mul__(self, other: "ExpPolynomial") -> "ExpPolynomial":
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return ExpPolynomial(tuple(out))

    def scale(self, s) -> "ExpPolynomial":
        s = _rat(s)
        return ExpPolynomial(tuple(s * c for c in self.coeffs))


def eval_moment(poly: ExpPolynomial, t):
    """Evaluate an exponential polynomial at scalar or array times."""
    x = np.exp(-np.asarray(t, dtype=float))
    out = np.zeros_like(x)
    for c in reversed(poly.coeffs):
        out = out * x + float(c)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MomentSequence:
    """Moments m_0..m_K of a (candidate) measure, m_0 = 1."""

    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        if len(vals) == 0:
            raise ValueError("empty moment sequence")
        if vals[0] != 1:
            raise ValueError(f"m_0 must equal 1, got {vals[0]}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def as_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])


def solve_hierarchy(alpha, c, a, k_max: int) -> list:
    """Solve the hierarchy exactly up to order k_max.

    Parameters
    ----------
    alpha, c : number
        Model parameters, alpha > 1/2 and c > 0.  c = 0 is accepted as the
        degenerate no-coupling case, where the equations decouple into
        linear relaxation.
    a : sequence
        Initial moments a_1..a_{k_max} (a[0] is the order-1 moment).
    k_max : int
        Highest order to solve.

    Returns
    -------
    list of ExpPolynomial, entry k representing m_k; entry 0 is the
    constant polynomial 1.
    """
    al, cc = _rat(alpha), _rat(c)
    if not al > Fraction(1, 2):
        raise ValueError(f"alpha must be > 1/2, got {alpha}")
    if cc < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if len(a) < k_max:
        raise ValueError(f"need {k_max} initial moments, got {len(a)}")

    polys = [ExpPolynomial((Fraction(1),))]
    for k in range(1, k_max + 1):
        a_k = _rat(a[k - 1])
        # forcing g = k(alpha+k-1) m_{k-1} + c k sum_i m_i m_{k-1-i}, degree k-1
        g = [Fraction(0)] * k
        for i, ci in enumerate(polys[k - 1].coeffs):
            g[i] += k * (al + k - 1) * ci
        for i in range(k):
            pa, pb = polys[i].coeffs, polys[k - 1 - i].coeffs
            for ia, ca in enumerate(pa):
                if ca == 0:
                    continue
                for ib, cb in enumerate(pb):
                    g[ia + ib] += cc * k * ca * cb
        # integrate m' = -k m + g term by term; the e^{-k t} mode absorbs
        # whatever is left of the initial value
        coeffs = [g[nu] / (k - nu) for nu in range(k)]
        coeffs.append(a_k - sum(coeffs, Fraction(0)))
        polys.append(ExpPolynomial(tuple(coeffs)))
    return polys


def stationary_constants(alpha, c, k_max: int) -> list:
    """The recursion satisfied by the t -> infinity constants.

    C_0 = 1, C_k = (alpha + k - 1) C_{k-1} + c sum_{i<k} C_i C_{k-1-i}.
    """
    al, cc = _rat(alpha), _rat(c)
    out = [Fraction(1)]
    for k in range(1, k_max + 1):
        conv = sum(out[i] * out[k - 1 - i] for i in range(k))
        out.append((al + k - 1) * out[k - 1] + cc * conv)
    return out


def limiting_constants(polys: list, alpha, c) -> MomentSequence:
    """Extract the t -> infinity limits of solved moments.

    Cross-checks the extracted constant terms against the stationary
    recursion; a mismatch means the solver and the recursion disagree and
    is raised as an error rather than returned.
    """
    consts = [p.constant for p in polys]
    expected = stationary_constants(alpha, c, len(polys) - 1)
    if consts != expected:
        raise ValueError("constant terms disagree with the stationary recursion")
    return MomentSequence(tuple(consts))


def hierarchy_residual(polys: list, alpha, c, k: int) -> ExpPolynomial:
    """Exact defect of m_k in the hierarchy ODE; zero iff m_k solves it.

    Computes m_k' + k m_k - k (alpha + k - 1) m_{k-1} - c k sum m_i m_{k-1-i}
    as an exponential polynomial, by routines independent of the solver's
    own coefficient bookkeeping.
    """
    al, cc = _rat(alpha), _rat(c)
    res = polys[k].derivative() + polys[k].scale(k)
    res = res - polys[k - 1].scale(k * (al + k - 1))
    for i in range(k):
        res = res - (polys[i] * polys[k - 1 - i]).scale(cc * k)
    return res


@dataclass(frozen=True)
class BoundSequence:
    """A priori envelopes for moments, stored in log scale.

    log_values[k-1] is log(Lambda_k); keeping logs lets diagnostics reach
    orders ~1e4 where Lambda_k itself overflows a double.
    """

    log_values: np.ndarray

    def __post_init__(self):
        lv = np.array(self.log_values, dtype=float)
        lv.flags.writeable = False
        object.__setattr__(self, "log_values", lv)

    def __len__(self) -> int:
        return self.log_values.size

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)


def lambda_bounds(alpha, c, a, k_max: int, polys: list | None = None,
                  grid: np.ndarray | None = None) -> BoundSequence:
    """Envelope recursion Lambda_1 = max(alpha+c, a_1),
    Lambda_k = max((alpha+k-1+ck) Lambda_{k-1}, a_k).

    If ``polys`` is given, verifies numerically that each solved moment
    stays below its envelope on the grid.
    """
    alpha, c = float(alpha), float(c)
    if len(a) < k_max:
        raise ValueError(f"need {k_max} initial moments, got {len(a)}")
    af = [float(x) for x in a]
    logs = np.empty(k_max)
    prev = None
    for k in range(1, k_max + 1):
        la = math.log(af[k - 1]) if af[k - 1] > 0 else -math.inf
        if k == 1:
            logs[0] = max(math.log(alpha + c), la)
        else:
            logs[k - 1] = max(math.log(alpha + k - 1 + c * k) + prev, la)
        prev = logs[k - 1]
    bounds = BoundSequence(logs)
    if polys is not None:
        ts = default_time_grid() if grid is None else grid
        for k in range(1, min(k_max, len(polys) - 1) + 1):
            top = float(np.max(eval_moment(polys[k], ts)))
            if top > bounds.values[k - 1] * (1 + 1e-12):
                raise ValueError(f"moment m_{k} exceeds its envelope: {top} > {bounds.values[k-1]}")
    return bounds


def carleman_diagnostic(bounds: BoundSequence, k_terms: int | None = None) -> np.ndarray:
    """Partial sums of Lambda_k^{-1/(2k)}.

    The underlying moment problem is determinate when the full series
    diverges, so growing partial sums are the healthy signal.
    """
    K = len(bounds) if k_terms is None else min(k_terms, len(bounds))
    ks = np.arange(1, K + 1)
    terms = np.exp(-bounds.log_values[:K] / (2.0 * ks))
    return np.cumsum(terms)


@dataclass(frozen=True)
class HankelReport:
    passed: bool
    order: int
    min_eig: float
    min_eig_shifted: float
    tol: float
    tol_shifted: float


def hankel_psd_check(m, rtol: float = HANKEL_RTOL) -> HankelReport:
    """Stieltjes test: Hankel and shifted Hankel matrices must be PSD.

    Each matrix is built at the largest order the data supports, so every
    moment participates: order (len-1)//2 for (m_{i+j}) and (len-2)//2
    for (m_{i+j+1}).  The eigenvalue slack scales with trace/n to absorb
    eigensolver noise on fast-growing sequences.
    """
    vals = m.as_floats() if isinstance(m, MomentSequence) else np.asarray(
        [float(v) for v in m])
    if vals.size < 2:
        raise ValueError("need at least m_0, m_1 for a Hankel test")
    n0 = (vals.size - 1) // 2
    n1 = (vals.size - 2) // 2
    H = np.array([[vals[i + j] for j in range(n0 + 1)] for i in range(n0 + 1)])
    Hs = np.array([[vals[i + j + 1] for j in range(n1 + 1)] for i in range(n1 + 1)])
    e0 = float(np.linalg.eigvalsh(H).min())
    e1 = float(np.linalg.eigvalsh(Hs).min())
    t0 = rtol * np.trace(H) / (n0 + 1)
    t1 = rtol * np.trace(Hs) / (n1 + 1)
    return HankelReport(passed=bool(e0 >= -t0 and e1 >= -t1), order=n0,
                        min_eig=e0, min_eig_shifted=e1, tol=t0, tol_shifted=t1)


def default_time_grid(t_max: float = 15.0, n: int = 256) -> np.ndarray:
    """Conformance grid on [0, t_max]: log-spaced early times merged with a
    uniform cover, so both transients and the tail get sampled."""
    half = n // 2
    geo = np.geomspace(t_max * 1e-4, t_max, half)
    uni = np.linspace(0.0, t_max, n - half)
    return np.unique(np.concatenate([uni, geo]))
