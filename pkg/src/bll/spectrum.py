"""The limiting spectral measure, reached through its moment sequence.

The stationary moments u_k satisfy the self-convolutive recursion

    u_0 = 1,   u_k = (alpha + k - 1) u_{k-1} + c sum_{i=0}^{k-1} u_i u_{k-1-i},

and coincide with the (1,1) matrix elements of powers of a Jacobi operator
that factors as L L^T with bidiagonal L.  That factorization gives direct
access to Gaussian quadrature (eigendecomposition of truncations), to the
Stieltjes transform (continued fraction), and back again from moments to
recurrence coefficients (exact Hankel-style factorization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .hierarchy import MomentSequence, _rat
from .model import ConditioningError

WEIGHT_SUM_TOL = 1e-12
NODE_CLAMP = 1e-10


@dataclass(frozen=True)
class JacobiOperator:
    """Symmetric tridiagonal operator: diag and positive off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=float)
        e = np.array(self.offdiag, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("diag must be a nonempty vector")
        if e.shape != (d.size - 1,):
            raise ValueError("offdiag must have length len(diag) - 1")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("operator entries must be finite")
        if e.size and e.min() <= 0:
            raise ValueError("off-diagonal entries must be strictly positive")
        d.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def size(self) -> int:
        return self.diag.size

    def truncate(self, n: int) -> "JacobiOperator":
        if not 1 <= n <= self.size:
            raise ValueError(f"truncation size {n} outside 1..{self.size}")
        return JacobiOperator(self.diag[:n], self.offdiag[:n - 1])

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out


def self_convolutive_moments(alpha, c, k_max: int) -> MomentSequence:
    """Stationary moments u_0..u_{k_max}, exact rationals.

    c = 0 is accepted: the convolution collapses and the recursion yields
    the rising-factorial moments of the plain relaxation measure.
    """
    al, cc = _rat(alpha), _rat(c)
    if not al > Fraction(1, 2):
        raise ValueError(f"alpha must be > 1/2, got {alpha}")
    if cc < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    u = [Fraction(1)]
    for k in range(1, k_max + 1):
        conv = sum(u[i] * u[k - 1 - i] for i in range(k))
        u.append((al + k - 1) * u[k - 1] + cc * conv)
    return MomentSequence(tuple(u))


def _entry_diag(alpha: float, c: float, i: int) -> float:
    # 0-based row i; row 0 has no lower bidiagonal term
    return (alpha + c + i) + (c + i if i >= 1 else 0.0)


def _entry_offdiag(alpha: float, c: float, i: int) -> float:
    # coupling of rows i, i+1
    return math.sqrt((alpha + c + i) * (c + i + 1))


def build_jacobi(alpha, c, n: int) -> JacobiOperator:
    """Jacobi operator of the limit measure, truncated to size n.

    Arises as L L^T with L lower bidiagonal, L[i,i] = sqrt(alpha + c + i)
    and L[i,i-1] = sqrt(c + i), so the (1,1) entry is alpha + c and every
    principal truncation is positive definite.
    """
    alpha, c = float(alpha), float(c)
    if not alpha > 0.5:
        raise ValueError(f"alpha must be > 1/2, got {alpha}")
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c}")
    if n < 1:
        raise ValueError("n must be >= 1")
    d = np.array([_entry_diag(alpha, c, i) for i in range(n)])
    e = np.array([_entry_offdiag(alpha, c, i) for i in range(n - 1)])
    return JacobiOperator(d, e)


def jacobi_moment(op: JacobiOperator, k: int) -> float:
    """(J^k)(1,1) by repeated tridiagonal application to e_1.

    A length-k walk from index 0 back to 0 never leaves the first k+1
    rows, so the truncation must satisfy size >= k+1 to be exact.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if op.size < k + 1:
        raise ValueError(f"truncation {op.size} too small for moment order {k}")
    v = np.zeros(op.size)
    v[0] = 1.0
    for _ in range(k):
        v = op.matvec(v)
    return float(v[0])


def jacobi_moments_exact(alpha, c, k_max: int) -> list:
    """Exact rational (J^k)(1,1) for k = 0..k_max.

    Conjugating J by the diagonal of running off-diagonal products turns it
    into a tridiagonal matrix with rational entries (the off-diagonal
    squares), identical (1,1) matrix powers, and no square roots.
    """
    al, cc = _rat(alpha), _rat(c)
    n = k_max + 1
    d = [al + cc + i + (cc + i if i >= 1 else 0) for i in range(n)]
    b2 = [(al + cc + i) * (cc + i + 1) for i in range(n - 1)]
    v = [Fraction(0)] * n
    v[0] = Fraction(1)
    out = [Fraction(1)]
    for _ in range(k_max):
        w = [Fraction(0)] * n
        for i in range(n):
            acc = d[i] * v[i]
            if i + 1 < n:
                acc += b2[i] * v[i + 1]
            if i >= 1:
                acc += v[i - 1]
            w[i] = acc
        v = w
        out.append(v[0])
    return out


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite atomic measure: sorted nodes, weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.array(self.nodes, dtype=float)
        w = np.array(self.weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size == 0:
            raise ValueError("nodes and weights must be matching nonempty vectors")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if x[0] < -NODE_CLAMP:
            raise ValueError(f"negative node {x[0]}")
        if w.min() < 0:
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()}, expected 1")
        np.maximum(x, 0.0, out=x)
        x.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.nodes.size

    def moment(self, k: int) -> float:
        return float(np.dot(self.weights, self.nodes ** k))

    def mean(self) -> float:
        return self.moment(1)

    def std(self) -> float:
        return math.sqrt(max(self.moment(2) - self.moment(1) ** 2, 0.0))

    def cdf(self, x) -> np.ndarray:
        """Right-continuous step CDF evaluated at x."""
        idx = np.searchsorted(self.nodes, np.asarray(x, dtype=float), side="right")
        csum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return csum[idx]


def quadrature_from_jacobi(op: JacobiOperator, n: int) -> DiscreteMeasure:
    """Gaussian quadrature of the spectral measure at the first basis vector.

    Nodes are eigenvalues of the order-n truncation; weights are the
    squared first components of the normalized eigenvectors.  The rule
    integrates x^k exactly for k <= 2n - 1.
    """
    op = op.truncate(n)
    if n == 1:
        return DiscreteMeasure(np.array([op.diag[0]]), np.array([1.0]))
    vals, vecs = eigh_tridiagonal(op.diag, op.offdiag)
    w = vecs[0] ** 2
    w = w / w.sum()
    return DiscreteMeasure(vals, w)


def stieltjes_resolvent(alpha, c, z: complex, depth: int = 200) -> complex:
    """Resolvent matrix element S(z) = ((J - z)^{-1})(1,1) by continued fraction.

    Herglotz: Im z > 0 implies Im S > 0.  For |z| large, S(z) is
    -1/z - u_1/z^2 + O(z^{-3}).  z must stay off the nonnegative real
    axis, where the measure lives.
    """
    alpha, c = float(alpha), float(c)
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError("z must avoid the nonnegative real axis")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    g = 1.0 / (_entry_diag(alpha, c, depth - 1) - z)
    for i in range(depth - 2, -1, -1):
        b2 = _entry_offdiag(alpha, c, i) ** 2
        g = 1.0 / (_entry_diag(alpha, c, i) - z - b2 * g)
    return g


def recurrence_from_moments(m, return_diagnostics: bool = False):
    """Recover a Jacobi operator from moments m_0..m_{2n} (length 2n+1).

    Runs the classical moment-to-recurrence elimination exactly over the
    rationals (floats are taken as the dyadic rationals they are), so the
    only failure mode left is in the data itself: if some leading Hankel
    minor is not positive the factorization stops with ConditioningError.

    The map is famously ill-conditioned, so for float input the result is
    only as good as the input's own accuracy.  ``return_diagnostics``
    additionally reports an estimated number of digits lost, probed by
    re-running with the moments perturbed at their last binary digit.

    Returns the operator, or (operator, digits_lost) with diagnostics.
    """
    vals = list(m.values) if isinstance(m, MomentSequence) else list(m)
    if len(vals) < 3:
        raise ValueError("need at least m_0, m_1, m_2")
    if len(vals) % 2 == 0:
        vals = vals[:-1]  # use the largest odd prefix m_0..m_{2n}
    exact_input = all(isinstance(v, (int, Fraction, np.integer)) for v in vals)
    rational = [_rat(v) for v in vals]
    if rational[0] != 1:
        raise ValueError("m_0 must equal 1")

    alphas, betas = _chebyshev_recurrence(rational)
    op = JacobiOperator(np.array([float(a) for a in alphas]),
                        np.array([math.sqrt(float(b)) for b in betas[1:]]))
    if not return_diagnostics:
        return op
    if exact_input:
        return op, 0.0
    # conditioning probe: flip the last binary digit of every moment and
    # see how far the coefficients move
    ulp = Fraction(1, 2 ** 53)
    bumped = [v * (1 + ulp * (1 if i % 2 else -1)) for i, v in enumerate(rational)]
    try:
        alphas2, betas2 = _chebyshev_recurrence(bumped)
    except ConditioningError:
        return op, float("inf")
    worst = Fraction(0)
    for x, y in zip(alphas + betas, alphas2 + betas2):
        scale = abs(x) if x != 0 else Fraction(1)
        worst = max(worst, abs(x - y) / scale)
    amplification = float(worst / ulp) if worst > 0 else 1.0
    return op, max(math.log10(amplification), 0.0)


def _chebyshev_recurrence(mom: list):
    """Exact moment-to-recurrence elimination.

    sigma_{0,l} = m_l;  sigma_{k,l} = sigma_{k-1,l+1} - alpha_{k-1} sigma_{k-1,l}
                                      - beta_{k-1} sigma_{k-2,l};
    alpha_k = sigma_{k,k+1}/sigma_{k,k} - sigma_{k-1,k}/sigma_{k-1,k-1};
    beta_k  = sigma_{k,k}/sigma_{k-1,k-1}  (must stay positive).
    """
    E = len(mom)
    n = E // 2
    alphas = [mom[1] / mom[0]]
    betas = [mom[0]]
    prev = [Fraction(0)] * E
    cur = list(mom)
    for k in range(1, n):
        nxt = [Fraction(0)] * E
        for l in range(k, E - k):
            nxt[l] = cur[l + 1] - alphas[k - 1] * cur[l] - betas[k - 1] * prev[l]
        beta_k = nxt[k] / cur[k - 1]
        if beta_k <= 0:
            raise ConditioningError(
                f"Hankel factorization lost positivity at order {k}; "
                "the data does not determine that many recurrence coefficients")
        alpha_k = nxt[k + 1] / nxt[k] - cur[k] / cur[k - 1]
        alphas.append(alpha_k)
        betas.append(beta_k)
        prev, cur = cur, nxt
    return alphas, betas


def kolmogorov_distance(samples: np.ndarray, measure: DiscreteMeasure) -> float:
    """Sup distance between an empirical CDF and the measure's step CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("empty sample")
    # check the gap on both sides of every atom of either step function
    pts = np.unique(np.concatenate([xs, measure.nodes]))
    F_emp = np.searchsorted(xs, pts, side="right") / n
    F_emp_left = np.searchsorted(xs, pts, side="left") / n
    F_q = measure.cdf(pts)
    csum = np.concatenate([[0.0], np.cumsum(measure.weights)])
    F_q_left = csum[np.searchsorted(measure.nodes, pts, side="left")]
    return float(max(np.abs(F_emp - F_q).max(), np.abs(F_emp_left - F_q_left).max()))


def density_estimate(measure: DiscreteMeasure, xs: np.ndarray,
                     bandwidth: float | None = None) -> np.ndarray:
    """Gaussian smoothing of a discrete measure, for plotting-free profiles.

    Default bandwidth is the normal reference rule 1.06 * std * n^{-1/5}.
    """
    xs = np.asarray(xs, dtype=float)
    if bandwidth is None:
        bandwidth = 1.06 * measure.std() * measure.n ** (-1 / 5)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    z = (xs[:, None] - measure.nodes[None, :]) / bandwidth
    kern = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    return kern @ measure.weights / bandwidth
