"""Limit measure machinery: Jacobi operator, quadrature, resolvent,
moment-to-recurrence recovery."""
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from scipy.stats import wasserstein_distance

from bll.hierarchy import eval_moment, solve_hierarchy
from bll.model import ConditioningError
from bll.spectrum import (
    DiscreteMeasure,
    JacobiOperator,
    build_jacobi,
    density_estimate,
    jacobi_moment,
    jacobi_moments_exact,
    kolmogorov_distance,
    quadrature_from_jacobi,
    recurrence_from_moments,
    self_convolutive_moments,
    stieltjes_resolvent,
)
from bll.hierarchy import stationary_constants

U_EXPECTED = [1, 2, 8, 44, 296, 2312, 20384]


# --- stationary moments and the operator ---

def test_stationary_moments_worked_example():
    u = self_convolutive_moments(1, 1, 6)
    assert list(u) == U_EXPECTED


def test_stationary_moments_no_coupling_collapse():
    u = self_convolutive_moments(2, 0, 4)
    assert list(u) == [1, 2, 6, 24, 120]


def test_operator_entries_factor_as_advertised():
    # oracle: multiply out the bidiagonal factorization symbolically
    a, c = sympy.symbols("a c", positive=True)
    n = 5
    L = sympy.zeros(n, n)
    for i in range(n):
        L[i, i] = sympy.sqrt(a + c + i)
        if i >= 1:
            L[i, i - 1] = sympy.sqrt(c + i)
    M = L * L.T
    for i in range(n):
        expected = (a + c + i) + ((c + i) if i >= 1 else 0)
        assert sympy.simplify(M[i, i] - expected) == 0
        if i < n - 1:
            assert sympy.simplify(M[i, i + 1] ** 2 - (a + c + i) * (c + i + 1)) == 0

    op = build_jacobi(1.3, 0.7, 4)
    assert op.diag == pytest.approx([2.0, 4.7, 6.7, 8.7])
    assert op.offdiag[0] == pytest.approx(math.sqrt(2.0 * 1.7))


def test_operator_powers_match_recursion_exactly():
    u = self_convolutive_moments(1, 1, 20)
    v = jacobi_moments_exact(1, 1, 20)
    w = stationary_constants(1, 1, 20)
    assert list(u) == v == w
    # and at fractional parameters
    assert jacobi_moments_exact(Fraction(3, 2), Fraction(1, 2), 12) == \
        list(self_convolutive_moments(Fraction(3, 2), Fraction(1, 2), 12))


def test_float_operator_powers_track_exact():
    u = self_convolutive_moments(1, 1, 20).as_floats()
    op = build_jacobi(1, 1, 21)
    for k in range(21):
        assert jacobi_moment(op, k) == pytest.approx(u[k], rel=1e-10)


def test_operator_validation():
    with pytest.raises(ValueError):
        JacobiOperator(np.array([1.0, 2.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        JacobiOperator(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    op = build_jacobi(1, 1, 5)
    with pytest.raises(ValueError):
        op.truncate(6)
    with pytest.raises(ValueError):
        jacobi_moment(op, 5)
    with pytest.raises(ValueError):
        build_jacobi(0.5, 1, 3)
    with pytest.raises(ValueError):
        build_jacobi(1, 0, 3)


def test_matvec_hand_example():
    op = JacobiOperator(np.array([1.0, 2.0]), np.array([3.0]))
    assert np.array_equal(op.matvec(np.array([1.0, 0.0])), [1.0, 3.0])
    assert np.array_equal(op.matvec(np.array([0.0, 1.0])), [3.0, 2.0])


# --- quadrature ---

def test_single_node_rule_is_the_mean():
    q = quadrature_from_jacobi(build_jacobi(1, 1, 3), 1)
    assert q.nodes == pytest.approx([2.0])
    assert q.weights == pytest.approx([1.0])


def test_quadrature_reproduces_moments():
    u = self_convolutive_moments(1, 1, 15).as_floats()
    op = build_jacobi(1, 1, 8)
    for n in range(1, 9):
        q = quadrature_from_jacobi(op, n)
        assert q.nodes.min() > 0
        assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
        for k in range(2 * n):
            assert q.moment(k) == pytest.approx(u[k], rel=1e-9)


def test_quadrature_nodes_interlace():
    op = build_jacobi(1, 1, 8)
    a = quadrature_from_jacobi(op, 4).nodes
    b = quadrature_from_jacobi(op, 5).nodes
    for i in range(4):
        assert b[i] < a[i] < b[i + 1]


# --- discrete measures ---

def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([2.0, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([-1.0, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([1.0, 2.0]), np.array([0.9, 0.3]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([1.0, 2.0]), np.array([1.1, -0.1]))


def test_measure_statistics_and_cdf():
    m = DiscreteMeasure(np.array([1.0, 3.0]), np.array([0.25, 0.75]))
    assert m.moment(0) == 1.0
    assert m.mean() == pytest.approx(2.5)
    assert m.std() == pytest.approx(math.sqrt(0.75))
    assert np.array_equal(m.cdf([0.0, 1.0, 2.0, 3.0, 4.0]),
                          [0.0, 0.25, 0.25, 1.0, 1.0])


def test_kolmogorov_distance_hand_cases():
    m = DiscreteMeasure(np.array([0.5, 1.5]), np.array([0.5, 0.5]))
    assert kolmogorov_distance(np.array([0.5, 1.5]), m) == pytest.approx(0.0)
    assert kolmogorov_distance(np.array([0.0]), m) == pytest.approx(1.0)
    point = DiscreteMeasure(np.array([1.0]), np.array([1.0]))
    assert kolmogorov_distance(np.array([1.0, 2.0]), point) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        kolmogorov_distance(np.array([]), m)


def test_density_estimate_integrates_to_one():
    m = DiscreteMeasure(np.array([1.0, 3.0]), np.array([0.25, 0.75]))
    xs = np.linspace(-5.0, 10.0, 2001)
    d = density_estimate(m, xs)
    assert d.min() >= 0
    assert np.trapezoid(d, xs) == pytest.approx(1.0, abs=1e-6)
    # degenerate measures have zero spread, so the caller must set a scale
    point = DiscreteMeasure(np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        density_estimate(point, xs)
    d2 = density_estimate(point, xs, bandwidth=0.1)
    assert np.trapezoid(d2, xs) == pytest.approx(1.0, abs=1e-6)


# --- resolvent ---

def test_resolvent_is_herglotz():
    for x in np.linspace(-5.0, 15.0, 10):
        for y in (0.5, 1.0, 5.0):
            s = stieltjes_resolvent(1, 1, complex(x, y))
            assert s.imag > 0


def test_resolvent_far_field():
    for theta in (0.5, 1.5, 2.5):
        z = 1e3 * complex(math.cos(theta), math.sin(theta))
        s = stieltjes_resolvent(1, 1, z)
        lead = -1 / z - 2.0 / z ** 2
        assert abs(s - lead) <= 0.01 * abs(lead)


def test_resolvent_matches_truncated_quadrature():
    # a depth-n fraction is exactly the resolvent of the order-n truncation
    z = complex(1.0, 2.0)
    for n in (3, 6, 10):
        s = stieltjes_resolvent(1, 1, z, depth=n)
        q = quadrature_from_jacobi(build_jacobi(1, 1, n), n)
        direct = np.sum(q.weights / (q.nodes - z))
        assert s == pytest.approx(direct, rel=1e-12)


def test_resolvent_depth_converges():
    # the measure has unbounded support, so convergence in depth is slow
    # near the positive axis and fast away from it
    z = complex(2.0, 1.0)
    diffs = [abs(stieltjes_resolvent(1, 1, z, depth=d)
                 - stieltjes_resolvent(1, 1, z, depth=2 * d))
             for d in (5, 10, 20, 40)]
    assert all(a > b for a, b in zip(diffs, diffs[1:]))
    assert diffs[-1] < 2e-3
    far = abs(stieltjes_resolvent(1, 1, -5 + 2j, depth=40)
              - stieltjes_resolvent(1, 1, -5 + 2j, depth=80))
    assert far < 1e-8


def test_resolvent_domain():
    with pytest.raises(ValueError):
        stieltjes_resolvent(1, 1, 2.0)
    with pytest.raises(ValueError):
        stieltjes_resolvent(1, 1, complex(3.0, 0.0))
    # strictly negative real z is off the support and fine
    s = stieltjes_resolvent(1, 1, -2.0)
    assert s.imag == 0.0
    assert s.real > 0


# --- moments to recurrence ---

def test_recurrence_roundtrip_exact():
    u = self_convolutive_moments(1, 1, 16)
    op, digits = recurrence_from_moments(u, return_diagnostics=True)
    ref = build_jacobi(1, 1, 8)
    assert digits == 0.0
    # at alpha = c = 1 every entry is a small integer, so equality is exact
    assert np.array_equal(op.diag, ref.diag)
    assert np.array_equal(op.offdiag, ref.offdiag)


def test_recurrence_roundtrip_float_conditioning():
    u = self_convolutive_moments(1, 1, 16).as_floats()
    op, digits = recurrence_from_moments(list(u), return_diagnostics=True)
    ref = build_jacobi(1, 1, 8)
    assert 0 < digits < 12
    assert op.diag == pytest.approx(ref.diag, rel=1e-5)
    assert op.offdiag == pytest.approx(ref.offdiag, rel=1e-5)


def test_recurrence_even_length_trims():
    u = self_convolutive_moments(1, 1, 5)
    op = recurrence_from_moments(list(u))  # 6 entries -> uses first 5
    assert op.size == 2


def test_recurrence_point_mass_is_one_by_one():
    op = recurrence_from_moments([1, 3, 9])
    assert op.size == 1
    assert op.diag[0] == pytest.approx(3.0)


def test_recurrence_degenerate_data_raises():
    with pytest.raises(ConditioningError):
        recurrence_from_moments([1, 3, 9, 27, 81])
    with pytest.raises(ValueError):
        recurrence_from_moments([1, 3])
    with pytest.raises(ValueError):
        recurrence_from_moments([2, 3, 9])


def test_moment_pipeline_recovers_longtime_measure():
    # moments of the solved hierarchy at t = 15 are numerically stationary,
    # so the rule built from them must match the operator's own quadrature
    polys = solve_hierarchy(1, 1, [1] * 16, 16)
    m15 = [float(eval_moment(p, 15.0)) for p in polys]
    op8 = recurrence_from_moments(m15)
    q = quadrature_from_jacobi(op8, 8)
    ref8 = quadrature_from_jacobi(build_jacobi(1, 1, 8), 8)
    w1 = wasserstein_distance(q.nodes, ref8.nodes, q.weights, ref8.weights)
    assert w1 <= 0.02

    # bracket property of Gaussian rules: at each node, the mass strictly
    # below it and the mass up to it pin the reference CDF from both sides
    ref = quadrature_from_jacobi(build_jacobi(1, 1, 400), 400)
    cum = np.concatenate([[0.0], np.cumsum(q.weights)])
    for i, x in enumerate(q.nodes):
        assert cum[i] <= ref.cdf(x - 1e-9) + 1e-6
        assert ref.cdf(x) <= cum[i + 1] + 1e-6
