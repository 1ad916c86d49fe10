"""End-to-end acceptance battery.

One test per advertised guarantee, each recording a single PASS/FAIL line
through conftest.record_acceptance so the final summary shows the whole
scorecard.  Exact criteria are checked with rational arithmetic; the Monte
Carlo criteria run the declared ensemble sizes, seed counts, and
tolerances, and are reported honestly whether or not they clear the bar.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import record_acceptance

from bll.cli import cli_main
from bll.experiments import (ExperimentSpec, longtime_check, martingale_sweep,
                             size_sweep, uniform_grid)
from bll.hierarchy import hankel_psd_check, hierarchy_residual, solve_hierarchy
from bll.model import InitialCondition, ModelParams
from bll.sde import SchemeConfig
from bll.spectrum import (build_jacobi, jacobi_moment, jacobi_moments_exact,
                          quadrature_from_jacobi, self_convolutive_moments,
                          stieltjes_resolvent)

# unit point mass initial data at alpha = c = 1, frozen against an
# independent series integration of the moment ODEs
WORKED = {
    1: (2, -1),
    2: (8, -8, 1),
    3: (44, -66, 18, 5),
    4: (296, -592, 256, 112, -71),
    5: (2312, -5780, 3460, 1880, -2530, 659),
}


def test_worked_example_is_exact_and_fast(capsys):
    t0 = time.perf_counter()
    code = cli_main(["moments", "--alpha", "1", "--c", "1", "--k-max", "5"])
    wall = time.perf_counter() - t0
    out = capsys.readouterr().out
    polys = solve_hierarchy(1, 1, [Fraction(1)] * 5, 5)
    exact = all(polys[k].coeffs == tuple(map(Fraction, WORKED[k])) for k in WORKED)
    printed = ("m_4(t) = 296 - 592 exp(-t) + 256 exp(-2t) + 112 exp(-3t) "
               "- 71 exp(-4t)") in out and "2312" in out
    ok = code == 0 and exact and printed and wall < 1.0
    record_acceptance("worked example: all five moment polynomials exact via CLI",
                      ok, f"wall {wall:.2f}s")
    assert code == 0
    assert exact
    assert printed
    assert wall < 1.0


def test_stationary_moments_agree_three_ways():
    t0 = time.perf_counter()
    k_max = 20
    u = self_convolutive_moments(1, 1, k_max)
    polys = solve_hierarchy(1, 1, [Fraction(1)] * k_max, k_max)
    constants = [p.constant for p in polys]
    operator = jacobi_moments_exact(1, 1, k_max)
    exact_match = list(u.values) == constants == operator
    op = build_jacobi(1.0, 1.0, k_max + 1)
    float_rel = max(abs(jacobi_moment(op, k) - float(u[k])) / float(u[k])
                    for k in range(1, k_max + 1))
    wall = time.perf_counter() - t0
    ok = exact_match and float_rel <= 1e-10 and wall < 5.0
    record_acceptance(
        "stationary moments: recursion, hierarchy limits, and operator powers "
        "agree to k=20", ok,
        f"exact equality, float route rel {float_rel:.2e}, wall {wall:.2f}s")
    assert exact_match
    assert float_rel <= 1e-10
    assert wall < 5.0


def test_hierarchy_solutions_have_zero_defect():
    t0 = time.perf_counter()
    cases = ((1, 1), (Fraction(3, 2), Fraction(1, 2)), (2, 3))
    all_zero = True
    for alpha, c in cases:
        polys = solve_hierarchy(alpha, c, [Fraction(1)] * 10, 10)
        for k in range(1, 11):
            res = hierarchy_residual(polys, alpha, c, k)
            all_zero &= all(co == 0 for co in res.coeffs)
    wall = time.perf_counter() - t0
    ok = all_zero and wall < 5.0
    record_acceptance(
        "moment ODE defect: exactly zero to k=10 for three parameter pairs",
        ok, f"wall {wall:.2f}s")
    assert all_zero
    assert wall < 5.0


def test_stationary_moments_form_positive_measure():
    u = self_convolutive_moments(1, 1, 16)
    hank = hankel_psd_check(u)
    quad_ok = True
    worst = 0.0
    for n in range(1, 9):
        quad = quadrature_from_jacobi(build_jacobi(1.0, 1.0, n), n)
        target = self_convolutive_moments(1, 1, 2 * n - 1).as_floats()
        rel = max(abs(quad.moment(k) - target[k]) / abs(target[k])
                  for k in range(2 * n))
        worst = max(worst, rel)
        quad_ok &= rel <= 1e-9 and quad.nodes[0] > 0
    ok = hank.passed and quad_ok
    record_acceptance(
        "limit measure: Hankel tests PSD to k=16, quadrature reproduces "
        "moments for n<=8", ok,
        f"min eig {hank.min_eig:.2e}, worst moment error {worst:.2e}")
    assert hank.passed
    assert quad_ok


def test_resolvent_is_herglotz_with_matching_tail():
    pts = [complex(x, y) for x in np.linspace(-5.0, 15.0, 20)
           for y in np.linspace(0.5, 5.0, 5)]
    assert len(pts) == 100
    herglotz = all(stieltjes_resolvent(1.0, 1.0, z).imag > 0 for z in pts)
    u1 = 2.0
    worst = 0.0
    for theta in (0.5, 1.5, 2.5):
        z = 1e3 * complex(np.cos(theta), np.sin(theta))
        target = -1 / z - u1 / z ** 2
        worst = max(worst,
                    abs(stieltjes_resolvent(1.0, 1.0, z) - target) / abs(target))
    ok = herglotz and worst <= 0.01
    record_acceptance(
        "resolvent: positive imaginary part on 100 upper-plane points, "
        "far-field tail within 1%", ok, f"worst tail deviation {worst:.2e}")
    assert herglotz
    assert worst <= 0.01


@pytest.mark.slow
def test_scaled_residual_variance_is_size_free():
    rep = martingale_sweep(1.0, 1.0, InitialCondition.point_mass(1.0),
                           sizes=(100, 200, 400), seeds=tuple(range(40)),
                           t_max=1.0)
    nv = ", ".join(f"{v:.3f}" for v in rep.n_times_var)
    record_acceptance(
        "martingale residual: N*Var(M_1(1)) flat within factor 2 over "
        "N=100,200,400", rep.passed,
        f"N*Var = {nv}, ratio {rep.ratio:.3f}")
    assert rep.failures == ()
    assert rep.ratio <= 2.0
    assert rep.passed


@pytest.mark.slow
def test_longtime_window_matches_stationary_law():
    spec = ExperimentSpec(
        params=ModelParams(1.0, 1.0, 1000),
        init=InitialCondition.point_mass(1.0),
        scheme=SchemeConfig(dt=1e-3, seed=0),
        grid=uniform_grid(15.0, 0.05),
        k_max=3,
        seeds=(0,),
    )
    rep = longtime_check(spec)
    worst_rel = float(np.nanmax(rep.rel_error))
    ks = float(rep.ks_distance[0])
    record_acceptance(
        "long-time behavior: windowed moments within 5% of stationary values, "
        "final CDF within 0.05", rep.passed,
        f"worst window error {worst_rel:.3%}, CDF distance {ks:.4f}")
    assert rep.failures == ()
    assert worst_rel <= 0.05
    assert ks <= 0.05
    assert rep.passed


@pytest.mark.slow
def test_moment_traces_converge_with_ensemble_size():
    spec = ExperimentSpec(
        params=ModelParams(1.0, 1.0, 1000),
        init=InitialCondition.point_mass(1.0),
        scheme=SchemeConfig(dt=1e-3, seed=0),
        grid=uniform_grid(3.0, 1e-3),
        k_max=3,
        seeds=tuple(range(20)),
    )
    sweep = size_sweep(spec, (250, 500, 1000))
    top = sweep.reports[-1]
    n_pass = int(top.seed_passed.sum())
    med = ", ".join(f"{v:.3f}" for v in top.median_errors())
    record_acceptance(
        "finite-size convergence: 19/20 seeds within 0.05*envelope at N=1000, "
        "medians decreasing", sweep.passed,
        f"{n_pass}/20 seeds pass, medians at N=1000: {med}, "
        f"decreasing over (250, 500, 1000): {sweep.medians_decreasing}")
    assert sweep.medians_decreasing
    assert sweep.passed
