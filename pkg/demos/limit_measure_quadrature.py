"""Build the limiting spectral measure three independent ways.

The stationary moments come from a self-convolutive recursion, from the
constant terms of the solved hierarchy, and from matrix powers of a Jacobi
operator; all three agree exactly in rational arithmetic.  A Gaussian
quadrature of the operator then gives a concrete discrete stand-in for the
measure, checked by moment reproduction, Hankel positivity, and the
Stieltjes resolvent.
"""
from fractions import Fraction

import numpy as np

from bll.hierarchy import eval_moment, hankel_psd_check, solve_hierarchy
from bll.spectrum import (build_jacobi, jacobi_moments_exact,
                          quadrature_from_jacobi, recurrence_from_moments,
                          self_convolutive_moments, stieltjes_resolvent)

ALPHA, C = 1.0, 1.0


def main():
    k_show = 12
    u = self_convolutive_moments(ALPHA, C, k_show)
    polys = solve_hierarchy(ALPHA, C, [Fraction(1)] * k_show, k_show)
    constants = [p.constant for p in polys]
    operator = jacobi_moments_exact(ALPHA, C, k_show)
    print(f"stationary moments at alpha = {ALPHA:g}, c = {C:g}, three routes:")
    agree = list(u.values) == constants == operator
    for k in (1, 2, 3, 5, 8, 12):
        print(f"  u_{k:<2} = {u[k]}")
    print("recursion == hierarchy limits == operator powers:", agree)

    hank = hankel_psd_check(self_convolutive_moments(ALPHA, C, 16))
    print(f"Hankel PSD up to k=16: {hank.passed} "
          f"(min eig {hank.min_eig:.3e}, shifted {hank.min_eig_shifted:.3e})")

    n = 8
    quad = quadrature_from_jacobi(build_jacobi(ALPHA, C, n), n)
    print(f"{n}-node quadrature of the limit measure:")
    for x, w in zip(quad.nodes, quad.weights):
        print(f"  node {x:12.6f}   weight {w:.6e}")
    target = self_convolutive_moments(ALPHA, C, 2 * n - 1).as_floats()
    worst = max(abs(quad.moment(k) - target[k]) / target[k] for k in range(2 * n))
    print(f"moments u_0..u_{2 * n - 1} reproduced within {worst:.2e} relative")

    # time-t measure from its moments: recover a Jacobi recurrence and
    # quadrature for m_k(15), which should sit almost on the limit rule
    polys15 = solve_hierarchy(ALPHA, C, [Fraction(1)] * 16, 16)
    m15 = [eval_moment(p, 15.0) for p in polys15]
    rec = recurrence_from_moments(np.array(m15))
    rule15 = quadrature_from_jacobi(rec, n)
    shift = max(abs(a - b) for a, b in zip(rule15.nodes, quad.nodes))
    print(f"t=15 rule vs stationary rule: max node shift {shift:.2e}")

    print("Stieltjes resolvent samples (imaginary part must stay positive):")
    for z in (1j, 1 + 1j, 5 + 0.5j, -3 + 2j):
        g = stieltjes_resolvent(ALPHA, C, z)
        print(f"  G({z}) = {g.real:+.6f} {g.imag:+.6f}i")
    z = 1e3 * np.exp(1j * 0.7)
    tail = -1 / z - float(u[1]) / z ** 2
    dev = abs(stieltjes_resolvent(ALPHA, C, z) - tail) / abs(tail)
    print(f"far field at |z| = 1e3: matches -1/z - u_1/z^2 within {dev:.2e}")


if __name__ == "__main__":
    main()
