"""Shared fixtures: profiles, potentials, and independent oracle values.

The transcendental constants (resonant couplings of the step profile) are
recomputed here by plain bisection on tanh(k) - tan(k), independently of
the library's scan machinery, and frozen for the whole session.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from pointbarrier import profiles
from pointbarrier.ivp import SolverConfig
from pointbarrier.spectra import polynomial_potential


def bisect_oracle(f, a, b, iters=200):
    """Plain bisection, kept deliberately independent of the library."""
    fa = f(a)
    fb = f(b)
    assert (fa < 0) != (fb < 0), "oracle bracket must straddle a sign change"
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def gauss_legendre_moment(p, k, n=48):
    """High-order quadrature oracle for profile moments (per segment)."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for seg in p.segments:
        mid = 0.5 * (seg.a + seg.b)
        half = 0.5 * (seg.b - seg.a)
        xs = mid + half * nodes
        total += half * float(np.sum(weights * xs**k * np.array([seg(x) for x in xs])))
    return total


@pytest.fixture(scope="session")
def step():
    return profiles.builtin("step", {})


@pytest.fixture(scope="session")
def odd_cubic():
    return profiles.builtin("odd_cubic", {})


@pytest.fixture(scope="session")
def bump():
    return profiles.builtin("asymmetric_bump", {})


@pytest.fixture(scope="session")
def kappa_roots():
    """First two positive roots of tan k = tanh k (bisection oracle)."""
    g = lambda k: math.tanh(k) - math.tan(k)
    k1 = bisect_oracle(g, math.pi + 0.2, 1.5 * math.pi - 0.2)
    k2 = bisect_oracle(g, 2 * math.pi + 0.2, 2.5 * math.pi - 0.2)
    return k1, k2


@pytest.fixture(scope="session")
def alpha1(kappa_roots):
    return kappa_roots[0] ** 2


@pytest.fixture(scope="session")
def theta1(kappa_roots):
    k1 = kappa_roots[0]
    return math.cosh(k1) / math.cos(k1)


@pytest.fixture(scope="session")
def harmonic():
    return polynomial_potential([0.0, 0.0, 1.0], 7.0, "harmonic")


@pytest.fixture(scope="session")
def tilted():
    # x^2 + x: the two half-line spectra are disjoint
    return polynomial_potential([0.0, 1.0, 1.0], 8.0, "tilted_harmonic")


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()
