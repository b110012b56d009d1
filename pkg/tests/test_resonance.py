import math

import numpy as np
import pytest

from pointbarrier.errors import NotInResonanceSetError
from pointbarrier.resonance import (
    coupling_theta,
    resonance_scan,
    scaled_residual,
    shoot,
    shoot_family,
    step_h,
    step_theta,
)


def test_shoot_at_zero_coupling(step, odd_cubic, bump):
    # constants solve the cell equation: D(0) = 0 and theta = 1
    for p in (step, odd_cubic, bump):
        w1, dw1 = shoot(p, 0.0)
        assert w1 == pytest.approx(1.0, abs=1e-12)
        assert dw1 == pytest.approx(0.0, abs=1e-12)


def test_step_miss_function_closed_form(step):
    # D(alpha) = cos(k) cosh(k) * h(k) with k = sqrt(alpha)
    for kappa in (0.7, 1.9, 3.1, 4.4):
        _, dw1 = shoot(step, kappa * kappa)
        ref = math.cos(kappa) * math.cosh(kappa) * step_h(kappa)
        assert dw1 == pytest.approx(ref, rel=1e-10)


def test_scan_small_window_contains_only_zero(step):
    pts = resonance_scan(step, -1.0, 1.0, 0.1)
    assert len(pts) == 1
    assert pts[0].alpha == 0.0
    assert pts[0].theta == 1.0
    assert not pts[0].flagged


def test_scan_positive_window(step, kappa_roots):
    k1, k2 = kappa_roots
    pts = resonance_scan(step, 0.0, 60.0, 0.1)
    assert [pt.flagged for pt in pts] == [False, False, False]
    alphas = [pt.alpha for pt in pts]
    assert alphas[0] == 0.0
    assert alphas[1] == pytest.approx(k1 * k1, abs=1e-7)
    assert alphas[2] == pytest.approx(k2 * k2, abs=1e-7)
    # the miss function at the reported roots satisfies the defining
    # transcendental equation of the step profile
    for a in alphas[1:]:
        k = math.sqrt(a)
        assert abs(math.tan(k) - math.tanh(k)) <= 1e-7


def test_scan_theta_matches_closed_form(step):
    pts = resonance_scan(step, 0.0, 60.0, 0.1)
    for pt in pts:
        assert pt.theta == pytest.approx(step_theta(pt.alpha), rel=1e-6)
        assert pt.residual <= 1e-9


def test_eigenfunction_trace(step, alpha1):
    pts = resonance_scan(step, 15.0, 16.0, 0.05)
    (pt,) = pts
    assert pt.xi[0] == -1.0 and pt.xi[-1] == 1.0
    assert pt.w[0] == pytest.approx(1.0, abs=1e-12)  # w(-1) = 1 normalization
    assert pt.w[-1] == pytest.approx(pt.theta, rel=1e-10)
    assert pt.residual <= 1e-9


def test_theta_normalization_invariance(step, alpha1):
    t1 = coupling_theta(step, alpha1, normalization=1.0)
    t2 = coupling_theta(step, alpha1, normalization=-17.5)
    assert t1 == pytest.approx(t2, abs=1e-10)


def test_theta_rejects_non_resonant(step):
    with pytest.raises(NotInResonanceSetError):
        coupling_theta(step, 5.0)


def test_theta_at_zero(step):
    assert coupling_theta(step, 0.0) == 1.0


def test_negative_resonances_and_reciprocity(step, alpha1, kappa_roots):
    # the step profile is odd: the resonance set is symmetric and the
    # coupling ratios of mirror resonances are reciprocal
    pts = resonance_scan(step, -60.0, 60.0, 0.1)
    alphas = np.array([pt.alpha for pt in pts])
    assert np.allclose(np.sort(alphas + alphas[::-1]), 0.0, atol=1e-6)
    for pt in pts:
        if pt.alpha > 1.0:
            mirror = min(pts, key=lambda q: abs(q.alpha + pt.alpha))
            assert pt.theta * mirror.theta == pytest.approx(1.0, rel=1e-6)
    negative = [pt for pt in pts if pt.alpha < 0]
    positive = [pt for pt in pts if pt.alpha > 0]
    assert negative and positive  # accumulation on both sides for dipole profiles


def test_odd_profile_symmetry(odd_cubic):
    pts = resonance_scan(odd_cubic, -40.0, 40.0, 0.25)
    alphas = [pt.alpha for pt in pts]
    assert any(a > 0 for a in alphas) and any(a < 0 for a in alphas)
    for pt in pts:
        if pt.alpha > 0:
            mirror = min(pts, key=lambda q: abs(q.alpha + pt.alpha))
            assert mirror.alpha == pytest.approx(-pt.alpha, abs=1e-6)
            assert pt.theta * mirror.theta == pytest.approx(1.0, rel=1e-6)


def test_fast_path_agrees_with_generic(step, alpha1):
    fast = shoot_family(step, [alpha1, 4.0, -9.0])
    slow = shoot_family(step, [alpha1, 4.0, -9.0], force_rk=True)
    assert np.allclose(fast.states, slow.states, rtol=1e-9, atol=5e-9)


def test_step_h_values(kappa_roots):
    assert step_h(0.0) == 0.0
    assert abs(step_h(kappa_roots[0])) <= 1e-8
    assert step_h(1.0) == pytest.approx(math.tanh(1.0) - math.tan(1.0), rel=1e-12)
    with pytest.raises(ValueError):
        step_h(math.pi / 2)


def test_step_theta_values(alpha1, kappa_roots):
    k1 = kappa_roots[0]
    assert step_theta(0.0) == 1.0
    assert step_theta(alpha1) == pytest.approx(math.cosh(k1) / math.cos(k1), rel=1e-12)
    assert step_theta(alpha1) == pytest.approx(-35.9, rel=2e-3)
    neg = step_theta(-alpha1)
    assert neg == pytest.approx(math.cos(k1) / math.cosh(k1), rel=1e-12)
    assert abs(neg) < 1.0
    assert neg == pytest.approx(-0.0279, rel=2e-3)
    with pytest.raises(ValueError):
        step_theta((math.pi / 2) ** 2)


def test_scaled_residual_discriminates(step, alpha1):
    w1, dw1 = shoot(step, alpha1)
    assert scaled_residual(step, alpha1, w1, dw1) < 1e-12
    w1, dw1 = shoot(step, 5.0)
    assert scaled_residual(step, 5.0, w1, dw1) > 1e-3


def test_halving_rescan_recovers_missed_roots(step, kappa_roots):
    # a deliberately coarse grid misses the first resonance; the half-step
    # consistency pass warns and merges it back in
    k1, k2 = kappa_roots
    with pytest.warns(UserWarning, match="too coarse"):
        pts = resonance_scan(step, 0.0, 60.0, 30.0)
    alphas = [pt.alpha for pt in pts]
    assert alphas[0] == 0.0
    assert any(abs(a - k1 * k1) < 1e-6 for a in alphas)
    assert any(abs(a - k2 * k2) < 1e-6 for a in alphas)


def test_scan_input_validation(step):
    with pytest.raises(ValueError):
        resonance_scan(step, 1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        resonance_scan(step, 0.0, 1.0, -0.5)
