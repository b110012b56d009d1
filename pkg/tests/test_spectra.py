import math

import numpy as np
import pytest

from pointbarrier.errors import (
    NotInResonanceSetError,
    PreconditionError,
    TruncationDomainError,
)
from pointbarrier.spectra import (
    BoundaryTrace,
    ConnectedMatrix,
    DirichletSplit,
    Separated,
    Spectrum,
    ThetaCoupled,
    corrector_lambda1,
    eigen_limit,
    eigen_perturbed,
    finite_difference_levels,
    interval_limit_frequencies,
    interval_negative_levels,
    interval_spectrum,
    polynomial_potential,
    split_limit_frequencies,
)


# -- interface-condition records ------------------------------------------------

def test_theta_coupled_is_diagonal_matrix():
    bc = ThetaCoupled(3.0)
    assert np.allclose(bc.matrix(), [[3.0, 0.0], [0.0, 1.0 / 3.0]])
    with pytest.raises(ValueError):
        ThetaCoupled(0.0)


def test_connected_matrix_validation():
    ConnectedMatrix(2.0, 0.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        ConnectedMatrix(2.0, 0.0, 0.0, 0.6)
    with pytest.raises(ValueError):
        ConnectedMatrix(1.0, 0.0, 0.0, 1.0, phi=2.0)
    with pytest.raises(ValueError):
        Separated(0.0, 0.0, 1.0, 0.0)


# -- limit operator ---------------------------------------------------------------

def test_split_half_line_oscillator(harmonic):
    spec = eigen_limit(harmonic, DirichletSplit(), 6, eigenfunctions=False)
    assert np.allclose(spec.eigenvalues, [3, 3, 7, 7, 11, 11], atol=1e-6)
    assert all("degenerate" in f for f in spec.flags)
    sides = [f.split(",")[0] for f in spec.flags]
    assert sides.count("left") == 3 and sides.count("right") == 3


def test_full_line_oscillator_via_continuity(harmonic):
    spec = eigen_limit(harmonic, ThetaCoupled(1.0), 5, eigenfunctions=False)
    assert np.allclose(spec.eigenvalues, [1, 3, 5, 7, 9], atol=1e-6)


def test_finite_difference_oracle_equivalence(harmonic):
    # independent route: dense symmetric three-point discretization of the
    # decoupled half problems
    spec = eigen_limit(harmonic, DirichletSplit(), 6, eigenfunctions=False)
    fd = finite_difference_levels(lambda x: x * x, 0.0, harmonic.truncation_radius, 24000, 3)
    merged = np.sort(np.concatenate([fd, fd]))
    assert np.allclose(spec.eigenvalues, merged, atol=1e-5)


def test_interlacing_between_continuity_and_split(harmonic):
    coupled = eigen_limit(harmonic, ThetaCoupled(2.5), 5, eigenfunctions=False).eigenvalues
    full = eigen_limit(harmonic, ThetaCoupled(1.0), 5, eigenfunctions=False).eigenvalues
    split = eigen_limit(harmonic, DirichletSplit(), 5, eigenfunctions=False).eigenvalues
    for lam, lo, hi in zip(coupled, full, split):
        assert min(lo, hi) - 1e-6 <= lam <= max(lo, hi) + 1e-6


def test_rational_diagonal_interface(harmonic):
    # the historical dipole coupling matrix diag((2+a)/(2-a), (2-a)/(2+a))
    a = 1.0
    bc = ConnectedMatrix((2 + a) / (2 - a), 0.0, 0.0, (2 - a) / (2 + a))
    spec = eigen_limit(harmonic, bc, 3, eigenfunctions=False)
    # for an even background this diagonal family leaves the levels at the
    # full-line values
    assert np.allclose(spec.eigenvalues, [1, 3, 5], atol=1e-6)


def test_interface_phase_drops_out(tilted):
    flat = eigen_limit(tilted, ConnectedMatrix(2.0, 0.0, 0.0, 0.5), 3, eigenfunctions=False)
    phased = eigen_limit(
        tilted, ConnectedMatrix(2.0, 0.0, 0.0, 0.5, phi=0.9), 3, eigenfunctions=False
    )
    assert np.allclose(flat.eigenvalues, phased.eigenvalues, atol=1e-9)


def test_theta_to_infinity_is_dirichlet_neumann(tilted):
    # v(-0) = v(+0)/theta -> 0 and v'(+0) = v'(-0)/theta -> 0: the limit
    # decouples into Dirichlet on the left and Neumann on the right
    coupled = eigen_limit(tilted, ThetaCoupled(1e4), 4, eigenfunctions=False).eigenvalues
    dn = eigen_limit(
        tilted, Separated(0.0, 1.0, 1.0, 0.0), 4, eigenfunctions=False
    ).eigenvalues
    assert np.allclose(coupled, dn, atol=1e-5)


def test_truncation_stability():
    u6 = polynomial_potential([0.0, 0.0, 1.0], 6.0)
    u12 = polynomial_potential([0.0, 0.0, 1.0], 12.0)
    s6 = eigen_limit(u6, ThetaCoupled(1.0), 3, eigenfunctions=False)
    s12 = eigen_limit(u12, ThetaCoupled(1.0), 3, eigenfunctions=False)
    assert np.allclose(s6.eigenvalues, s12.eigenvalues, atol=1e-8)


def test_truncation_error_raised():
    small = polynomial_potential([0.0, 0.0, 1.0], 2.0)
    with pytest.raises(TruncationDomainError):
        eigen_limit(small, ThetaCoupled(1.0), 3, eigenfunctions=False)


def test_eigenfunction_normalization_and_traces(harmonic):
    spec = eigen_limit(harmonic, ThetaCoupled(1.0), 2, eigenfunctions=True)
    for v in spec.eigenfunctions:
        norm = math.sqrt(float(np.trapezoid(v * v, spec.x)))
        assert norm == pytest.approx(1.0, abs=1e-8)
        assert v[np.argmax(np.abs(v))] > 0
    tr = spec.boundary_traces[0]
    assert tr.v_minus == pytest.approx(math.pi**-0.25, rel=1e-8)
    assert tr.v_plus == pytest.approx(tr.v_minus, rel=1e-10)
    assert abs(tr.dv_minus) < 1e-9


def test_coupled_trace_satisfies_interface(tilted, theta1):
    spec = eigen_limit(tilted, ThetaCoupled(theta1), 2, eigenfunctions=True)
    for tr in spec.boundary_traces:
        assert tr.v_plus == pytest.approx(theta1 * tr.v_minus, rel=1e-8)
        assert theta1 * tr.dv_plus == pytest.approx(tr.dv_minus, rel=1e-8)


def test_spectrum_ordering_validation():
    with pytest.raises(ValueError):
        Spectrum(np.array([2.0, 1.0]), np.zeros(2), ["ok", "ok"])


# -- perturbed operator --------------------------------------------------------------

@pytest.fixture(scope="module")
def fd_perturbed_reference(tilted, alpha1):
    """Dense FD diagonalization of the squeezed operator at eps = 0.1."""
    from scipy.linalg import eigh_tridiagonal

    eps = 0.1
    L = tilted.truncation_radius
    n = 64000
    h = 2 * L / (n + 1)
    xs = -L + h * np.arange(1, n + 1)
    V = xs * xs + xs
    inside = np.abs(xs) <= eps
    V = V + np.where(inside & (xs < 0), alpha1 / eps**2, 0.0)
    V = V - np.where(inside & (xs >= 0), alpha1 / eps**2, 0.0)
    diag = 2.0 / h**2 + V
    off = np.full(n - 1, -1.0 / h**2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, 5), eigvals_only=True)


def test_perturbed_against_dense_diagonalization(tilted, step, alpha1, fd_perturbed_reference):
    spec = eigen_perturbed(tilted, step, alpha1, 0.1, (1, 6), eigenfunctions=False)
    assert spec.flags[0] == "diving"
    # the FD reference carries O(h) error at the barrier jumps; agreement at
    # 5e-3 on every level rules out missed or spurious levels
    assert np.allclose(spec.eigenvalues, fd_perturbed_reference, rtol=5e-3, atol=5e-3)


def test_perturbed_zero_coupling_matches_continuity_limit(tilted, step):
    limit = eigen_limit(tilted, ThetaCoupled(1.0), 3, eigenfunctions=False)
    for eps in (0.2, 0.05):
        spec = eigen_perturbed(tilted, step, 0.0, eps, (1, 3), eigenfunctions=False)
        assert np.allclose(spec.eigenvalues, limit.eigenvalues, atol=1e-8)


def test_perturbed_diving_scale(tilted, step, alpha1):
    # the lowest level dives like eps^-2 with the squeezed-cell ground level
    mu = interval_negative_levels(-30.0, 30.0, step, alpha1, 1.0)[0]
    for eps in (0.1, 0.05):
        spec = eigen_perturbed(tilted, step, alpha1, eps, (1, 1), eigenfunctions=False)
        assert spec.flags == ["diving"]
        assert eps * eps * spec.eigenvalues[0] == pytest.approx(mu, rel=2e-3)


def test_perturbed_input_validation(tilted, step):
    with pytest.raises(ValueError):
        eigen_perturbed(tilted, step, 1.0, 0.0, (1, 2))
    with pytest.raises(ValueError):
        eigen_perturbed(tilted, step, 1.0, 0.1, (3, 2))


# -- interval problems ---------------------------------------------------------------

def test_interval_free_string(step):
    spec = interval_spectrum(-1.0, 2.0, step, 0.0, 1e-3, 5)
    ref = [(math.pi * k / 3.0) ** 2 for k in range(1, 6)]
    assert np.allclose(spec.eigenvalues, ref, rtol=1e-9)


def test_interval_limit_frequencies_continuity():
    w = interval_limit_frequencies(-1.0, 1.0, 1.0, 5)
    assert np.allclose(w, [math.pi * k / 2 for k in range(1, 6)], atol=1e-12)


def test_interval_limit_frequencies_residuals():
    for theta in (0.5, 1.7, 5.0):
        t2 = theta * theta
        for a, b in ((-1.0, 2.0), (-1.3, 0.7)):
            roots = interval_limit_frequencies(a, b, theta, 6)
            for w in roots:
                if abs(math.cos(a * w)) > 1e-3 and abs(math.cos(b * w)) > 1e-3:
                    assert abs(math.tan(b * w) - t2 * math.tan(a * w)) <= 1e-9


def test_interval_limit_frequencies_large_theta():
    # theta -> infinity decouples into Dirichlet (a,0) + Neumann-at-0 (0,b)
    roots = interval_limit_frequencies(-1.0, 2.0, 1e6, 8)
    expected = sorted(
        [math.pi * k for k in (1, 2)] + [(k - 0.5) * math.pi / 2 for k in range(1, 7)]
    )[:8]
    assert np.allclose(roots, expected, atol=1e-4)


def test_split_limit_frequencies_multiplicity():
    w = split_limit_frequencies(-1.0, 2.0, 6)
    # pi and 2 pi are shared by both intervals and appear twice
    assert np.allclose(
        w, [math.pi / 2, math.pi, math.pi, 3 * math.pi / 2, 2 * math.pi, 2 * math.pi]
    )


def test_interval_resonant_limit(step, alpha1, theta1):
    spec = interval_spectrum(-1.0, 2.0, step, alpha1, 1e-3, 6)
    omegas = np.sqrt(spec.eigenvalues)
    limits = interval_limit_frequencies(-1.0, 2.0, theta1, 6)
    assert np.max(np.abs(omegas - limits) / limits) <= 1e-3


def test_interval_nonresonant_limit(step):
    spec = interval_spectrum(-1.0, 2.0, step, 5.0, 1e-3, 6)
    omegas = np.sqrt(spec.eigenvalues)
    limits = split_limit_frequencies(-1.0, 2.0, 6)
    assert np.max(np.abs(omegas - limits) / limits) <= 1e-3


def test_interval_validation(step):
    with pytest.raises(ValueError):
        interval_spectrum(0.1, 2.0, step, 1.0, 0.2, 3)
    with pytest.raises(ValueError):
        interval_limit_frequencies(1.0, 2.0, 1.0, 3)


# -- first-order corrector --------------------------------------------------------------

def test_corrector_vanishes_without_perturbation(harmonic, step):
    lim = eigen_limit(harmonic, ThetaCoupled(1.0), 1, eigenfunctions=True)
    lam1 = corrector_lambda1(
        harmonic, step, 0.0, float(lim.eigenvalues[0]), lim.boundary_traces[0], resonant=True
    )
    assert lam1 == pytest.approx(0.0, abs=1e-9)


def test_corrector_branch_guards(tilted, step, alpha1):
    trace = BoundaryTrace(v_minus=0.0, v_plus=0.0, dv_minus=0.0, dv_plus=1.0)
    with pytest.raises(PreconditionError):
        # resonant coupling fed to the non-resonant branch: singular cell solve
        corrector_lambda1(tilted, step, alpha1, 4.0, trace, resonant=False)
    with pytest.raises(NotInResonanceSetError):
        corrector_lambda1(tilted, step, 5.0, 4.0, trace, resonant=True)
    both_alive = BoundaryTrace(v_minus=1.0, v_plus=1.0, dv_minus=1.0, dv_plus=1.0)
    with pytest.raises(PreconditionError):
        corrector_lambda1(tilted, step, 5.0, 4.0, both_alive, resonant=False)


def test_corrector_mirror_branch_matches_direct(tilted, step):
    # the left-half branch is handled by mirror symmetry: check it against
    # the right-half branch of the mirrored problem
    from pointbarrier.profiles import reflect
    from pointbarrier.spectra import polynomial_potential

    split = eigen_limit(tilted, DirichletSplit(), 2, eigenfunctions=True)
    k_left = next(i for i, f in enumerate(split.flags) if f.startswith("left"))
    lam = float(split.eigenvalues[k_left])
    tr = split.boundary_traces[k_left]
    l1_left = corrector_lambda1(tilted, step, 5.0, lam, tr, resonant=False)

    mirrored_U = polynomial_potential([0.0, -1.0, 1.0], tilted.truncation_radius)
    mirrored_tr = BoundaryTrace(
        v_minus=0.0, v_plus=tr.v_minus, dv_minus=0.0, dv_plus=-tr.dv_minus
    )
    l1_right = corrector_lambda1(mirrored_U, reflect(step), 5.0, lam, mirrored_tr, resonant=False)
    assert l1_left == pytest.approx(l1_right, rel=1e-9)
