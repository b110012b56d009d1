"""Eigenvalue solvers for the squeezed-barrier operator and its limits.

Whole-line problems with a confining potential are truncated to a box
[-R, R] with Dirichlet walls (the truncation error is exponentially small
and is monitored by a wall-margin check).  Eigenvalues are located by
shooting: Cauchy data is carried from each wall to a matching point, an
interface condition is applied there, and the eigenvalues are the zeros of
the resulting scalar matching determinant.  The determinant is evaluated
for whole vectors of trial eigenvalues at once (one family propagation per
grid pass), bracketed on a Weyl-informed grid, and polished by a
safeguarded vectorized secant iteration.

The interface condition at the origin is one of:

* ``DirichletSplit``: two decoupled half-line Dirichlet problems (the
  totally reflecting limit of a non-resonant squeezed barrier);
* ``ThetaCoupled(theta)``: v(+0) = theta v(-0), theta v'(+0) = v'(-0)
  (the partially transmitting limit at a resonant coupling);
* ``ConnectedMatrix``: a general unimodular real interface matrix with an
  optional unitary phase (the phase drops out of the eigenvalue problem);
* ``Separated``: independent projective boundary conditions on each side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (
    NotInResonanceSetError,
    PreconditionError,
    SpectralWindowError,
    TruncationDomainError,
)
from .ivp import DEFAULT_CONFIG, FamilySegment, SolverConfig, propagate_family
from .profiles import Profile, reflect
from .resonance import _alpha_segments, scaled_residual, shoot
from .rootfind import brent, illinois_vector, sign_change_brackets

__all__ = [
    "DirichletSplit",
    "ThetaCoupled",
    "ConnectedMatrix",
    "Separated",
    "ConfiningPotential",
    "BoundaryTrace",
    "Spectrum",
    "polynomial_potential",
    "eigen_limit",
    "eigen_perturbed",
    "interval_spectrum",
    "interval_negative_levels",
    "interval_limit_frequencies",
    "split_limit_frequencies",
    "corrector_lambda1",
    "finite_difference_levels",
]

DEFAULT_EIG_TOL = 1e-8
DEFAULT_MARGIN = 25.0
SAMPLES_PER_UNIT = 2001
_CHUNK = 48


# -- interface conditions ------------------------------------------------------

@dataclass(frozen=True)
class DirichletSplit:
    """v(-0) = v(+0) = 0: decoupled half problems."""


@dataclass(frozen=True)
class ThetaCoupled:
    """v(+0) = theta v(-0) and theta v'(+0) = v'(-0), theta != 0.

    Equivalent to ``ConnectedMatrix`` with diag(theta, 1/theta) and zero
    phase.
    """

    theta: float

    def __post_init__(self):
        if self.theta == 0.0:
            raise ValueError("theta must be nonzero")

    def matrix(self) -> np.ndarray:
        return np.array([[self.theta, 0.0], [0.0, 1.0 / self.theta]])


@dataclass(frozen=True)
class ConnectedMatrix:
    """(v, v')(+0) = e^{i phi} C (v, v')(-0) with real unimodular C.

    The phase multiplies the whole interface matrix by a unit scalar, so
    it cancels from the matching determinant: eigenvalues depend on C
    only.  det C = 1 is enforced to 1e-12.
    """

    c11: float
    c12: float
    c21: float
    c22: float
    phi: float = 0.0

    def __post_init__(self):
        det = self.c11 * self.c22 - self.c12 * self.c21
        if abs(det - 1.0) > 1e-12:
            raise ValueError(f"interface matrix determinant must be 1, got {det}")
        if not -math.pi / 2 <= self.phi <= math.pi / 2:
            raise ValueError("phi must lie in [-pi/2, pi/2]")

    def matrix(self) -> np.ndarray:
        return np.array([[self.c11, self.c12], [self.c21, self.c22]])


@dataclass(frozen=True)
class Separated:
    """h1 v'(0) = h2 v(0) independently on each side (projective pairs)."""

    h1m: float
    h2m: float
    h1p: float
    h2p: float

    def __post_init__(self):
        if self.h1m == self.h2m == 0.0 or self.h1p == self.h2p == 0.0:
            raise ValueError("each projective pair must be nonzero")


BoundaryCoupling = DirichletSplit | ThetaCoupled | ConnectedMatrix | Separated


@dataclass(frozen=True)
class ConfiningPotential:
    """Smooth background potential with its truncation radius.

    The wall check ``U(+-R) >= lambda + margin`` runs at solve time; the
    default margin of 25 makes the Dirichlet-truncation error far below
    the eigenvalue tolerance.
    """

    U: Callable[[float], float]
    truncation_radius: float
    label: str = "potential"

    def __post_init__(self):
        if self.truncation_radius <= 0:
            raise ValueError("truncation_radius must be positive")

    def wall_floor(self) -> float:
        R = self.truncation_radius
        return min(self.U(-R), self.U(R))


def polynomial_potential(coeffs: Sequence[float], radius: float, label: str | None = None) -> ConfiningPotential:
    """Confining potential sum(c_j x^j) on [-radius, radius]."""
    cs = tuple(float(c) for c in coeffs)

    def U(x: float) -> float:
        acc = 0.0
        for c in reversed(cs):
            acc = acc * x + c
        return acc

    return ConfiningPotential(U, radius, label or ("poly:" + ",".join(repr(c) for c in cs)))


@dataclass(frozen=True)
class BoundaryTrace:
    """One-sided boundary data (v, v') at the origin of a normalized
    eigenfunction."""

    v_minus: float
    v_plus: float
    dv_minus: float
    dv_plus: float


@dataclass
class Spectrum:
    """Ordered eigenvalues with optional sampled eigenfunctions.

    Eigenfunctions are normalized to unit L2 norm on the sampled grid and
    oriented so the largest-magnitude sample is positive.  ``residuals``
    are the normalized matching-determinant values at convergence;
    ``flags`` carry 'ok', 'left'/'right' (split problems), 'degenerate'
    (near-coincident split pairs) or 'diving' (below the bounded window).
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    flags: list[str]
    x: np.ndarray | None = None
    eigenfunctions: np.ndarray | None = None
    boundary_traces: list[BoundaryTrace] | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.size > 1 and np.any(np.diff(lam) < -1e-9 * np.maximum(1.0, np.abs(lam[:-1]))):
            raise ValueError("eigenvalues must be ascending")


# -- matching determinants -----------------------------------------------------

def _norm2(Y: np.ndarray) -> np.ndarray:
    return np.sqrt(np.abs(Y[0]) ** 2 + np.abs(Y[1]) ** 2)


def _wall_chain(U: ConfiningPotential, wall: float, target: float) -> list[FamilySegment]:
    return [FamilySegment(wall, target, U.U, -1.0)]


def _barrier_chain(p: Profile, alpha: float, eps: float,
                   U: ConfiningPotential | None) -> list[FamilySegment]:
    """Segments covering [-eps, eps] in x with the squeezed profile.

    The coefficient is U(x) + alpha eps^-2 profile(x/eps) - lambda; profile
    breakpoints are segment boundaries so the integrator never straddles a
    discontinuity.
    """
    inv2 = alpha / (eps * eps)
    segs = []
    for seg in p.segments:
        lo, hi = eps * seg.a, eps * seg.b

        if U is None and seg.is_constant:
            segs.append(FamilySegment(lo, hi, inv2 * seg.coeffs[0], -1.0))
            continue

        def cpart(x: float, _seg=seg, _inv2=inv2) -> float:
            val = _inv2 * _seg(x / eps)
            if U is not None:
                val += U.U(x)
            return val

        segs.append(FamilySegment(lo, hi, cpart, -1.0))
    return segs


def _side_residual(pair: tuple[float, float], Y: np.ndarray) -> np.ndarray:
    h1, h2 = pair
    scale = math.hypot(h1, h2)
    return (h2 * Y[0] - h1 * Y[1]) / (scale * _norm2(Y))


def _connected_det(C: np.ndarray, YL: np.ndarray, YR: np.ndarray) -> np.ndarray:
    V0 = C[0, 0] * YL[0] + C[0, 1] * YL[1]
    V1 = C[1, 0] * YL[0] + C[1, 1] * YL[1]
    det = V0 * YR[1] - V1 * YR[0]
    norm = np.sqrt(V0**2 + V1**2) * _norm2(YR)
    return det / norm


# -- Weyl-informed eigenvalue grids ---------------------------------------------

def _weyl_gap_fn(U: ConfiningPotential) -> Callable[[float], float]:
    R = U.truncation_radius
    xs = np.linspace(-R, R, 801)
    Us = np.array([U.U(float(x)) for x in xs])

    def gap(lam: float) -> float:
        diff = lam - Us
        mask = diff > 1e-9
        if not np.any(mask):
            return 0.5
        dens = np.trapezoid(1.0 / np.sqrt(diff[mask]), xs[mask]) / (2.0 * math.pi)
        if dens <= 0.0:
            return 0.5
        return min(1.0 / dens, 20.0)

    return gap


def _verified_scan(
    fc,
    start: float,
    ceiling: float,
    gap_fn: Callable[[float], float],
    k_needed: int,
    what: str,
):
    """March upward bracketing sign changes of the matching determinant.

    ``fc(lams) -> (values, oscillation counts)``.  Whenever the zero count
    of the shooting solutions rises across a cell by more than the number
    of visible sign changes, the cell hides eigenvalues (near-degenerate
    pairs of split-like problems defeat any fixed grid), so it is bisected
    until every root shows its own sign change.
    """
    brackets: list[tuple[float, float]] = []
    lam_prev = start
    v0, c0 = fc(np.array([start]))
    f_prev, n_prev = float(v0[0]), int(c0[0])
    guard = 0
    while len(brackets) < k_needed:
        pts = []
        lam = lam_prev
        for _ in range(_CHUNK):
            lam = lam + 0.5 * gap_fn(lam)
            pts.append(lam)
            if lam > ceiling:
                break
        vals, counts = fc(np.array(pts))
        xs = [lam_prev] + pts
        fs = [f_prev] + list(vals)
        cs = [n_prev] + [int(c) for c in counts]
        for i in range(len(xs) - 1):
            _resolve_cell(fc, xs[i], fs[i], cs[i], xs[i + 1], fs[i + 1], cs[i + 1], brackets)
        lam_prev, f_prev, n_prev = pts[-1], float(vals[-1]), int(counts[-1])
        if lam_prev > ceiling:
            if len(brackets) < k_needed:
                raise TruncationDomainError(
                    f"{what}: only {len(brackets)} of {k_needed} eigenvalues found below "
                    f"the wall ceiling {ceiling:.6g}; enlarge the truncation radius"
                )
            break
        guard += 1
        if guard > 4000:
            raise SpectralWindowError(f"{what}: eigenvalue search did not terminate")
    return brackets[:k_needed]


def _resolve_cell(fc, xa, fa, ca, xb, fb, cb, out, depth: int = 0) -> None:
    """Emit brackets in (xa, xb), subdividing where counts reveal hidden roots."""
    sign_change = fa != 0.0 and fb != 0.0 and (fa < 0.0) != (fb < 0.0)
    expected = max(0, cb - ca)
    if expected >= 2 or (expected == 1 and not sign_change):
        floor = 1e-5 * max(1.0, abs(xa), abs(xb))
        if xb - xa > floor and depth < 40:
            xm = 0.5 * (xa + xb)
            vm, cm = fc(np.array([xm]))
            fm, nm = float(vm[0]), int(cm[0])
            _resolve_cell(fc, xa, fa, ca, xm, fm, nm, out, depth + 1)
            _resolve_cell(fc, xm, fm, nm, xb, fb, cb, out, depth + 1)
            return
    if sign_change:
        out.append((xa, xb))


def _refine(fvec, brackets, eig_tol):
    if not brackets:
        return np.empty(0), np.empty(0)
    lo = np.array([a for a, _ in brackets])
    hi = np.array([b for _, b in brackets])
    xtol = max(1e-13, min(1e-10, eig_tol * 1e-3))
    roots = illinois_vector(fvec, lo, hi, xtol=xtol, rtol=1e-14)
    residuals = np.abs(fvec(roots))
    return roots, residuals


# -- limit operator --------------------------------------------------------------

def eigen_limit(
    U: ConfiningPotential,
    bc: BoundaryCoupling,
    k_max: int,
    cfg: SolverConfig | None = None,
    eig_tol: float = DEFAULT_EIG_TOL,
    *,
    margin: float = DEFAULT_MARGIN,
    eigenfunctions: bool = True,
    samples_per_unit: int = SAMPLES_PER_UNIT,
) -> Spectrum:
    """Lowest ``k_max`` eigenvalues of -v'' + U v with interface ``bc`` at 0.

    Dirichlet walls sit at +-R (R from the potential record).  Split-type
    couplings may return near-coincident pairs; both members are reported
    and flagged.  Raises ``TruncationDomainError`` when a requested level
    comes within ``margin`` of the wall potential.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    cfg = cfg or DEFAULT_CONFIG
    R = U.truncation_radius
    ceiling = U.wall_floor() - margin
    gap_fn = _weyl_gap_fn(U)
    start = min(0.0, _min_potential(U)) - 1.0

    if isinstance(bc, (DirichletSplit, Separated)):
        pairs = _separated_pairs(bc)
        found = []
        for side, pair in (("left", pairs[0]), ("right", pairs[1])):
            fc = _half_fvec(U, side, pair, cfg, with_counts=True)
            fvec = _half_fvec(U, side, pair, cfg)
            brackets = _verified_scan(fc, start, ceiling, gap_fn, k_max, f"{side} half problem")
            roots, residuals = _refine(fvec, brackets, eig_tol)
            found.extend((lam, res, side) for lam, res in zip(roots, residuals))
        found.sort(key=lambda t: t[0])
        found = found[:k_max]
        lams = np.array([t[0] for t in found])
        residuals = np.array([t[1] for t in found])
        flags = [t[2] for t in found]
        for i in range(len(lams) - 1):
            if lams[i + 1] - lams[i] < 10.0 * eig_tol:
                flags[i] += ",degenerate"
                flags[i + 1] += ",degenerate"
    else:
        C = bc.matrix()
        lams, residuals = _connected_levels(U, C, k_max, cfg, eig_tol, start, ceiling, gap_fn)
        flags = ["ok"] * len(lams)

    if lams.size and lams[-1] > ceiling:
        raise TruncationDomainError(
            f"eigenvalue {lams[-1]:.6g} is within {margin} of the wall potential "
            f"{U.wall_floor():.6g}; enlarge the truncation radius"
        )

    spec = Spectrum(lams, residuals, flags)
    if eigenfunctions:
        _attach_limit_eigenfunctions(spec, U, bc, cfg, samples_per_unit)
    return spec


def _min_potential(U: ConfiningPotential) -> float:
    R = U.truncation_radius
    xs = np.linspace(-R, R, 801)
    return min(U.U(float(x)) for x in xs)


def _separated_pairs(bc) -> tuple[tuple[float, float], tuple[float, float]]:
    if isinstance(bc, DirichletSplit):
        return (0.0, 1.0), (0.0, 1.0)
    return (bc.h1m, bc.h2m), (bc.h1p, bc.h2p)


def _half_fvec(U, side, pair, cfg, with_counts: bool = False):
    wall = -U.truncation_radius if side == "left" else U.truncation_radius

    def fvec(lams: np.ndarray):
        res = propagate_family(
            _wall_chain(U, wall, 0.0), lams, np.array([0.0, 1.0]), cfg,
            rescale=True, count_zeros=with_counts,
        )
        vals = _side_residual(pair, res.states)
        return (vals, res.zero_counts) if with_counts else vals

    return fvec


def _connected_fvec(U, C, cfg):
    R = U.truncation_radius

    def fvec(lams: np.ndarray) -> np.ndarray:
        left = propagate_family(
            _wall_chain(U, -R, 0.0), lams, np.array([0.0, 1.0]), cfg, rescale=True
        )
        right = propagate_family(
            _wall_chain(U, R, 0.0), lams, np.array([0.0, 1.0]), cfg, rescale=True
        )
        return _connected_det(C, left.states, right.states)

    return fvec


def _connected_levels(U, C, k_max, cfg, eig_tol, start, ceiling, gap_fn):
    """Eigenvalues of a connected interface condition via interlacing.

    The coupled levels interlace the Dirichlet-split levels (the split form
    domain is a subspace of the coupled one), so between consecutive split
    values there is exactly one coupled eigenvalue, no matter how tightly
    it hugs a split value.  Each window is bracketed with shrinking offsets
    from its endpoints; a window whose root hides within the smallest
    offset of a split value is pinned to that split value.
    """
    split_found = []
    for side in ("left", "right"):
        fc = _half_fvec(U, side, (0.0, 1.0), cfg, with_counts=True)
        fv = _half_fvec(U, side, (0.0, 1.0), cfg)
        brackets = _verified_scan(fc, start, ceiling, gap_fn, k_max, f"{side} split window")
        roots, _ = _refine(fv, brackets, eig_tol)
        split_found.extend(float(r) for r in roots)
    mus = np.sort(np.array(split_found))[:k_max]

    fvec = _connected_fvec(U, C, cfg)
    windows = [(start, mus[0])] + [(mus[i], mus[i + 1]) for i in range(k_max - 1)]
    roots = []
    for a, b in windows:
        scale = max(1.0, abs(a), abs(b))
        if b - a <= 1e-11 * scale:
            roots.append(b)  # coincident split pair pins the coupled level
            continue
        root = None
        for delta_rel in (1e-7, 1e-10, 1e-13):
            delta = delta_rel * scale
            aa, bb = a + delta, b - delta
            if not aa < bb:
                continue
            va, vb = fvec(np.array([aa, bb]))
            if va == 0.0:
                root = aa
                break
            if vb == 0.0:
                root = bb
                break
            if (va < 0.0) != (vb < 0.0):
                root, _ = brent(lambda t: float(fvec(np.array([t]))[0]), aa, bb,
                                fa=float(va), fb=float(vb), xtol=1e-13)
                break
        if root is None:
            # the coupled level hides within the smallest offset of a split
            # value; decide which endpoint by the determinant magnitude
            va, vb = np.abs(fvec(np.array([a + 1e-13 * scale, b - 1e-13 * scale])))
            root = a if va < vb else b
        roots.append(float(root))
    roots = np.array(roots)
    residuals = np.abs(fvec(roots))
    return roots, residuals


# -- perturbed operator -----------------------------------------------------------

def eigen_perturbed(
    U: ConfiningPotential,
    p: Profile,
    alpha: float,
    eps: float,
    k_range: tuple[int, int],
    cfg: SolverConfig | None = None,
    eig_tol: float = DEFAULT_EIG_TOL,
    *,
    margin: float = DEFAULT_MARGIN,
    eigenfunctions: bool = False,
    samples_per_unit: int = SAMPLES_PER_UNIT,
) -> Spectrum:
    """Eigenvalues k_lo..k_hi (1-based, global) of the squeezed-barrier
    operator -y'' + (U + alpha eps^-2 profile(x/eps)) y on [-R, R].

    The search window reaches down to -2 |alpha| max|profile| eps^-2, which
    bounds the operator from below, so deep levels that dive like eps^-2
    are always located.  Deep levels are refined to a relative accuracy of
    about 1e-7 (they scale like eps^-2 and only their count and magnitude
    matter); bounded levels are refined to ``eig_tol``.
    """
    k_lo, k_hi = k_range
    if not (1 <= k_lo <= k_hi):
        raise ValueError("need 1 <= k_lo <= k_hi")
    if not 0.0 < eps < 1.0:
        raise ValueError("need 0 < eps < 1")
    cfg = cfg or DEFAULT_CONFIG
    R = U.truncation_radius
    if eps >= R:
        raise ValueError("barrier wider than the computational box")
    ceiling = U.wall_floor() - margin

    lam_split = min(0.0, _min_potential(U)) - 1.0
    neg_roots, neg_residuals = _perturbed_negative_levels(U, p, alpha, eps, lam_split, cfg)

    entries = [(lam, res, "diving") for lam, res in zip(neg_roots, neg_residuals)]
    n_found = len(entries)
    if n_found < k_hi:
        fc = _perturbed_fvec(U, p, alpha, eps, cfg, with_counts=True)
        fvec = _perturbed_fvec(U, p, alpha, eps, cfg)
        gap_fn = _weyl_gap_fn(U)
        brackets = _verified_scan(
            fc, lam_split, ceiling, gap_fn, k_hi - n_found, "squeezed-barrier problem"
        )
        roots, residuals = _refine(fvec, brackets, eig_tol)
        entries.extend((lam, res, "ok") for lam, res in zip(roots, residuals))

    entries.sort(key=lambda t: t[0])
    if len(entries) < k_hi:
        raise SpectralWindowError(
            f"found only {len(entries)} levels, requested up to index {k_hi}"
        )
    chosen = entries[k_lo - 1 : k_hi]
    spec = Spectrum(
        np.array([t[0] for t in chosen]),
        np.array([t[1] for t in chosen]),
        [t[2] for t in chosen],
    )
    if eigenfunctions:
        _attach_perturbed_eigenfunctions(spec, U, p, alpha, eps, cfg, samples_per_unit)
    return spec


def _perturbed_fvec(U, p, alpha, eps, cfg, wall: float | None = None, with_counts: bool = False):
    """Matching determinant at x = +eps for the full squeezed problem."""
    R = U.truncation_radius
    w = R if wall is None else wall

    left_chain = _wall_chain(U, -w, -eps) + _barrier_chain(p, alpha, eps, U)
    right_chain = _wall_chain(U, w, eps)

    def fvec(lams: np.ndarray):
        left = propagate_family(
            left_chain, lams, np.array([0.0, 1.0]), cfg, rescale=True, count_zeros=with_counts
        )
        right = propagate_family(
            right_chain, lams, np.array([0.0, 1.0]), cfg, rescale=True, count_zeros=with_counts
        )
        det = left.states[0] * right.states[1] - left.states[1] * right.states[0]
        vals = det / (_norm2(left.states) * _norm2(right.states))
        if with_counts:
            return vals, left.zero_counts + right.zero_counts
        return vals

    return fvec


def _perturbed_negative_levels(U, p, alpha, eps, lam_split, cfg):
    """All eigenvalues below ``lam_split``, chunked by depth.

    For each depth band the Dirichlet walls are pulled in to
    eps + 44 / sqrt(|lambda|/2) (clamped to R): outside that range the
    solutions decay through at least ~60 e-folds, so the wall position is
    irrelevant, and the integration span stays O(1) even for levels of
    size eps^-2.  A cheaper tolerance is used: these levels scale like
    eps^-2 and only their count and leading digits matter.
    """
    if alpha == 0.0:
        return np.empty(0), np.empty(0)
    depth = 2.0 * abs(alpha) * p.max_abs() / (eps * eps)
    lam_min = min(lam_split, -depth)
    if lam_min >= lam_split:
        return np.empty(0), np.empty(0)
    loose = SolverConfig(rel_tol=1e-8, abs_tol=1e-10)
    R = U.truncation_radius

    bands = []
    top = lam_split
    while top > lam_min:
        bottom = max(lam_min, top * 4.0 if top < -1.0 else top - 4.0)
        if bottom > lam_min and lam_min / bottom < 1.5:
            bottom = lam_min
        bands.append((bottom, top))
        top = bottom

    roots_all = []
    res_all = []
    for bottom, top in bands:
        wall = min(R, eps + 44.0 / math.sqrt(max(1.0, 0.5 * abs(top))))
        fc = _perturbed_fvec(U, p, alpha, eps, loose, wall=wall, with_counts=True)
        fvec = _perturbed_fvec(U, p, alpha, eps, loose, wall=wall)
        n_pts = 60
        grid = np.linspace(bottom, top, n_pts)
        vals, counts = fc(grid)
        brackets: list[tuple[float, float]] = []
        for i in range(n_pts - 1):
            _resolve_cell(
                fc, grid[i], float(vals[i]), int(counts[i]),
                grid[i + 1], float(vals[i + 1]), int(counts[i + 1]), brackets,
            )
        if not brackets:
            continue
        lo = np.array([x for x, _ in brackets])
        hi = np.array([x for _, x in brackets])
        roots = illinois_vector(fvec, lo, hi, xtol=1e-11, rtol=1e-8)
        roots_all.extend(float(r) for r in roots)
        res_all.extend(float(abs(v)) for v in fvec(roots))
    order = np.argsort(roots_all)
    return np.array(roots_all)[order], np.array(res_all)[order]


# -- interval problem (no background potential) ------------------------------------

def _interval_chain(a, b, p, alpha, eps) -> list[FamilySegment]:
    return (
        [FamilySegment(a, -eps, 0.0, -1.0)]
        + _barrier_chain(p, alpha, eps, None)
        + [FamilySegment(eps, b, 0.0, -1.0)]
    )


def _interval_fvec(a, b, p, alpha, eps, cfg, with_counts: bool = False):
    chain = _interval_chain(a, b, p, alpha, eps)

    def fvec(lams: np.ndarray):
        res = propagate_family(
            chain, lams, np.array([0.0, 1.0]), cfg, rescale=True, count_zeros=with_counts
        )
        vals = res.states[0] / _norm2(res.states)
        if with_counts:
            return vals, res.zero_counts
        return vals

    return fvec


def interval_spectrum(
    a: float,
    b: float,
    p: Profile,
    alpha: float,
    eps: float,
    count: int,
    cfg: SolverConfig | None = None,
    eig_tol: float = DEFAULT_EIG_TOL,
    *,
    eigenfunctions: bool = False,
    samples_per_unit: int = SAMPLES_PER_UNIT,
) -> Spectrum:
    """Lowest ``count`` nonnegative eigenvalues of the squeezed barrier on
    (a, b) with Dirichlet ends and no background potential.

    The scan runs over the frequency omega = sqrt(lambda); near-coincident
    pairs (both half-intervals close to resonance) are resolved by an
    omega step that also shrinks with eps.
    """
    if not (a < -eps < eps < b):
        raise ValueError("need a < -eps < eps < b")
    if count < 1:
        raise ValueError("count must be at least 1")
    cfg = cfg or DEFAULT_CONFIG
    fc = _interval_fvec(a, b, p, alpha, eps, cfg, with_counts=True)
    fvec = _interval_fvec(a, b, p, alpha, eps, cfg)

    d_omega = min(math.pi / (8.0 * (abs(a) + b)), max(eps / 2.0, 1e-4))
    brackets: list[tuple[float, float]] = []
    omega = 0.0
    v0, c0 = fc(np.array([0.0]))
    f_prev, n_prev = float(v0[0]), int(c0[0])
    guard = 0
    while len(brackets) < count:
        omegas = omega + d_omega * np.arange(1, 513)
        vals, counts = fc(omegas**2)
        xs = list(np.concatenate(([omega], omegas)) ** 2)
        fs = [f_prev] + list(vals)
        cs = [n_prev] + [int(c) for c in counts]
        for i in range(len(xs) - 1):
            _resolve_cell(fc, xs[i], fs[i], cs[i], xs[i + 1], fs[i + 1], cs[i + 1], brackets)
        omega = float(omegas[-1])
        f_prev = float(vals[-1])
        n_prev = int(counts[-1])
        guard += 1
        if guard > 200:
            raise SpectralWindowError("interval eigenvalue search did not terminate")
    brackets = brackets[:count]
    lams, residuals = _refine(fvec, brackets, eig_tol)
    spec = Spectrum(lams, residuals, ["ok"] * len(lams))
    if eigenfunctions:
        _attach_interval_eigenfunctions(spec, a, b, p, alpha, eps, cfg, samples_per_unit)
    return spec


def interval_negative_levels(
    a: float,
    b: float,
    p: Profile,
    alpha: float,
    eps: float,
    cfg: SolverConfig | None = None,
    *,
    rel_floor: float = 1e-7,
) -> np.ndarray:
    """All negative eigenvalues of the squeezed barrier on (a, b), ascending.

    Scans the rescaled depth mu = eps^2 lambda on a geometric grid from the
    operator lower bound -2 |alpha| max|profile| down to ``rel_floor``
    times that depth, which picks up arbitrarily shallow wells at desk
    scale.
    """
    if alpha == 0.0:
        return np.empty(0)
    cfg = cfg or DEFAULT_CONFIG
    fc = _interval_fvec(a, b, p, alpha, eps, cfg, with_counts=True)
    fvec = _interval_fvec(a, b, p, alpha, eps, cfg)
    depth = 2.0 * abs(alpha) * p.max_abs()
    mu = -np.geomspace(depth, depth * rel_floor, 220)
    lams = mu / (eps * eps)
    vals, counts = fc(lams)
    brackets: list[tuple[float, float]] = []
    for i in range(len(lams) - 1):
        _resolve_cell(
            fc, lams[i], float(vals[i]), int(counts[i]),
            lams[i + 1], float(vals[i + 1]), int(counts[i + 1]), brackets,
        )
    if not brackets:
        return np.empty(0)
    lo = np.array([x for x, _ in brackets])
    hi = np.array([x for _, x in brackets])
    roots = illinois_vector(fvec, lo, hi, xtol=1e-12, rtol=1e-10)
    return np.sort(roots)


def interval_limit_frequencies(a: float, b: float, theta: float, count: int) -> np.ndarray:
    """First ``count`` positive limit eigenfrequencies of the interval
    problem at a resonant coupling with ratio ``theta``.

    These are the roots of ``tan(b w) = theta^2 tan(a w)``, evaluated in
    the pole-free form G(w) = sin(bw)cos(aw) - theta^2 sin(aw)cos(bw) so
    that coincident tangent poles (e.g. theta = 1 with |a| = b) are kept.
    Brackets come from a fine frequency grid; each root is polished by
    Newton steps on G.
    """
    if not (a < 0.0 < b):
        raise ValueError("need a < 0 < b")
    if count < 1:
        raise ValueError("count must be at least 1")
    t2 = theta * theta

    def G(w):
        return np.sin(b * w) * np.cos(a * w) - t2 * np.sin(a * w) * np.cos(b * w)

    def dG(w):
        return (
            b * np.cos(b * w) * np.cos(a * w)
            - a * np.sin(b * w) * np.sin(a * w)
            - t2 * (a * np.cos(a * w) * np.cos(b * w) - b * np.sin(a * w) * np.sin(b * w))
        )

    dw = math.pi / (16.0 * (abs(a) + b) * max(1.0, min(10.0, abs(theta))))
    roots: list[float] = []
    w0 = 0.0
    f0 = 0.0  # G(0) = 0 is the trivial root, excluded
    guard = 0
    while len(roots) < count:
        ws = w0 + dw * np.arange(1, 2049)
        fs = G(ws)
        xs = np.concatenate(([w0], ws))
        vals = np.concatenate(([f0], fs))
        for lo, hi in sign_change_brackets(xs, vals):
            if len(roots) >= count:
                break
            if lo == 0.0:
                continue
            w = _brent_scalar(G, lo, hi)
            for _ in range(3):
                d = dG(w)
                if d == 0.0:
                    break
                w -= G(w) / d
            if w > 1e-12:
                roots.append(float(w))
        w0 = float(ws[-1])
        f0 = float(fs[-1])
        guard += 1
        if guard > 400:
            raise SpectralWindowError("frequency search did not terminate")
    return np.array(roots[:count])


def split_limit_frequencies(a: float, b: float, count: int) -> np.ndarray:
    """First ``count`` positive roots of tan(a w) tan(b w) = 0: the limit
    eigenfrequencies of the decoupled Dirichlet intervals (a, 0) and
    (0, b).  Frequencies shared by both intervals are double eigenvalues
    of the decoupled operator and are listed twice."""
    if not (a < 0.0 < b):
        raise ValueError("need a < 0 < b")
    vals = []
    for k in range(1, count + 1):
        vals.append(k * math.pi / abs(a))
        vals.append(k * math.pi / b)
    return np.array(sorted(vals)[:count])


def _brent_scalar(f, lo, hi):
    root, _ = brent(lambda x: float(f(x)), float(lo), float(hi), xtol=1e-14)
    return root


# -- first-order eigenvalue correction ----------------------------------------------

def corrector_lambda1(
    U: ConfiningPotential,
    p: Profile,
    alpha: float,
    lam: float,
    v_data: BoundaryTrace,
    resonant: bool,
    cfg: SolverConfig | None = None,
    residual_tol: float = 1e-9,
) -> float:
    """First-order coefficient lambda_1 of the eigenvalue expansion
    lambda(eps) ~ lambda + eps lambda_1 for the squeezed barrier.

    ``v_data`` holds the boundary data of the unit-normalized limit
    eigenfunction.  Non-resonant branch (eigenfunction supported on one
    half-axis): solve the one-sided Neumann cell problem
    -w1'' + alpha profile w1 = 0, w1'(-1) = 0, w1'(1) = v'(+0) and return
    v'(+0) (v'(+0) - w1(1)); the left-half case is handled by mirror
    symmetry.  Resonant branch: with W the Neumann cell eigenfunction
    normalized to W(-1) = 1 and theta = W(1),

        g1 = v'(-0) phi2(1) - v'(+0) - theta v'(-0),
        h1 = (U(0) - lam) [ v(-0) int W^2 - theta v(+0) - v(-0) ],
        lambda_1 = h1 v(-0) - g1 v'(+0),

    where phi2 is the cell solution with data (0, 1) at -1 and the second
    derivatives v''(+-0) = (U(0) - lam) v(+-0) come from the differential
    equation rather than numerical differentiation.
    """
    cfg = cfg or DEFAULT_CONFIG
    vd = v_data
    scale = max(abs(vd.v_minus), abs(vd.v_plus), abs(vd.dv_minus), abs(vd.dv_plus), 1e-30)

    if not resonant:
        left_dead = max(abs(vd.v_minus), abs(vd.dv_minus)) <= 1e-8 * scale
        right_dead = max(abs(vd.v_plus), abs(vd.dv_plus)) <= 1e-8 * scale
        if left_dead == right_dead:
            raise PreconditionError(
                "non-resonant branch needs an eigenfunction vanishing on exactly one half-axis"
            )
        if right_dead:
            # eigenfunction lives on the left: mirror the problem
            prof = reflect(p)
            slope = -vd.dv_minus
        else:
            prof = p
            slope = vd.dv_plus
        w1_end, miss = shoot(prof, alpha, cfg)
        if scaled_residual(prof, alpha, w1_end, miss) <= residual_tol:
            raise PreconditionError(
                "non-resonant corrector called at a resonant coupling (singular cell problem)"
            )
        w1_at_1 = slope * w1_end / miss
        return slope * (slope - w1_at_1)

    w1_end, miss = shoot(p, alpha, cfg)
    rho = scaled_residual(p, alpha, w1_end, miss)
    if rho > residual_tol:
        raise NotInResonanceSetError(
            f"resonant corrector called off the resonance set (defect {rho:.3e})"
        )
    theta = w1_end
    # cell eigenfunction samples for int W^2 (Simpson on a uniform grid)
    xi = np.linspace(-1.0, 1.0, 2001)
    cell = _alpha_segments(p)
    res = propagate_family(cell, np.array([alpha]), np.array([1.0, 0.0]), cfg, samples=xi)
    W = res.sample_states[:, 0, 0].real
    intW2 = _simpson(W * W, xi)
    phi2 = propagate_family(cell, np.array([alpha]), np.array([0.0, 1.0]), cfg).states[0, 0]

    g1 = vd.dv_minus * phi2 - vd.dv_plus - theta * vd.dv_minus
    u0 = U.U(0.0)
    ddv_minus = (u0 - lam) * vd.v_minus
    ddv_plus = (u0 - lam) * vd.v_plus
    h1 = (u0 - lam) * vd.v_minus * intW2 - theta * ddv_plus - ddv_minus
    return h1 * vd.v_minus - g1 * vd.dv_plus


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    n = len(x) - 1
    h = (x[-1] - x[0]) / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


# -- finite-difference reference (independent of all shooting paths) -----------------

def finite_difference_levels(
    Ufun: Callable[[float], float], x_lo: float, x_hi: float, n: int, k: int
) -> np.ndarray:
    """Lowest ``k`` Dirichlet eigenvalues of -v'' + U v on [x_lo, x_hi] by a
    symmetric three-point discretization with ``n`` interior points.

    Serves as the independent cross-check for the shooting solvers; its
    error is O(h^2) with h = (x_hi - x_lo) / (n + 1).
    """
    h = (x_hi - x_lo) / (n + 1)
    xs = x_lo + h * np.arange(1, n + 1)
    diag = 2.0 / (h * h) + np.array([Ufun(float(x)) for x in xs])
    off = np.full(n - 1, -1.0 / (h * h))
    vals = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1), eigvals_only=True)
    return vals


# -- eigenfunction assembly ----------------------------------------------------------

def _grid(R: float, samples_per_unit: int) -> np.ndarray:
    n = int(round(2 * R * samples_per_unit)) + 1
    return np.linspace(-R, R, n)


def _reconstruct(vals: np.ndarray, logs: np.ndarray) -> np.ndarray:
    ref = float(np.max(logs)) if logs.size else 0.0
    return vals * np.exp(logs - ref)


def _normalize(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    nrm = math.sqrt(float(np.trapezoid(v * v, x)))
    if nrm == 0.0:
        return v
    v = v / nrm
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def _sample_piece(chain, lam, cfg, xs_path):
    """Propagate one chain recording samples; keep values in (mantissa,
    log-exponent) form so pieces with different growth can be combined."""
    res = propagate_family(chain, np.array([lam]), np.array([0.0, 1.0]), cfg,
                           rescale=True, samples=xs_path)
    return {
        "u": res.sample_states[:, 0, 0].real.copy(),
        "du": res.sample_states[:, 1, 0].real.copy(),
        "log": res.sample_logs[:, 0].copy(),
        "end": res.states[:, 0].real.copy(),
        "end_log": float(res.logs[0]),
    }


def _l2(x, v):
    return math.sqrt(float(np.trapezoid(v * v, x)))


def _combine_pieces(xs, pieces):
    """Stitch (values, exponents) pieces on a shared grid, normalize to unit
    L2 norm, orient the largest sample positive; returns (v, overall scale
    applied to raw e^0-exponent quantities)."""
    ref = max(float(np.max(pc_log)) for _, pc_log in pieces if pc_log.size)
    v = np.concatenate([vals * np.exp(logs - ref) for vals, logs in pieces])
    nrm = _l2(xs, v)
    sgn = 1.0
    if nrm > 0:
        v = v / nrm
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
            sgn = -1.0
    return v, ref, (sgn / nrm if nrm > 0 else 1.0)


def _attach_limit_eigenfunctions(spec, U, bc, cfg, samples_per_unit):
    R = U.truncation_radius
    xs = _grid(R, samples_per_unit)
    left_xs = xs[xs <= 0.0]
    right_xs = xs[xs > 0.0]
    n_left = len(left_xs)
    funcs = np.zeros((len(spec.eigenvalues), len(xs)))
    traces = []
    for i, lam in enumerate(spec.eigenvalues):
        lam = float(lam)
        if isinstance(bc, (DirichletSplit, Separated)):
            side = "left" if spec.flags[i].startswith("left") else "right"
            if side == "left":
                pc = _sample_piece(_wall_chain(U, -R, 0.0), lam, cfg, left_xs)
                v, ref, s = _combine_pieces(
                    xs, [(pc["u"], pc["log"]), (np.zeros(len(right_xs)), np.full(len(right_xs), -np.inf))]
                )
                e = math.exp(pc["end_log"] - ref) * s
                traces.append(BoundaryTrace(
                    v_minus=pc["end"][0] * e, v_plus=0.0,
                    dv_minus=pc["end"][1] * e, dv_plus=0.0,
                ))
            else:
                pc = _sample_piece(_wall_chain(U, R, 0.0), lam, cfg, right_xs[::-1])
                v, ref, s = _combine_pieces(
                    xs, [(np.zeros(n_left), np.full(n_left, -np.inf)), (pc["u"][::-1], pc["log"][::-1])]
                )
                e = math.exp(pc["end_log"] - ref) * s
                traces.append(BoundaryTrace(
                    v_minus=0.0, v_plus=pc["end"][0] * e,
                    dv_minus=0.0, dv_plus=pc["end"][1] * e,
                ))
            funcs[i] = v
        else:
            C = bc.matrix()
            pl = _sample_piece(_wall_chain(U, -R, 0.0), lam, cfg, left_xs)
            pr = _sample_piece(_wall_chain(U, R, 0.0), lam, cfg, right_xs[::-1])
            V0 = C[0, 0] * pl["end"][0] + C[0, 1] * pl["end"][1]
            V1 = C[1, 0] * pl["end"][0] + C[1, 1] * pl["end"][1]
            idx = int(np.argmax(np.abs(pr["end"])))
            ratio = (V0, V1)[idx] / pr["end"][idx]
            # right-piece exponents shifted onto the left piece's scale
            shift = pl["end_log"] - pr["end_log"]
            v, ref, s = _combine_pieces(
                xs,
                [(pl["u"], pl["log"]), (ratio * pr["u"][::-1], pr["log"][::-1] + shift)],
            )
            funcs[i] = v
            e = math.exp(pl["end_log"] - ref) * s
            traces.append(BoundaryTrace(
                v_minus=pl["end"][0] * e, v_plus=V0 * e,
                dv_minus=pl["end"][1] * e, dv_plus=V1 * e,
            ))
    spec.x = xs
    spec.eigenfunctions = funcs
    spec.boundary_traces = traces


def _attach_perturbed_eigenfunctions(spec, U, p, alpha, eps, cfg, samples_per_unit):
    R = U.truncation_radius
    xs = _grid(R, samples_per_unit)
    left_xs = xs[xs <= eps]
    right_xs = xs[xs > eps]
    left_chain = _wall_chain(U, -R, -eps) + _barrier_chain(p, alpha, eps, U)
    right_chain = _wall_chain(U, R, eps)
    funcs = np.zeros((len(spec.eigenvalues), len(xs)))
    for i, lam in enumerate(spec.eigenvalues):
        lam = float(lam)
        pl = _sample_piece(left_chain, lam, cfg, left_xs)
        pr = _sample_piece(right_chain, lam, cfg, right_xs[::-1])
        idx = int(np.argmax(np.abs(pr["end"])))
        ratio = pl["end"][idx] / pr["end"][idx]
        shift = pl["end_log"] - pr["end_log"]
        v, _, _ = _combine_pieces(
            xs, [(pl["u"], pl["log"]), (ratio * pr["u"][::-1], pr["log"][::-1] + shift)]
        )
        funcs[i] = v
    spec.x = xs
    spec.eigenfunctions = funcs
    spec.boundary_traces = None


def _attach_interval_eigenfunctions(spec, a, b, p, alpha, eps, cfg, samples_per_unit):
    n = int(round((b - a) * samples_per_unit)) + 1
    xs = np.linspace(a, b, n)
    chain = _interval_chain(a, b, p, alpha, eps)
    funcs = np.zeros((len(spec.eigenvalues), len(xs)))
    for i, lam in enumerate(spec.eigenvalues):
        res = propagate_family(chain, np.array([lam]), np.array([0.0, 1.0]), cfg,
                               rescale=True, samples=xs)
        v = _reconstruct(res.sample_states[:, 0, 0].real, res.sample_logs[:, 0])
        funcs[i] = _normalize(xs, v)
    spec.x = xs
    spec.eigenfunctions = funcs
