"""Bracketing and scalar root refinement used by every spectral scan.

Scans evaluate a smooth miss function on a grid (often vectorized), pick up
sign changes, then polish each bracket.  ``brent`` is the classic
inverse-quadratic/secant/bisection combination; ``bisect_vector`` polishes
many brackets simultaneously when the miss function can be evaluated on a
whole vector of points at once (one family propagation per iteration).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

_EPS = float(np.finfo(float).eps)


def sign_change_brackets(xs: Sequence[float], fs: Sequence[float]) -> list[tuple[float, float]]:
    """Consecutive grid cells where f changes sign strictly."""
    out = []
    for i in range(len(xs) - 1):
        fa, fb = fs[i], fs[i + 1]
        if fa == 0.0:
            continue
        if fb == 0.0:
            # zero exactly on a node: pair with the next nonzero value later
            continue
        if (fa < 0.0) != (fb < 0.0):
            out.append((xs[i], xs[i + 1]))
    return out


def brent(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float | None = None,
    fb: float | None = None,
    xtol: float = 1e-13,
    rtol: float = 8.0 * _EPS,
    maxiter: int = 128,
) -> tuple[float, float]:
    """Root of f in the sign-change bracket [a, b]; returns (root, f(root))."""
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fa == 0.0:
        return a, 0.0
    if fb == 0.0:
        return b, 0.0
    if (fa < 0.0) == (fb < 0.0):
        raise ValueError(f"not a sign-change bracket: f({a})={fa}, f({b})={fb}")
    c, fc = a, fa
    d = e = b - a
    for _ in range(maxiter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2.0 * rtol * abs(b) + 0.5 * xtol
        mid = 0.5 * (c - b)
        if abs(mid) <= tol or fb == 0.0:
            return b, fb
        if abs(e) < tol or abs(fa) <= abs(fb):
            d = e = mid
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * mid * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * mid * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * mid * q - abs(tol * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = e = mid
        a, fa = b, fb
        b += d if abs(d) > tol else math.copysign(tol, mid)
        fb = f(b)
        if (fb < 0.0) == (fc < 0.0):
            c, fc = a, fa
            d = e = b - a
    return b, fb


def illinois_vector(
    fvec: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    xtol: float = 1e-13,
    rtol: float = 1e-14,
    maxiter: int = 80,
) -> np.ndarray:
    """Safeguarded regula falsi (Illinois weighting) on many brackets at once.

    Converges superlinearly while keeping each iterate strictly inside its
    bracket, so one vectorized function evaluation per iteration polishes
    every root simultaneously.  Falls back to the midpoint whenever the
    secant step degenerates.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = np.asarray(fvec(lo), dtype=float).copy()
    fhi = np.asarray(fvec(hi), dtype=float).copy()
    if np.any((flo < 0.0) == (fhi < 0.0)):
        bad = np.nonzero((flo < 0.0) == (fhi < 0.0))[0]
        raise ValueError(f"bracket {bad[0]} does not straddle a sign change")
    side = np.zeros(lo.shape, dtype=int)  # -1: last replaced lo, +1: last replaced hi
    for _ in range(maxiter):
        width = np.abs(hi - lo)
        tol = xtol + rtol * np.maximum(np.abs(lo), np.abs(hi))
        if np.all(width <= tol):
            break
        denom = fhi - flo
        with np.errstate(invalid="ignore", divide="ignore"):
            x = (lo * fhi - hi * flo) / denom
        mid = 0.5 * (lo + hi)
        bad = ~np.isfinite(x)
        margin = 1e-12 * np.maximum(1.0, np.abs(x))
        bad |= (x - np.minimum(lo, hi)) < margin
        bad |= (np.maximum(lo, hi) - x) < margin
        x = np.where(bad, mid, x)
        fx = np.asarray(fvec(x), dtype=float)
        replace_hi = (fx < 0.0) != (flo < 0.0)
        # Illinois: halve the retained endpoint's value on a repeated side
        stale_hi = replace_hi & (side == 1)
        stale_lo = ~replace_hi & (side == -1)
        flo = np.where(stale_hi, 0.5 * flo, flo)
        fhi = np.where(stale_lo, 0.5 * fhi, fhi)
        lo = np.where(replace_hi, lo, x)
        flo = np.where(replace_hi, flo, fx)
        hi = np.where(replace_hi, x, hi)
        fhi = np.where(replace_hi, fx, fhi)
        side = np.where(replace_hi, 1, -1)
        exact = fx == 0.0
        if np.any(exact):
            lo = np.where(exact, x, lo)
            hi = np.where(exact, x, hi)
    return 0.5 * (lo + hi)


def bisect_vector(
    fvec: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    xtol: float = 1e-13,
    rtol: float = 1e-13,
    maxiter: int = 100,
) -> np.ndarray:
    """Bisection on many brackets at once.

    ``fvec`` maps an array of abscissae to an array of function values for
    the corresponding brackets (one evaluation of a whole family per
    iteration).  Each (lo[i], hi[i]) must bracket a sign change.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = fvec(lo)
    neg_lo = flo < 0.0
    for _ in range(maxiter):
        width = hi - lo
        if np.all(np.abs(width) <= xtol + rtol * np.abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        fm = fvec(mid)
        go_right = (fm < 0.0) == neg_lo
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)
