"""Propagation engine for linear second-order equations -u'' + q(x) u = f(x).

Everything downstream (shooting, spectra, scattering) reduces to carrying
Cauchy data (u, u') across an interval.  Two transport paths are provided:

* an embedded Dormand-Prince 5(4) adaptive Runge-Kutta pair on the
  first-order system, with mandatory step boundaries at supplied
  breakpoints of the coefficient (piecewise coefficients lose no order);
* closed-form constant-coefficient propagators (cosh/sinh, cos/sin, or a
  series near zero), used automatically for constant segments.

The engine propagates whole *families* of coefficients
``q_i(x) = c(x) + m_i * w(x)`` at once (vectorized over the family index),
which is what makes dense eigenvalue and resonance scans cheap.  States can
be renormalized on the fly with an accumulated log-scale so that strongly
exponential regimes never overflow; determinant signs are unaffected
because the scales are positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import StepSizeUnderflowError

__all__ = [
    "SolverConfig",
    "FamilySegment",
    "FamilyResult",
    "integrate",
    "propagator",
    "constant_propagator",
    "propagate_family",
]


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and step limits for the adaptive integrator.

    ``max_step``/``min_step`` default to 1e-2 and 1e-14 times the span of
    the integration interval when left as ``None``.  ``fixed_step`` forces
    plain steps of exactly ``max_step`` (used by convergence-order tests),
    bypassing error control.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float | None = None
    min_step: float | None = None
    fixed_step: bool = False

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        for name in ("max_step", "min_step"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_step is not None and self.min_step is not None:
            if not self.min_step < self.max_step:
                raise ValueError("min_step must be smaller than max_step")
        if self.fixed_step and self.max_step is None:
            raise ValueError("fixed_step mode requires an explicit max_step")

    def step_limits(self, span: float) -> tuple[float, float]:
        hmax = self.max_step if self.max_step is not None else span * 1e-2
        hmin = self.min_step if self.min_step is not None else span * 1e-14
        hmax = min(hmax, span)
        hmin = min(hmin, 0.5 * hmax)
        return hmax, hmin


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class FamilySegment:
    """Coefficient description on one sub-interval.

    The coefficient of the family member with weight ``m`` is
    ``c_part(x) + m * w_part(x)``; each part is either a plain float
    (constant on the segment) or a callable of ``x``.  Segments where both
    parts are floats are transported in closed form unless ``force_rk``.
    """

    a: float
    b: float
    c_part: float | Callable[[float], float]
    w_part: float | Callable[[float], float] = 0.0

    @property
    def exact(self) -> bool:
        return not callable(self.c_part) and not callable(self.w_part)


@dataclass
class FamilyResult:
    """Terminal states of a family propagation.

    ``states`` has shape (2, n); ``logs`` holds the accumulated natural-log
    scale factor per member (zero unless ``rescale`` was requested).  When
    sample points were supplied, ``sample_x``, ``sample_states``
    ((k, 2, n)) and ``sample_logs`` ((k, n)) record the states there.
    ``zero_counts`` (when requested) counts the interior zeros of u along
    the path per member, which by Sturm oscillation theory indexes the
    eigenvalues of regular problems.
    """

    states: np.ndarray
    logs: np.ndarray
    sample_x: np.ndarray | None = None
    sample_states: np.ndarray | None = None
    sample_logs: np.ndarray | None = None
    zero_counts: np.ndarray | None = None


# -- Dormand-Prince 5(4) tableau ---------------------------------------------

_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
_DP_B4 = (
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
)
_DP_E = tuple(b5 - b4 for b5, b4 in zip(_DP_B5, _DP_B4))

_SERIES_THRESHOLD = 1e-6  # |c| L^2 below this: use the power series
_EXP_SPLIT = 40.0  # kappa*|L| above this: factor out exp(kappa |L|)


# -- constant-coefficient closed forms ----------------------------------------

def _const_entries(c: np.ndarray, length: float):
    """Entries of the propagator of -u'' + c u = 0 over a signed ``length``.

    Returns (m11, m12, m21, m22, logscale); the true matrix is
    exp(logscale) times the returned entries.  Vectorized over ``c``.
    """
    c = np.asarray(c, dtype=float)
    z = c * length * length
    m11 = np.empty_like(c)
    m12 = np.empty_like(c)
    m21 = np.empty_like(c)
    logs = np.zeros_like(c)

    tiny = np.abs(z) <= _SERIES_THRESHOLD
    if np.any(tiny):
        zt = z[tiny]
        cosh_like = 1.0 + zt / 2.0 * (1.0 + zt / 12.0 * (1.0 + zt / 30.0))
        sinc_like = 1.0 + zt / 6.0 * (1.0 + zt / 20.0 * (1.0 + zt / 42.0))
        m11[tiny] = cosh_like
        m12[tiny] = length * sinc_like
        m21[tiny] = c[tiny] * length * sinc_like

    pos = (c > 0) & ~tiny
    if np.any(pos):
        k = np.sqrt(c[pos])
        t = k * length
        big = np.abs(t) > _EXP_SPLIT
        ch = np.empty_like(t)
        sh = np.empty_like(t)
        if np.any(~big):
            ch[~big] = np.cosh(t[~big])
            sh[~big] = np.sinh(t[~big])
        if np.any(big):
            # factor out exp(|t|); cosh t = e^|t| (1 + e^{-2|t|}) / 2
            e = np.exp(-2.0 * np.abs(t[big]))
            ch[big] = 0.5 * (1.0 + e)
            sh[big] = 0.5 * np.sign(t[big]) * (1.0 - e)
        m11[pos] = ch
        m12[pos] = sh / k
        m21[pos] = k * sh
        lg = np.zeros_like(t)
        lg[big] = np.abs(t[big])
        logs[pos] = lg

    neg = (c < 0) & ~tiny
    if np.any(neg):
        w = np.sqrt(-c[neg])
        t = w * length
        m11[neg] = np.cos(t)
        m12[neg] = np.sin(t) / w
        m21[neg] = -w * np.sin(t)

    return m11, m12, m21, m11.copy(), logs


def constant_propagator(c: float, length: float) -> np.ndarray:
    """Exact 2x2 propagator of -u'' + c u = 0 over a signed ``length``.

    ``c > 0`` gives the hyperbolic matrix [[cosh kL, sinh kL / k],
    [k sinh kL, cosh kL]] with k = sqrt(c); ``c < 0`` the trigonometric
    analogue; c near 0 is evaluated by series (free-particle limit
    [[1, L], [0, 1]]).
    """
    m11, m12, m21, m22, logs = _const_entries(np.array([float(c)]), float(length))
    scale = math.exp(logs[0])
    return np.array([[m11[0], m12[0]], [m21[0], m22[0]]]) * scale


# -- adaptive RK on a family ---------------------------------------------------

class _ZeroCounter:
    """Per-member count of interior zeros of u, tracked via sign flips.

    Valid because accepted steps are far shorter than the local zero
    spacing (h ~ 0.03 / sqrt|q| versus pi / sqrt|q|); constant segments
    are counted in closed form instead.
    """

    __slots__ = ("counts", "psign")

    def __init__(self, n: int):
        self.counts = np.zeros(n, dtype=int)
        self.psign = np.zeros(n, dtype=int)

    def update(self, u: np.ndarray) -> None:
        sgn = np.sign(u).astype(int)
        flip = (self.psign != 0) & (sgn != 0) & (sgn != self.psign)
        self.counts[flip] += 1
        self.psign = np.where(sgn != 0, sgn, self.psign)

    def update_scalar(self, i: int, u: float) -> None:
        sgn = 1 if u > 0 else (-1 if u < 0 else 0)
        if sgn != 0:
            if self.psign[i] != 0 and sgn != self.psign[i]:
                self.counts[i] += 1
            self.psign[i] = sgn


def _rk_span(
    qv: Callable[[float], np.ndarray | float],
    forcing: Callable[[float], complex] | None,
    x0: float,
    x1: float,
    Y: np.ndarray,
    logs: np.ndarray,
    cfg: SolverConfig,
    hmax: float,
    hmin: float,
    rescale: bool,
    record_xs=None,
    record_fn=None,
    counter: _ZeroCounter | None = None,
) -> None:
    """Advance Y in place from x0 to x1 (monotone span, no interior breaks).

    ``record_xs`` (sorted along the direction of travel) forces exact stops
    where ``record_fn(index_in_record_xs)`` is invoked; the adaptive step
    and the FSAL stage survive across the stops.
    """
    span = abs(x1 - x0)
    if span == 0.0 and record_xs is None:
        return
    if Y.shape[1] == 1:
        _rk_span_scalar(
            qv, forcing, x0, x1, Y, logs, cfg, hmax, hmin, rescale, record_xs, record_fn, counter
        )
    else:
        _rk_span_vector(
            qv, x0, x1, Y, logs, cfg, hmax, hmin, rescale, record_xs, record_fn, counter
        )


def _stops(x1: float, record_xs) -> list[float]:
    stops = list(record_xs) if record_xs is not None else []
    stops.append(x1)
    return stops


def _rk_span_scalar(
    qv, forcing, x0, x1, Y, logs, cfg, hmax, hmin, rescale, record_xs, record_fn, counter=None
) -> None:
    """Single-trajectory path in plain Python scalars (u, v may be complex)."""
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    direction = 1.0 if x1 > x0 else -1.0
    u = Y[0, 0].item()
    v = Y[1, 0].item()
    lg = float(logs[0])
    q = qv  # float-valued closure supplied by propagate_family for n == 1
    fz = forcing

    (a21,) = _DP_A[1]
    a31, a32 = _DP_A[2]
    a41, a42, a43 = _DP_A[3]
    a51, a52, a53, a54 = _DP_A[4]
    a61, a62, a63, a64, a65 = _DP_A[5]
    b1, _, b3, b4, b5, b6 = _DP_A[6]
    e1, _, e3, e4, e5, e6, e7 = _DP_E
    c2, c3, c4, c5, c6 = _DP_C[1:6]

    x = x0
    fixed = cfg.fixed_step
    h = direction * hmax if fixed else None

    ku1 = v
    kv1 = q(x) * u - (fz(x) if fz else 0.0)
    if h is None:
        qmag = abs(q(x0))
        span = abs(x1 - x0)
        h = direction * min(hmax, span if span > 0 else hmax, 0.5 / (math.sqrt(qmag) + (1.0 / span if span > 0 else 1.0)))

    stops = _stops(x1, record_xs)
    i_stop = 0
    while i_stop < len(stops):
        target = stops[i_stop]
        while (target - x) * direction > 1e-15 * max(1.0, abs(target)):
            clip = abs(h) > abs(target - x)
            hh = target - x if clip else h
            # unrolled Dormand-Prince stages for the linear system
            su = u + hh * (a21 * ku1)
            sv = v + hh * (a21 * kv1)
            xs = x + c2 * hh
            ku2 = sv
            kv2 = q(xs) * su - (fz(xs) if fz else 0.0)
            su = u + hh * (a31 * ku1 + a32 * ku2)
            sv = v + hh * (a31 * kv1 + a32 * kv2)
            xs = x + c3 * hh
            ku3 = sv
            kv3 = q(xs) * su - (fz(xs) if fz else 0.0)
            su = u + hh * (a41 * ku1 + a42 * ku2 + a43 * ku3)
            sv = v + hh * (a41 * kv1 + a42 * kv2 + a43 * kv3)
            xs = x + c4 * hh
            ku4 = sv
            kv4 = q(xs) * su - (fz(xs) if fz else 0.0)
            su = u + hh * (a51 * ku1 + a52 * ku2 + a53 * ku3 + a54 * ku4)
            sv = v + hh * (a51 * kv1 + a52 * kv2 + a53 * kv3 + a54 * kv4)
            xs = x + c5 * hh
            ku5 = sv
            kv5 = q(xs) * su - (fz(xs) if fz else 0.0)
            su = u + hh * (a61 * ku1 + a62 * ku2 + a63 * ku3 + a64 * ku4 + a65 * ku5)
            sv = v + hh * (a61 * kv1 + a62 * kv2 + a63 * kv3 + a64 * kv4 + a65 * kv5)
            xs = x + c6 * hh
            ku6 = sv
            kv6 = q(xs) * su - (fz(xs) if fz else 0.0)
            u5 = u + hh * (b1 * ku1 + b3 * ku3 + b4 * ku4 + b5 * ku5 + b6 * ku6)
            v5 = v + hh * (b1 * kv1 + b3 * kv3 + b4 * kv4 + b5 * kv5 + b6 * kv6)
            xe = x + hh
            ku7 = v5
            kv7 = q(xe) * u5 - (fz(xe) if fz else 0.0)

            if fixed:
                x = xe
                u, v = u5, v5
                ku1, kv1 = ku7, kv7
                if counter is not None:
                    counter.update_scalar(0, u.real if isinstance(u, complex) else u)
                continue

            eu = hh * (e1 * ku1 + e3 * ku3 + e4 * ku4 + e5 * ku5 + e6 * ku6 + e7 * ku7)
            ev = hh * (e1 * kv1 + e3 * kv3 + e4 * kv4 + e5 * kv5 + e6 * kv6 + e7 * kv7)
            den_u = atol + rtol * max(abs(u), abs(u5))
            den_v = atol + rtol * max(abs(v), abs(v5))
            err = max(abs(eu) / den_u, abs(ev) / den_v)
            if err <= 1.0:
                x = xe
                u, v = u5, v5
                ku1, kv1 = ku7, kv7
                if counter is not None:
                    counter.update_scalar(0, u.real if isinstance(u, complex) else u)
                if rescale:
                    s = max(abs(u), abs(v))
                    if s > 1e3 or (0.0 < s < 1e-3):
                        u /= s
                        v /= s
                        ku1 /= s
                        kv1 /= s
                        lg += math.log(s)
                fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err**-0.2)
                if not clip:
                    h *= max(0.2, fac)
                    if abs(h) > hmax:
                        h = direction * hmax
            else:
                if not math.isfinite(err):
                    h = hh * 0.1
                else:
                    h = hh * max(0.1, 0.9 * err**-0.2)
                if abs(h) < hmin:
                    raise StepSizeUnderflowError(x)
        if record_fn is not None and i_stop < len(stops) - 1:
            Y[0, 0] = u
            Y[1, 0] = v
            logs[0] = lg
            record_fn(i_stop)
        i_stop += 1
    Y[0, 0] = u
    Y[1, 0] = v
    logs[0] = lg


def _rk_span_vector(
    qv, x0, x1, Y, logs, cfg, hmax, hmin, rescale, record_xs, record_fn, counter=None
) -> None:
    """Family path: flat (2n,) states, stage combinations via BLAS matvec."""
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    direction = 1.0 if x1 > x0 else -1.0
    n = Y.shape[1]
    y = Y.reshape(-1).copy()  # [u_0..u_{n-1}, v_0..v_{n-1}]
    K = np.empty((7, 2 * n), dtype=Y.dtype)
    A = [np.asarray(row) for row in _DP_A]
    B5 = np.asarray(_DP_B5[:6])
    E = np.asarray(_DP_E)
    stage = np.empty_like(y)

    def eval_rhs(x: float, state: np.ndarray, out: np.ndarray) -> None:
        out[:n] = state[n:]
        np.multiply(qv(x), state[:n], out=out[n:])

    def flush() -> None:
        Y[0] = y[:n]
        Y[1] = y[n:]

    x = x0
    fixed = cfg.fixed_step
    eval_rhs(x, y, K[0])
    if fixed:
        h = direction * hmax
    else:
        qmag = float(np.max(np.abs(qv(x))))
        span = abs(x1 - x0)
        h = direction * min(
            hmax,
            span if span > 0 else hmax,
            0.5 / (math.sqrt(qmag) + (1.0 / span if span > 0 else 1.0)),
        )

    stops = _stops(x1, record_xs)
    i_stop = 0
    while i_stop < len(stops):
        target = stops[i_stop]
        while (target - x) * direction > 1e-15 * max(1.0, abs(target)):
            clip = abs(h) > abs(target - x)
            hh = target - x if clip else h
            for i in range(1, 7):
                np.multiply(hh, A[i] @ K[:i], out=stage)
                stage += y
                eval_rhs(x + _DP_C[i] * hh, stage, K[i])
            y5 = y + hh * (B5 @ K[:6])
            if fixed:
                x += hh
                y = y5
                K[0] = K[6]
                if counter is not None:
                    counter.update(y[:n].real)
                continue
            err = E @ K
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
            with np.errstate(invalid="ignore", divide="ignore"):
                err_norm = abs(hh) * float(np.max(np.abs(err) / scale))
            if not math.isfinite(err_norm):
                err_norm = math.inf
            if err_norm <= 1.0:
                x += hh
                y = y5
                K[0] = K[6]
                if counter is not None:
                    counter.update(y[:n].real)
                if rescale:
                    s = np.maximum(np.abs(y[:n]), np.abs(y[n:]))
                    if not np.all((s > 1e-3) & (s < 1e3)):
                        s = np.where(s == 0.0, 1.0, s)
                        y[:n] /= s
                        y[n:] /= s
                        K[0, :n] /= s
                        K[0, n:] /= s
                        logs += np.log(s)
                fac = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm**-0.2)
                if not clip:
                    h *= max(0.2, fac)
                    if abs(h) > hmax:
                        h = direction * hmax
            else:
                h = hh * (max(0.1, 0.9 * err_norm**-0.2) if math.isfinite(err_norm) else 0.1)
                if abs(h) < hmin:
                    raise StepSizeUnderflowError(x)
        if record_fn is not None and i_stop < len(stops) - 1:
            flush()
            record_fn(i_stop)
        i_stop += 1
    flush()


def _renorm(Y: np.ndarray, logs: np.ndarray):
    """Scale each family member to unit max-norm, accumulating log scales."""
    s = np.maximum(np.abs(Y[0]), np.abs(Y[1]))
    if np.all((s > 1e-3) & (s < 1e3)):
        return None
    s = np.where(s == 0.0, 1.0, s)
    Y /= s
    logs += np.log(s)
    return s


# -- family propagation over segment chains -----------------------------------

def _q_scalar_closure(seg: FamilySegment, m0: float):
    """Float-valued coefficient closure for single-trajectory runs."""
    cp, wp = seg.c_part, seg.w_part
    if callable(cp) and callable(wp):
        return lambda x: cp(x) + m0 * wp(x)
    if callable(cp):
        mw = m0 * float(wp)
        if mw == 0.0:
            return cp
        return lambda x: cp(x) + mw
    if callable(wp):
        c0 = float(cp)
        return lambda x: c0 + m0 * wp(x)
    const = float(cp) + m0 * float(wp)
    return lambda x: const


def _qv_closure(seg: FamilySegment, m: np.ndarray):
    cp, wp = seg.c_part, seg.w_part
    c_call = callable(cp)
    w_call = callable(wp)
    if not w_call and float(wp) == 0.0:
        if c_call:
            return cp
        const = float(cp) * np.ones_like(m)
        return lambda x: const
    if not c_call and not w_call:
        const = float(cp) + m * float(wp)
        return lambda x: const
    if c_call and w_call:
        return lambda x: cp(x) + m * wp(x)
    if c_call:
        mw = m * float(wp)
        return lambda x: cp(x) + mw
    c0 = float(cp)
    return lambda x: c0 + m * wp(x)


def propagate_family(
    segments: Sequence[FamilySegment],
    m,
    init,
    cfg: SolverConfig | None = None,
    *,
    rescale: bool = False,
    force_rk: bool = False,
    samples=None,
    forcing: Callable[[float], complex] | None = None,
    count_zeros: bool = False,
) -> FamilyResult:
    """Carry Cauchy data across an ordered chain of coefficient segments.

    ``m`` is the family weight vector (shape (n,), possibly n = 1); the
    member coefficients are ``c_part(x) + m_i w_part(x)``.  ``init`` is a
    shared (2,) state or a (2, n) block.  Consecutive segments must join;
    they may run in either direction, consistently.  ``samples`` requests
    state records at given x locations (visited in path order).
    """
    cfg = cfg or DEFAULT_CONFIG
    m = np.atleast_1d(np.asarray(m, dtype=float))
    n = m.size
    init = np.asarray(init)
    dtype = complex if np.iscomplexobj(init) else float
    if init.ndim == 1:
        Y = np.repeat(init.astype(dtype).reshape(2, 1), n, axis=1)
    else:
        Y = init.astype(dtype).copy()
        if Y.shape != (2, n):
            raise ValueError(f"init must have shape (2,) or (2, {n})")
    logs = np.zeros(n)

    # tiny families run faster member-by-member on the scalar fast path
    if 1 < n <= 6 and any(callable(s.c_part) or callable(s.w_part) for s in segments):
        parts = [
            propagate_family(
                segments, m[i : i + 1], Y[:, i], cfg,
                rescale=rescale, force_rk=force_rk, samples=samples, forcing=forcing,
                count_zeros=count_zeros,
            )
            for i in range(n)
        ]
        out = FamilyResult(
            np.concatenate([p.states for p in parts], axis=1),
            np.concatenate([p.logs for p in parts]),
        )
        if samples is not None:
            out.sample_x = parts[0].sample_x
            out.sample_states = np.concatenate([p.sample_states for p in parts], axis=2)
            out.sample_logs = np.concatenate([p.sample_logs for p in parts], axis=1)
        if count_zeros:
            out.zero_counts = np.concatenate([p.zero_counts for p in parts])
        return out

    if not segments:
        raise ValueError("need at least one segment")
    x_start = segments[0].a
    x_end = segments[-1].b
    direction = 1.0 if x_end > x_start else -1.0
    for seg in segments:
        if (seg.b - seg.a) * direction <= 0:
            raise ValueError("segments must advance monotonically")
    for left, right in zip(segments, segments[1:]):
        if abs(left.b - right.a) > 1e-12 * max(1.0, abs(left.b)):
            raise ValueError("segments must join end-to-start")

    span_total = abs(x_end - x_start)
    hmax, hmin = cfg.step_limits(span_total)

    if samples is not None:
        sample_x = np.asarray(samples, dtype=float)
        if sample_x.size and np.any(np.diff(sample_x) * direction < 0):
            raise ValueError("samples must be ordered along the integration direction")
        rec_states = np.empty((sample_x.size, 2, n), dtype=dtype)
        rec_logs = np.empty((sample_x.size, n))
    else:
        sample_x = None
        rec_states = rec_logs = None
    rec_i = 0

    counter = None
    if count_zeros:
        if dtype is complex:
            raise ValueError("zero counting requires a real-valued state")
        counter = _ZeroCounter(n)
        counter.update(Y[0].real)  # seed the sign without counting

    for seg in segments:
        seg_samples = []
        if sample_x is not None:
            while rec_i + len(seg_samples) < sample_x.size:
                xs = sample_x[rec_i + len(seg_samples)]
                inside = (xs - seg.a) * direction >= -1e-12 and (seg.b - xs) * direction >= -1e-12
                if not inside:
                    break
                seg_samples.append(xs)

        if seg.exact and not force_rk and not cfg.fixed_step and forcing is None:
            cvec = float(seg.c_part) + m * float(seg.w_part)
            x_of_record = seg.a
            for xs in seg_samples:
                _const_apply(cvec, xs - x_of_record, Y, logs, rescale, counter)
                rec_states[rec_i] = Y
                rec_logs[rec_i] = logs
                rec_i += 1
                x_of_record = xs
            _const_apply(cvec, seg.b - x_of_record, Y, logs, rescale, counter)
        else:
            qv = _q_scalar_closure(seg, float(m[0])) if n == 1 else _qv_closure(seg, m)
            base = rec_i

            def record(j: int, _base=base) -> None:
                rec_states[_base + j] = Y
                rec_logs[_base + j] = logs

            _rk_span(
                qv, forcing, seg.a, seg.b, Y, logs, cfg, hmax, hmin, rescale,
                record_xs=seg_samples or None,
                record_fn=record if seg_samples else None,
                counter=counter,
            )
            rec_i += len(seg_samples)
        if rescale:
            _renorm(Y, logs)

    if sample_x is not None and rec_i != sample_x.size:
        raise ValueError("some sample points fell outside the integration path")

    return FamilyResult(
        Y, logs, sample_x, rec_states, rec_logs,
        counter.counts if counter is not None else None,
    )


def _const_apply(cvec, length, Y, logs, rescale, counter=None):
    if length == 0.0:
        return
    m11, m12, m21, m22, lg = _const_entries(cvec, length)
    if counter is not None:
        u0 = Y[0].real.copy()
        v0 = Y[1].real.copy()
    u = m11 * Y[0] + m12 * Y[1]
    v = m21 * Y[0] + m22 * Y[1]
    Y[0], Y[1] = u, v
    if counter is not None:
        _count_const_zeros(cvec, length, u0, v0, Y[0].real, counter)
    if rescale:
        logs += lg
    elif np.any(lg != 0.0):
        Y *= np.exp(lg)


def _count_const_zeros(c, length, u0, v0, u1, counter) -> None:
    """Closed-form zero count across a constant-coefficient segment.

    Oscillatory members (c < 0) write u(t) = A sin(w t + psi) and count the
    sign changes of the sine; all other members have at most one zero,
    detected by the endpoint sign flip.
    """
    z = np.abs(c) * length * length
    osc = (c < 0) & (z > _SERIES_THRESHOLD)
    add = np.zeros(c.shape, dtype=int)
    if np.any(osc):
        w = np.sqrt(-c[osc])
        s = abs(length)
        vv = v0[osc] if length > 0 else -v0[osc]
        psi = np.arctan2(u0[osc], vv / w)
        add[osc] = (
            np.floor((psi + w * s) / math.pi).astype(int)
            - np.floor(psi / math.pi).astype(int)
        )
    flip = ~osc & (u0 != 0.0) & (u1 != 0.0) & (np.sign(u0) != np.sign(u1))
    add[flip] = 1
    counter.counts += add
    sgn = np.sign(u1).astype(int)
    counter.psign = np.where(sgn != 0, sgn, counter.psign)


# -- public single-trajectory interface ----------------------------------------

def _split_breaks(a: float, b: float, breakpoints) -> list[tuple[float, float]]:
    direction = 1.0 if b > a else -1.0
    inner = sorted(
        (float(x) for x in breakpoints if (x - a) * direction > 1e-14 and (b - x) * direction > 1e-14),
        key=lambda x: x * direction,
    )
    nodes = [a] + inner + [b]
    return [(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)]


def integrate(
    q: Callable[[float], float] | None,
    f: Callable[[float], float] | None,
    interval: tuple[float, float],
    init,
    cfg: SolverConfig | None = None,
    breakpoints: Sequence[float] = (),
):
    """Solve -u'' + q(x) u = f(x) with Cauchy data ``init = (u(a), u'(a))``.

    Returns ``(u(b), u'(b))``.  Backward integration (a > b) is allowed.
    ``breakpoints`` of q or f become mandatory step boundaries so that
    discontinuous coefficients do not degrade the order.  Complex Cauchy
    data is supported (the coefficient stays real).
    """
    a, b = float(interval[0]), float(interval[1])
    if a == b:
        raise ValueError("integration interval has zero length")
    u0, du0 = init
    if not (np.isfinite(complex(u0).real) and np.isfinite(complex(du0).real)):
        raise ValueError("initial state must be finite")
    qf = q if q is not None else (lambda x: 0.0)
    segs = [FamilySegment(lo, hi, qf, 0.0) for lo, hi in _split_breaks(a, b, breakpoints)]
    res = propagate_family(segs, np.zeros(1), np.array([u0, du0]), cfg, forcing=f)
    return res.states[0, 0], res.states[1, 0]


def propagator(
    q: Callable[[float], float] | None,
    interval: tuple[float, float],
    cfg: SolverConfig | None = None,
    breakpoints: Sequence[float] = (),
) -> np.ndarray:
    """Fundamental 2x2 matrix of -u'' + q(x) u = 0 over ``interval``.

    Columns are the solutions with data (1, 0) and (0, 1) at the interval
    start.  The Wronskian of the true flow is exactly 1; the accumulated
    determinant drift of the integration (of order steps x rel_tol) is
    projected out, so det = 1 holds to rounding.
    """
    a, b = float(interval[0]), float(interval[1])
    if a == b:
        raise ValueError("integration interval has zero length")
    qf = q if q is not None else (lambda x: 0.0)
    segs = [FamilySegment(lo, hi, qf, 0.0) for lo, hi in _split_breaks(a, b, breakpoints)]
    res = propagate_family(segs, np.zeros(2), np.eye(2), cfg)
    return unit_wronskian(res.states.copy())


def unit_wronskian(M: np.ndarray) -> np.ndarray:
    """Project a near-unimodular real 2x2 matrix onto det = 1."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if not det > 0:
        raise ValueError(f"propagator determinant collapsed to {det}")
    return M / math.sqrt(det)
