"""Piecewise-polynomial barrier profiles supported on [-1, 1].

A profile is the fixed shape of the squeezed potential
``alpha * eps**-2 * profile(x / eps)``.  Profiles are represented as an
ordered list of polynomial segments whose intervals partition [-1, 1]
exactly; evaluation outside [-1, 1] is identically zero.  The piecewise
polynomial representation keeps moments exact (no quadrature) and lets
downstream propagators treat constant segments in closed form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from .errors import ProfileFormatError

_PARTITION_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """One polynomial piece: coefficients in ascending degree on [a, b]."""

    a: float
    b: float
    coeffs: tuple[float, ...]

    def __call__(self, xi: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * xi + c
        return acc

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1:])


@dataclass(frozen=True)
class Profile:
    """Compactly supported piecewise-polynomial function on [-1, 1].

    Invariants (validated on construction):

    * segment intervals are a gapless, overlap-free partition of [-1, 1];
    * every segment interval has positive length.

    Values at internal breakpoints take the right-hand segment
    (right-continuous tie-break); the value at +1 takes the last segment.
    """

    segments: tuple[Segment, ...]
    label: str = "custom"

    def __post_init__(self):
        if not self.segments:
            raise ProfileFormatError("profile needs at least one segment")
        if abs(self.segments[0].a + 1.0) > _PARTITION_TOL:
            raise ProfileFormatError(f"first segment must start at -1, got {self.segments[0].a}")
        if abs(self.segments[-1].b - 1.0) > _PARTITION_TOL:
            raise ProfileFormatError(f"last segment must end at +1, got {self.segments[-1].b}")
        for seg in self.segments:
            if not seg.b > seg.a:
                raise ProfileFormatError(f"segment ({seg.a}, {seg.b}) has non-positive length")
            if len(seg.coeffs) == 0:
                raise ProfileFormatError("segment needs at least one coefficient")
        for left, right in zip(self.segments, self.segments[1:]):
            if abs(left.b - right.a) > _PARTITION_TOL:
                raise ProfileFormatError(
                    f"segments ({left.a},{left.b}) and ({right.a},{right.b}) do not meet"
                )

    # -- evaluation ---------------------------------------------------------

    def __call__(self, xi: float) -> float:
        return evaluate(self, xi)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior breakpoints, excluding the support endpoints."""
        return tuple(seg.b for seg in self.segments[:-1])

    def max_abs(self, samples_per_segment: int = 257) -> float:
        """Upper estimate of max |profile| (exact for constant segments).

        Used only to size search windows, never in a quantitative result.
        """
        worst = 0.0
        for seg in self.segments:
            if seg.is_constant:
                worst = max(worst, abs(seg.coeffs[0]))
                continue
            n = samples_per_segment
            for i in range(n + 1):
                xi = seg.a + (seg.b - seg.a) * i / n
                worst = max(worst, abs(seg(xi)))
        return worst


class ProfileKind(Enum):
    DELTA_PRIME_LIKE = "delta_prime_like"
    ZERO_MEAN_ONLY = "zero_mean_only"
    GENERAL = "general"


@dataclass(frozen=True)
class ProfileClass:
    """Moment classification of a profile.

    ``DELTA_PRIME_LIKE`` means the squeezed family converges to a multiple
    of the dipole distribution: zeroth moment vanishes, first moment does
    not, and the dipole strength is ``c = -m1``.
    """

    kind: ProfileKind
    m0: float
    m1: float
    c: float | None = field(default=None)


def evaluate(p: Profile, xi: float) -> float:
    """Value of the profile at ``xi``; exactly 0 outside [-1, 1].

    Internal breakpoints resolve to the right-hand segment.
    """
    if xi < -1.0 or xi > 1.0:
        return 0.0
    if xi >= p.segments[-1].a:
        return p.segments[-1](xi)
    # linear scan is fine: profiles have a handful of segments
    for seg in p.segments:
        if seg.a <= xi < seg.b:
            return seg(xi)
    return p.segments[0](xi)


def moment(p: Profile, k: int) -> float:
    """Exact integral of ``xi**k * profile(xi)`` over [-1, 1].

    The integrand is polynomial on each segment, so the antiderivative is
    summed termwise; the only error is float rounding.
    """
    if k < 0 or int(k) != k:
        raise ValueError("moment order must be a nonnegative integer")
    total = 0.0
    for seg in p.segments:
        for j, c in enumerate(seg.coeffs):
            if c == 0.0:
                continue
            n = k + j + 1
            total += c * (seg.b**n - seg.a**n) / n
    return total


def classify(p: Profile, moment_tol: float = 1e-10) -> ProfileClass:
    """Moment classification with tolerance ``moment_tol`` (> 0).

    ``DELTA_PRIME_LIKE(c=-m1)`` iff |m0| <= tol < |m1|; ``ZERO_MEAN_ONLY``
    iff both moments vanish within tol; ``GENERAL`` otherwise.
    """
    if moment_tol <= 0:
        raise ValueError("moment_tol must be positive")
    m0 = moment(p, 0)
    m1 = moment(p, 1)
    if abs(m0) <= moment_tol and abs(m1) > moment_tol:
        return ProfileClass(ProfileKind.DELTA_PRIME_LIKE, m0=m0, m1=m1, c=-m1)
    if abs(m0) <= moment_tol:
        return ProfileClass(ProfileKind.ZERO_MEAN_ONLY, m0=m0, m1=m1)
    return ProfileClass(ProfileKind.GENERAL, m0=m0, m1=m1)


def is_dipole_normalized(p: Profile, moment_tol: float = 1e-10) -> bool:
    """True when m0 = 0 and m1 = -1 within tolerance (unit dipole class)."""
    cls = classify(p, moment_tol)
    return cls.kind is ProfileKind.DELTA_PRIME_LIKE and abs(cls.m1 + 1.0) <= moment_tol


def scaled_potential(p: Profile, alpha: float, eps: float, x: float) -> float:
    """The squeezed barrier ``alpha * eps**-2 * profile(x / eps)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return alpha / (eps * eps) * evaluate(p, x / eps)


def reflect(p: Profile) -> Profile:
    """Profile mirrored through the origin: ``reflect(p)(xi) == p(-xi)``."""
    segs = []
    for seg in reversed(p.segments):
        coeffs = tuple(c * (-1.0) ** j for j, c in enumerate(seg.coeffs))
        segs.append(Segment(-seg.b, -seg.a, coeffs))
    return Profile(tuple(segs), label=p.label + "_reflected")


# -- builtin profiles -------------------------------------------------------

_BUILTIN_NAMES = ("step", "odd_cubic", "asymmetric_bump", "custom")


def builtin(name: str, params: dict | None = None) -> Profile:
    """Construct a named profile.

    * ``step``: +1 on (-1, 0), -1 on (0, 1).  Moments (0, -1).
    * ``odd_cubic``: (15/4)(xi^3 - xi), an odd polynomial with m1 = -1
      exactly, vanishing at the support endpoints.
    * ``asymmetric_bump``: parabolic lobes of unequal width, m0 = 0 and
      m1 = -1 but not odd; the negative lobe occupies (0, 1/2) only.
    * ``custom``: build from ``params`` with keys ``segments`` (list of
      ``{"interval": [a, b], "coeffs": [...]}``) and optional ``label``.
    """
    params = params or {}
    if name == "step":
        return Profile(
            (Segment(-1.0, 0.0, (1.0,)), Segment(0.0, 1.0, (-1.0,))),
            label="step",
        )
    if name == "odd_cubic":
        # odd, so m0 = 0; coefficients solve (2/3) c1 + (2/5) c3 = -1
        # with c3 = -c1, giving c1 = -15/4.
        return Profile(
            (Segment(-1.0, 1.0, (0.0, -15.0 / 4.0, 0.0, 15.0 / 4.0)),),
            label="odd_cubic",
        )
    if name == "asymmetric_bump":
        # left lobe -8 xi (1 + xi) on (-1, 0), right lobe -64 xi (1/2 - xi)
        # on (0, 1/2), zero on (1/2, 1): m0 = 4/3 - 4/3 = 0,
        # m1 = -2/3 - 1/3 = -1.
        return Profile(
            (
                Segment(-1.0, 0.0, (0.0, -8.0, -8.0)),
                Segment(0.0, 0.5, (0.0, -32.0, 64.0)),
                Segment(0.5, 1.0, (0.0,)),
            ),
            label="asymmetric_bump",
        )
    if name == "custom":
        try:
            raw_segments = params["segments"]
        except (KeyError, TypeError) as exc:
            raise ProfileFormatError("custom profile needs a 'segments' list") from exc
        return _profile_from_spec(raw_segments, params.get("label", "custom"))
    raise ValueError(f"unknown builtin profile {name!r}; expected one of {_BUILTIN_NAMES}")


def _profile_from_spec(raw_segments: Sequence[dict], label: str) -> Profile:
    segs = []
    try:
        for raw in raw_segments:
            a, b = raw["interval"]
            coeffs = tuple(float(c) for c in raw["coeffs"])
            segs.append(Segment(float(a), float(b), coeffs))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileFormatError(f"malformed profile segments: {exc}") from exc
    return Profile(tuple(segs), label=str(label))


# -- JSON document format ---------------------------------------------------

def to_json_dict(p: Profile) -> dict:
    return {
        "label": p.label,
        "segments": [
            {"interval": [seg.a, seg.b], "coeffs": list(seg.coeffs)} for seg in p.segments
        ],
    }


def from_json_dict(doc: dict) -> Profile:
    if not isinstance(doc, dict) or "segments" not in doc:
        raise ProfileFormatError("profile document must be an object with a 'segments' key")
    return _profile_from_spec(doc["segments"], doc.get("label", "custom"))


def save(p: Profile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(p), indent=2, sort_keys=True) + "\n")


def load(path: str | Path) -> Profile:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProfileFormatError(f"invalid profile JSON in {path}: {exc}") from exc
    return from_json_dict(doc)
