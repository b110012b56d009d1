"""Spectra, resonances and scattering of 1D Schrodinger operators with
squeezed dipole-like barriers alpha eps^-2 profile(x/eps)."""

__version__ = "0.1.0"

from . import experiments, ivp, profiles, resonance, scattering, spectra  # noqa: F401
