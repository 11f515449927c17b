"""Physical parameters and the linear dispersion law.

The medium is a 2d ideal fluid layer with gravity ``g``, surface tension
``kappa``, constant vorticity ``gamma`` and depth ``h`` (a positive float or
``math.inf``).  Infinite depth is a genuine branch, not a large-``h`` limit:
several exact identities (the vorticity 8-wave cancellation among them) hold
only for the ``|xi|`` symbol.

All functions accept numpy arrays for the mode argument and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Medium",
    "DispersionSample",
    "gsym",
    "omega",
    "big_omega",
    "msym",
    "sample",
]


@dataclass(frozen=True)
class Medium:
    """Immutable bundle of physical constants.

    gravity  -- g > 0
    kappa    -- surface tension coefficient, > 0
    gamma    -- constant vorticity, any real
    depth    -- fluid depth, > 0 or math.inf (default)
    """

    gravity: float = 1.0
    kappa: float = 1.0
    gamma: float = 0.0
    depth: float = math.inf

    def __post_init__(self) -> None:
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if not self.kappa > 0:
            raise ValueError("surface tension must be positive")
        if not self.depth > 0:
            raise ValueError("depth must be positive or math.inf")

    @property
    def infinite_depth(self) -> bool:
        return math.isinf(self.depth)


def _check_nonzero(xi) -> None:
    if np.any(np.asarray(xi) == 0):
        raise ValueError("mode 0 is excluded (zero-average phase space)")


def gsym(med: Medium, xi):
    """Flat-surface Dirichlet-Neumann symbol.

    xi*tanh(h*xi) in finite depth, |xi| in infinite depth.  Even and
    nonnegative.  np.tanh saturates to +-1 well before h*xi overflows
    anything, so the finite-depth branch is stable for any h.
    """
    _check_nonzero(xi)
    xi = np.asarray(xi, dtype=float)
    if math.isinf(med.depth):
        out = np.abs(xi)
    else:
        out = xi * np.tanh(med.depth * xi)
    return out if out.ndim else float(out)


def omega(med: Medium, j):
    """Unshifted linear frequency omega_j >= 0; even in j."""
    _check_nonzero(j)
    j = np.asarray(j, dtype=float)
    G = np.asarray(gsym(med, j))
    rad = G * (med.gravity + med.kappa * j**2 + 0.25 * med.gamma**2 * G / j**2)
    out = np.sqrt(rad)
    return out if out.ndim else float(out)


def big_omega(med: Medium, j):
    """Vorticity-shifted frequency: omega_j + (gamma/2) * gsym(j)/j.

    The shift is odd in j, so the full dispersion law is not even unless
    gamma = 0.  In infinite depth gsym(j)/j = sign(j) and the skew part is
    exactly gamma/2 * sign(j).
    """
    _check_nonzero(j)
    j = np.asarray(j, dtype=float)
    out = np.asarray(omega(med, j)) + 0.5 * med.gamma * np.asarray(gsym(med, j)) / j
    return out if out.ndim else float(out)


def msym(med: Medium, xi):
    """Symmetrizing Fourier multiplier M(xi) > 0.

    Fourth root of gsym / (g + kappa*xi^2 + (gamma^2/4) gsym/xi^2).  It
    splits the frequency both ways:

        M * (g + kappa xi^2 + (gamma^2/4) gsym xi^-2) * M = omega
        M^-1 * gsym * M^-1 = omega
    """
    _check_nonzero(xi)
    xi = np.asarray(xi, dtype=float)
    G = np.asarray(gsym(med, xi))
    denom = med.gravity + med.kappa * xi**2 + 0.25 * med.gamma**2 * G / xi**2
    out = (G / denom) ** 0.25
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DispersionSample:
    """Dispersion data at one integer mode."""

    mode: int
    omega: float
    Omega: float
    gsym: float
    msym: float


def sample(med: Medium, j: int) -> DispersionSample:
    """Evaluate the whole dispersion record at one nonzero integer mode."""
    if j == 0:
        raise ValueError("mode 0 is excluded (zero-average phase space)")
    return DispersionSample(
        mode=int(j),
        omega=omega(med, j),
        Omega=big_omega(med, j),
        gsym=gsym(med, j),
        msym=msym(med, j),
    )
