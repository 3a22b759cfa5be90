"""Physical constants shared by every module.

All values are CODATA 2018 and agree with ``scipy.constants``. They live in
one mutable table (plain module attributes) so tests can rescale them and
verify that derived dimensionless quantities, such as the pair rotation
angles, do not depend on the choice of units for hbar.

Internal unit policy: every frequency is an angular frequency in rad/s.
Wavelengths are converted at the configuration boundary and never stored.
"""

import math

C = 299_792_458.0
"""Speed of light in vacuum, m/s (exact)."""

HBAR = 1.054_571_817e-34
"""Reduced Planck constant, J*s."""

TWO_PI = 2.0 * math.pi


def wavelength_to_angular(wavelength_m: float) -> float:
    """Vacuum wavelength in m to angular frequency in rad/s."""
    if wavelength_m <= 0.0:
        raise ValueError(f"wavelength must be > 0, got {wavelength_m!r}")
    return TWO_PI * C / wavelength_m


def angular_to_wavelength(omega: float) -> float:
    """Angular frequency in rad/s to vacuum wavelength in m."""
    if omega <= 0.0:
        raise ValueError(f"angular frequency must be > 0, got {omega!r}")
    return TWO_PI * C / omega
