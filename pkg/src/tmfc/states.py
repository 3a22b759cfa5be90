"""Single-photon states over the two signal bands and their evolution.

A state is a pair of complex spectral amplitude arrays, one per band, with
total quadrature norm 1: the photon lives in a superposition of the two
energy bands, the path-like qubit encoding. Evolution through the waveguide
is diagonal in the Schmidt pairs: pair j mixes like a beam splitter,

    (c3_j, c4_j) -> ( cos(T_j) c3_j - i e^{-i phi} sin(T_j) c4_j,
                     -i e^{i phi} sin(T_j) c3_j + cos(T_j) c4_j )

with T_j the pair's rotation magnitude and phi the common phase. Amplitude
outside the retained pairs passes through unchanged (the matching angles are
below the truncation threshold). The sign/conjugation choice above is the
convention asserted by the matrix-exponential oracle in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conversion import FrequencyGrid
from .errors import ResolutionError
from .schmidt import RotationAngles, SchmidtDecomposition


@dataclass(frozen=True, eq=False)
class TwoBandState:
    """Complex spectral amplitudes over the band-3 and band-4 grids."""

    amp3: np.ndarray
    amp4: np.ndarray
    grid: FrequencyGrid

    def norm_sq(self) -> float:
        w3 = self.grid.weights(3)
        w4 = self.grid.weights(4)
        return float(np.sum(w3 * np.abs(self.amp3) ** 2) + np.sum(w4 * np.abs(self.amp4) ** 2))


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    """Overlaps of a state with the retained Schmidt modes, plus the norm
    left outside the retained span per band."""

    coeff3: np.ndarray
    coeff4: np.ndarray
    residual3: float
    residual4: float


def gaussian_input(grid: FrequencyGrid, band: int, omega0: float, sigma_in: float) -> TwoBandState:
    """Normalized Gaussian (2/(pi s^2))^(1/4) exp(-(w-w0)^2/s^2) in one band.

    The samples are renormalized on the grid so the discrete norm is exactly
    1; the other band is zero. Raises ResolutionError when fewer than 8 grid
    points fall within +-2 sigma of the center.
    """
    if band not in (3, 4):
        raise ValueError(f"band must be 3 or 4, got {band}")
    if sigma_in <= 0.0:
        raise ValueError(f"sigma_in must be > 0, got {sigma_in!r}")
    lo, hi = grid.bounds(band)
    if not (lo <= omega0 <= hi):
        raise ValueError(f"input center {omega0!r} outside band-{band} range [{lo!r}, {hi!r}]")
    omega = grid.omega(band)
    within = np.count_nonzero(np.abs(omega - omega0) <= 2.0 * sigma_in)
    if within < 8:
        raise ResolutionError(
            f"input bandwidth {sigma_in:.4e} rad/s too narrow for the band-{band} grid: "
            f"only {within} points inside +-2 sigma (need 8); spacing {grid.spacing(band):.4e} rad/s"
        )
    amp = (2.0 / (math.pi * sigma_in**2)) ** 0.25 * np.exp(-((omega - omega0) ** 2) / sigma_in**2)
    norm = math.sqrt(float(np.sum(grid.weights(band) * amp**2)))
    amp = amp.astype(complex) / norm
    zeros3 = np.zeros(grid.points(3), dtype=complex)
    zeros4 = np.zeros(grid.points(4), dtype=complex)
    if band == 3:
        return TwoBandState(amp3=amp, amp4=zeros4, grid=grid)
    return TwoBandState(amp3=zeros3, amp4=amp, grid=grid)


def state_from_pair(dec: SchmidtDecomposition, x: complex, y: complex, pair: int = 0) -> TwoBandState:
    """Embed pair coefficients (x, y) as x mode3_j + y mode4_j on the grid."""
    amp3 = x * dec.modes3[pair]
    amp4 = y * dec.modes4[pair]
    return TwoBandState(amp3=amp3.astype(complex), amp4=amp4.astype(complex), grid=dec.grid)


def project(state: TwoBandState, dec: SchmidtDecomposition) -> ModeCoefficients:
    """Quadrature inner products of the state with every retained pair."""
    w3 = dec.grid.weights(3)
    w4 = dec.grid.weights(4)
    coeff3 = dec.modes3.conj() @ (w3 * state.amp3)
    coeff4 = dec.modes4.conj() @ (w4 * state.amp4)
    norm3 = float(np.sum(w3 * np.abs(state.amp3) ** 2))
    norm4 = float(np.sum(w4 * np.abs(state.amp4) ** 2))
    residual3 = max(norm3 - float(np.sum(np.abs(coeff3) ** 2)), 0.0)
    residual4 = max(norm4 - float(np.sum(np.abs(coeff4) ** 2)), 0.0)
    return ModeCoefficients(coeff3=coeff3, coeff4=coeff4, residual3=residual3, residual4=residual4)


def evolve(state: TwoBandState, dec: SchmidtDecomposition, angles: RotationAngles) -> TwoBandState:
    """Apply the per-pair beam-splitter map; non-retained amplitude is
    passed through unchanged."""
    co = project(state, dec)
    cos_t = np.cos(angles.magnitudes)
    sin_t = np.sin(angles.magnitudes)
    phase = np.exp(1j * angles.common_phase)
    new3 = cos_t * co.coeff3 - 1j * np.conj(phase) * sin_t * co.coeff4
    new4 = -1j * phase * sin_t * co.coeff3 + cos_t * co.coeff4
    amp3 = state.amp3 + (new3 - co.coeff3) @ dec.modes3
    amp4 = state.amp4 + (new4 - co.coeff4) @ dec.modes4
    return TwoBandState(amp3=amp3, amp4=amp4, grid=state.grid)


def ideal_qubit_output(xy_in: tuple[complex, complex], theta0: float, phase: float) -> tuple[complex, complex]:
    """Exact single-pair beam-splitter rotation of normalized coefficients."""
    x, y = complex(xy_in[0]), complex(xy_in[1])
    norm = abs(x) ** 2 + abs(y) ** 2
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"input coefficients must be normalized, |x|^2+|y|^2 = {norm!r}")
    cos_t = math.cos(theta0)
    sin_t = math.sin(theta0)
    ph = complex(math.cos(phase), math.sin(phase))
    x_out = cos_t * x - 1j * ph.conjugate() * sin_t * y
    y_out = -1j * ph * sin_t * x + cos_t * y
    return (x_out, y_out)


def fidelity(real_out: TwoBandState, dec: SchmidtDecomposition, ideal: tuple[complex, complex]) -> float:
    """|<real | x mode3_0 + y mode4_0>|^2, the qubit preparation figure of
    merit. Clipped to [0, 1] against rounding overshoot."""
    co = project(real_out, dec)
    overlap = np.conj(ideal[0]) * co.coeff3[0] + np.conj(ideal[1]) * co.coeff4[0]
    return float(min(max(abs(overlap) ** 2, 0.0), 1.0))
