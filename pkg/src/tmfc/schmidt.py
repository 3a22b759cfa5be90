"""Schmidt decomposition of a conversion kernel into temporal-mode pairs.

The decomposition uses a quadrature-weighted SVD: scaling the kernel by
sqrt(w) on both axes before the SVD makes the discrete singular vectors
orthonormal under the grid inner product <f, g> = sum_i w_i conj(f_i) g_i,
so results converge with grid refinement. Weights kappa_j are the squared
singular values and sum to 1 for a normalized kernel.

Phase convention: each pair carries one free common phase. It is fixed by
rotating the band-3 mode so its largest-magnitude sample is real and
positive; the band-4 partner is co-rotated, which keeps the reconstruction
sum_j sqrt(kappa_j) mode3_j(w3) conj(mode4_j(w4)) unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants
from .conversion import ConversionKernel, FrequencyGrid
from .errors import DegenerateKernelError


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Pair weights (descending, dimensionless) and the paired mode
    functions sampled on the grid: modes3[j] over band 3, modes4[j] over
    band 4, orthonormal under the grid quadrature."""

    weights: np.ndarray
    modes3: np.ndarray
    modes4: np.ndarray
    grid: FrequencyGrid

    @property
    def rank(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class RotationAngles:
    """Beam-splitter rotation per pair: complex angle, its magnitude, and
    the common phase (equal to the pump relative phase for every pair)."""

    rotations: np.ndarray
    magnitudes: np.ndarray
    common_phase: float


def _fix_pair_phases(modes3: np.ndarray, modes4: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each pair so the band-3 mode's largest-|.| sample is real and
    positive. Exactly idempotent; the pair product is unchanged."""
    modes3 = modes3.copy()
    modes4 = modes4.copy()
    for j in range(modes3.shape[0]):
        idx = int(np.argmax(np.abs(modes3[j])))
        anchor = modes3[j, idx]
        mag = abs(anchor)
        if mag == 0.0 or (anchor.imag == 0.0 and anchor.real > 0.0):
            continue
        phase = anchor / mag
        modes3[j] /= phase
        modes4[j] /= phase
        # pin the anchor so a second application is a bitwise no-op
        modes3[j, idx] = abs(modes3[j, idx])
    return modes3, modes4


def _tie_break(weights: np.ndarray, modes3: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """Permutation resolving degenerate weights: within a tied group, order
    by descending overlap magnitude with a Gaussian at the band-3 grid
    center (width a quarter of the half-range), then by original index."""
    order = np.arange(len(weights))
    if len(weights) < 2:
        return order
    tol = 1e-12 * max(weights[0], 1e-300)
    omega = grid.omega(3)
    w = grid.weights(3)
    center = 0.5 * (grid.min3 + grid.max3)
    width = 0.25 * (grid.max3 - grid.min3) / 2.0
    ref = np.exp(-((omega - center) ** 2) / (2.0 * width**2))
    ref /= np.sqrt(np.sum(w * ref**2))
    overlaps = np.abs(modes3.conj() @ (w * ref))

    start = 0
    while start < len(weights):
        stop = start + 1
        while stop < len(weights) and abs(weights[stop] - weights[start]) <= tol:
            stop += 1
        if stop - start > 1:
            group = order[start:stop]
            keys = overlaps[group]
            order[start:stop] = group[np.argsort(-keys, kind="stable")]
        start = stop
    return order


def decompose(kernel: ConversionKernel, threshold: float = 1e-12) -> SchmidtDecomposition:
    """Quadrature-weighted SVD of the kernel, truncated at ``threshold``.

    Passing threshold = 0 keeps every numerically nonzero pair.
    """
    if not (0.0 <= threshold < 1.0):
        raise ValueError(f"threshold must lie in [0, 1), got {threshold!r}")
    grid = kernel.grid
    sw3 = np.sqrt(grid.weights(3))
    sw4 = np.sqrt(grid.weights(4))
    scaled = kernel.values * np.outer(sw3, sw4)
    u, s, vh = np.linalg.svd(scaled, full_matrices=False)
    weights = s**2
    keep = weights > threshold
    if not np.any(keep):
        raise DegenerateKernelError("kernel has numerical rank zero at this truncation threshold")
    weights = weights[keep]
    modes3 = (u[:, keep] / sw3[:, None]).T
    modes4 = vh[keep, :].conj() / sw4[None, :]

    order = _tie_break(weights, modes3, grid)
    weights = weights[order]
    modes3 = modes3[order]
    modes4 = modes4[order]
    modes3, modes4 = _fix_pair_phases(modes3, modes4)
    return SchmidtDecomposition(weights=weights, modes3=modes3, modes4=modes4, grid=grid)


def reconstruct(dec: SchmidtDecomposition) -> np.ndarray:
    """Sum of sqrt(kappa_j) mode3_j outer conj(mode4_j)."""
    amps = np.sqrt(dec.weights)
    return (dec.modes3.T * amps) @ dec.modes4.conj()


def schmidt_number(dec: SchmidtDecomposition) -> float:
    """Effective pair count (sum kappa)^2 / sum kappa^2; 1 iff separable."""
    total = float(np.sum(dec.weights))
    return total**2 / float(np.sum(dec.weights**2))


def rotation_angles_from(dec: SchmidtDecomposition, coupling: complex, norm_const: float) -> RotationAngles:
    rotations = (constants.TWO_PI * coupling / (norm_const * constants.HBAR)) * np.sqrt(dec.weights)
    magnitudes = np.abs(rotations)
    common_phase = float(np.angle(coupling)) if coupling != 0 else 0.0
    return RotationAngles(rotations=rotations, magnitudes=magnitudes, common_phase=common_phase)


def rotation_angles(dec: SchmidtDecomposition, kernel: ConversionKernel) -> RotationAngles:
    """Per-pair rotation angle 2 pi coupling sqrt(kappa_j) / (norm hbar).

    The coupling carries one factor of hbar, so the magnitudes are free of
    it; their common phase is the pump relative phase.
    """
    return rotation_angles_from(dec, kernel.coupling, kernel.norm_const)
