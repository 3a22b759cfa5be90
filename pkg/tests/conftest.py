"""Shared builders for the test suite.

Synthetic kernels (separable, two-term, random smooth low-rank) are
constructed directly from mode functions so their Schmidt data is known
exactly; pipeline-built kernels use the shipped default configuration at
reduced resolution for speed.
"""

from importlib import resources

import numpy as np
import pytest

from tmfc import constants
from tmfc.config import parse_config
from tmfc.conversion import ConversionKernel, FrequencyGrid, PumpPair, WaveguideSpec
from tmfc.dispersion import vacuum_line_model
from tmfc.pipeline import SimContext, clear_cache


def shipped_config_path():
    ref = resources.files("tmfc.data").joinpath("paper-s4.config")
    with resources.as_file(ref) as path:
        yield path


def paper_config(points: int = 128, nodes: int = 257, extra_overrides: list[str] | None = None):
    """The shipped default configuration at reduced resolution."""
    overrides = [f"grid.points={points}", f"quadrature.nodes={nodes}"]
    overrides += extra_overrides or []
    ref = resources.files("tmfc.data").joinpath("paper-s4.config")
    with resources.as_file(ref) as path:
        return parse_config(path, overrides=overrides)


def paper_context(points: int = 128, nodes: int = 257, **replacements) -> SimContext:
    context = paper_config(points=points, nodes=nodes).context()
    if "length" in replacements:
        context = context.with_length(replacements.pop("length"))
    assert not replacements
    return context


def vacuum_pumps(sigma1: float = 0.3e12, sigma2: float = 10e12) -> PumpPair:
    return PumpPair(
        center1=constants.wavelength_to_angular(1.55e-6),
        sigma1=sigma1,
        power1=50e-6,
        rep_rate1=10e6,
        center2=constants.wavelength_to_angular(0.77e-6),
        sigma2=sigma2,
        power2=100e-6,
        rep_rate2=10e6,
    )


def vacuum_context(points: int = 64, length: float = 0.01, sigma1: float = 0.3e12,
                   sigma2: float = 10e12, half_width: float | None = None) -> SimContext:
    """Dispersionless setup: exact phase matching everywhere."""
    pumps = vacuum_pumps(sigma1=sigma1, sigma2=sigma2)
    wg = WaveguideSpec(length=length, gamma=1.0, dispersion=vacuum_line_model())
    c3 = 1.64575342e15
    c4 = c3 - (pumps.center2 - pumps.center1)
    half = 4.0 * (pumps.sigma1 + pumps.sigma2) if half_width is None else half_width
    grid = FrequencyGrid(min3=c3 - half, max3=c3 + half, n3=points,
                         min4=c4 - half, max4=c4 + half, n4=points)
    return SimContext(pumps=pumps, waveguide=wg, grid=grid)


def symmetric_grid(points: int = 48, center3: float = 1.6e15, center4: float = 4.0e14,
                   half: float = 4e13) -> FrequencyGrid:
    return FrequencyGrid(min3=center3 - half, max3=center3 + half, n3=points,
                         min4=center4 - half, max4=center4 + half, n4=points)


def orthonormal_gaussian_modes(grid: FrequencyGrid, band: int, count: int,
                               width: float | None = None) -> np.ndarray:
    """Hermite-Gauss-shaped samples, Gram-Schmidt orthonormalized under the
    grid quadrature, so inner products are exact to rounding."""
    omega = grid.omega(band)
    w = grid.weights(band)
    center = 0.5 * sum(grid.bounds(band))
    if width is None:
        width = (grid.bounds(band)[1] - grid.bounds(band)[0]) / 10.0
    x = (omega - center) / width
    modes = []
    for n in range(count):
        raw = (x**n) * np.exp(-0.5 * x**2)
        vec = raw.astype(complex)
        for prev in modes:
            vec = vec - prev * np.sum(w * prev.conj() * vec)
        vec = vec / np.sqrt(np.sum(w * np.abs(vec) ** 2))
        modes.append(vec)
    return np.array(modes)


def kernel_from_pairs(grid: FrequencyGrid, weights, modes3, modes4,
                      coupling: complex = 0.0) -> ConversionKernel:
    """Kernel sum_j sqrt(w_j) modes3_j outer conj(modes4_j)."""
    values = np.zeros((grid.n3, grid.n4), dtype=complex)
    for wj, m3, m4 in zip(weights, modes3, modes4):
        values += np.sqrt(wj) * np.outer(m3, m4.conj())
    return ConversionKernel.from_values(grid, values, coupling=coupling)


def separable_kernel(grid: FrequencyGrid, width3: float | None = None,
                     coupling: complex = 1e-40) -> ConversionKernel:
    """Rank-1 kernel whose band-3 mode is an exact Gaussian."""
    m3 = orthonormal_gaussian_modes(grid, 3, 1, width=width3)[0]
    m4 = orthonormal_gaussian_modes(grid, 4, 1)[0]
    return kernel_from_pairs(grid, [1.0], [m3], [m4], coupling=coupling)


def two_term_kernel(grid: FrequencyGrid, weights=(0.8, 0.2),
                    coupling: complex = 1e-40) -> ConversionKernel:
    modes3 = orthonormal_gaussian_modes(grid, 3, 2)
    modes4 = orthonormal_gaussian_modes(grid, 4, 2)
    return kernel_from_pairs(grid, weights, modes3, modes4, coupling=coupling)


def random_smooth_kernel(rng: np.random.Generator, grid: FrequencyGrid, rank: int = 3,
                         coupling: complex = 1e-40) -> ConversionKernel:
    """Random low-rank kernel with smooth modes and random complex weights."""
    count = max(rank, 1)
    modes3 = orthonormal_gaussian_modes(grid, 3, count)
    modes4 = orthonormal_gaussian_modes(grid, 4, count)
    amps = rng.uniform(0.2, 1.0, size=count) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=count))
    values = np.zeros((grid.n3, grid.n4), dtype=complex)
    for a, m3, m4 in zip(amps, modes3, modes4):
        values += a * np.outer(m3, m4.conj())
    return ConversionKernel.from_values(grid, values, coupling=coupling)


@pytest.fixture(autouse=True)
def _fresh_kernel_cache():
    clear_cache()
    yield
