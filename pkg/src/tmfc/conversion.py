"""Frequency-conversion kernel between the two signal bands.

Given two Gaussian pumps and a waveguide, the coupling of a band-4 photon at
omega4 to a band-3 photon at omega3 is

    G~(w3, w4) = sqrt(w3 w4 / (n(w3) n(w4)))
                 * integral dw2  sinc(L dk / 2) exp(-i L dk / 2)
                   env2(w2) env1(w2 - w3 + w4)

with env_i(w) = exp(-(w - w_i0)^2 / sigma_i^2) and dk the phase mismatch of
:func:`tmfc.dispersion.phase_mismatch`. The kernel stored here is G~ divided
by its weighted L2 norm (``norm_const``), so that the discrete double
integral of |G|^2 is exactly 1.

The scalar ``coupling`` collects everything else the pumps and waveguide
contribute:

    coupling = 3 sqrt(2) hbar L e^{i dphi} / (8 pi^{5/2})
               * gamma * sqrt(P1 P2 n1 n2 / (R1 R2 sigma1 sigma2 w10 w20))

Only gamma * sqrt(P1 P2) (and the phase dphi) can be dialed without touching
the kernel shape, which is why power sweeps reuse one decomposition.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import constants
from .dispersion import DispersionModel, PhaseMismatchSpec, propagation_constant, refractive_index
from .errors import ConfigError, DegenerateKernelError, DomainWindowError


@dataclass(frozen=True)
class PumpPair:
    """Two Gaussian pulsed pumps plus their relative phase.

    Units: centers and bandwidths in rad/s, average powers in W, repetition
    rates in Hz, relative phase in rad. The spectral envelope of pump i is
    exp(-(w - center_i)^2 / sigma_i^2), equal to 1 at the center.
    """

    center1: float
    sigma1: float
    power1: float
    rep_rate1: float
    center2: float
    sigma2: float
    power2: float
    rep_rate2: float
    rel_phase: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sigma1", "sigma2"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("power1", "power2"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("rep_rate1", "rep_rate2"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("center1", "center2"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")

    def envelope(self, which: int, omega) -> np.ndarray:
        center = self.center1 if which == 1 else self.center2
        sigma = self.sigma1 if which == 1 else self.sigma2
        return np.exp(-((np.asarray(omega, dtype=float) - center) ** 2) / sigma**2)

    def with_power(self, power1: float | None = None, power2: float | None = None) -> "PumpPair":
        return PumpPair(
            center1=self.center1,
            sigma1=self.sigma1,
            power1=self.power1 if power1 is None else power1,
            rep_rate1=self.rep_rate1,
            center2=self.center2,
            sigma2=self.sigma2,
            power2=self.power2 if power2 is None else power2,
            rep_rate2=self.rep_rate2,
            rel_phase=self.rel_phase,
        )

    def with_phase(self, rel_phase: float) -> "PumpPair":
        return PumpPair(
            center1=self.center1,
            sigma1=self.sigma1,
            power1=self.power1,
            rep_rate1=self.rep_rate1,
            center2=self.center2,
            sigma2=self.sigma2,
            power2=self.power2,
            rep_rate2=self.rep_rate2,
            rel_phase=rel_phase,
        )

    def kernel_token(self) -> tuple:
        """The pump fields the kernel shape depends on (powers, rates and
        phase enter only the scalar coupling)."""
        return (self.center1, self.sigma1, self.center2, self.sigma2)


@dataclass(frozen=True)
class WaveguideSpec:
    """Waveguide length L in m, nonlinear coefficient gamma in 1/(W m), and
    the dispersion model. ``geometry_label`` is documentation only."""

    length: float
    gamma: float
    dispersion: DispersionModel
    geometry_label: str = ""

    def __post_init__(self) -> None:
        if self.length <= 0.0:
            raise ConfigError(f"length must be > 0, got {self.length!r}")
        if self.gamma <= 0.0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma!r}")

    def with_length(self, length: float) -> "WaveguideSpec":
        return WaveguideSpec(
            length=length,
            gamma=self.gamma,
            dispersion=self.dispersion,
            geometry_label=self.geometry_label,
        )

    def kernel_token(self) -> tuple:
        return (self.length, self.dispersion.token())


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform midpoint grids over the two signal bands.

    Band b covers [min_b, max_b] with n_b midpoint samples
    omega_i = min_b + (i + 1/2) delta_b, delta_b = (max_b - min_b) / n_b,
    each carrying quadrature weight delta_b. The weights therefore sum to
    exactly (max_b - min_b), and doubling n_b halves delta_b exactly.
    """

    min3: float
    max3: float
    n3: int
    min4: float
    max4: float
    n4: int

    def __post_init__(self) -> None:
        for band in (3, 4):
            lo, hi, n = self.bounds(band) + (self.points(band),)
            if n < 2:
                raise ConfigError(f"band {band}: need at least 2 grid points, got {n}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"band {band}: bad range [{lo!r}, {hi!r}]")

    def bounds(self, band: int) -> tuple[float, float]:
        if band == 3:
            return (self.min3, self.max3)
        if band == 4:
            return (self.min4, self.max4)
        raise ValueError(f"grid bands are 3 and 4, got {band}")

    def points(self, band: int) -> int:
        return self.n3 if band == 3 else self.n4

    def spacing(self, band: int) -> float:
        lo, hi = self.bounds(band)
        return (hi - lo) / self.points(band)

    def omega(self, band: int) -> np.ndarray:
        lo, _ = self.bounds(band)
        delta = self.spacing(band)
        return lo + (np.arange(self.points(band)) + 0.5) * delta

    def weights(self, band: int) -> np.ndarray:
        return np.full(self.points(band), self.spacing(band))

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        return FrequencyGrid(self.min3, self.max3, self.n3 * factor, self.min4, self.max4, self.n4 * factor)


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint rule for the pump-2 convolution integral: ``nodes`` points
    spanning center2 +- span_sigmas * sigma2."""

    nodes: int = 1025
    span_sigmas: float = 6.0

    def __post_init__(self) -> None:
        if self.nodes < 3:
            raise ConfigError(f"quadrature needs at least 3 nodes, got {self.nodes}")
        if self.span_sigmas <= 0.0:
            raise ConfigError(f"span_sigmas must be > 0, got {self.span_sigmas!r}")

    def grid(self, center: float, sigma: float) -> tuple[np.ndarray, float]:
        half = self.span_sigmas * sigma
        delta = 2.0 * half / self.nodes
        nodes = (center - half) + (np.arange(self.nodes) + 0.5) * delta
        return nodes, delta

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        return QuadratureSpec(nodes=self.nodes * factor, span_sigmas=self.span_sigmas)


@dataclass(frozen=True, eq=False)
class ConversionKernel:
    """Normalized kernel values on the grid plus the scalar coupling.

    ``values[m, n]`` approximates G(omega3_m, omega4_n); the weighted square
    sum over the grid is 1. ``norm_const`` is the weighted L2 norm of the
    raw (pre-normalization) kernel and ``coupling`` the complex pump
    coupling scalar.
    """

    grid: FrequencyGrid
    values: np.ndarray
    coupling: complex
    norm_const: float

    def weighted_norm_sq(self) -> float:
        w3 = self.grid.weights(3)
        w4 = self.grid.weights(4)
        return float(np.sum((np.abs(self.values) ** 2) * np.outer(w3, w4)))

    @classmethod
    def from_values(
        cls,
        grid: FrequencyGrid,
        values: np.ndarray,
        coupling: complex = 0.0 + 0.0j,
        normalize: bool = True,
    ) -> "ConversionKernel":
        """Wrap explicit kernel values (tests, file import). Normalizes by
        the weighted L2 norm unless the values already are."""
        vals = np.asarray(values, dtype=complex)
        if vals.shape != (grid.n3, grid.n4):
            raise ConfigError(f"kernel shape {vals.shape} does not match grid ({grid.n3}, {grid.n4})")
        w3 = grid.weights(3)
        w4 = grid.weights(4)
        norm = math.sqrt(float(np.sum((np.abs(vals) ** 2) * np.outer(w3, w4))))
        if not math.isfinite(norm) or norm <= 0.0:
            raise DegenerateKernelError("kernel values have zero or non-finite norm")
        if normalize:
            vals = vals / norm
        return cls(grid=grid, values=vals, coupling=complex(coupling), norm_const=norm)


def coupling_strength(pumps: PumpPair, wg: WaveguideSpec) -> complex:
    """Complex scalar collecting pump powers, bandwidths, rates, phase,
    gamma and L. Zero power gives exactly zero; the phase is rel_phase."""
    n1 = refractive_index(wg.dispersion, 1, pumps.center1)
    n2 = refractive_index(wg.dispersion, 2, pumps.center2)
    prefactor = 3.0 * math.sqrt(2.0) * constants.HBAR * wg.length / (8.0 * math.pi**2.5)
    radicand = (
        pumps.power1
        * pumps.power2
        * n1
        * n2
        / (pumps.rep_rate1 * pumps.rep_rate2 * pumps.sigma1 * pumps.sigma2 * pumps.center1 * pumps.center2)
    )
    magnitude = prefactor * wg.gamma * math.sqrt(radicand)
    return magnitude * cmath.exp(1j * pumps.rel_phase)


def _sinc(x: np.ndarray) -> np.ndarray:
    """sin(x)/x with a series branch below |x| < 1e-6 to avoid 0/0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-6
    xs = x[~small]
    out[~small] = np.sin(xs) / xs
    out[small] = 1.0 - x[small] ** 2 / 6.0
    return out


# Quadrature nodes where the pump envelope product falls below this leave
# the integral untouched at double precision and are skipped.
_ENVELOPE_CUTOFF = 1e-18


def build_kernel(
    pumps: PumpPair,
    wg: WaveguideSpec,
    grid: FrequencyGrid,
    quadrature: QuadratureSpec = QuadratureSpec(),
    mismatch: PhaseMismatchSpec = PhaseMismatchSpec(),
    threads: int = 1,
) -> ConversionKernel:
    """Integrate the pump-2 convolution on every grid cell and normalize.

    The (m, n) cells are independent; with ``threads`` > 1 they are computed
    in a thread pool writing into a preallocated array, and the norm is
    reduced in fixed order, so the result is identical for any thread count.

    The envelope product depends on (m, n) only through omega3_m - omega4_n,
    so on equal-spacing grids the work is batched over the n3 + n4 - 1
    anti-diagonals, restricted to the quadrature nodes where the envelopes
    are non-negligible. Band-1 dispersion is therefore only ever evaluated
    within a few pump-1 bandwidths of the pump-1 center.
    """
    model = wg.dispersion
    omega3 = grid.omega(3)
    omega4 = grid.omega(4)
    w2_nodes, w2_delta = quadrature.grid(pumps.center2, pumps.sigma2)

    k2 = np.asarray(propagation_constant(model, 2, w2_nodes))
    k3 = np.asarray(propagation_constant(model, 3, omega3))
    k4 = np.asarray(propagation_constant(model, 4, omega4))
    n3 = np.asarray(refractive_index(model, 3, omega3))
    n4 = np.asarray(refractive_index(model, 4, omega4))
    env2 = pumps.envelope(2, w2_nodes)

    half_l = 0.5 * wg.length
    sign = mismatch.sign
    values = np.zeros((grid.n3, grid.n4), dtype=complex)

    equal_spacing = abs(grid.spacing(3) - grid.spacing(4)) <= 1e-9 * grid.spacing(3)

    def fill_diagonal(d: int) -> None:
        # Cells with omega3_m - omega4_n = nu share the band-1 frequencies.
        nu = (grid.min3 - grid.min4) + d * grid.spacing(3)
        w1 = w2_nodes - nu
        product = env2 * pumps.envelope(1, w1)
        active = np.nonzero(product > _ENVELOPE_CUTOFF)[0]
        if active.size == 0:
            return
        sl = slice(int(active[0]), int(active[-1]) + 1)
        k1 = np.asarray(propagation_constant(model, 1, w1[sl]))
        base = k1 - k2[sl]
        ms = np.arange(max(0, d), min(grid.n3, grid.n4 + d))
        ns = ms - d
        pair = k3[ms] - k4[ns]
        x = (half_l * sign) * (base[None, :] + pair[:, None])
        integrand = (_sinc(x) * product[sl][None, :]) * np.exp(-1j * x)
        values[ms, ns] = integrand.sum(axis=1) * w2_delta

    def fill_row(m: int) -> None:
        w1 = (w2_nodes[None, :] - omega3[m]) + omega4[:, None]  # (n4, Q)
        product = env2[None, :] * pumps.envelope(1, w1)
        mask = product > _ENVELOPE_CUTOFF
        if not np.any(mask):
            return
        w1_masked = np.where(mask, w1, pumps.center1)
        k1 = np.asarray(propagation_constant(model, 1, w1_masked))
        dk = sign * ((k1 + k3[m]) - (k2[None, :] + k4[:, None]))
        x = half_l * dk
        integrand = (_sinc(x) * np.where(mask, product, 0.0)) * np.exp(-1j * x)
        values[m, :] = integrand.sum(axis=1) * w2_delta

    if equal_spacing:
        work = fill_diagonal
        indices = range(-(grid.n4 - 1), grid.n3)
    else:
        work = fill_row
        indices = range(grid.n3)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, indices))
    else:
        for index in indices:
            work(index)

    values *= np.sqrt(np.outer(omega3 / n3, omega4 / n4))

    w3 = grid.weights(3)
    w4 = grid.weights(4)
    norm_sq = float(np.sum((np.abs(values) ** 2) * np.outer(w3, w4)))
    norm = math.sqrt(norm_sq)
    if not math.isfinite(norm) or norm <= 0.0:
        raise DegenerateKernelError(
            "conversion kernel is numerically zero; the pump envelopes do not "
            "overlap the signal grid under energy conservation"
        )
    values /= norm
    return ConversionKernel(
        grid=grid,
        values=values,
        coupling=coupling_strength(pumps, wg),
        norm_const=norm,
    )


def grid_auto(
    pumps: PumpPair,
    wg: WaveguideSpec,
    center3: float,
    center4: float,
    span_factor: float = 4.0,
    points: int = 512,
) -> FrequencyGrid:
    """Grid centered on the declared signal centers with half-width
    span_factor * (sigma1 + sigma2) per band."""
    if span_factor <= 0.0:
        raise ConfigError(f"span_factor must be > 0, got {span_factor!r}")
    if points < 16:
        raise ConfigError(f"need at least 16 grid points per band, got {points}")
    half = span_factor * (pumps.sigma1 + pumps.sigma2)
    grid = FrequencyGrid(
        min3=center3 - half,
        max3=center3 + half,
        n3=points,
        min4=center4 - half,
        max4=center4 + half,
        n4=points,
    )
    for band in (3, 4):
        lo, hi = grid.bounds(band)
        win_lo, win_hi = wg.dispersion.bands[band].window
        if lo < win_lo or hi > win_hi:
            raise DomainWindowError(band, (win_lo, win_hi), lo if lo < win_lo else hi)
    return grid
