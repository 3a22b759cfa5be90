"""Shared simulation context: kernel construction plus decomposition, cached.

Pump powers, repetition rates and the relative phase enter only the scalar
coupling, so sweeps over them reuse one kernel and one decomposition. The
cache key collects exactly the fields the kernel shape depends on.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace

import numpy as np

from .conversion import (
    ConversionKernel,
    FrequencyGrid,
    PumpPair,
    QuadratureSpec,
    WaveguideSpec,
    build_kernel,
    coupling_strength,
)
from .dispersion import PhaseMismatchSpec
from .schmidt import RotationAngles, SchmidtDecomposition, decompose, rotation_angles_from


@dataclass(frozen=True)
class SimContext:
    """Everything needed to build and decompose one conversion kernel."""

    pumps: PumpPair
    waveguide: WaveguideSpec
    grid: FrequencyGrid
    quadrature: QuadratureSpec = QuadratureSpec()
    mismatch: PhaseMismatchSpec = PhaseMismatchSpec()
    threshold: float = 1e-12

    def with_length(self, length: float) -> "SimContext":
        return replace(self, waveguide=self.waveguide.with_length(length))

    def with_power(self, power1: float | None = None, power2: float | None = None) -> "SimContext":
        return replace(self, pumps=self.pumps.with_power(power1, power2))

    def with_phase(self, rel_phase: float) -> "SimContext":
        return replace(self, pumps=self.pumps.with_phase(rel_phase))

    def kernel_token(self) -> tuple:
        grid = self.grid
        return (
            self.pumps.kernel_token(),
            self.waveguide.kernel_token(),
            (grid.min3, grid.max3, grid.n3, grid.min4, grid.max4, grid.n4),
            (self.quadrature.nodes, self.quadrature.span_sigmas),
            self.mismatch.sign_convention,
            self.threshold,
        )


@dataclass(frozen=True, eq=False)
class Prepared:
    """A built kernel with its decomposition, bound to the context."""

    context: SimContext
    kernel: ConversionKernel
    decomposition: SchmidtDecomposition

    def angles(self, pumps: PumpPair | None = None) -> RotationAngles:
        """Rotation angles for these (or substituted) pump settings; only the
        scalar coupling is recomputed."""
        pumps = self.context.pumps if pumps is None else pumps
        if pumps.kernel_token() != self.context.pumps.kernel_token():
            raise ValueError("substituted pumps change the kernel shape; build a new context")
        coupling = coupling_strength(pumps, self.context.waveguide)
        return rotation_angles_from(self.decomposition, coupling, self.kernel.norm_const)

    def fundamental_angle(self, pumps: PumpPair | None = None) -> float:
        return float(self.angles(pumps).magnitudes[0])

    def mode_centroid(self, band: int = 3, pair: int = 0) -> float:
        """Amplitude-weighted centroid of one mode, the default input center."""
        dec = self.decomposition
        omega = dec.grid.omega(band)
        w = dec.grid.weights(band)
        modes = dec.modes3 if band == 3 else dec.modes4
        density = w * np.abs(modes[pair]) ** 2
        return float(np.sum(density * omega) / np.sum(density))


_CACHE: dict[tuple, Prepared] = {}
_CACHE_LOCK = threading.Lock()
_CACHE_LIMIT = 32


def prepare(context: SimContext, threads: int = 1, cache: bool = True) -> Prepared:
    """Build (or fetch) the kernel and its Schmidt decomposition."""
    token = context.kernel_token() if cache else None
    if cache:
        with _CACHE_LOCK:
            hit = _CACHE.get(token)
        if hit is not None:
            kernel = hit.kernel
            # The cached kernel may have been built for other powers/phase;
            # the shape is identical but the scalar coupling must follow.
            fresh_coupling = coupling_strength(context.pumps, context.waveguide)
            if fresh_coupling != kernel.coupling:
                kernel = replace(kernel, coupling=fresh_coupling)
            return Prepared(context=context, kernel=kernel, decomposition=hit.decomposition)
    kernel = build_kernel(
        context.pumps,
        context.waveguide,
        context.grid,
        context.quadrature,
        context.mismatch,
        threads=threads,
    )
    dec = decompose(kernel, context.threshold)
    prepared = Prepared(context=context, kernel=kernel, decomposition=dec)
    if cache:
        with _CACHE_LOCK:
            if len(_CACHE) >= _CACHE_LIMIT:
                _CACHE.pop(next(iter(_CACHE)))
            _CACHE[token] = prepared
    return prepared


def clear_cache() -> None:
    with _CACHE_LOCK:
        _CACHE.clear()
