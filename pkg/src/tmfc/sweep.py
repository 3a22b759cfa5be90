"""Parameter sweeps: fidelity vs length, vs input bandwidth, deviation vs power.

Each sweep point is independent; points run concurrently up to a worker
count and are merged back in plan order, so records are identical for any
thread count. A failure at one point is captured in its record and does not
touch its neighbours.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import BracketError, ConfigError, ResolutionError, SimulationError
from .gates import GateTarget, gate_deviation
from .pipeline import Prepared, SimContext, prepare
from .schmidt import schmidt_number
from .states import evolve, fidelity, gaussian_input, ideal_qubit_output

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

SWEEPABLE = ("L", "P1", "P2", "sigma_in")
OBSERVABLES = ("fidelity", "sigma_opt", "theta0", "deviation", "kappa", "schmidt_number")


@dataclass(frozen=True)
class BandwidthResult:
    sigma_opt: float
    fidelity: float
    iterations: int
    hit_bound: bool
    bounds: tuple[float, float]


def default_sigma_bounds(context: SimContext, input_band: int = 3) -> tuple[float, float]:
    """Search bounds for the input bandwidth: scaled off the pump-correlation
    width sqrt(sigma1^2 + sigma2^2), with the lower edge clamped to what the
    grid can resolve."""
    sigma_ref = math.hypot(context.pumps.sigma1, context.pumps.sigma2)
    lo = sigma_ref / 30.0
    hi = 30.0 * sigma_ref
    # 8 grid points within +-2 sigma needs sigma >= 1.75 spacing; 2.3 keeps
    # a margin against sample alignment
    resolvable = 2.3 * context.grid.spacing(input_band)
    lo = max(lo, resolvable)
    if lo >= hi:
        raise BracketError(
            f"bandwidth bounds empty after resolution clamp: [{lo:.3e}, {hi:.3e}] rad/s"
        )
    return (lo, hi)


def preparation_fidelity(
    prepared: Prepared,
    sigma_in: float,
    input_band: int = 3,
    input_center: float | None = None,
) -> float:
    """Fidelity of preparing the path-encoded qubit from a Gaussian input.

    Runs the full chain: Gaussian input, beam-splitter evolution, overlap
    with the ideal single-pair output for the same rotation.
    """
    dec = prepared.decomposition
    angles = prepared.angles()
    center = prepared.mode_centroid(band=input_band) if input_center is None else input_center
    state = gaussian_input(prepared.context.grid, input_band, center, sigma_in)
    out = evolve(state, dec, angles)
    xy_in = (1.0 + 0.0j, 0.0j) if input_band == 3 else (0.0j, 1.0 + 0.0j)
    ideal = ideal_qubit_output(xy_in, float(angles.magnitudes[0]), angles.common_phase)
    return fidelity(out, dec, ideal)


def optimize_bandwidth(
    context: SimContext,
    length: float | None = None,
    bounds: tuple[float, float] | None = None,
    rel_tol: float = 1e-3,
    input_band: int = 3,
    input_center: float | None = None,
    threads: int = 1,
    prepared: Prepared | None = None,
) -> BandwidthResult:
    """Golden-section search on log sigma maximizing preparation fidelity.

    Unresolvably narrow probes score 0. Hitting a bound is flagged in the
    result, not raised, signalling that the bracket should widen. Pass
    ``prepared`` to optimize against an existing kernel decomposition.
    """
    if prepared is None:
        if length is not None:
            context = context.with_length(length)
        prepared = prepare(context, threads=threads)
    else:
        context = prepared.context
    if bounds is None:
        bounds = default_sigma_bounds(context, input_band)
    lo, hi = bounds
    if not (0.0 < lo < hi):
        raise BracketError(f"bandwidth bounds must satisfy 0 < lo < hi, got {bounds!r}")

    def score(log_sigma: float) -> float:
        try:
            return preparation_fidelity(prepared, math.exp(log_sigma), input_band, input_center)
        except ResolutionError:
            return 0.0

    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    f_c, f_d = score(c), score(d)
    iterations = 0
    while (b - a) > math.log1p(rel_tol):
        iterations += 1
        if f_c >= f_d:
            b, d, f_d = d, c, f_c
            c = b - _GOLDEN * (b - a)
            f_c = score(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + _GOLDEN * (b - a)
            f_d = score(d)
        if iterations > 500:
            break
    log_best = 0.5 * (a + b)
    sigma_opt = math.exp(log_best)
    best = score(log_best)
    span = math.log(hi) - math.log(lo)
    edge = 1.5 * math.log1p(rel_tol)
    hit = (log_best - math.log(lo)) < edge or (math.log(hi) - log_best) < edge
    return BandwidthResult(
        sigma_opt=sigma_opt,
        fidelity=best,
        iterations=iterations,
        hit_bound=bool(hit and span > 2 * edge),
        bounds=bounds,
    )


@dataclass(frozen=True)
class SweepPlan:
    """One swept parameter with optional inner bandwidth optimization.

    ``swept`` is one of L (m), P1/P2 (W), sigma_in (rad/s); values must be
    strictly monotone. ``outputs`` selects observables; ``kappa_count``
    caps the exported weight spectrum. When ``optimize_sigma`` is off,
    sigma_in sweeps and fidelity outputs use ``fixed_sigma_in`` (defaulting
    to the pump-correlation width) and ``input_center`` (defaulting to the
    fundamental-mode centroid).
    """

    context: SimContext
    swept: str
    values: tuple[float, ...]
    outputs: tuple[str, ...] = ("fidelity",)
    optimize_sigma: bool = False
    sigma_bounds: tuple[float, float] | None = None
    sigma_rel_tol: float = 1e-3
    fixed_sigma_in: float | None = None
    input_band: int = 3
    input_center: float | None = None
    gate: GateTarget = field(default_factory=lambda: GateTarget("X", 0))
    kappa_count: int = 8

    def __post_init__(self) -> None:
        if self.swept not in SWEEPABLE:
            raise ConfigError(f"swept parameter must be one of {SWEEPABLE}, got {self.swept!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0:
            raise ConfigError("sweep needs at least one value")
        if vals.size > 1:
            diffs = np.diff(vals)
            if not (np.all(diffs > 0.0) or np.all(diffs < 0.0)):
                raise ConfigError("sweep values must be strictly monotone")
        unknown = set(self.outputs) - set(OBSERVABLES)
        if unknown:
            raise ConfigError(f"unknown observables {sorted(unknown)}; known: {OBSERVABLES}")
        if self.sigma_bounds is not None and not (0.0 < self.sigma_bounds[0] < self.sigma_bounds[1]):
            raise ConfigError(f"sigma bounds must be ordered and positive, got {self.sigma_bounds}")


@dataclass(frozen=True)
class SweepRecord:
    value: float
    observables: dict
    diagnostics: dict
    error: str | None = None


def _context_at(plan: SweepPlan, value: float) -> SimContext:
    if plan.swept == "L":
        return plan.context.with_length(value)
    if plan.swept == "P1":
        return plan.context.with_power(power1=value)
    if plan.swept == "P2":
        return plan.context.with_power(power2=value)
    return plan.context


def _evaluate_point(plan: SweepPlan, value: float, threads: int) -> SweepRecord:
    context = _context_at(plan, value)
    observables: dict = {}
    diagnostics: dict = {
        "grid_points": (context.grid.n3, context.grid.n4),
        "quadrature_nodes": context.quadrature.nodes,
    }
    prepared = prepare(context, threads=threads)
    dec = prepared.decomposition
    diagnostics["retained_pairs"] = dec.rank
    diagnostics["retained_weight"] = float(np.sum(dec.weights))

    sigma_in = plan.fixed_sigma_in
    if plan.swept == "sigma_in":
        sigma_in = value
    if sigma_in is None:
        sigma_in = math.hypot(context.pumps.sigma1, context.pumps.sigma2)

    for name in plan.outputs:
        if name == "fidelity":
            if plan.optimize_sigma and plan.swept != "sigma_in":
                result = optimize_bandwidth(
                    context,
                    bounds=plan.sigma_bounds,
                    rel_tol=plan.sigma_rel_tol,
                    input_band=plan.input_band,
                    input_center=plan.input_center,
                    threads=threads,
                )
                observables["fidelity"] = result.fidelity
                observables["sigma_opt"] = result.sigma_opt
                diagnostics["optimizer_iterations"] = result.iterations
                diagnostics["optimizer_hit_bound"] = result.hit_bound
            else:
                observables["fidelity"] = preparation_fidelity(
                    prepared, sigma_in, plan.input_band, plan.input_center
                )
        elif name == "sigma_opt" and "sigma_opt" not in observables:
            result = optimize_bandwidth(
                context,
                bounds=plan.sigma_bounds,
                rel_tol=plan.sigma_rel_tol,
                input_band=plan.input_band,
                input_center=plan.input_center,
                threads=threads,
            )
            observables["sigma_opt"] = result.sigma_opt
            observables.setdefault("fidelity", result.fidelity)
            diagnostics["optimizer_iterations"] = result.iterations
            diagnostics["optimizer_hit_bound"] = result.hit_bound
        elif name == "theta0":
            observables["theta0"] = prepared.fundamental_angle()
        elif name == "deviation":
            pumps = context.pumps.with_phase(plan.gate.phase_required)
            passes = [prepared.angles(pumps)]
            if plan.gate.kind == "Z-composed":
                pumps_y = context.pumps.with_phase(math.pi / 2.0)
                passes = [prepared.angles(context.pumps.with_phase(0.0)), prepared.angles(pumps_y)]
            center = plan.input_center
            if center is None:
                center = prepared.mode_centroid(band=plan.input_band)
            state = gaussian_input(context.grid, plan.input_band, center, sigma_in)
            observables["deviation"] = gate_deviation(state, dec, passes, plan.gate)
        elif name == "kappa":
            count = min(plan.kappa_count, dec.rank)
            observables["kappa"] = [float(x) for x in dec.weights[:count]]
        elif name == "schmidt_number":
            observables["schmidt_number"] = schmidt_number(dec)
    return SweepRecord(value=value, observables=observables, diagnostics=diagnostics)


def run_sweep(plan: SweepPlan, threads: int = 1) -> list[SweepRecord]:
    """Evaluate the plan at every swept value, isolating per-point failures."""

    def point(value: float) -> SweepRecord:
        try:
            return _evaluate_point(plan, value, threads=1)
        except SimulationError as exc:
            failed = {name: None for name in plan.outputs}
            return SweepRecord(
                value=value,
                observables=failed,
                diagnostics={},
                error=f"{type(exc).__name__}: {exc}",
            )

    values = list(plan.values)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(point, values))
    else:
        records = [point(v) for v in values]
    return records
