"""Solving user-accessible parameters for Pauli-gate conditions.

The fundamental pair applies the rotation U(T, phi) = cos T - i sin T
(cos phi sx + sin phi sy). At T = (2n+1) pi/2 this is, up to a global
phase, the Pauli X gate when the pump relative phase is 0 and Y when it is
pi/2; Z is realized only by composing an X pass with a Y pass.

Gate deviation metric (ours; bounded, dimensionless, zero exactly at the
gate condition): project input and evolved output on the fundamental pair,
normalize both two-vectors, and report 1 - |<exact Pauli action | realized>|^2.
Global phase drops out of the modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BracketError, ConvergenceError
from .pipeline import Prepared, SimContext, prepare
from .schmidt import RotationAngles, SchmidtDecomposition
from .states import TwoBandState, evolve, project

_PAULI = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


@dataclass(frozen=True)
class GateTarget:
    """Which Pauli gate, and which odd multiple of pi/2 to hit."""

    kind: str
    n: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("X", "Y", "Z-composed"):
            raise ValueError(f"gate kind must be X, Y or Z-composed, got {self.kind!r}")
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")

    @property
    def target_angle(self) -> float:
        return (2 * self.n + 1) * math.pi / 2.0

    @property
    def phase_required(self) -> float:
        """Pump relative phase selecting the gate: 0 for X, pi/2 for Y."""
        if self.kind == "Y":
            return math.pi / 2.0
        return 0.0

    @property
    def pauli(self) -> np.ndarray:
        return _PAULI["Z" if self.kind == "Z-composed" else self.kind]


@dataclass(frozen=True)
class GateSolveResult:
    parameter: str
    value: float
    achieved_angle: float
    deviation: float
    bracket: tuple[float, float]
    iterations: int

    def to_jsonable(self) -> dict:
        return {
            "parameter": self.parameter,
            "value": self.value,
            "achieved_angle_rad": self.achieved_angle,
            "deviation_rad": self.deviation,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
        }


def mixing_angle_at_power(power1: float, prepared: Prepared) -> float:
    """Fundamental-pair rotation magnitude at a substituted pump-1 power.

    Only the scalar coupling is rebuilt; the kernel and its weights do not
    depend on the pump powers.
    """
    if power1 < 0.0:
        raise ValueError(f"power must be >= 0, got {power1!r}")
    pumps = prepared.context.pumps.with_power(power1=power1)
    return prepared.fundamental_angle(pumps)


def _angle_of_parameter(parameter: str, value: float, context: SimContext, threads: int) -> float:
    if parameter == "P1":
        return prepare(context.with_power(power1=value), threads=threads).fundamental_angle()
    if parameter == "P2":
        return prepare(context.with_power(power2=value), threads=threads).fundamental_angle()
    if parameter == "L":
        return prepare(context.with_length(value), threads=threads).fundamental_angle()
    raise ValueError(f"free parameter must be P1, P2 or L, got {parameter!r}")


def _bisect(objective, lo: float, hi: float, f_lo: float, f_hi: float, tol: float, max_iter: int = 200):
    """Plain bracketed bisection on the angle residual; returns
    (root, residual_at_root, iterations)."""
    best = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        f_mid = objective(mid)
        if abs(f_mid) < abs(best[1]):
            best = (mid, f_mid)
        if abs(f_mid) <= tol:
            return mid, f_mid, iteration
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise ConvergenceError(
        f"bisection did not reach tolerance {tol:g} in {max_iter} iterations; "
        f"best parameter {best[0]:.6e} with residual {best[1]:.3e}",
        best=best,
    )


def solve_gate(
    target: GateTarget,
    free_parameter: str,
    bracket: tuple[float, float],
    tol: float,
    context: SimContext,
    threads: int = 1,
    method: str = "auto",
) -> GateSolveResult:
    """Find the parameter value where the fundamental angle hits the target.

    For power parameters the square-root law gives the root in closed form
    from one reference evaluation (then verified); for the length the kernel
    is rebuilt per iterate and the root bracketed by bisection. Pass
    method="bisect" to force the iterative path for power parameters too.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol!r}")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 <= lo < hi):
        raise BracketError(f"bracket must satisfy 0 <= lo < hi, got {bracket!r}")
    theta_star = target.target_angle

    def objective(value: float) -> float:
        return _angle_of_parameter(free_parameter, value, context, threads) - theta_star

    f_lo = objective(lo)
    f_hi = objective(hi)
    if f_lo == 0.0:
        return GateSolveResult(free_parameter, lo, theta_star, 0.0, (lo, hi), 0)
    if f_hi == 0.0:
        return GateSolveResult(free_parameter, hi, theta_star, 0.0, (lo, hi), 0)
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise BracketError(
            f"target angle {theta_star:.6f} rad not straddled on {free_parameter} in "
            f"[{lo:.6e}, {hi:.6e}]: angles [{f_lo + theta_star:.6f}, {f_hi + theta_star:.6f}] rad"
        )

    if free_parameter in ("P1", "P2") and method == "auto":
        # theta grows as sqrt(P), so one reference evaluation pins the root.
        p_ref, angle_ref = hi, f_hi + theta_star
        root = p_ref * (theta_star / angle_ref) ** 2
        residual = objective(root)
        iterations = 1
        if abs(residual) > tol:
            root, residual, iterations = _bisect(objective, lo, hi, f_lo, f_hi, tol)
    else:
        root, residual, iterations = _bisect(objective, lo, hi, f_lo, f_hi, tol)

    return GateSolveResult(
        parameter=free_parameter,
        value=float(root),
        achieved_angle=float(residual + theta_star),
        deviation=float(abs(residual)),
        bracket=(lo, hi),
        iterations=iterations,
    )


def pauli_pair_action(kind: str, pair_in: tuple[complex, complex]) -> tuple[complex, complex]:
    matrix = _PAULI["Z" if kind == "Z-composed" else kind]
    vec = matrix @ np.array(pair_in, dtype=complex)
    return (complex(vec[0]), complex(vec[1]))


def gate_deviation(
    state_in: TwoBandState,
    dec: SchmidtDecomposition,
    angle_passes: Sequence[RotationAngles] | RotationAngles,
    gate: GateTarget,
) -> float:
    """1 - |<ideal | realized>|^2 on the normalized fundamental pair.

    ``angle_passes`` lists one pass for X or Y and the two passes (X config
    then Y config) for the composed Z. Returns 1.0 when the input has no
    fundamental-pair content.
    """
    if isinstance(angle_passes, RotationAngles):
        angle_passes = [angle_passes]
    co_in = project(state_in, dec)
    pair_in = np.array([co_in.coeff3[0], co_in.coeff4[0]], dtype=complex)
    norm_in = float(np.linalg.norm(pair_in))
    if norm_in == 0.0:
        return 1.0
    ideal = gate.pauli @ (pair_in / norm_in)

    state = state_in
    for angles in angle_passes:
        state = evolve(state, dec, angles)
    co_out = project(state, dec)
    pair_out = np.array([co_out.coeff3[0], co_out.coeff4[0]], dtype=complex)
    norm_out = float(np.linalg.norm(pair_out))
    if norm_out == 0.0:
        return 1.0
    overlap = np.vdot(ideal, pair_out / norm_out)
    return float(min(max(1.0 - abs(overlap) ** 2, 0.0), 1.0))
