"""Temporal-mode frequency-conversion simulator.

Builds the two-pump four-wave-mixing conversion kernel of a nonlinear
waveguide, decomposes it into temporal-mode pairs, evolves single-photon
two-band states through the resulting beam-splitter rotations, and solves
user-accessible parameters (pump power, length, pump phase) for qubit
preparation and Pauli-gate conditions.
"""

from .conversion import (
    ConversionKernel,
    FrequencyGrid,
    PumpPair,
    QuadratureSpec,
    WaveguideSpec,
    build_kernel,
    coupling_strength,
    grid_auto,
)
from .dispersion import (
    BandDispersion,
    DispersionModel,
    PhaseMismatchSpec,
    SellmeierCoefficients,
    builtin_sellmeier,
    phase_mismatch,
    propagation_constant,
    refractive_index,
    vacuum_line_model,
)
from .gates import GateSolveResult, GateTarget, gate_deviation, mixing_angle_at_power, solve_gate
from .pipeline import Prepared, SimContext, prepare
from .schmidt import (
    RotationAngles,
    SchmidtDecomposition,
    decompose,
    reconstruct,
    rotation_angles,
    schmidt_number,
)
from .states import (
    ModeCoefficients,
    TwoBandState,
    evolve,
    fidelity,
    gaussian_input,
    ideal_qubit_output,
    project,
    state_from_pair,
)
from .sweep import BandwidthResult, SweepPlan, SweepRecord, optimize_bandwidth, preparation_fidelity, run_sweep

__version__ = "0.1.0"
