"""Task execution: turn a validated RunConfig into artifacts on disk.

Every task writes only inside its output directory: data as CSV/JSON/binary
plus a ``manifest.json`` holding the complete effective configuration (which
alone suffices to reproduce the run), the applied defaults, versions, wall
time and diagnostics. Exit status is 0 on success; any simulation error is
serialized into the manifest and reported as nonzero.
"""

from __future__ import annotations

import json
import math
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import (
    DecomposeTask,
    GateSolveTask,
    KernelTask,
    PrepareTask,
    RunConfig,
    SweepTask,
    serialize_config,
)
from .errors import ConfigError, SimulationError
from .gates import GateTarget, gate_deviation, solve_gate
from .io import append_json_report, save_kernel, write_csv, write_mode_csv, write_state_csv
from .pipeline import prepare
from .schmidt import rotation_angles, schmidt_number
from .states import evolve, gaussian_input, ideal_qubit_output, fidelity, project
from .sweep import SweepPlan, optimize_bandwidth, run_sweep

try:
    _VERSION = metadata.version("tmfc")
except metadata.PackageNotFoundError:  # running from a source tree
    _VERSION = "0.1.0"


def _write_manifest(out_dir: Path, config: RunConfig, started: float, diagnostics: dict,
                    outputs: list[str], error: str | None) -> None:
    manifest = {
        "tool": {"name": "tmfc", "version": _VERSION},
        "task": config.task,
        "effective_config": serialize_config(config),
        "applied_defaults": list(config.applied_defaults),
        "outputs": sorted(outputs),
        "diagnostics": diagnostics,
        "started_unix": started,
        "wall_time_s": time.time() - started,
        "error": error,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _task_kernel(config: RunConfig, out_dir: Path, threads: int, diagnostics: dict) -> list[str]:
    prepared = prepare(config.context(), threads=threads)
    outputs: list[str] = []
    diagnostics["norm_const"] = prepared.kernel.norm_const
    diagnostics["coupling_abs"] = abs(prepared.kernel.coupling)
    diagnostics["weighted_norm_sq"] = prepared.kernel.weighted_norm_sq()
    if config.task_params.dump:
        bin_path, meta_path = save_kernel(out_dir, prepared.kernel)
        outputs += [bin_path.name, meta_path.name]
    return outputs


def _task_decompose(config: RunConfig, out_dir: Path, threads: int, diagnostics: dict) -> list[str]:
    prepared = prepare(config.context(), threads=threads)
    dec = prepared.decomposition
    angles = prepared.angles()
    outputs = ["weights.csv"]
    write_csv(
        out_dir / "weights.csv",
        ["pair", "weight", "rotation_magnitude_rad"],
        ((j, dec.weights[j], angles.magnitudes[j]) for j in range(dec.rank)),
    )
    count = min(config.task_params.export_modes, dec.rank)
    for j in range(count):
        for band, modes in ((3, dec.modes3), (4, dec.modes4)):
            name = f"mode_band{band}_pair{j}.csv"
            write_mode_csv(out_dir / name, dec.grid, band, modes[j])
            outputs.append(name)
    diagnostics["schmidt_number"] = schmidt_number(dec)
    diagnostics["retained_pairs"] = dec.rank
    diagnostics["retained_weight"] = float(np.sum(dec.weights))
    diagnostics["weight_sum_error"] = abs(float(np.sum(dec.weights)) - 1.0)
    return outputs


def _task_prepare(config: RunConfig, out_dir: Path, threads: int, diagnostics: dict) -> list[str]:
    params: PrepareTask = config.task_params
    prepared = prepare(config.context(), threads=threads)
    dec = prepared.decomposition
    angles = prepared.angles()
    center = params.input_center
    if center is None:
        center = prepared.mode_centroid(band=params.input_band)
    if params.input_bandwidth is None:
        result = optimize_bandwidth(
            config.context(), input_band=params.input_band, input_center=center, threads=threads
        )
        sigma_in = result.sigma_opt
        diagnostics["optimizer_iterations"] = result.iterations
        diagnostics["optimizer_hit_bound"] = result.hit_bound
    else:
        sigma_in = params.input_bandwidth

    state_in = gaussian_input(config.grid, params.input_band, center, sigma_in)
    state_out = evolve(state_in, dec, angles)
    xy_in = (1.0 + 0.0j, 0.0j) if params.input_band == 3 else (0.0j, 1.0 + 0.0j)
    ideal = ideal_qubit_output(xy_in, float(angles.magnitudes[0]), angles.common_phase)
    prep_fidelity = fidelity(state_out, dec, ideal)

    co_out = project(state_out, dec)
    pair0_weight = float(abs(co_out.coeff3[0]) ** 2 + abs(co_out.coeff4[0]) ** 2)

    outputs = []
    for label, state in (("input", state_in), ("output", state_out)):
        for band in (3, 4):
            name = f"{label}_band{band}.csv"
            write_state_csv(out_dir / name, state, band)
            outputs.append(name)
    report = {
        "fidelity": prep_fidelity,
        "input_band": params.input_band,
        "input_center_rad_s": center,
        "input_bandwidth_rad_s": sigma_in,
        "theta0_rad": float(angles.magnitudes[0]),
        "common_phase_rad": angles.common_phase,
        "pair0_weight_out": pair0_weight,
        "residual3_out": co_out.residual3,
        "residual4_out": co_out.residual4,
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    outputs.append("report.json")
    diagnostics.update(report)
    return outputs


def _task_gate_solve(config: RunConfig, out_dir: Path, threads: int, diagnostics: dict) -> list[str]:
    params: GateSolveTask = config.task_params
    context = config.context()
    target = GateTarget(params.kind, params.n)
    entries = []
    if params.kind == "Z-composed":
        # Z needs an X pass then a Y pass; both share the solved magnitude.
        for kind in ("X", "Y"):
            sub = GateTarget(kind, params.n)
            solved = solve_gate(sub, params.free_parameter, params.bracket, params.tolerance, context, threads)
            entries.append((sub, solved))
    else:
        entries.append((target, solve_gate(target, params.free_parameter, params.bracket,
                                           params.tolerance, context, threads)))

    solved_context = context
    solved = entries[-1][1]
    if params.free_parameter == "P1":
        solved_context = context.with_power(power1=solved.value)
    elif params.free_parameter == "P2":
        solved_context = context.with_power(power2=solved.value)
    else:
        solved_context = context.with_length(solved.value)
    prepared = prepare(solved_context, threads=threads)
    center = prepared.mode_centroid(band=3)
    sigma_ref = math.hypot(context.pumps.sigma1, context.pumps.sigma2)
    probe = gaussian_input(solved_context.grid, 3, center, sigma_ref)
    passes = [prepared.angles(solved_context.pumps.with_phase(t.phase_required)) for t, _ in entries]
    deviation = gate_deviation(probe, prepared.decomposition, passes, target)

    report_entry = {
        "target": {"kind": params.kind, "n": params.n},
        "free_parameter": params.free_parameter,
        "solves": [dict(s.to_jsonable(), gate=t.kind) for t, s in entries],
        "probe_gate_deviation": deviation,
        "tolerance_rad": params.tolerance,
    }
    append_json_report(out_dir / "gate_solves.json", report_entry)
    diagnostics.update(report_entry)
    return ["gate_solves.json"]


def _task_sweep(config: RunConfig, out_dir: Path, threads: int, diagnostics: dict) -> list[str]:
    params: SweepTask = config.task_params
    plan = SweepPlan(
        context=config.context(),
        swept=params.swept,
        values=params.values,
        outputs=params.outputs,
        optimize_sigma=params.optimize_sigma,
        sigma_bounds=params.sigma_bounds,
        sigma_rel_tol=params.sigma_rel_tol,
        fixed_sigma_in=params.fixed_sigma_in,
        input_band=params.input_band,
        input_center=params.input_center,
        gate=GateTarget(params.gate_kind, params.gate_n),
        kappa_count=params.kappa_count,
    )
    records = run_sweep(plan, threads=threads)

    kappa_cols = 0
    if "kappa" in params.outputs:
        kappa_cols = max(
            (len(r.observables.get("kappa") or []) for r in records), default=0
        )
    header = [params.swept]
    scalar_names = [n for n in params.outputs if n != "kappa"]
    if params.optimize_sigma and "fidelity" in params.outputs and "sigma_opt" not in scalar_names:
        scalar_names.append("sigma_opt")
    header += scalar_names
    header += [f"kappa_{i}" for i in range(kappa_cols)]
    header += ["error"]

    rows = []
    for record in records:
        row: list = [record.value]
        for name in scalar_names:
            row.append(record.observables.get(name))
        kappa = record.observables.get("kappa") or []
        for i in range(kappa_cols):
            row.append(kappa[i] if i < len(kappa) else None)
        row.append(record.error or "")
        rows.append(row)
    write_csv(out_dir / "sweep.csv", header, rows)
    diagnostics["points"] = len(records)
    diagnostics["failed_points"] = sum(1 for r in records if r.error)
    diagnostics["per_point"] = [
        {"value": r.value, "diagnostics": r.diagnostics, "error": r.error} for r in records
    ]
    return ["sweep.csv"]


_TASK_RUNNERS = {
    KernelTask: _task_kernel,
    DecomposeTask: _task_decompose,
    PrepareTask: _task_prepare,
    GateSolveTask: _task_gate_solve,
    SweepTask: _task_sweep,
}


def run(config: RunConfig, out_dir: str | Path | None = None, threads: int = 1) -> int:
    """Execute the configured task. Returns the process exit status."""
    target_dir = out_dir or config.output_dir
    if target_dir is None:
        raise ConfigError("no output directory: set output_dir in the config or pass --out")
    out_path = Path(target_dir)
    out_path.mkdir(parents=True, exist_ok=True)

    started = time.time()
    diagnostics: dict = {}
    outputs: list[str] = []
    error: str | None = None
    status = 0
    runner = _TASK_RUNNERS[type(config.task_params)]
    try:
        outputs = runner(config, out_path, threads, diagnostics)
    except SimulationError as exc:
        error = f"{type(exc).__name__}: {exc}"
        status = 1
    _write_manifest(out_path, config, started, diagnostics, outputs, error)
    if error is not None:
        print(f"error: {error}")
    return status
