"""Run configuration: JSON with explicit units on every physical quantity.

The file format is strict: unknown keys are errors, physical fields must be
``{"value": <number>, "unit": "<unit>"}`` objects (bare numbers are allowed
only for dimensionless fields), and parse -> serialize -> parse is the
identity. Defaults applied during parsing are recorded so the run manifest
can list them.

Canonical units on serialization: m, W, Hz, rad/s, rad, 1/(W m), s^m/m.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import constants
from .conversion import FrequencyGrid, PumpPair, QuadratureSpec, WaveguideSpec
from .dispersion import (
    BANDS,
    BandDispersion,
    DispersionModel,
    PhaseMismatchSpec,
    SellmeierCoefficients,
    builtin_sellmeier,
)
from .errors import ConfigError
from .pipeline import SimContext

TASKS = ("kernel", "decompose", "prepare", "gate-solve", "sweep")

_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}
_POWER = {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6, "nW": 1e-9}
_RATE = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
_ANGULAR = {"rad/s": 1.0, "Grad/s": 1e9, "Trad/s": 1e12, "Prad/s": 1e15}
_ANGLE = {"rad": 1.0, "deg": math.pi / 180.0}
_GAMMA = {"1/(W m)": 1.0, "1/(W*m)": 1.0, "1/(W·m)": 1.0}

_DIMENSIONS = {
    "length": (_LENGTH, "m"),
    "power": (_POWER, "W"),
    "rate": (_RATE, "Hz"),
    "angular-frequency": (_ANGULAR, "rad/s"),
    "angle": (_ANGLE, "rad"),
    "gamma": (_GAMMA, "1/(W m)"),
}


def _taylor_unit(order: int) -> str:
    if order == 0:
        return "1/m"
    if order == 1:
        return "s/m"
    return f"s^{order}/m"


class _Node:
    """A mapping wrapper that tracks consumed keys and reports leftovers."""

    def __init__(self, mapping: Any, path: str) -> None:
        if not isinstance(mapping, dict):
            raise ConfigError(f"{path}: expected an object, got {type(mapping).__name__}")
        self.mapping = mapping
        self.path = path
        self.seen: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.mapping

    def get(self, key: str, required: bool = True, default: Any = None) -> Any:
        if key not in self.mapping:
            if required:
                raise ConfigError(f"{self.path}: missing required key {key!r}")
            return default
        self.seen.add(key)
        return self.mapping[key]

    def child(self, key: str, required: bool = True) -> "_Node | None":
        value = self.get(key, required=required)
        if value is None:
            return None
        return _Node(value, f"{self.path}.{key}")

    def finish(self) -> None:
        unknown = sorted(set(self.mapping) - self.seen)
        if unknown:
            raise ConfigError(f"{self.path}: unknown keys {unknown}")


def _quantity(raw: Any, path: str, dimension: str) -> float:
    table, canonical = _DIMENSIONS[dimension]
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raise ConfigError(
            f"{path}: physical quantity needs an explicit unit, e.g. "
            f'{{"value": {raw}, "unit": "{canonical}"}}'
        )
    node = _Node(raw, path)
    value = node.get("value")
    unit = node.get("unit")
    node.finish()
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{path}.value: expected a number, got {value!r}")
    if unit not in table:
        raise ConfigError(
            f"{path}.unit: {unit!r} is not a {dimension} unit; expected one of {sorted(table)}"
        )
    return float(value) * table[unit]


def _jq(value: float, unit: str) -> dict:
    return {"value": value, "unit": unit}


def _frequency_quantity(node: _Node, path: str) -> float:
    """Accept {"wavelength": {...length}} or {"frequency": {...rad/s}}."""
    has_l = node.has("wavelength")
    has_f = node.has("frequency")
    if has_l == has_f:
        raise ConfigError(f"{path}: give exactly one of 'wavelength' or 'frequency'")
    if has_l:
        lam = _quantity(node.get("wavelength"), f"{path}.wavelength", "length")
        if lam <= 0:
            raise ConfigError(f"{path}.wavelength: must be > 0")
        return constants.wavelength_to_angular(lam)
    return _quantity(node.get("frequency"), f"{path}.frequency", "angular-frequency")


def _number(raw: Any, path: str, minimum: float | None = None) -> float:
    if not isinstance(raw, (int, float)) or isinstance(raw, bool):
        raise ConfigError(f"{path}: expected a number, got {raw!r}")
    value = float(raw)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _integer(raw: Any, path: str, minimum: int | None = None) -> int:
    if not isinstance(raw, int) or isinstance(raw, bool):
        raise ConfigError(f"{path}: expected an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {raw}")
    return raw


@dataclass(frozen=True)
class PrepareTask:
    input_band: int = 3
    input_center: float | None = None  # None means the fundamental-mode centroid
    input_bandwidth: float | None = None  # None means optimize


@dataclass(frozen=True)
class GateSolveTask:
    kind: str = "X"
    n: int = 0
    free_parameter: str = "P1"
    bracket: tuple[float, float] = (0.0, 0.0)
    tolerance: float = 1e-9


@dataclass(frozen=True)
class SweepTask:
    swept: str = "L"
    values: tuple[float, ...] = ()
    outputs: tuple[str, ...] = ("fidelity",)
    optimize_sigma: bool = False
    sigma_bounds: tuple[float, float] | None = None
    sigma_rel_tol: float = 1e-3
    fixed_sigma_in: float | None = None
    input_band: int = 3
    input_center: float | None = None
    gate_kind: str = "X"
    gate_n: int = 0
    kappa_count: int = 8


@dataclass(frozen=True)
class KernelTask:
    dump: bool = True


@dataclass(frozen=True)
class DecomposeTask:
    export_modes: int = 4


@dataclass(frozen=True)
class RunConfig:
    task: str
    pumps: PumpPair
    waveguide: WaveguideSpec
    grid: FrequencyGrid
    quadrature: QuadratureSpec
    mismatch: PhaseMismatchSpec
    threshold: float
    task_params: Any
    output_dir: str | None = None
    applied_defaults: tuple[str, ...] = field(default=(), compare=False)

    def context(self) -> SimContext:
        return SimContext(
            pumps=self.pumps,
            waveguide=self.waveguide,
            grid=self.grid,
            quadrature=self.quadrature,
            mismatch=self.mismatch,
            threshold=self.threshold,
        )


def _parse_sellmeier_block(node: _Node, base_dir: Path) -> SellmeierCoefficients:
    raw = node.get("coefficients")
    path = f"{node.path}.coefficients"
    if isinstance(raw, str):
        if raw.startswith("builtin:"):
            return builtin_sellmeier(raw.split(":", 1)[1])
        file_path = Path(raw)
        if not file_path.is_absolute():
            file_path = base_dir / file_path
        if not file_path.exists():
            raise ConfigError(f"{path}: coefficient file {file_path} not found")
        return SellmeierCoefficients.from_file(file_path)
    sub = _Node(raw, path)
    coeffs = SellmeierCoefficients(
        b=tuple(_number(x, f"{path}.b[{i}]") for i, x in enumerate(sub.get("b"))),
        c_um=tuple(_number(x, f"{path}.c_um[{i}]") for i, x in enumerate(sub.get("c_um"))),
        valid_um=(
            _number(sub.get("valid_um_min"), f"{path}.valid_um_min", minimum=0.0),
            _number(sub.get("valid_um_max"), f"{path}.valid_um_max", minimum=0.0),
        ),
        label=str(sub.get("label", required=False, default="")),
    )
    sub.finish()
    return coeffs


def _window(node: _Node | None, path: str) -> tuple[float, float] | None:
    if node is None:
        return None
    lo = _quantity(node.get("min"), f"{path}.min", "angular-frequency")
    hi = _quantity(node.get("max"), f"{path}.max", "angular-frequency")
    node.finish()
    return (lo, hi)


def _default_windows(
    pumps: PumpPair,
    centers34: tuple[float, float],
    span_factor: float,
    span_sigmas: float,
) -> dict[int, tuple[float, float]]:
    """Validity windows covering every frequency the kernel build evaluates:
    ten bandwidths around each pump center (the kernel builder only reaches
    band 1 where the pump envelopes overlap), the quadrature span on band 2,
    and the grid extent on the signal bands."""
    s1, s2 = pumps.sigma1, pumps.sigma2
    half_grid = span_factor * (s1 + s2)
    c3, c4 = centers34
    half2 = max(10.0, 1.001 * span_sigmas) * s2
    sig_half = max(10.0 * (s1 + s2), half_grid)
    return {
        1: (pumps.center1 - 10.0 * s1, pumps.center1 + 10.0 * s1),
        2: (pumps.center2 - half2, pumps.center2 + half2),
        3: (c3 - sig_half, c3 + sig_half),
        4: (c4 - sig_half, c4 + sig_half),
    }


def _parse_dispersion(
    node: _Node,
    pumps: PumpPair,
    centers34: tuple[float, float],
    span_factor: float,
    span_sigmas: float,
    base_dir: Path,
    defaults: list[str],
) -> DispersionModel:
    kind = node.get("kind")
    label = str(node.get("label", required=False, default=""))
    auto_windows = _default_windows(pumps, centers34, span_factor, span_sigmas)

    if kind == "sellmeier-effective":
        coeffs = _parse_sellmeier_block(node, base_dir)
        windows_node = node.child("windows", required=False)
        windows: dict[int, tuple[float, float]] = {}
        if windows_node is not None:
            for band in BANDS:
                windows[band] = _window(
                    windows_node.child(f"band{band}"), f"{windows_node.path}.band{band}"
                )
            windows_node.finish()
        else:
            fit_lo, fit_hi = coeffs.valid_angular_window()
            for band in BANDS:
                lo, hi = auto_windows[band]
                windows[band] = (max(lo, fit_lo), min(hi, fit_hi))
                defaults.append(
                    f"{node.path}.windows.band{band} = [{windows[band][0]:.6e}, "
                    f"{windows[band][1]:.6e}] rad/s (default, clipped to fit validity)"
                )
        node.finish()
        bands = {b: BandDispersion(window=windows[b], sellmeier=coeffs) for b in BANDS}
        return DispersionModel(kind="sellmeier-effective", bands=bands, label=label or coeffs.label)

    if kind == "polynomial-expansion":
        bands_node = node.child("bands")
        bands: dict[int, BandDispersion] = {}
        for band in BANDS:
            band_node = bands_node.child(f"band{band}")
            bpath = band_node.path
            ref_node = _Node(band_node.get("reference"), f"{bpath}.reference")
            omega_ref = _frequency_quantity(ref_node, f"{bpath}.reference")
            ref_node.finish()
            taylor_raw = band_node.get("taylor")
            if not isinstance(taylor_raw, list) or not taylor_raw:
                raise ConfigError(f"{bpath}.taylor: expected a non-empty list")
            taylor = []
            for order, entry in enumerate(taylor_raw):
                epath = f"{bpath}.taylor[{order}]"
                sub = _Node(entry, epath)
                value = _number(sub.get("value"), f"{epath}.value")
                unit = sub.get("unit")
                sub.finish()
                expected = _taylor_unit(order)
                if unit != expected:
                    raise ConfigError(f"{epath}.unit: order-{order} coefficient must be in {expected!r}, got {unit!r}")
                taylor.append(value)
            window = _window(band_node.child("window", required=False), f"{bpath}.window")
            if window is None:
                window = auto_windows[band]
                defaults.append(
                    f"{bpath}.window = [{window[0]:.6e}, {window[1]:.6e}] rad/s (default)"
                )
            band_node.finish()
            bands[band] = BandDispersion(window=window, omega_ref=omega_ref, taylor=tuple(taylor))
        bands_node.finish()
        node.finish()
        return DispersionModel(kind="polynomial-expansion", bands=bands, label=label)

    raise ConfigError(
        f"{node.path}.kind: {kind!r} is not a dispersion kind; expected "
        f"'sellmeier-effective' or 'polynomial-expansion'"
    )


def _parse_pump(node: _Node) -> tuple[float, float, float, float]:
    center = _frequency_quantity(node, node.path)
    sigma = _quantity(node.get("bandwidth"), f"{node.path}.bandwidth", "angular-frequency")
    power = _quantity(node.get("average_power"), f"{node.path}.average_power", "power")
    rate = _quantity(node.get("repetition_rate"), f"{node.path}.repetition_rate", "rate")
    node.finish()
    return center, sigma, power, rate


def _parse_grid(
    node: _Node, pumps: PumpPair, defaults: list[str]
) -> tuple[FrequencyGrid, tuple[float, float], float]:
    """Returns (grid, (center3, center4), span_factor-for-window-defaults)."""
    mode = node.get("mode", required=False, default="auto")
    if mode == "auto":
        if not node.has("mode"):
            defaults.append(f"{node.path}.mode = auto (default)")
        c3_node = _Node(node.get("center3"), f"{node.path}.center3")
        c3 = _frequency_quantity(c3_node, f"{node.path}.center3")
        c3_node.finish()
        c4_node = _Node(node.get("center4"), f"{node.path}.center4")
        c4 = _frequency_quantity(c4_node, f"{node.path}.center4")
        c4_node.finish()
        if node.has("span_factor"):
            span = _number(node.get("span_factor"), f"{node.path}.span_factor")
        else:
            span = 4.0
            defaults.append(f"{node.path}.span_factor = 4.0 (default)")
        if span <= 0:
            raise ConfigError(f"{node.path}.span_factor: must be > 0, got {span}")
        if node.has("points"):
            points = _integer(node.get("points"), f"{node.path}.points", minimum=16)
        else:
            points = 512
            defaults.append(f"{node.path}.points = 512 (default)")
        node.finish()
        half = span * (pumps.sigma1 + pumps.sigma2)
        grid = FrequencyGrid(
            min3=c3 - half, max3=c3 + half, n3=points,
            min4=c4 - half, max4=c4 + half, n4=points,
        )
        return grid, (c3, c4), span
    if mode == "explicit":
        ranges = {}
        for band in (3, 4):
            band_node = node.child(f"band{band}")
            bpath = band_node.path
            lo = _quantity(band_node.get("min"), f"{bpath}.min", "angular-frequency")
            hi = _quantity(band_node.get("max"), f"{bpath}.max", "angular-frequency")
            pts = _integer(band_node.get("points"), f"{bpath}.points", minimum=2)
            band_node.finish()
            if not lo < hi:
                raise ConfigError(f"{bpath}: min must be < max")
            ranges[band] = (lo, hi, pts)
        node.finish()
        grid = FrequencyGrid(
            min3=ranges[3][0], max3=ranges[3][1], n3=ranges[3][2],
            min4=ranges[4][0], max4=ranges[4][1], n4=ranges[4][2],
        )
        centers = (0.5 * (grid.min3 + grid.max3), 0.5 * (grid.min4 + grid.max4))
        span_equiv = 0.5 * (grid.max3 - grid.min3) / (pumps.sigma1 + pumps.sigma2)
        return grid, centers, span_equiv
    raise ConfigError(f"{node.path}.mode: expected 'auto' or 'explicit', got {mode!r}")


def _parse_center_policy(node: _Node, key: str) -> float | None:
    """'mode-centroid' (None) or a frequency/wavelength quantity."""
    raw = node.get(key, required=False)
    if raw is None or raw == "mode-centroid":
        return None
    sub = _Node(raw, f"{node.path}.{key}")
    value = _frequency_quantity(sub, f"{node.path}.{key}")
    sub.finish()
    return value


def _parse_task_params(task: str, node: _Node | None, path: str) -> Any:
    if task == "kernel":
        if node is None:
            return KernelTask()
        result = KernelTask(dump=bool(node.get("dump", required=False, default=True)))
        node.finish()
        return result
    if task == "decompose":
        if node is None:
            return DecomposeTask()
        result = DecomposeTask(
            export_modes=_integer(node.get("export_modes", required=False, default=4), f"{path}.export_modes", minimum=0)
        )
        node.finish()
        return result
    if task == "prepare":
        if node is None:
            return PrepareTask()
        band = _integer(node.get("input_band", required=False, default=3), f"{path}.input_band")
        if band not in (3, 4):
            raise ConfigError(f"{path}.input_band: must be 3 or 4, got {band}")
        center = _parse_center_policy(node, "input_center")
        bw_raw = node.get("input_bandwidth", required=False)
        bandwidth = None
        if bw_raw is not None and bw_raw != "optimal":
            bandwidth = _quantity(bw_raw, f"{path}.input_bandwidth", "angular-frequency")
        node.finish()
        return PrepareTask(input_band=band, input_center=center, input_bandwidth=bandwidth)
    if task == "gate-solve":
        if node is None:
            raise ConfigError(f"{path}: gate-solve needs task parameters (target, bracket)")
        target_node = node.child("target")
        kind = target_node.get("kind")
        if kind not in ("X", "Y", "Z-composed"):
            raise ConfigError(f"{target_node.path}.kind: expected X, Y or Z-composed, got {kind!r}")
        n = _integer(target_node.get("n", required=False, default=0), f"{target_node.path}.n", minimum=0)
        target_node.finish()
        free = node.get("free_parameter", required=False, default="P1")
        if free not in ("P1", "P2", "L"):
            raise ConfigError(f"{path}.free_parameter: expected P1, P2 or L, got {free!r}")
        dim = "power" if free in ("P1", "P2") else "length"
        bracket_node = node.child("bracket")
        lo = _quantity(bracket_node.get("min"), f"{bracket_node.path}.min", dim)
        hi = _quantity(bracket_node.get("max"), f"{bracket_node.path}.max", dim)
        bracket_node.finish()
        tol = _quantity(
            node.get("tolerance", required=False, default={"value": 1e-9, "unit": "rad"}),
            f"{path}.tolerance",
            "angle",
        )
        node.finish()
        return GateSolveTask(kind=kind, n=n, free_parameter=free, bracket=(lo, hi), tolerance=tol)
    if task == "sweep":
        if node is None:
            raise ConfigError(f"{path}: sweep needs task parameters (swept, values)")
        swept = node.get("swept")
        if swept not in ("L", "P1", "P2", "sigma_in"):
            raise ConfigError(f"{path}.swept: expected L, P1, P2 or sigma_in, got {swept!r}")
        dim = {"L": "length", "P1": "power", "P2": "power", "sigma_in": "angular-frequency"}[swept]
        values_raw = node.get("values")
        if not isinstance(values_raw, list) or not values_raw:
            raise ConfigError(f"{path}.values: expected a non-empty list")
        values = tuple(
            _quantity(v, f"{path}.values[{i}]", dim) for i, v in enumerate(values_raw)
        )
        outputs_raw = node.get("outputs", required=False, default=["fidelity"])
        if not isinstance(outputs_raw, list) or not outputs_raw:
            raise ConfigError(f"{path}.outputs: expected a non-empty list")
        outputs = tuple(str(x) for x in outputs_raw)
        optimize = bool(node.get("optimize_sigma", required=False, default=False))
        bounds = None
        bounds_node = node.child("sigma_bounds", required=False)
        if bounds_node is not None:
            bounds = (
                _quantity(bounds_node.get("min"), f"{bounds_node.path}.min", "angular-frequency"),
                _quantity(bounds_node.get("max"), f"{bounds_node.path}.max", "angular-frequency"),
            )
            bounds_node.finish()
        rel_tol = _number(node.get("sigma_rel_tol", required=False, default=1e-3), f"{path}.sigma_rel_tol", minimum=0.0)
        fixed_raw = node.get("fixed_sigma_in", required=False)
        fixed = None if fixed_raw is None else _quantity(fixed_raw, f"{path}.fixed_sigma_in", "angular-frequency")
        band = _integer(node.get("input_band", required=False, default=3), f"{path}.input_band")
        center = _parse_center_policy(node, "input_center")
        gate_kind, gate_n = "X", 0
        gate_node = node.child("gate", required=False)
        if gate_node is not None:
            gate_kind = gate_node.get("kind")
            if gate_kind not in ("X", "Y", "Z-composed"):
                raise ConfigError(f"{gate_node.path}.kind: expected X, Y or Z-composed, got {gate_kind!r}")
            gate_n = _integer(gate_node.get("n", required=False, default=0), f"{gate_node.path}.n", minimum=0)
            gate_node.finish()
        kappa_count = _integer(node.get("kappa_count", required=False, default=8), f"{path}.kappa_count", minimum=1)
        node.finish()
        return SweepTask(
            swept=swept,
            values=values,
            outputs=outputs,
            optimize_sigma=optimize,
            sigma_bounds=bounds,
            sigma_rel_tol=rel_tol,
            fixed_sigma_in=fixed,
            input_band=band,
            input_center=center,
            gate_kind=gate_kind,
            gate_n=gate_n,
            kappa_count=kappa_count,
        )
    raise ConfigError(f"task: expected one of {TASKS}, got {task!r}")


def parse_config_mapping(raw: Any, base_dir: Path | str = ".") -> RunConfig:
    """Parse an already-loaded JSON object into a validated RunConfig."""
    base_dir = Path(base_dir)
    defaults: list[str] = []
    root = _Node(raw, "config")
    missing = [k for k in ("task", "pumps", "waveguide", "grid") if not root.has(k)]
    if missing:
        raise ConfigError(f"config: missing required sections {missing}")

    task = root.get("task")
    if task not in TASKS:
        raise ConfigError(f"config.task: expected one of {TASKS}, got {task!r}")

    pumps_node = root.child("pumps")
    p1 = _parse_pump(pumps_node.child("pump1"))
    p2 = _parse_pump(pumps_node.child("pump2"))
    if pumps_node.has("relative_phase"):
        phase = _quantity(pumps_node.get("relative_phase"), f"{pumps_node.path}.relative_phase", "angle")
    else:
        phase = 0.0
        defaults.append("config.pumps.relative_phase = 0 rad (default)")
    pumps_node.finish()
    pumps = PumpPair(
        center1=p1[0], sigma1=p1[1], power1=p1[2], rep_rate1=p1[3],
        center2=p2[0], sigma2=p2[1], power2=p2[2], rep_rate2=p2[3],
        rel_phase=phase,
    )

    grid_node = root.child("grid")
    grid, centers34, span = _parse_grid(grid_node, pumps, defaults)

    if root.has("quadrature"):
        quad_node = root.child("quadrature")
        nodes = _integer(quad_node.get("nodes", required=False, default=1025), f"{quad_node.path}.nodes", minimum=3)
        span_sigmas = _number(quad_node.get("span_sigmas", required=False, default=6.0), f"{quad_node.path}.span_sigmas")
        quad_node.finish()
        quadrature = QuadratureSpec(nodes=nodes, span_sigmas=span_sigmas)
    else:
        quadrature = QuadratureSpec()
        defaults.append("config.quadrature = {nodes: 1025, span_sigmas: 6.0} (default)")

    wg_node = root.child("waveguide")
    length = _quantity(wg_node.get("length"), f"{wg_node.path}.length", "length")
    gamma = _quantity(wg_node.get("gamma"), f"{wg_node.path}.gamma", "gamma")
    geometry = str(wg_node.get("geometry_label", required=False, default=""))
    dispersion = _parse_dispersion(
        wg_node.child("dispersion"), pumps, centers34, span, quadrature.span_sigmas, base_dir, defaults
    )
    wg_node.finish()
    waveguide = WaveguideSpec(length=length, gamma=gamma, dispersion=dispersion, geometry_label=geometry)

    if root.has("phase_mismatch_convention"):
        mismatch = PhaseMismatchSpec(str(root.get("phase_mismatch_convention")))
    else:
        mismatch = PhaseMismatchSpec()
        defaults.append(f"config.phase_mismatch_convention = {mismatch.sign_convention} (default)")

    if root.has("schmidt_threshold"):
        threshold = _number(root.get("schmidt_threshold"), "config.schmidt_threshold", minimum=0.0)
        if threshold >= 1.0:
            raise ConfigError(f"config.schmidt_threshold: must be < 1, got {threshold}")
    else:
        threshold = 1e-12
        defaults.append("config.schmidt_threshold = 1e-12 (default)")

    output_dir = root.get("output_dir", required=False)
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError(f"config.output_dir: expected a string, got {output_dir!r}")

    # task_params is keyed by task name so one file can serve several verbs;
    # every present section is validated, the active task's is used.
    params_node = root.child("task_params", required=False)
    active_node = None
    if params_node is not None:
        unknown = sorted(set(params_node.mapping) - set(TASKS))
        if unknown:
            raise ConfigError(f"{params_node.path}: unknown task sections {unknown}")
        for section in TASKS:
            if not params_node.has(section):
                continue
            section_node = params_node.child(section)
            _parse_task_params(section, section_node, section_node.path)
        if params_node.has(task):
            active_node = _Node(params_node.mapping[task], f"{params_node.path}.{task}")
    task_params = _parse_task_params(task, active_node, f"config.task_params.{task}")

    root.finish()
    return RunConfig(
        task=task,
        pumps=pumps,
        waveguide=waveguide,
        grid=grid,
        quadrature=quadrature,
        mismatch=mismatch,
        threshold=threshold,
        task_params=task_params,
        output_dir=output_dir,
        applied_defaults=tuple(defaults),
    )


def parse_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    """Load, apply ``--set`` overrides, and validate a config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not text.strip():
        raise ConfigError(
            f"{path}: empty config; required sections: task, pumps, waveguide, grid"
        )
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    for item in overrides or []:
        raw = apply_override(raw, item)
    return parse_config_mapping(raw, base_dir=path.parent)


def apply_override(raw: Any, assignment: str) -> Any:
    """Apply one ``dotted.path=json-value`` override to the raw JSON tree."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    dotted, text = assignment.split("=", 1)
    keys = [k for k in dotted.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"--set expects a dotted key path, got {assignment!r}")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    for key in keys[:-1]:
        if not isinstance(node, dict):
            raise ConfigError(f"--set {dotted}: {key!r} is not an object")
        node = node.setdefault(key, {})
    if not isinstance(node, dict):
        raise ConfigError(f"--set {dotted}: parent of {keys[-1]!r} is not an object")
    node[keys[-1]] = value
    return raw


def _serialize_sellmeier(coeffs: SellmeierCoefficients) -> dict:
    return {
        "b": list(coeffs.b),
        "c_um": list(coeffs.c_um),
        "valid_um_min": coeffs.valid_um[0],
        "valid_um_max": coeffs.valid_um[1],
        "label": coeffs.label,
    }


def serialize_config(config: RunConfig) -> dict:
    """Emit the complete effective configuration in canonical SI units.

    Parsing the result reproduces the same RunConfig (modulo the record of
    applied defaults, which is empty because everything is explicit).
    """
    pumps = config.pumps
    wg = config.waveguide
    grid = config.grid

    dispersion: dict[str, Any] = {"kind": wg.dispersion.kind, "label": wg.dispersion.label}
    if wg.dispersion.kind == "sellmeier-effective":
        any_band = wg.dispersion.bands[1]
        dispersion["coefficients"] = _serialize_sellmeier(any_band.sellmeier)
        dispersion["windows"] = {
            f"band{b}": {
                "min": _jq(wg.dispersion.bands[b].window[0], "rad/s"),
                "max": _jq(wg.dispersion.bands[b].window[1], "rad/s"),
            }
            for b in BANDS
        }
    else:
        dispersion["bands"] = {
            f"band{b}": {
                "reference": {"frequency": _jq(wg.dispersion.bands[b].omega_ref, "rad/s")},
                "taylor": [
                    {"value": coeff, "unit": _taylor_unit(order)}
                    for order, coeff in enumerate(wg.dispersion.bands[b].taylor)
                ],
                "window": {
                    "min": _jq(wg.dispersion.bands[b].window[0], "rad/s"),
                    "max": _jq(wg.dispersion.bands[b].window[1], "rad/s"),
                },
            }
            for b in BANDS
        }

    task_params: dict[str, Any] | None
    tp = config.task_params
    if isinstance(tp, KernelTask):
        task_params = {"dump": tp.dump}
    elif isinstance(tp, DecomposeTask):
        task_params = {"export_modes": tp.export_modes}
    elif isinstance(tp, PrepareTask):
        task_params = {
            "input_band": tp.input_band,
            "input_center": "mode-centroid" if tp.input_center is None else {"frequency": _jq(tp.input_center, "rad/s")},
            "input_bandwidth": "optimal" if tp.input_bandwidth is None else _jq(tp.input_bandwidth, "rad/s"),
        }
    elif isinstance(tp, GateSolveTask):
        dim_unit = "W" if tp.free_parameter in ("P1", "P2") else "m"
        task_params = {
            "target": {"kind": tp.kind, "n": tp.n},
            "free_parameter": tp.free_parameter,
            "bracket": {"min": _jq(tp.bracket[0], dim_unit), "max": _jq(tp.bracket[1], dim_unit)},
            "tolerance": _jq(tp.tolerance, "rad"),
        }
    elif isinstance(tp, SweepTask):
        dim_unit = {"L": "m", "P1": "W", "P2": "W", "sigma_in": "rad/s"}[tp.swept]
        task_params = {
            "swept": tp.swept,
            "values": [_jq(v, dim_unit) for v in tp.values],
            "outputs": list(tp.outputs),
            "optimize_sigma": tp.optimize_sigma,
            "sigma_rel_tol": tp.sigma_rel_tol,
            "input_band": tp.input_band,
            "input_center": "mode-centroid" if tp.input_center is None else {"frequency": _jq(tp.input_center, "rad/s")},
            "gate": {"kind": tp.gate_kind, "n": tp.gate_n},
            "kappa_count": tp.kappa_count,
        }
        if tp.sigma_bounds is not None:
            task_params["sigma_bounds"] = {
                "min": _jq(tp.sigma_bounds[0], "rad/s"),
                "max": _jq(tp.sigma_bounds[1], "rad/s"),
            }
        if tp.fixed_sigma_in is not None:
            task_params["fixed_sigma_in"] = _jq(tp.fixed_sigma_in, "rad/s")
    else:
        task_params = None

    result: dict[str, Any] = {
        "task": config.task,
        "pumps": {
            "pump1": {
                "frequency": _jq(pumps.center1, "rad/s"),
                "bandwidth": _jq(pumps.sigma1, "rad/s"),
                "average_power": _jq(pumps.power1, "W"),
                "repetition_rate": _jq(pumps.rep_rate1, "Hz"),
            },
            "pump2": {
                "frequency": _jq(pumps.center2, "rad/s"),
                "bandwidth": _jq(pumps.sigma2, "rad/s"),
                "average_power": _jq(pumps.power2, "W"),
                "repetition_rate": _jq(pumps.rep_rate2, "Hz"),
            },
            "relative_phase": _jq(pumps.rel_phase, "rad"),
        },
        "waveguide": {
            "length": _jq(wg.length, "m"),
            "gamma": _jq(wg.gamma, "1/(W m)"),
            "geometry_label": wg.geometry_label,
            "dispersion": dispersion,
        },
        "grid": {
            "mode": "explicit",
            "band3": {"min": _jq(grid.min3, "rad/s"), "max": _jq(grid.max3, "rad/s"), "points": grid.n3},
            "band4": {"min": _jq(grid.min4, "rad/s"), "max": _jq(grid.max4, "rad/s"), "points": grid.n4},
        },
        "quadrature": {"nodes": config.quadrature.nodes, "span_sigmas": config.quadrature.span_sigmas},
        "phase_mismatch_convention": config.mismatch.sign_convention,
        "schmidt_threshold": config.threshold,
    }
    if task_params is not None:
        result["task_params"] = {config.task: task_params}
    if config.output_dir is not None:
        result["output_dir"] = config.output_dir
    return result
