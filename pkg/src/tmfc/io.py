"""Artifact writers and readers: CSV tables, kernel dumps, state dumps.

CSV numbers carry 17 significant digits so files round-trip doubles exactly
and can serve as golden files. The kernel dump is raw little-endian
complex128, row-major with the band-3 index outermost, described by a JSON
sidecar.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .conversion import ConversionKernel, FrequencyGrid
from .errors import ConfigError
from .states import TwoBandState


def format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(cell) if not isinstance(cell, str) else cell for cell in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_state_csv(path: Path, state: TwoBandState, band: int) -> None:
    omega = state.grid.omega(band)
    amp = state.amp3 if band == 3 else state.amp4
    write_csv(
        path,
        ["omega_rad_s", "re", "im"],
        ((omega[i], amp[i].real, amp[i].imag) for i in range(len(omega))),
    )


def write_mode_csv(path: Path, grid: FrequencyGrid, band: int, mode: np.ndarray) -> None:
    omega = grid.omega(band)
    write_csv(
        path,
        ["omega_rad_s", "re", "im"],
        ((omega[i], mode[i].real, mode[i].imag) for i in range(len(omega))),
    )


def _grid_jsonable(grid: FrequencyGrid) -> dict:
    return {
        "band3": {"min": grid.min3, "max": grid.max3, "points": grid.n3},
        "band4": {"min": grid.min4, "max": grid.max4, "points": grid.n4},
        "unit": "rad/s",
    }


def save_kernel(directory: Path, kernel: ConversionKernel, extra_meta: dict | None = None) -> tuple[Path, Path]:
    """Write kernel.bin plus kernel.json; returns both paths."""
    directory.mkdir(parents=True, exist_ok=True)
    bin_path = directory / "kernel.bin"
    meta_path = directory / "kernel.json"
    data = np.ascontiguousarray(kernel.values, dtype="<c16")
    data.tofile(bin_path)
    meta = {
        "layout": "row-major, band-3 index outermost, little-endian complex128",
        "shape": [kernel.grid.n3, kernel.grid.n4],
        "grid": _grid_jsonable(kernel.grid),
        "norm_const": kernel.norm_const,
        "coupling": {"re": kernel.coupling.real, "im": kernel.coupling.imag},
    }
    if extra_meta:
        meta.update(extra_meta)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return bin_path, meta_path


def load_kernel(directory: Path) -> ConversionKernel:
    meta_path = Path(directory) / "kernel.json"
    bin_path = Path(directory) / "kernel.bin"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read kernel metadata {meta_path}: {exc}") from exc
    shape = tuple(meta["shape"])
    values = np.fromfile(bin_path, dtype="<c16")
    if values.size != shape[0] * shape[1]:
        raise ConfigError(
            f"{bin_path}: expected {shape[0] * shape[1]} complex values, found {values.size}"
        )
    g = meta["grid"]
    grid = FrequencyGrid(
        min3=g["band3"]["min"], max3=g["band3"]["max"], n3=g["band3"]["points"],
        min4=g["band4"]["min"], max4=g["band4"]["max"], n4=g["band4"]["points"],
    )
    coupling = complex(meta["coupling"]["re"], meta["coupling"]["im"])
    return ConversionKernel(
        grid=grid,
        values=values.reshape(shape).astype(complex),
        coupling=coupling,
        norm_const=float(meta["norm_const"]),
    )


def append_json_report(path: Path, entry: dict) -> None:
    """Append one entry to a JSON list file, creating it when absent."""
    if path.exists():
        try:
            existing = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: existing report is not valid JSON: {exc}") from exc
        if not isinstance(existing, list):
            raise ConfigError(f"{path}: existing report is not a JSON list")
    else:
        existing = []
    existing.append(entry)
    path.write_text(json.dumps(existing, indent=2, sort_keys=True) + "\n", encoding="utf-8")
