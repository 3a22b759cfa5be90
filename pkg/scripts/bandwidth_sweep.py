#!/usr/bin/env python3
"""Fidelity vs Gaussian input bandwidth for several interaction lengths.

For each length, sweeps the input bandwidth log-uniformly across the
default search bounds at fixed length and writes one sweep_L<mm>.csv per
length under --out.
"""

import argparse
from importlib import resources
from pathlib import Path

import numpy as np

from tmfc.config import parse_config
from tmfc.runner import run
from tmfc.sweep import default_sigma_bounds


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/bandwidth_sweep")
    parser.add_argument("--points", type=int, default=512, help="grid points per band")
    parser.add_argument("--samples", type=int, default=33, help="bandwidth samples per length")
    parser.add_argument("--lengths-mm", type=float, nargs="+", default=[5.0, 10.0, 20.0, 50.0])
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    ref = resources.files("tmfc.data").joinpath("paper-s4.config")
    status = 0
    for length_mm in args.lengths_mm:
        with resources.as_file(ref) as path:
            base = parse_config(path, overrides=[f"grid.points={args.points}"])
            lo, hi = default_sigma_bounds(base.context())
            values = ",".join(
                f'{{"value": {float(v)!r}, "unit": "rad/s"}}'
                for v in np.geomspace(lo, hi, args.samples)
            )
            config = parse_config(
                path,
                overrides=[
                    'task="sweep"',
                    f"grid.points={args.points}",
                    f"waveguide.length.value={length_mm}",
                    'waveguide.length.unit="mm"',
                    'task_params.sweep.swept="sigma_in"',
                    f"task_params.sweep.values=[{values}]",
                    'task_params.sweep.outputs=["fidelity"]',
                    "task_params.sweep.optimize_sigma=false",
                ],
            )
        out_dir = Path(args.out) / f"L{length_mm:g}mm"
        status |= run(config, out_dir=out_dir, threads=args.threads)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
