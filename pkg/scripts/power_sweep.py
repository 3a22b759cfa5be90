#!/usr/bin/env python3
"""Pauli-gate deviation vs pump-1 average power.

Solves the X-gate condition for the first two odd multiples of pi/2 to find
the interesting power range, then sweeps the power across it recording the
gate deviation and the fundamental rotation angle. The deviation minima sit
at the solved powers (marked in solves.json).
"""

import argparse
import json
from importlib import resources
from pathlib import Path

import numpy as np

from tmfc.config import parse_config
from tmfc.gates import GateTarget, solve_gate
from tmfc.runner import run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/power_sweep")
    parser.add_argument("--points", type=int, default=512, help="grid points per band")
    parser.add_argument("--samples", type=int, default=61)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    ref = resources.files("tmfc.data").joinpath("paper-s4.config")
    with resources.as_file(ref) as path:
        base = parse_config(path, overrides=[f"grid.points={args.points}"])
        context = base.context()
        p_ref = context.pumps.power1
        solves = [
            solve_gate(GateTarget("X", n), "P1", (p_ref * 1e-3, p_ref * 1e5), 1e-9, context)
            for n in (0, 1)
        ]
        p_lo, p_hi = 0.2 * solves[0].value, 1.4 * solves[1].value
        values = ",".join(
            f'{{"value": {float(v)!r}, "unit": "W"}}'
            for v in np.linspace(p_lo, p_hi, args.samples)
        )
        config = parse_config(
            path,
            overrides=[
                'task="sweep"',
                f"grid.points={args.points}",
                'task_params.sweep.swept="P1"',
                f"task_params.sweep.values=[{values}]",
                'task_params.sweep.outputs=["deviation", "theta0"]',
                "task_params.sweep.optimize_sigma=false",
            ],
        )
    out_dir = Path(args.out)
    status = run(config, out_dir=out_dir, threads=args.threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "solves.json").write_text(
        json.dumps([s.to_jsonable() for s in solves], indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return status


if __name__ == "__main__":
    raise SystemExit(main())
