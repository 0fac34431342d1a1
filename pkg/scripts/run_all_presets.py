#!/usr/bin/env python3
"""Run every built-in experiment preset and collect the results.

Writes one CSV + JSON-sidecar pair per preset into the output directory and
prints the headline fit of each experiment as it completes.  The convergence
presets dominate the runtime (several minutes each: their reference solutions
take up to ~10^6 steps on a 2048-point grid).

Usage:
    python scripts/run_paper_suite.py [--out DIR] [--only NAME ...]
"""

import argparse
import time
from pathlib import Path

from roughnls.experiments import run_experiment, write_results
from roughnls.presets import get_preset, preset_names


def headline(fits: dict) -> str:
    for key in ("fitted_exponent", "order", "affine_slope", "corr_sqrt_log"):
        if key in fits:
            return f"{key} = {fits[key]:.4g}"
    if "per_scheme" in fits:
        parts = []
        for name, entry in fits["per_scheme"].items():
            last = entry["errors"][-1]
            parts.append(f"{name}:{last:.2e}")
        return "final errors " + " ".join(parts)
    return ""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--only", nargs="*", help="subset of preset names")
    args = parser.parse_args()

    names = args.only if args.only else preset_names()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in names:
        spec = get_preset(name)
        t0 = time.perf_counter()
        record = run_experiment(spec)
        elapsed = time.perf_counter() - t0
        write_results(record, args.out / f"{name}.csv")
        print(f"{name:16s} {elapsed:7.1f}s  {headline(record.fits)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
