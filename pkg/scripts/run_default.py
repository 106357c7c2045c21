"""Run the default configuration and verify every default check.

Usage: python3 scripts/run_default.py [config_path]
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from nlpf.config import build_components, load_config
from nlpf.diagnostics import DEFAULT_CHECKS, run_checks
from nlpf.stepper import run


def main():
    root = pathlib.Path(__file__).resolve().parents[1]
    cfg_path = sys.argv[1] if len(sys.argv) > 1 else root / "configs/default.cfg"
    components, resolved = build_components(load_config(cfg_path))
    print(f"config: {cfg_path}")
    print(f"cells: {components.grid.cells}, dt = {components.config.dt}, "
          f"horizon = {components.config.horizon}, "
          f"rho = {components.config.rho:.6g}")

    traj = run(components)
    rec = traj.records
    drift = abs(rec["total_energy"][-1] - rec["total_energy"][0])
    scale = max(1.0, abs(rec["total_energy"][0]))
    print(f"steps: {rec.shape[0]}, rejected substeps: {traj.rejections}")
    print(f"energy drift: {drift / scale:.3e} (relative)")
    print(f"theta range: [{rec['min_theta'].min():.6f}, "
          f"{rec['max_theta'].max():.6f}]")
    print(f"entropy gain: "
          f"{rec['total_entropy'][-1] - rec['total_entropy'][0]:.6e}")
    print(f"worst selection margin: {rec['selection_margin'].min():.4f}")

    print()
    for outcome in run_checks(components, traj, DEFAULT_CHECKS):
        flag = "PASS" if outcome.passed else "FAIL"
        print(f"check {outcome.name}: {flag} ({outcome.detail})")


if __name__ == "__main__":
    main()
