"""Energy drift under time-step refinement on the insulated default case.

The budget closes up to the Taylor remainder of the latent-heat terms, so
the relative drift should fall by half with each halving of dt.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from nlpf.diagnostics import energy_budget
from nlpf.stepper import run

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))
from conftest import two_phase_components  # noqa: E402


def main():
    dts = [4e-3, 2e-3, 1e-3, 5e-4]
    drifts = []
    print(f"{'dt':>10} {'rel drift':>12} {'ratio':>8}")
    for dt in dts:
        comp = two_phase_components(horizon=1.0, dt=dt)
        traj = run(comp)
        rep = energy_budget(traj, comp.grid, comp.model, comp.potential,
                            comp.coupling, comp.boundary, comp.config)
        drifts.append(rep.relative_drift)
        ratio = drifts[-1] / drifts[-2] if len(drifts) > 1 else float("nan")
        print(f"{dt:>10.1e} {drifts[-1]:>12.3e} {ratio:>8.4f}")

    orders = np.log2(np.array(drifts[:-1]) / np.array(drifts[1:]))
    print(f"\nobserved orders: {np.round(orders, 3)}")


if __name__ == "__main__":
    main()
