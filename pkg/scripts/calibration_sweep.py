"""Tabulate the truncation threshold across growth constants and dimensions.

For each C* the threshold is the smallest rho >= 1 with
C* (1 + log rho)^(4+2N) <= rho / 2, found by geometric scan plus bisection.
"""

import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from nlpf.diagnostics import calibrate_rho, moser_exponent


def main():
    print(f"{'dim':>4} {'C*':>6} {'rho_star':>14} {'margin at rho*':>15} "
          f"{'evals':>6}")
    for dim in (1, 2):
        p = moser_exponent(dim)
        for c_star in (0.5, 1.0, 2.0, 4.0):
            res = calibrate_rho(c_star, dim)
            lhs = c_star * (1.0 + math.log(res.rho_star)) ** p
            margin = res.rho_star / 2.0 - lhs
            print(f"{dim:>4} {c_star:>6.2f} {res.rho_star:>14.6e} "
                  f"{margin:>15.4e} {res.evaluations:>6}")


if __name__ == "__main__":
    main()
