"""Ultimate load of the stone bridge against the friction coefficient.

For each load position the sweep gives the flexural plateau, the critical
coefficient below which sliding governs, and the linearity (R^2) of the
sub-critical branch.
"""

import argparse

import numpy as np
from _common import fixture_data, sweep_loads

from archdmem.model_io import set_parameter
from archdmem.studies import FrictionStudy, r_squared


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--positions", type=float, nargs="+", default=[0.5, 0.25])
    parser.add_argument("--range", nargs=3, type=float, default=[0.10, 0.60, 0.02], metavar=("START", "STOP", "STEP"))
    parser.add_argument("--criterion", type=float, default=10.0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    lo, hi, step = args.range
    mu = tuple(np.round(np.arange(lo, hi + 0.5 * step, step), 10))
    for x in args.positions:
        base = set_parameter(fixture_data("drosopoulos_bridge", target_displacement=args.criterion, criterion=args.criterion), "x_over_span", x)
        loads, rows = sweep_loads("mu", mu, args.criterion, base, args.workers)
        study = FrictionStudy(mu, loads, [r.sliding for r in rows])
        print(f"x/L = {x}")
        for m, F, row in zip(mu, loads, rows):
            print(f"  mu {m:.2f}  F_u {F:8.2f} kN  sliding {str(row.sliding):<5} {row.status if row.status != 'ok' else ''} {row.message}")
        sub_mu, sub_load = study.subcritical()
        print(f"  plateau {study.plateau:.2f} kN, mu_c {study.critical_mu():.2f}, sub-critical R^2 {r_squared(sub_mu, sub_load):.4f}\n")


if __name__ == "__main__":
    main()
