"""Ultimate loads of the stone bridge for four load positions and two friction coefficients."""

import argparse
import time

from _common import fixture_data, sweep_loads

from archdmem.model_io import set_parameter

REFERENCE = {0.3: (98.42, 56.90, 59.82, 69.47), 0.6: (219.99, 83.46, 82.58, 150.52)}
POSITIONS = (0.1, 0.25, 0.4, 0.5)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--criterion", type=float, default=25.0, help="Displacement (mm) at which the load is read.")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    start = time.perf_counter()
    print(f"{'mu':>4} {'x/L':>5} {'F_u [kN]':>9} {'ref':>8} {'error %':>8} {'hinges':>6} {'sliding':>7}")
    for mu, ref in REFERENCE.items():
        base = set_parameter(fixture_data("drosopoulos_bridge", target_displacement=args.criterion), "mu", mu)
        loads, rows = sweep_loads("x", POSITIONS, args.criterion, base, args.workers)
        for x, F, r, row in zip(POSITIONS, loads, ref, rows):
            print(f"{mu:>4} {x:>5} {F:>9.2f} {r:>8.2f} {100 * (F / r - 1):>8.2f} {row.hinge_count:>6} {str(row.sliding):>7}")
    print(f"total {time.perf_counter() - start:.0f} s")


if __name__ == "__main__":
    main()
