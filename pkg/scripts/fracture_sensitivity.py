"""Sensitivity of the bridge ultimate load to tensile strength and fracture energy."""

import argparse
import math

from _common import fixture_data, sweep_loads

from archdmem.model_io import set_parameter


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--positions", type=float, nargs="+", default=[0.5, 0.25])
    parser.add_argument("--f-t", type=float, default=0.02, help="Tensile strength (MPa) for the fracture-energy sweep.")
    parser.add_argument("--criterion", type=float, default=25.0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    energies = (0.01, 0.05, 0.1, math.inf)
    strengths = (0.0, 0.01, 0.02, 0.04)
    for x in args.positions:
        base = set_parameter(fixture_data("drosopoulos_bridge", target_displacement=args.criterion), "x_over_span", x)
        by_energy, _ = sweep_loads("G_t", energies, args.criterion, set_parameter(base, "f_t", args.f_t), args.workers)
        by_strength, _ = sweep_loads("f_t", strengths, args.criterion, set_parameter(base, "G_t", math.inf), args.workers)
        print(f"x/L = {x}")
        print("  f_t = %.3g MPa:  " % args.f_t + "  ".join(f"G_t {g:g}: {F:.2f}" for g, F in zip(energies, by_energy)))
        print("  G_t = inf:       " + "  ".join(f"f_t {f:g}: {F:.2f}" for f, F in zip(strengths, by_strength)))


if __name__ == "__main__":
    main()
