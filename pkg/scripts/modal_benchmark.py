"""Natural frequencies of the laboratory arch and the effect of shear deformability.

Prints the first modes against the bundled reference frequencies, then the
percentage frequency increase when the element shear distortion is
constrained, for a set of thickness-to-radius ratios.
"""

import argparse
import time

from _common import fixture_data

from archdmem.cli import shear_study
from archdmem.model_io import load_model, fixture_path
from archdmem.solver import solve_modal


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-modes", type=int, default=4)
    parser.add_argument("--t-over-r", type=float, nargs="+", default=[0.10, 0.25])
    args = parser.parse_args()

    model = load_model(fixture_path("ramos_arch"))
    start = time.perf_counter()
    modes = solve_modal(model.mesh, args.n_modes, model.options)
    print(f"modal analysis: {time.perf_counter() - start:.3f} s")
    ref = model.reference.get("frequencies", [])
    print(f"{'mode':>4} {'f [Hz]':>10} {'ref [Hz]':>10} {'error %':>8}")
    for k, f in enumerate(modes.frequencies):
        if k < len(ref):
            print(f"{k + 1:>4} {f:>10.2f} {ref[k]:>10.2f} {100 * (f / ref[k] - 1):>8.2f}")
        else:
            print(f"{k + 1:>4} {f:>10.2f}")

    print(f"\n{'t/R':>6} {'mode':>4} {'finite G':>10} {'rigid':>10} {'increase %':>10}")
    for ratio, mode, f0, f1, pct in shear_study(fixture_data("ramos_arch"), args.t_over_r, min(args.n_modes, 2)):
        print(f"{ratio:>6.2f} {mode:>4} {f0:>10.2f} {f1:>10.2f} {pct:>10.2f}")


if __name__ == "__main__":
    main()
