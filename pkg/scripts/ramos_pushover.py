"""Quarter-span pushover of the laboratory arch.

Reports peak load, residual plateau and the hinge activation sequence, and
optionally repeats the analysis with twice the fibers per interface to show
convergence of the midpoint fiber integration.
"""

import argparse
import copy
import time

from _common import fixture_data

from archdmem.exports import write_capacity_curve
from archdmem.model_io import model_from_dict
from archdmem.solver import hinge_timeline, peak_load, residual_plateau, run_static


def analyse(data: dict):
    model = model_from_dict(data)
    start = time.perf_counter()
    res = run_static(model.mesh, model.protocol, model.options)
    elapsed = time.perf_counter() - start
    peak, u_peak = peak_load(res.curve)
    residual = residual_plateau(res.curve, model.analysis.get("residual_window", 0.5))
    return model, res, peak, u_peak, residual, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fiber-check", action="store_true", help="Repeat with twice the fibers per interface.")
    parser.add_argument("--curve", help="Write the capacity curve to this CSV file.")
    args = parser.parse_args()

    data = fixture_data("ramos_arch")
    model, res, peak, u_peak, residual, elapsed = analyse(data)
    ref = model.reference
    print(f"termination: {res.termination} ({elapsed:.1f} s, {len(res.curve.load)} steps)")
    print(f"peak load     {peak:.4f} kN at {u_peak:.3f} mm (reference {ref['peak_load']}, {100 * (peak / ref['peak_load'] - 1):+.1f}%)")
    print(f"residual load {residual:.4f} kN (reference {ref['residual_load']}, {100 * (residual / ref['residual_load'] - 1):+.1f}%)")
    print("hinge activation:")
    for interface, step, u, kind, side in hinge_timeline(res.structure, res.snapshots):
        print(f"  interface {interface:>3}  step {step:>4}  {u:6.3f} mm  {kind:<9} {side}")
    if args.curve:
        print("capacity curve:", write_capacity_curve(args.curve, res.curve))

    if args.fiber_check:
        fine = copy.deepcopy(data)
        fine["geometry"]["n_f"] *= 2
        _, _, peak2, _, residual2, elapsed2 = analyse(fine)
        n_f = fine["geometry"]["n_f"]
        print(f"n_f = {n_f}: peak {peak2:.4f} kN ({100 * (peak2 / peak - 1):+.2f}%), residual {residual2:.4f} kN ({100 * (residual2 / residual - 1):+.2f}%), {elapsed2:.1f} s")


if __name__ == "__main__":
    main()
