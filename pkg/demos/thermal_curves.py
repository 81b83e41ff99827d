"""Feasible fraction versus temperature for m=8, one-hot against domain-wall.

Temperatures are in the units of the kappa=1 QUBO.  The second table
divides each encoding's temperature by its own largest coefficient, which
is the unitless temperature the freeze-out fit works with.

    python demos/thermal_curves.py [num_samples]
"""

import sys

import numpy as np

from domainwall import DOMAIN_WALL, ONE_HOT, encode, feasible_fraction_curve, unweighted_assignment


def main(n=10**6):
    d = unweighted_assignment(8)
    temps = np.round(np.arange(0.2, 1.01, 0.1), 10)
    for label, per_scale in (("QUBO units", False), ("per max |coefficient|", True)):
        print(f"-- T in {label}")
        curves = {}
        for scheme in (ONE_HOT, DOMAIN_WALL):
            q, emap = encode(d, scheme)
            scale = q.energy_scale() if per_scale else 1.0
            stats = feasible_fraction_curve(q, emap, d, temps * scale, n, seed=0, threads=None, trace_points=1)
            curves[scheme] = [s.feasible_fraction for s in stats]
        print("   T    one-hot  domain-wall")
        for T, a, b in zip(temps, curves[ONE_HOT], curves[DOMAIN_WALL]):
            print(f"  {T:.1f}  {a:.5f}  {b:.5f}")


if __name__ == "__main__":
    main(int(float(sys.argv[1])) if len(sys.argv) > 1 else 10**6)
