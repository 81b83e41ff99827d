"""How sparse must an interaction graph be for auxiliary bits to beat domain walls?

    python demos/critical_degree.py
"""

import math

from domainwall import min_connected_degree, scan_critical_degree


def main():
    rows = scan_critical_degree(1000)
    print(" m    best n_var  d_crit")
    for m, n, dc in rows:
        if m in (4, 5, 8, 16, 17, 64, 100, 256, 512, 1000):
            print(f"{m:4d}  {n:9d}  {float(dc):.6f}  ({dc})")
    best = max(rows, key=lambda r: r[2])
    print(f"largest d_crit up to m=1000: {float(best[2]):.6f} at m={best[0]}; sqrt(2)={math.sqrt(2):.6f}")
    # any connected graph on four or more nodes has average degree at least 3/2
    print(f"minimum average degree of a connected 4-node graph: {min_connected_degree(4)}")


if __name__ == "__main__":
    main()
