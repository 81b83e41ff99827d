"""Encode a small assignment problem both ways and compare the QUBOs.

    python demos/encoding_tour.py
"""

import itertools

from domainwall import (
    DOMAIN_WALL,
    ONE_HOT,
    brute_force_qubo,
    convert_one_hot_to_domain_wall,
    decode,
    encode,
    unweighted_assignment,
)


def main():
    d = unweighted_assignment(3)
    for scheme in (ONE_HOT, DOMAIN_WALL):
        q, emap = encode(d, scheme)
        emin, mins = brute_force_qubo(q)
        print(f"{scheme:12s} bits={q.num_bits:2d} couplers={len(q.quadratic):3d} "
              f"ground energy={emin:+.1f} ground states={len(mins)}")
        for b in mins[:2]:
            print(f"    {''.join(map(str, b))} -> {decode(b, emap, d).values}")

    # energies of all 2^6 domain-wall states: valid permutations at the bottom,
    # then collisions and broken chains further up
    q, emap = encode(d, DOMAIN_WALL)
    levels = {}
    for b in itertools.product((0, 1), repeat=q.num_bits):
        e = round(float(q.energies([b])[0]), 9)
        levels[e] = levels.get(e, 0) + 1
    print("domain-wall spectrum (energy: count):", dict(sorted(levels.items())))

    oh, _ = encode(d, ONE_HOT)
    dw, _ = convert_one_hot_to_domain_wall(oh)
    print(f"one-hot QUBO with {oh.num_bits} bits converted to {dw.num_bits}-bit domain-wall QUBO")


if __name__ == "__main__":
    main()
