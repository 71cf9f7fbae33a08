#!/usr/bin/env python3
"""Print the boost-generated charge tower q_1..q_kmax with widths, parities,
and conservation defects, in the bit-exact operator text format."""
import argparse

from drudebound.charges import (
    XxzParams,
    generate_charges,
    hamiltonian_density,
)
from drudebound.drude import conservation_defect
from drudebound.pauli import serialize_operator, spin_flip


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--chi", type=float, default=0.0)
    ap.add_argument("--kmax", type=int, default=5)
    ap.add_argument("--full", action="store_true", help="print every term")
    args = ap.parse_args()

    params = XxzParams(args.delta, args.chi)
    seq = generate_charges(params, args.kmax)
    h = hamiltonian_density(params)

    print(f"# boost tower at delta={args.delta} chi={args.chi}")
    print(f"# {'k':>2} {'width':>5} {'terms':>5} {'|q|_hs':>12} "
          f"{'spin-flip':>9} {'defect':>10}")
    for entry in seq.entries:
        q = entry.q.density
        parity = "odd" if spin_flip(q).isclose(-1 * q, tol=1e-12) else "even"
        defect = conservation_defect(entry.q, h)
        print(f"  {entry.k:>2} {entry.q.width:>5} {len(q):>5} "
              f"{q.norm_hs():>12.6f} {parity:>9} {defect:>10.2e}")
        if args.full:
            print(f"    q_{entry.k} = {serialize_operator(q)}")
            if entry.p is not None:
                print(f"    p_{entry.k} = {serialize_operator(entry.p.density)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
