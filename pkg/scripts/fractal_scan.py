#!/usr/bin/env python3
"""Scan the quasi-local stiffness over all resonant anisotropies with m <= M.

D_Z(Delta) = (1 - Delta^2)/2 * m/(m-1) depends on the denominator of the
resonance, not on Delta alone: neighboring Delta values with different m
give jumps -- a nowhere-continuous profile.  Emits a CSV sorted by Delta with
the closed form next to the transfer-matrix slope extraction.
"""
import argparse
import csv
import math
import sys

from drudebound.drude import dz_closed_form, dz_numeric
from drudebound.zcharge import ResonantAnisotropy


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-m", type=int, default=12)
    ap.add_argument("--numeric", action="store_true",
                    help="also run the power-iteration extraction (slower)")
    args = ap.parse_args()

    rows = []
    for m in range(2, args.max_m + 1):
        for l in range(1, m):
            if math.gcd(l, m) != 1:
                continue
            res = ResonantAnisotropy(l, m)
            row = [l, m, res.delta, dz_closed_form(res)]
            if args.numeric:
                row.append(dz_numeric(res))
            rows.append(row)
    rows.sort(key=lambda r: r[2])

    writer = csv.writer(sys.stdout, lineterminator="\n")
    header = ["l", "m", "delta", "dz_closed"] + (["dz_numeric"] if args.numeric else [])
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
