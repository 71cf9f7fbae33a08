#!/usr/bin/env python3
"""Finite-chain reference run: time-averaged current autocorrelation next to
the infinite-volume bound, plus a light-cone/clustering fit.

The c-bar column is exactly zero on every finite open chain (the current is
the commutator i[H, P] with the polarization P), which is why the bound is a
statement about the infinite-volume double limit; the table records both.
"""
import argparse

from drudebound.charges import XxzParams
from drudebound.ed import bound_vs_ed_sweep, light_cone_scan
from drudebound.pauli import LocalOperator
from drudebound.zcharge import ResonantAnisotropy


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=1)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--dmax", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10])
    ap.add_argument("--cone-n", type=int, default=10)
    ap.add_argument("--beta", type=float, default=1.0)
    args = ap.parse_args()

    res = ResonantAnisotropy(args.l, args.m)
    print(f"# (l,m)=({args.l},{args.m}) delta={res.delta:.6f}")
    print(f"# {'n':>3} {'cbar_n':>12} {'bound':>18}")
    for n, cbar, bound in bound_vs_ed_sweep(res, args.sizes, args.dmax):
        print(f"  {n:>3} {cbar:>12.3e} {bound:>18.12f}")

    z1 = LocalOperator.build([(1.0, "z", 1)])
    xs = list(range(2, args.cone_n - 1, 2))
    fit = light_cone_scan(
        args.cone_n, XxzParams(res.delta), z1, z1,
        t_grid=[0.0, 0.4, 0.8, 1.2], x_grid=xs, beta=args.beta,
    )
    print(f"# light cone at n={args.cone_n}, beta={args.beta}:")
    print(f"#   velocity v={fit.fitted_v:.3f}  decay mu={fit.fitted_mu:.3f}")
    print(f"#   clustering kappa={fit.fitted_kappa:.3e} rho={fit.fitted_rho:.3f}")
    print("#   x t norm")
    for x, t, nrm in fit.commutator_norms:
        print(f"    {x} {t} {nrm!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
