"""Command-line surface: reproducible runs with machine-readable output.

Exit codes: 0 success, 1 module/domain error, 2 usage error.  JSON is the
default format; ``--format csv`` emits the run's grid table instead.  Every
artifact embeds the tool version and the full configuration, and reruns with
identical configuration (and seed) are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

# honor the fan-out cap before numpy spins up its thread pool
_threads = os.environ.get("DRUDE_BOUND_THREADS")
if _threads:
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, _threads)

import numpy as np

from . import __version__
from .charges import (
    NotTelescoping,
    XxzParams,
    generate_charges,
    hamiltonian_density,
    boundary_commutator,
)
from .drude import (
    boost_components,
    dz_closed_form,
    dz_numeric,
    mazur_bound_components,
    mazur_bound_zcharge,
    zcharge_component,
)
from .ed import (
    NotConserved,
    SizeTooLarge,
    autocorr_series,
    diagonalize,
    hamiltonian_matrix,
    kubo_mori_compare,
    magnetization_matrix,
    suzuki_finite_check,
)
from .pauli import MisalignedDensity, ParseError, SupportOutOfRange, operator_to_json
from .zcharge import (
    DegenerateFit,
    InvalidResonance,
    ResonantAnisotropy,
    boundary_residual,
    charge_densities,
    norm_decay_fit,
)

MODULE_ERRORS = (
    NotTelescoping,
    InvalidResonance,
    DegenerateFit,
    SizeTooLarge,
    NotConserved,
    SupportOutOfRange,
    MisalignedDensity,
    ParseError,
    ValueError,
)


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, payload: dict, table: tuple = None) -> int:
    """Write JSON (default) or the run's CSV grid table, deterministically."""
    if args.format == "csv":
        if table is None:
            print("error: this subcommand has no grid table for csv output",
                  file=sys.stderr)
            return 2
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header, *rows = table
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, float) else v for v in row]
            )
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _payload(args, **body) -> dict:
    return {"version": __version__, "config": _config_dict(args), **body}


# -- subcommands -------------------------------------------------------------------

def cmd_charges(args) -> int:
    params = XxzParams(args.delta, args.chi)
    seq = generate_charges(params, args.kmax)
    entries = []
    for entry in seq.entries:
        n = 2 * entry.k + 3
        comm = boundary_commutator(entry.q, n, hamiltonian_density(params))
        localized = all(
            p.offset >= n - entry.k or p.offset + p.length - 1 <= entry.k + 1
            for p in comm.terms
        )
        entries.append(
            {
                "k": entry.k,
                "delta": args.delta,
                "q": operator_to_json(entry.q.density),
                "p": operator_to_json(entry.p.density) if entry.p is not None else None,
                "boundary_localized": localized,
            }
        )
    return _emit(args, _payload(args, charges=entries))


def cmd_zcharge(args) -> int:
    res = ResonantAnisotropy(args.l, args.m)
    zcd = charge_densities(res, args.dmax)
    densities = [
        {"d": d, "op": operator_to_json(op), "hs_norm": op.norm_hs()}
        for d, op in sorted(zcd.by_order.items())
    ]
    xi_fit = None
    if args.dmax >= 6:
        try:
            _, xi_fit = norm_decay_fit(res, args.dmax)
        except DegenerateFit:
            xi_fit = None
    residual, residual_norm = boundary_residual(res, min(args.dmax, args.n), args.n)
    payload = _payload(
        args,
        l=args.l,
        m=args.m,
        densities=densities,
        xi_fit=xi_fit,
        boundary_residual={
            "n": args.n,
            "coefficient_sum": residual_norm,
            "hs_norm": residual.norm_hs(),
        },
    )
    table = [("d", "hs_norm")] + [(row["d"], row["hs_norm"]) for row in densities]
    return _emit(args, payload, tuple(table))


def cmd_drude(args) -> int:
    res = ResonantAnisotropy(args.l, args.m)
    closed = dz_closed_form(res)
    numeric = dz_numeric(res)
    payload = _payload(
        args, l=args.l, m=args.m, dz_closed=closed, dz_numeric=numeric,
        bound_target=4 * closed,
    )
    table = (("l", "m", "dz_closed", "dz_numeric"), (args.l, args.m, closed, numeric))
    return _emit(args, payload, table)


def cmd_mazur(args) -> int:
    res = ResonantAnisotropy(args.l, args.m)
    rep = mazur_bound_zcharge(res, args.dmax)
    payload = _payload(
        args,
        l=args.l,
        m=args.m,
        d_max=rep.d_max,
        w=rep.w,
        u=rep.u,
        bound=rep.bound,
        dz_closed=dz_closed_form(res),
        dz_numeric=dz_numeric(res),
        convergence=[[d, b] for d, b in rep.convergence],
    )
    if args.kmax is not None:
        charges = generate_charges(XxzParams(res.delta, args.chi), args.kmax)
        comps = boost_components(charges) + [zcharge_component(res, args.dmax)]
        multi = mazur_bound_components(comps)
        payload["multi"] = {
            "labels": list(multi.labels),
            "wk": [float(v) for v in multi.wk],
            "bound": multi.bound,
            "conditioning": multi.conditioning,
            "defects": [float(v) for v in multi.defects],
        }
    table = [("d", "bound")] + [(d, b) for d, b in rep.convergence]
    return _emit(args, payload, tuple(table))


def cmd_ed(args) -> int:
    params = XxzParams(args.delta, args.chi)
    spec = diagonalize(args.n, params)
    times = [round(t * 0.5, 6) for t in range(int(args.tmax / 0.5) + 1)]
    series = autocorr_series(spec, args.beta, times)
    lhs, rhs = suzuki_finite_check(
        spec,
        [magnetization_matrix(args.n), hamiltonian_matrix(args.n, params)],
        args.beta,
    )
    kubo = None
    if args.beta > 0:
        km = kubo_mori_compare(spec, args.beta, args.tmax)
        kubo = {"thermal_dt": km.thermal_dt, "canonical_dt": km.canonical_dt,
                "gap": km.gap}
    payload = _payload(
        args,
        n=args.n,
        beta=args.beta,
        ground_energy=float(spec.energies[0]),
        max_energy=float(spec.energies[-1]),
        cbar_n=series.cbar_n,
        autocorr=[[t, c] for t, c in zip(series.times.tolist(),
                                         series.cn_values.tolist())],
        suzuki={"lhs": lhs, "rhs": rhs},
        kubo_mori=kubo,
    )
    table = [("t", "cn")] + list(zip(series.times.tolist(), series.cn_values.tolist()))
    return _emit(args, payload, tuple(table))


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drudebound",
        description="Conserved charges of the XXZ chain and Mazur bounds "
        "on the spin Drude weight.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0,
                       help="echoed into the config for reproducibility")

    p = sub.add_parser("charges", help="boost-generated local charge tower")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--chi", type=float, default=0.0)
    p.add_argument("--kmax", type=int, default=4)
    common(p)
    p.set_defaults(func=cmd_charges)

    p = sub.add_parser("zcharge", help="quasi-local MPO charge densities")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--dmax", type=int, default=8)
    p.add_argument("--n", type=int, default=12,
                   help="chain length for the boundary-residual report")
    common(p)
    p.set_defaults(func=cmd_zcharge)

    p = sub.add_parser("drude", help="closed-form vs numeric stiffness")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_drude)

    p = sub.add_parser("mazur", help="Mazur lower bound from the Z charge")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--dmax", type=int, default=30)
    p.add_argument("--kmax", type=int, default=None,
                   help="also report the multi-charge bound with the boost tower")
    p.add_argument("--chi", type=float, default=0.0)
    common(p)
    p.set_defaults(func=cmd_mazur)

    p = sub.add_parser("ed", help="exact-diagonalization reference run")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--chi", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=20.0)
    common(p)
    p.set_defaults(func=cmd_ed)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "charges" and args.kmax < 2:
        parser.error("--kmax must be at least 2")
    try:
        return args.func(args)
    except MODULE_ERRORS as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
