"""Mazur-type lower bounds on the spin Drude weight at infinite temperature.

All expectations are normalized traces (the beta -> 0 limit); the reported
scalar is the limit of D_beta/beta.  For a single conserved charge Q with
per-site current overlap w and susceptibility u the bound is w^2/(2u); for a
set of charges it is (1/2) w^T U^+ w with U the overlap matrix of the set and
U^+ a tolerance-thresholded pseudo-inverse.

For the quasi-local Z charge at a resonant anisotropy the d-sums defining w
and u are evaluated exactly through the published rank-(m+1) transfer matrix
(entrywise square of the MPO), so d_max = 40 costs a few matrix-vector
products instead of ~3^40 strings.  D_Z itself is available both as the
closed form (1-Delta^2) m / (2(m-1)) and as the numeric slope limit
lim n / (4 <L|T^n|R>).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .charges import (
    ChargeSequence,
    bulk_derivative,
    hamiltonian_density,
    spin_current_density,
)
from .pauli import DensityOperator, LocalOperator, ti_inner
from .zcharge import (
    L_IDX,
    R_IDX,
    ResonantAnisotropy,
    build_mpo,
    density,
    density_norms_squared,
)

PINV_RCOND = 1e-10


@dataclass(frozen=True)
class TransferMatrix:
    t: np.ndarray
    resonance: ResonantAnisotropy


@dataclass(frozen=True)
class MazurReport:
    w: float
    u: float
    bound: float
    d_max: int
    convergence: Tuple[Tuple[int, float], ...]


@dataclass(frozen=True, eq=False)
class MultiChargeMazurReport:
    wk: np.ndarray
    ukl: np.ndarray
    bound: float
    conditioning: float
    labels: Tuple[str, ...]
    defects: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class ChargeComponent:
    """One charge of a Mazur set, given by its component densities.

    The translation-invariant charge is sum_d sum_x shift(densities[d], x);
    `u_exact`, when given, overrides the materialized self-overlap (used for
    the Z charge, whose full d-sum is done through the transfer matrix).
    `defect` records how far the charge is from exact bulk conservation
    (max translation-class residue of its bulk time derivative).
    """

    label: str
    densities: Tuple[LocalOperator, ...]
    u_exact: Optional[float] = None
    defect: float = 0.0


def build_transfer_matrix(res: ResonantAnisotropy) -> TransferMatrix:
    """Entrywise-squared MPO: T = A0^2 + (A+^2 + A-^2)/2 (exact, see tests)."""
    mpo = build_mpo(res)
    t = mpo.a0**2 + 0.5 * mpo.aplus**2 + 0.5 * mpo.aminus**2
    return TransferMatrix(t=t, resonance=res)


def dz_closed_form(res: ResonantAnisotropy) -> float:
    return 0.5 * (1.0 - res.delta**2) * res.m / (res.m - 1)


def dz_numeric(res: ResonantAnisotropy, n_max: int = 4000) -> float:
    """D_Z = (1/4) lim n / <L|T^n|R> from the tail slope of the iterates.

    <L|T^n|R> grows linearly with a transient that decays geometrically
    (subleading eigenvalue < 1), so a linear fit over the tail half removes
    the intercept error that a single-point n/<L|T^n|R> estimate keeps.
    """
    if n_max < 100:
        raise ValueError("need n_max >= 100")
    t = build_transfer_matrix(res).t
    v = np.zeros(t.shape[0])
    v[L_IDX] = 1.0
    growth = np.empty(n_max)
    for n in range(n_max):
        v = v @ t
        growth[n] = v[R_IDX]
    ns = np.arange(1, n_max + 1)
    tail = slice(n_max // 2, n_max)
    slope = np.polyfit(ns[tail], growth[tail], 1)[0]
    return 0.25 / slope


def mazur_bound_zcharge(res: ResonantAnisotropy, d_max: int) -> MazurReport:
    """Single-charge bound from the Z charge truncated at order d_max.

    w picks up only the d = 2 density (wider densities share no strings with
    the two-site current), and u has no d != d' cross terms, so the d-sum of
    u is the exact transfer-matrix norm series.  The bound w^2/(2u) then
    decreases monotonically in d_max toward 4 D_Z.
    """
    if d_max < 2:
        raise ValueError("need d_max >= 2")
    j = spin_current_density()
    w_c = ti_inner(j, density(build_mpo(res), 2))
    assert abs(w_c.imag) < 1e-12
    w = w_c.real
    u_by_d = density_norms_squared(res, d_max)
    u_cum = np.cumsum(u_by_d)
    convergence = tuple(
        (d, w * w / (2.0 * u_cum[d - 2])) for d in range(2, d_max + 1)
    )
    return MazurReport(
        w=w,
        u=float(u_cum[-1]),
        bound=convergence[-1][1],
        d_max=d_max,
        convergence=convergence,
    )


def _real_ti(a: LocalOperator, b: LocalOperator) -> float:
    return ti_inner(a, b).real


def mazur_bound_components(
    components: Sequence[ChargeComponent],
) -> MultiChargeMazurReport:
    """(1/2) w^T U^+ w over an explicit charge set.

    Near-null directions of U (linearly dependent charges) are projected out
    by the pseudo-inverse threshold rather than treated as errors; the ratio
    of extreme kept singular values is reported as `conditioning`.
    """
    if not components:
        raise ValueError("empty charge set")
    j = spin_current_density()
    n = len(components)
    wk = np.zeros(n)
    ukl = np.zeros((n, n))
    for i, ci in enumerate(components):
        wk[i] = sum(_real_ti(j, p) for p in ci.densities)
        for k in range(i, n):
            ck = components[k]
            if i == k and ci.u_exact is not None:
                ukl[i, i] = ci.u_exact
                continue
            val = sum(
                _real_ti(p, q) for p in ci.densities for q in ck.densities
            )
            ukl[i, k] = ukl[k, i] = val
    svals = np.linalg.svd(ukl, compute_uv=False)
    kept = svals[svals > PINV_RCOND * svals[0]] if svals[0] > 0 else svals[:1]
    conditioning = float(kept[0] / kept[-1]) if kept[-1] > 0 else float("inf")
    bound = 0.5 * float(wk @ np.linalg.pinv(ukl, rcond=PINV_RCOND) @ wk)
    return MultiChargeMazurReport(
        wk=wk,
        ukl=ukl,
        bound=bound,
        conditioning=conditioning,
        labels=tuple(c.label for c in components),
        defects=tuple(c.defect for c in components),
    )


def _class_residues(d_op: LocalOperator) -> float:
    sums: dict[tuple[int, int], complex] = {}
    for s, c in d_op.terms.items():
        key = (s.xmask, s.zmask)
        sums[key] = sums.get(key, 0.0) + c
    return max((abs(v) for v in sums.values()), default=0.0)


def conservation_defect(q: DensityOperator, h: LocalOperator) -> float:
    """Max translation-class residue of i[H, Q]'s density; 0 iff conserved."""
    return _class_residues(bulk_derivative(q, h))


def boost_components(charges: ChargeSequence) -> list[ChargeComponent]:
    h = hamiltonian_density(charges.params)
    return [
        ChargeComponent(
            label=f"boost[{e.k}]",
            densities=(e.q.density,),
            defect=conservation_defect(e.q, h),
        )
        for e in charges.entries
    ]


def zcharge_component(
    res: ResonantAnisotropy, d_max: int, materialize_to: int = 2
) -> ChargeComponent:
    """The full Z charge truncated at d_max as a single Mazur-set member.

    Only densities up to `materialize_to` are instantiated (enough for every
    cross overlap against operators of that width — wider orders cannot share
    strings); the self-overlap uses the exact transfer-matrix series.
    """
    if d_max < 2:
        raise ValueError("need d_max >= 2")
    mpo = build_mpo(res)
    d_mat = max(2, min(d_max, materialize_to))
    mats = tuple(density(mpo, d) for d in range(2, d_mat + 1))
    u_exact = float(density_norms_squared(res, d_max).sum())
    return ChargeComponent(
        label=f"zcharge({res.l},{res.m})",
        densities=mats,
        u_exact=u_exact,
        defect=0.0,
    )


def mazur_bound_multi(
    charges: Optional[ChargeSequence],
    res: Optional[ResonantAnisotropy] = None,
    chi: Optional[float] = None,
    d_max: int = 30,
) -> MultiChargeMazurReport:
    """Multi-charge bound over the boost tower and/or the Z charge.

    `chi`, when given, must agree with the tower's parameters (it exists so
    call sites can state the field they believe they are using); mixing a
    tower and a resonance requires matching anisotropies.
    """
    if charges is None and res is None:
        raise ValueError("need a charge sequence, a resonance, or both")
    if charges is not None and chi is not None:
        if abs(chi - charges.params.chi) > 1e-12:
            raise ValueError(
                f"chi={chi} disagrees with charge family chi={charges.params.chi}"
            )
    if charges is not None and res is not None:
        if abs(charges.params.delta - res.delta) > 1e-12:
            raise ValueError("charge sequence and resonance disagree on delta")

    components: list[ChargeComponent] = []
    if charges is not None:
        components.extend(boost_components(charges))
    if res is not None:
        widest = max((e.k for e in charges.entries), default=2) if charges else 2
        components.append(zcharge_component(res, d_max, materialize_to=widest))
    return mazur_bound_components(components)
