"""Boost-generated family of local conserved charges of the spin-1/2 XXZ chain.

The two-site interaction density is h = sx.sx + sy.sy + D sz.sz, optionally
dressed by a transverse field term chi*sz on its left site.  Charge densities
are produced by alternating two exact string-level recurrences:

* the continuity equation  p_k - shift(p_k, 1) = i sum_x [h_x, shift(q_k, 1)]
  determines the current p_k of the density q_k, and
* the boost step  q_{k+1} = p_k/2 + (i/2) sum_x (x+1) [h_x, q_k]
  promotes (q_k, p_k) to the next density.

All algebra is exact over Pauli strings; no chain length ever enters the
bulk construction.  Open chains appear only in `boundary_commutator`, which
checks that the commutator [H, Q] of the truncated sums is supported at the
chain ends.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .pauli import (
    DensityOperator,
    LocalOperator,
    PauliString,
    commutator,
    shift,
)

#: translation-class residues above this abort `anti_difference`
RESIDUE_TOL = 1e-10


class NotTelescoping(ValueError):
    """A translation class of the bulk derivative has a nonzero net sum."""

    def __init__(self, message: str, residue: float = 0.0):
        super().__init__(message)
        self.residue = residue


@dataclass(frozen=True)
class XxzParams:
    """Anisotropy and optional transverse-field strength of the chain."""

    delta: float
    chi: float = 0.0


@dataclass(frozen=True)
class ChargeEntry:
    """One rung of the tower: density q_k and, when it exists, current p_k."""

    k: int
    q: DensityOperator
    p: Optional[DensityOperator]


@dataclass(frozen=True)
class ChargeSequence:
    params: XxzParams
    entries: tuple[ChargeEntry, ...]

    def __getitem__(self, k: int) -> ChargeEntry:
        for entry in self.entries:
            if entry.k == k:
                return entry
        raise KeyError(k)

    @property
    def k_max(self) -> int:
        return max(entry.k for entry in self.entries)

    def q(self, k: int) -> LocalOperator:
        return self[k].q.density

    def p(self, k: int) -> Optional[LocalOperator]:
        entry = self[k].p
        return None if entry is None else entry.density


def hamiltonian_density(params: XxzParams) -> LocalOperator:
    """Interaction density sx.sx + sy.sy + delta sz.sz (+ chi sz at site 0)."""
    spec = [(1.0, "xx", 0), (1.0, "yy", 0), (params.delta, "zz", 0)]
    if params.chi:
        spec.append((params.chi, "z", 0))
    return LocalOperator.build(spec)


def magnetization_density() -> LocalOperator:
    """Density of the trivially conserved total magnetization."""
    return LocalOperator.build([(1.0, "z", 0)])


def spin_current_density() -> LocalOperator:
    """Spin current j = 2(sx.sy - sy.sx), the current of the magnetization."""
    return LocalOperator.build([(2.0, "xy", 0), (-2.0, "yx", 0)])


def bulk_derivative(q: DensityOperator, h: LocalOperator) -> LocalOperator:
    """i sum_x [h_x, shift(q, 1)] over every x whose copy of h overlaps q.

    This is the translation-invariant time derivative of the density q under
    the Hamiltonian with density h; for a bulk-conserved q it telescopes and
    `anti_difference` recovers the current.
    """
    qd = shift(q.density, 1)
    lo, hi = h.support
    acc = LocalOperator.zero()
    for x in range(1 - hi, q.width - lo + 1):
        acc = acc + commutator(shift(h, x), qd)
    return 1j * acc


def anti_difference(d_op: LocalOperator) -> LocalOperator:
    """Solve p - shift(p, 1) = D by per-translation-class partial sums.

    Within each translation class (fixed Pauli content, varying offset) the
    coefficients of D must sum to zero, otherwise no finitely supported p
    exists and `NotTelescoping` is raised.  The additive freedom (a multiple
    of the identity) is fixed by returning a traceless p.
    """
    classes: dict[tuple[int, int], dict[int, complex]] = {}
    for s, c in d_op.terms.items():
        if s.length == 0:
            if abs(c) > RESIDUE_TOL:
                raise NotTelescoping(
                    f"identity component {c!r} has no finitely supported "
                    "anti-difference",
                    residue=abs(c),
                )
            continue
        classes.setdefault((s.xmask, s.zmask), {})[s.offset] = c

    terms: dict[PauliString, complex] = {}
    for (xm, zm), coeffs in classes.items():
        offsets = sorted(coeffs)
        length = (xm | zm).bit_length()
        run = 0.0 + 0.0j
        for o in range(offsets[0], offsets[-1]):
            run += coeffs.get(o, 0.0)
            terms[PauliString(o, xm, zm, length)] = run
        residue = abs(run + coeffs[offsets[-1]])
        if residue > RESIDUE_TOL:
            raise NotTelescoping(
                f"translation class x={xm:b} z={zm:b} has residue {residue:g}",
                residue=residue,
            )
    return LocalOperator.from_terms(terms)


def boost_step(
    q_k: DensityOperator, p_k: DensityOperator, h: LocalOperator
) -> DensityOperator:
    """Next density q_{k+1} = p_k/2 + (i/2) sum_x (x+1) [h_x, q_k]."""
    qd = q_k.density
    lo, hi = h.support
    acc = LocalOperator.zero()
    for x in range(-hi, q_k.width - lo):
        if x == -1:
            continue
        acc = acc + float(x + 1) * commutator(shift(h, x), qd)
    return DensityOperator(0.5 * p_k.density + 0.5j * acc)


def generate_charges(params: XxzParams, k_max: int) -> ChargeSequence:
    """Tower of (q_k, p_k) pairs for k = 1..k_max.

    Entry k=1 is the magnetization/spin-current pair; generation proper
    starts from q_2 = h.  With a transverse field the tower eventually stops
    being bulk-conserved: a failed current at the last requested order is
    recorded as p=None, while a failure below k_max propagates because the
    boost step cannot continue without the current.
    """
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    h = hamiltonian_density(params)

    q1 = DensityOperator(magnetization_density())
    p1 = anti_difference(bulk_derivative(q1, h))
    entries = [ChargeEntry(1, q1, DensityOperator(p1))]

    qk = h
    for k in range(2, k_max + 1):
        qden = DensityOperator(qk)
        try:
            pk = anti_difference(bulk_derivative(qden, h))
        except NotTelescoping:
            if k < k_max:
                raise
            entries.append(ChargeEntry(k, qden, None))
            break
        entries.append(ChargeEntry(k, qden, DensityOperator(pk)))
        if k < k_max:
            qk = boost_step(qden, DensityOperator(pk), h).density
    return ChargeSequence(params=params, entries=tuple(entries))


def open_chain_sum(density: LocalOperator, n: int) -> LocalOperator:
    """Sum of all translates of a 0-aligned density fitting inside [1, n]."""
    w = density.width
    terms: dict[PauliString, complex] = {}
    for x in range(1, n - w + 2):
        for s, c in shift(density, x).terms.items():
            terms[s] = terms.get(s, 0.0) + c
    return LocalOperator.from_terms(terms)


def boundary_commutator(q: DensityOperator, n: int, h: LocalOperator) -> LocalOperator:
    """[H, Q] for the truncated sums H = sum h_x, Q = sum q_x on sites 1..n.

    For a bulk-conserved density everything telescopes in the interior and
    the result is supported near the two chain ends only; the support check
    itself lives in the tests.
    """
    d = q.width
    if n < 2 * d:
        raise ValueError(f"chain length {n} shorter than twice the density width {d}")
    ham = open_chain_sum(h, n)
    total = open_chain_sum(q.density, n)
    return commutator(ham, total)
