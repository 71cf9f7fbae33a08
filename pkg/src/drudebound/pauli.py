"""Exact algebra of spin-1/2 Pauli-string operators on the integer lattice.

Operators are finite complex-weighted sums of tensor products of single-site
Pauli matrices.  Strings are stored as bitmask pairs with exact integer
composition phases, so the only floating-point arithmetic anywhere is on the
coefficients.  All values are immutable; every operation is a pure function.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

import numpy as np

#: coefficients with |c| below this are dropped after every arithmetic step
PRUNE_TOL = 1e-14

_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

# site symbol for bit pair (xbit + 2*zbit); the (1,1) combination is sigma^y
# because the per-site operator is i^(x*z) * X^x * Z^z, which is Hermitian.
_SYM_OF_BITS = ("0", "x", "z", "y")
_BITS_OF_SYM = {"0": (0, 0), "x": (1, 0), "y": (1, 1), "z": (0, 1)}

_SITE_MATS = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class SupportOutOfRange(ValueError):
    """Operator support does not fit inside the requested chain."""


class MisalignedDensity(ValueError):
    """Density support does not start at site 0."""


class ParseError(ValueError):
    """Malformed operator text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class PauliString(NamedTuple):
    """Tensor product of single-site Paulis on sites offset..offset+length-1.

    Bit i of xmask/zmask encodes the factor at site offset+i:
    (0,0) identity, (1,0) sigma^x, (0,1) sigma^z, (1,1) sigma^y.
    Canonical strings have non-identity first and last sites; the identity
    is the unique length-0 string.  Every PauliString is Hermitian.
    """

    offset: int
    xmask: int
    zmask: int
    length: int

    @property
    def symbols(self) -> str:
        """Site symbols over {0,x,y,z}; '0' for the identity string."""
        if self.length == 0:
            return "0"
        return "".join(
            _SYM_OF_BITS[(self.xmask >> i & 1) + 2 * (self.zmask >> i & 1)]
            for i in range(self.length)
        )

    @property
    def sites(self) -> range:
        return range(self.offset, self.offset + self.length)


IDENTITY = PauliString(0, 0, 0, 0)


def canonical_string(offset: int, xmask: int, zmask: int) -> PauliString:
    """Strip identity sites off both ends and normalize the window."""
    occ = xmask | zmask
    if not occ:
        return IDENTITY
    low = (occ & -occ).bit_length() - 1
    return PauliString(
        offset + low, xmask >> low, zmask >> low, (occ >> low).bit_length()
    )


def string_from_symbols(symbols: str, offset: int = 0) -> PauliString:
    """Build a canonical string from symbols over {0,x,y,z}."""
    xmask = zmask = 0
    for i, s in enumerate(symbols):
        try:
            xb, zb = _BITS_OF_SYM[s]
        except KeyError:
            raise ValueError(f"unknown Pauli symbol {s!r}") from None
        xmask |= xb << i
        zmask |= zb << i
    return canonical_string(offset, xmask, zmask)


def string_multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product of two Pauli strings: (phase, canonical string).

    The phase is an exact power of i accumulated from the per-site products
    of i^(x*z) X^x Z^z factors.
    """
    if a.length == 0:
        return 1.0 + 0.0j, b
    if b.length == 0:
        return 1.0 + 0.0j, a
    o = a.offset if a.offset < b.offset else b.offset
    x1 = a.xmask << (a.offset - o)
    z1 = a.zmask << (a.offset - o)
    x2 = b.xmask << (b.offset - o)
    z2 = b.zmask << (b.offset - o)
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    e = (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        + 2 * (z1 & x2).bit_count()
        - (x3 & z3).bit_count()
    ) & 3
    return _I_POW[e], canonical_string(o, x3, z3)


def strings_commute(a: PauliString, b: PauliString) -> bool:
    """True iff the two strings commute (symplectic form is even)."""
    if a.length == 0 or b.length == 0:
        return True
    o = a.offset if a.offset < b.offset else b.offset
    x1 = a.xmask << (a.offset - o)
    z1 = a.zmask << (a.offset - o)
    x2 = b.xmask << (b.offset - o)
    z2 = b.zmask << (b.offset - o)
    return ((z1 & x2).bit_count() + (x1 & z2).bit_count()) & 1 == 0


def _pruned(terms: dict) -> dict:
    return {p: c for p, c in terms.items() if abs(c) >= PRUNE_TOL}


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Finite complex-weighted sum of PauliStrings.

    The term map is owned by the instance and must not be mutated; all
    arithmetic returns new operators with coefficients below PRUNE_TOL
    dropped.
    """

    terms: dict  # PauliString -> complex

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "LocalOperator":
        return LocalOperator({})

    @staticmethod
    def identity(coeff: complex = 1.0) -> "LocalOperator":
        return LocalOperator.from_terms({IDENTITY: complex(coeff)})

    @staticmethod
    def from_terms(terms: dict) -> "LocalOperator":
        return LocalOperator(_pruned({p: complex(c) for p, c in terms.items()}))

    @staticmethod
    def build(termspec: Iterable[tuple[complex, str, int]]) -> "LocalOperator":
        """Assemble from (coefficient, symbols, offset) triples.

        Symbols range over {0, x, y, z, +, -}; raising/lowering symbols are
        expanded as sigma^+- = (sigma^x +- i sigma^y) / 2, so the stored
        basis is always {0, x, y, z}.
        """
        acc: dict[PauliString, complex] = {}
        for coeff, symbols, offset in termspec:
            # branch on each +/- site: list of (coeff, xmask, zmask)
            parts = [(complex(coeff), 0, 0)]
            for i, s in enumerate(symbols):
                if s in _BITS_OF_SYM:
                    xb, zb = _BITS_OF_SYM[s]
                    parts = [(c, x | xb << i, z | zb << i) for c, x, z in parts]
                elif s in "+-":
                    sgn = 1.0j if s == "+" else -1.0j
                    parts = [
                        branch
                        for c, x, z in parts
                        for branch in (
                            (0.5 * c, x | 1 << i, z),
                            (0.5 * sgn * c, x | 1 << i, z | 1 << i),
                        )
                    ]
                else:
                    raise ValueError(f"unknown Pauli symbol {s!r}")
            for c, x, z in parts:
                p = canonical_string(offset, x, z)
                acc[p] = acc.get(p, 0.0j) + c
        return LocalOperator(_pruned(acc))

    # -- inspection ---------------------------------------------------------

    @property
    def support(self) -> tuple[int, int] | None:
        """Minimal (first, last) site interval covering all non-identity terms."""
        lo = hi = None
        for p in self.terms:
            if p.length == 0:
                continue
            if lo is None or p.offset < lo:
                lo = p.offset
            last = p.offset + p.length - 1
            if hi is None or last > hi:
                hi = last
        if lo is None:
            return None
        return lo, hi

    @property
    def width(self) -> int:
        s = self.support
        return 0 if s is None else s[1] - s[0] + 1

    def norm_hs(self) -> float:
        """Hilbert-Schmidt norm under the normalized trace, sqrt(sum |c|^2)."""
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))

    def coeff_abs_sum(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def isclose(self, other: "LocalOperator", tol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(p, 0.0j) - other.terms.get(p, 0.0j)) <= tol
            for p in keys
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "LocalOperator(0)"
        return f"LocalOperator({serialize_operator(self)})"

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, 0.0j) + c
        return LocalOperator(_pruned(out))

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, 0.0j) - c
        return LocalOperator(_pruned(out))

    def __neg__(self) -> "LocalOperator":
        return LocalOperator({p: -c for p, c in self.terms.items()})

    def __mul__(self, scalar: complex) -> "LocalOperator":
        if isinstance(scalar, LocalOperator):
            raise TypeError("use A @ B for operator products")
        return LocalOperator(_pruned({p: c * scalar for p, c in self.terms.items()}))

    __rmul__ = __mul__

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        out: dict[PauliString, complex] = {}
        items = list(other.terms.items())
        for pa, ca in self.terms.items():
            for pb, cb in items:
                ph, p = string_multiply(pa, pb)
                out[p] = out.get(p, 0.0j) + ca * cb * ph
        return LocalOperator(_pruned(out))


def commutator(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    """[a, b] over the exact string algebra.

    For Pauli strings either [P, P'] = 0 or [P, P'] = 2 P P', decided by the
    parity of the symplectic overlap, so commuting pairs are skipped without
    computing products.  This loop is the hot path of every conservation
    check and is kept free of helper calls.
    """
    out: dict[PauliString, complex] = {}
    items = list(b.terms.items())
    for pa, ca in a.terms.items():
        oa, xa, za, la = pa
        if la == 0:
            continue
        for pb, cb in items:
            ob, xb, zb, lb = pb
            if lb == 0:
                continue
            o = oa if oa < ob else ob
            x1 = xa << (oa - o)
            z1 = za << (oa - o)
            x2 = xb << (ob - o)
            z2 = zb << (ob - o)
            if ((z1 & x2).bit_count() + (x1 & z2).bit_count()) & 1 == 0:
                continue
            x3 = x1 ^ x2
            z3 = z1 ^ z2
            e = (
                (x1 & z1).bit_count()
                + (x2 & z2).bit_count()
                + 2 * (z1 & x2).bit_count()
                - (x3 & z3).bit_count()
            ) & 3
            p = canonical_string(o, x3, z3)
            out[p] = out.get(p, 0.0j) + 2.0 * ca * cb * _I_POW[e]
    return LocalOperator(_pruned(out))


def shift(a: LocalOperator, x: int) -> LocalOperator:
    """Translate every string by x sites (the identity is invariant)."""
    if x == 0:
        return a
    return LocalOperator(
        {
            (PauliString(p.offset + x, p.xmask, p.zmask, p.length) if p.length else p): c
            for p, c in a.terms.items()
        }
    )


def adjoint(a: LocalOperator) -> LocalOperator:
    """Hermitian conjugate; Pauli strings are Hermitian, so conjugate coefficients."""
    return LocalOperator({p: c.conjugate() for p, c in a.terms.items()})


def spin_flip(a: LocalOperator) -> LocalOperator:
    """Conjugation by prod_x sigma^x_x: sigma^z -> -sigma^z, sigma^+- -> sigma^-+.

    A string picks up (-1)^(number of y and z sites), i.e. the parity of its
    zmask population.
    """
    return LocalOperator(
        {p: (-c if p.zmask.bit_count() & 1 else c) for p, c in a.terms.items()}
    )


def hs_inner(a: LocalOperator, b: LocalOperator) -> complex:
    """Normalized-trace inner product tr(a^dag b) / 2^sites.

    Pauli strings are orthonormal under the normalized trace, so this is an
    exact finite sum over matching canonical strings, independent of any
    embedding width.
    """
    if len(b.terms) < len(a.terms):
        return complex(hs_inner(b, a)).conjugate()
    return sum(
        (c.conjugate() * b.terms[p] for p, c in a.terms.items() if p in b.terms),
        start=0.0j,
    )


OperatorLike = Union[LocalOperator, "DensityOperator"]


def _as_operator(f: OperatorLike) -> LocalOperator:
    return f.density if isinstance(f, DensityOperator) else f


def ti_inner(f: OperatorLike, g: OperatorLike) -> complex:
    """Translation-invariant inner product sum_x hs_inner(f, shift(g, x)).

    Each pair of strings with identical masks matches at exactly one relative
    shift, so the sum is offset-independent and finite.  Undefined when both
    operators carry an identity component (the identity matches at every
    shift).
    """
    a, b = _as_operator(f), _as_operator(g)
    if IDENTITY in a.terms and IDENTITY in b.terms:
        raise ValueError("ti_inner is undefined when both operators have an "
                         "identity component")
    by_masks: dict[tuple[int, int], complex] = {}
    for p, c in b.terms.items():
        if p.length:
            by_masks[(p.xmask, p.zmask)] = by_masks.get((p.xmask, p.zmask), 0.0j) + c
    total = 0.0j
    for p, c in a.terms.items():
        if p.length:
            m = by_masks.get((p.xmask, p.zmask))
            if m is not None:
                total += c.conjugate() * m
    return total


def embed(a: LocalOperator, n: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a on the open chain with sites 1..n."""
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in a.terms.items():
        if p.length:
            if p.offset < 1 or p.offset + p.length - 1 > n:
                raise SupportOutOfRange(
                    f"string on sites {p.offset}..{p.offset + p.length - 1} "
                    f"does not fit chain [1, {n}]"
                )
        mat = np.array([[c]], dtype=complex)
        fill = "0" * (p.offset - 1) + p.symbols + "0" * (n - p.offset - p.length + 1)
        if p.length == 0:
            fill = "0" * n
        for s in fill:
            mat = np.kron(mat, _SITE_MATS[s])
        out += mat
    return out


@dataclass(frozen=True)
class DensityOperator:
    """Local density q of the translation-invariant sum Q = sum_x eta_x(q).

    The support must start at site 0; constructors that produce shifted
    densities should go through `DensityOperator.aligned`.
    """

    density: LocalOperator

    def __post_init__(self):
        s = self.density.support
        if s is not None and s[0] != 0:
            raise MisalignedDensity(f"density support starts at {s[0]}, not 0")

    @staticmethod
    def aligned(op: LocalOperator) -> "DensityOperator":
        s = op.support
        return DensityOperator(shift(op, -s[0]) if s else op)

    @property
    def width(self) -> int:
        return self.density.width


# -- text and JSON round-trip formats ---------------------------------------

_FLOAT = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_UFLOAT = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
# complex literal: 'a+bi' (sign between parts mandatory), 'bi', or 'a'
_TERM_RE = re.compile(
    rf"\s*(?:(?P<re2>{_FLOAT})(?P<im2>[+-]{_UFLOAT})i"
    rf"|(?P<im1>{_FLOAT})i"
    rf"|(?P<re1>{_FLOAT}))"
    rf"\s*\*\s*(?P<sym>[0xyz+\-]+)\s*@\s*(?P<off>[+-]?\d+)"
)
_SEP_RE = re.compile(r"\s*\+")


def _fmt_complex(c: complex) -> str:
    re_, im_ = c.real, c.imag
    if im_ == 0.0:
        return repr(re_)
    if re_ == 0.0:
        return repr(im_) + "i"
    sign = "+" if im_ > 0 else "-"
    return repr(re_) + sign + repr(abs(im_)) + "i"


def parse_operator(text: str) -> LocalOperator:
    """Parse ``<complex> * <symbols> @ <offset>`` terms joined by ``+``."""
    acc: dict[PauliString, complex] = {}
    if not text.strip():
        return LocalOperator.zero()
    pos = 0
    while True:
        m = _TERM_RE.match(text, pos)
        if not m:
            raise ParseError("expected '<complex> * <symbols> @ <offset>'", pos)
        re_part = m.group("re2") or m.group("re1")
        im_part = m.group("im2") or m.group("im1")
        coeff = complex(
            float(re_part) if re_part else 0.0,
            float(im_part) if im_part else 0.0,
        )
        term = LocalOperator.build([(coeff, m.group("sym"), int(m.group("off")))])
        for p, c in term.terms.items():
            acc[p] = acc.get(p, 0.0j) + c
        pos = m.end()
        sep = _SEP_RE.match(text, pos)
        if sep:
            pos = sep.end()
            continue
        if text[pos:].strip():
            raise ParseError("trailing characters after term", pos)
        return LocalOperator(_pruned(acc))


def _sorted_terms(a: LocalOperator) -> list[tuple[PauliString, complex]]:
    return sorted(a.terms.items(), key=lambda it: (it[0].offset, it[0].xmask, it[0].zmask))


def serialize_operator(a: LocalOperator) -> str:
    """Canonical text form; empty operator serializes to '0 * 0 @ 0'."""
    if not a.terms:
        return "0.0 * 0 @ 0"
    return " + ".join(
        f"{_fmt_complex(c)} * {p.symbols} @ {p.offset}" for p, c in _sorted_terms(a)
    )


def operator_to_json(a: LocalOperator) -> dict:
    return {
        "terms": [
            {"re": c.real, "im": c.imag, "string": p.symbols, "offset": p.offset}
            for p, c in _sorted_terms(a)
        ]
    }


def operator_from_json(data: dict) -> LocalOperator:
    acc: dict[PauliString, complex] = {}
    for t in data["terms"]:
        term = LocalOperator.build(
            [(complex(t["re"], t["im"]), t["string"], t["offset"])]
        )
        for p, c in term.terms.items():
            acc[p] = acc.get(p, 0.0j) + c
    return LocalOperator(_pruned(acc))
