"""Exact diagonalization on small open chains.

Brute-force oracle for the operator-algebra modules: exact spectra, current
autocorrelations and their time averages, finite-size Mazur/Suzuki bound
checks in the Gibbs inner product, thermal vs Kubo-Mori Drude estimators,
and empirical light-cone / clustering fits.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .charges import (
    XxzParams,
    hamiltonian_density,
    magnetization_density,
    open_chain_sum,
    spin_current_density,
)
from .pauli import LocalOperator, _SITE_MATS, commutator, embed, shift
from .zcharge import DegenerateFit

MAX_SITES = 14
MAX_SCAN_SITES = 12
DEGENERACY_REL_TOL = 1e-8
CONSERVATION_REL_TOL = 1e-10


class SizeTooLarge(ValueError):
    """Chain length beyond the dense-diagonalization cap."""


class NotConserved(ValueError):
    """Operator passed as conserved does not commute with the Hamiltonian."""


@dataclass(eq=False)
class SpectralData:
    """Eigendecomposition of the open-chain Hamiltonian (real orthogonal basis)."""

    n: int
    params: XxzParams
    energies: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_tol: float
    _cache: dict = field(default_factory=dict, repr=False)


@dataclass(eq=False)
class AutocorrResult:
    n: int
    beta: float
    times: np.ndarray
    cn_values: np.ndarray
    cbar_n: float


@dataclass(eq=False)
class LightConeFit:
    commutator_norms: tuple  # rows (x, t, spectral norm)
    fitted_v: float
    fitted_mu: float
    clustering_table: tuple  # rows (x, connected correlation)
    fitted_kappa: float
    fitted_rho: float


@dataclass(eq=False)
class KuboMoriResult:
    n: int
    beta: float
    thermal_dt: float
    canonical_dt: float
    gap: float


# -- matrix plumbing -----------------------------------------------------------------

def _embed_sparse(a: LocalOperator, n: int) -> sp.csr_matrix:
    """Sparse analogue of pauli.embed for operators with small support."""
    dim = 1 << n
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for p, c in a.terms.items():
        if p.length and (p.offset < 1 or p.offset + p.length - 1 > n):
            raise ValueError(
                f"string on sites {p.offset}..{p.offset + p.length - 1} "
                f"does not fit chain [1, {n}]"
            )
        fill = "0" * (p.offset - 1) + p.symbols + "0" * (n - p.offset - p.length + 1)
        if p.length == 0:
            fill = "0" * n
        mat = sp.csr_matrix(np.array([[c]], dtype=complex))
        for s in fill:
            mat = sp.kron(mat, sp.csr_matrix(_SITE_MATS[s]), format="csr")
        out = out + mat
    return out


def hamiltonian_matrix(n: int, params: XxzParams) -> np.ndarray:
    """Dense real open-chain Hamiltonian on sites 1..n."""
    h = embed(open_chain_sum(hamiltonian_density(params), n), n)
    assert np.abs(h.imag).max() < 1e-12
    return np.ascontiguousarray(h.real)


def current_matrix(n: int) -> np.ndarray:
    """Dense total spin current (purely imaginary antisymmetric matrix)."""
    return embed(open_chain_sum(spin_current_density(), n), n)


def magnetization_matrix(n: int) -> np.ndarray:
    """Dense total magnetization (diagonal)."""
    m = embed(open_chain_sum(magnetization_density(), n), n)
    return np.ascontiguousarray(m.real)


@functools.lru_cache(maxsize=8)
def diagonalize(n: int, params: XxzParams) -> SpectralData:
    if not 2 <= n <= MAX_SITES:
        raise SizeTooLarge(f"n={n} outside dense-diagonalization range [2, {MAX_SITES}]")
    energies, vecs = np.linalg.eigh(hamiltonian_matrix(n, params))
    tol = DEGENERACY_REL_TOL * max(float(np.abs(energies).max()), 1.0)
    return SpectralData(n, params, energies, vecs, tol)


def _gibbs_weights(spec: SpectralData, beta: float):
    g = np.exp(-beta * (spec.energies - spec.energies.min()))
    return g, float(g.sum())


def _abs2_eigenbasis(spec: SpectralData, observable: Optional[np.ndarray]):
    """|<a|O|b>|^2 in the energy eigenbasis; the spin current when O is omitted."""
    if observable is None:
        if "current_abs2" not in spec._cache:
            a = current_matrix(spec.n) / 1j
            assert np.abs(a.imag).max() < 1e-12
            jt = spec.eigenvectors.T @ a.real @ spec.eigenvectors
            spec._cache["current_abs2"] = jt**2
        return spec._cache["current_abs2"]
    tilde = spec.eigenvectors.T @ np.asarray(observable) @ spec.eigenvectors
    return np.abs(tilde) ** 2


# -- current autocorrelations -----------------------------------------------------------

def cn_of_t(
    spec: SpectralData, t: float, beta: float, observable: Optional[np.ndarray] = None
) -> float:
    """Per-site symmetric current autocorrelation Re omega_beta(J tau_t(J)) / n."""
    w2 = _abs2_eigenbasis(spec, observable)
    g, z = _gibbs_weights(spec, beta)
    omega = spec.energies[None, :] - spec.energies[:, None]
    return float((g[:, None] * w2 * np.cos(t * omega)).sum() / (spec.n * z))


def time_averaged_autocorr(
    spec: SpectralData, beta: float, observable: Optional[np.ndarray] = None
) -> float:
    """Infinite-time Cesaro average of cn_of_t via the degenerate-energy projector."""
    w2 = _abs2_eigenbasis(spec, observable)
    g, z = _gibbs_weights(spec, beta)
    omega = spec.energies[None, :] - spec.energies[:, None]
    mask = np.abs(omega) <= spec.degeneracy_tol
    return float((g[:, None] * w2 * mask).sum() / (spec.n * z))


def autocorr_series(spec: SpectralData, beta: float, times: Sequence[float]) -> AutocorrResult:
    times = np.asarray(list(times), dtype=float)
    vals = np.array([cn_of_t(spec, t, beta) for t in times])
    return AutocorrResult(spec.n, beta, times, vals, time_averaged_autocorr(spec, beta))


def dephase(spec: SpectralData, mat: np.ndarray) -> np.ndarray:
    """Long-time average of tau_t(mat): keep only (near-)degenerate matrix elements."""
    v = spec.eigenvectors
    tilde = v.T @ np.asarray(mat) @ v
    omega = spec.energies[None, :] - spec.energies[:, None]
    tilde = np.where(np.abs(omega) <= spec.degeneracy_tol, tilde, 0.0)
    return v @ tilde @ v.T


# -- finite-size Suzuki/Mazur inequality ---------------------------------------------------

def _gibbs_inner(g, z, a_tilde, b_tilde) -> complex:
    """tr(rho A^dag B) with rho the Gibbs state, both operators in the eigenbasis."""
    return complex(np.einsum("a,ba,ba->", g, a_tilde.conj(), b_tilde) / z)


def suzuki_finite_check(
    spec: SpectralData,
    conserved: Sequence[np.ndarray],
    beta: float = 0.0,
    observable: Optional[np.ndarray] = None,
) -> tuple:
    """Finite-n Mazur inequality: time-averaged autocorrelation of the
    observable (the spin current when omitted) vs the Bessel sum over an
    orthogonalized conserved set (exact theorem; lhs >= rhs)."""
    h = hamiltonian_matrix(spec.n, spec.params)
    hnorm = np.linalg.norm(h)
    v = spec.eigenvectors
    g, z = _gibbs_weights(spec, beta)

    basis = []
    for q in conserved:
        q = np.asarray(q, dtype=complex)
        defect = np.linalg.norm(q @ h - h @ q)
        scale = max(np.linalg.norm(q) * hnorm, 1.0)
        if defect > CONSERVATION_REL_TOL * scale:
            raise NotConserved(f"commutator norm {defect:.3e} exceeds tolerance")
        tilde = v.T @ q @ v
        tilde -= (_gibbs_inner(g, z, np.eye(len(g)), tilde)) * np.eye(len(g))
        for prev in basis:
            tilde -= _gibbs_inner(g, z, prev, tilde) * prev
        norm_sq = _gibbs_inner(g, z, tilde, tilde).real
        if norm_sq > 1e-20:
            basis.append(tilde / np.sqrt(norm_sq))

    if observable is None:
        obs_tilde = 1j * (v.T @ (current_matrix(spec.n) / 1j).real @ v)
    else:
        obs_tilde = v.T @ np.asarray(observable, dtype=complex) @ v
    rhs = sum(abs(_gibbs_inner(g, z, q, obs_tilde)) ** 2 for q in basis) / spec.n
    lhs = time_averaged_autocorr(spec, beta, observable)
    assert lhs >= rhs - 1e-8
    return lhs, float(rhs)


# -- thermal vs Kubo-Mori estimators ----------------------------------------------------------

def kubo_mori_compare(spec: SpectralData, beta: float, t_max: float) -> KuboMoriResult:
    """Finite-time Drude estimators in the thermal and Kubo-Mori inner products."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    w2 = _abs2_eigenbasis(spec, None)
    g, z = _gibbs_weights(spec, beta)
    omega = spec.energies[None, :] - spec.energies[:, None]
    snc = np.sinc(omega * t_max / np.pi)  # sin(omega t)/(omega t), 1 on the diagonal
    degenerate = np.abs(omega) <= spec.degeneracy_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        km = (g[:, None] - g[None, :]) / (beta * omega)
    km = np.where(degenerate, g[:, None], km)
    pref = beta / (2 * spec.n * z)
    thermal = float(pref * (g[:, None] * w2 * snc).sum())
    canonical = float(pref * (km * w2 * snc).sum())
    return KuboMoriResult(spec.n, beta, thermal, canonical, abs(thermal - canonical))


# -- light cone and clustering ------------------------------------------------------------------

def _check_support(a: LocalOperator, n: int, what: str):
    for p in a.terms:
        if p.length and (p.offset < 1 or p.offset + p.length - 1 > n):
            raise ValueError(f"{what} support leaves the chain [1, {n}]")


class _RealSplitMatrix:
    """Dense matrix stored as real/imag parts so complex matvecs stay in dgemv
    (a mixed real-by-complex product would copy the big matrix on every call)."""

    def __init__(self, mat: np.ndarray):
        mat = np.asarray(mat)
        self.re = np.ascontiguousarray(mat.real)
        self.im = (
            np.ascontiguousarray(mat.imag)
            if np.iscomplexobj(mat) and np.abs(mat.imag).max() > 1e-14
            else None
        )

    def __matmul__(self, psi: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(psi):
            out = self.re @ psi.real + 1j * (self.re @ psi.imag)
        else:
            out = self.re @ psi
        if self.im is not None:
            if np.iscomplexobj(psi):
                out = out + 1j * (self.im @ psi.real) - self.im @ psi.imag
            else:
                out = out + 1j * (self.im @ psi)
        return out


def _spectral_norm_commutator(spec, vmat, vmat_t, f_tilde, g_sparse, t, tol=1e-5) -> float:
    """Spectral norm of [tau_t(F), G] via Lanczos on the Hermitian i[.,.]."""
    dim = spec.eigenvectors.shape[0]
    phase = np.exp(1j * spec.energies * t)

    def tau_f(psi):
        u = phase.conj() * (vmat_t @ psi)
        return vmat @ (phase * (f_tilde @ u))

    def matvec(psi):
        psi = psi.ravel()
        return 1j * (tau_f(g_sparse @ psi) - g_sparse @ tau_f(psi))

    op = spla.LinearOperator((dim, dim), matvec=matvec, dtype=complex)
    try:
        vals = spla.eigsh(op, k=1, which="LM", tol=tol, ncv=min(dim, 16),
                          return_eigenvectors=False)
        return float(np.abs(vals).max())
    except spla.ArpackNoConvergence as err:  # pragma: no cover - rare fallback
        if len(err.eigenvalues):
            return float(np.abs(err.eigenvalues).max())
        raise


def _thermal_expectation(spec, g, z, mat_sparse) -> complex:
    v = spec.eigenvectors
    diag = np.einsum("ia,ia->a", v, mat_sparse @ v)
    return complex((g * diag).sum() / z)


def light_cone_scan(
    n: int,
    params: XxzParams,
    f: LocalOperator,
    g: LocalOperator,
    t_grid: Sequence[float],
    x_grid: Sequence[int],
    beta: float = 1.0,
    front_frac: float = 0.25,
) -> LightConeFit:
    """Commutator-norm table over (x, t) with exponential cone/clustering fits.

    f stays put; g is translated by x sites.  The commutator norms are
    basis-independent and beta enters only through the clustering column.
    """
    if n > MAX_SCAN_SITES:
        raise SizeTooLarge(f"light-cone scan capped at n={MAX_SCAN_SITES}")
    spec = diagonalize(n, params)
    _check_support(f, n, "f")
    for x in x_grid:
        _check_support(shift(g, x), n, f"g shifted by {x}")

    v = spec.eigenvectors
    vmat = _RealSplitMatrix(v)
    vmat_t = _RealSplitMatrix(v.T)
    f_sparse = _embed_sparse(f, n)
    fv = f_sparse @ v
    f_tilde_dense = v.T @ np.ascontiguousarray(fv.real)
    if np.abs(fv.imag).max() > 1e-14:
        f_tilde_dense = f_tilde_dense + 1j * (v.T @ np.ascontiguousarray(fv.imag))
    f_tilde = _RealSplitMatrix(f_tilde_dense)

    rows = []
    norms = {}
    for x in x_grid:
        gx = shift(g, x)
        g_sparse = _embed_sparse(gx, n)
        symbolically_zero = len(commutator(f, gx)) == 0
        for t in t_grid:
            if t == 0 and symbolically_zero:
                nrm = 0.0  # disjoint supports commute exactly
            else:
                nrm = _spectral_norm_commutator(spec, vmat, vmat_t, f_tilde, g_sparse, t)
            rows.append((x, float(t), nrm))
            norms[(x, float(t))] = nrm

    xs = sorted(set(x_grid))
    ts = sorted(set(float(t) for t in t_grid))

    # decay rate outside the cone: log-norm vs x at the latest time whose tail
    # still keeps enough grid points below half its peak
    sel = []
    for t_star in reversed(ts):
        tail = [(x, norms[(x, t_star)]) for x in xs]
        peak = max(val for _, val in tail)
        cand = [(x, val) for x, val in tail if 1e-13 < val < 0.5 * peak]
        if len(cand) >= 3 or (len(cand) == 2 and not sel):
            sel = cand
            if len(cand) >= 3:
                break
    if len(sel) < 2:
        raise DegenerateFit("not enough points outside the light cone")
    mu = -np.polyfit([x for x, _ in sel], [np.log(val) for _, val in sel], 1)[0]

    # front velocity: outermost x above a fixed fraction of the global peak
    global_peak = max(norms.values())
    fronts = []
    for t in ts:
        if t == 0:
            continue
        above = [x for x in xs if norms[(x, t)] >= front_frac * global_peak]
        if above:
            fronts.append((t, max(above)))
    if len(set(x for _, x in fronts)) < 2:
        raise DegenerateFit("front never crossed enough grid points")
    vel = np.polyfit([t for t, _ in fronts], [x for _, x in fronts], 1)[0]

    cluster, kappa, rho = clustering_fit(n, params, f, g, xs, beta)
    return LightConeFit(
        commutator_norms=tuple(rows),
        fitted_v=float(vel),
        fitted_mu=float(mu),
        clustering_table=cluster,
        fitted_kappa=kappa,
        fitted_rho=rho,
    )


def clustering_fit(
    n: int,
    params: XxzParams,
    f: LocalOperator,
    g: LocalOperator,
    x_grid: Sequence[int],
    beta: float,
) -> tuple:
    """Static connected correlations |<f eta_x(g)> - <f><g>| with an
    exponential fit; returns (table of (x, value), kappa, rho)."""
    spec = diagonalize(n, params)
    gw, z = _gibbs_weights(spec, beta)
    f_sparse = _embed_sparse(f, n)
    f_mean = _thermal_expectation(spec, gw, z, f_sparse)
    cluster = []
    for x in sorted(set(x_grid)):
        g_sparse = _embed_sparse(shift(g, x), n)
        joint = _thermal_expectation(spec, gw, z, f_sparse @ g_sparse)
        g_mean = _thermal_expectation(spec, gw, z, g_sparse)
        cluster.append((x, abs(joint - f_mean * g_mean)))
    csel = [(x, val) for x, val in cluster if val > 1e-14]
    if len(csel) < 2:
        raise DegenerateFit("clustering column vanished; increase beta")
    slope, intercept = np.polyfit(
        [x for x, _ in csel], [np.log(val) for _, val in csel], 1
    )
    return tuple(cluster), float(np.exp(intercept)), float(-slope)


# -- bound vs finite-size autocorrelation sweep ------------------------------------------------

def bound_vs_ed_sweep(res, n_list: Sequence[int], d_max: int) -> tuple:
    """Rows (n, cbar_n at beta=0, quasi-local bound).  The bound is an
    infinite-volume statement; finite-n ordering is recorded, not asserted."""
    from .drude import mazur_bound_zcharge

    if max(n_list) > MAX_SCAN_SITES:
        raise SizeTooLarge(f"sweep capped at n={MAX_SCAN_SITES}")
    bound = mazur_bound_zcharge(res, d_max).bound
    rows = []
    for n in n_list:
        spec = diagonalize(n, XxzParams(res.delta))
        rows.append((n, time_averaged_autocorr(spec, 0.0), bound))
    return tuple(rows)
