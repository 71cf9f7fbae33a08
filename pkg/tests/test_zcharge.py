"""MPO-generated quasi-local charge densities against brute-force enumeration."""
import itertools

import numpy as np
import pytest

from drudebound.charges import spin_current_density
from drudebound.pauli import LocalOperator, adjoint, spin_flip
from drudebound.zcharge import (
    L_IDX,
    R_IDX,
    DegenerateFit,
    InvalidResonance,
    ResonantAnisotropy,
    assemble_charge,
    boundary_residual,
    build_mpo,
    charge_densities,
    density,
    density_norms_squared,
    marginal_charge_densities,
    norm_decay_fit,
)

RESONANCES = [(1, 2), (1, 3), (1, 4), (2, 5), (1, 5), (3, 7), (2, 7)]


def golden_q2():
    return LocalOperator.build([(1j, "+-", 0), (-1j, "-+", 0)])


def golden_q3(d):
    return LocalOperator.build([(1j * d, "+0-", 0), (-1j * d, "-0+", 0)])


def golden_q4(d):
    c = 2j * d * (d**2 - 1)
    return LocalOperator.build(
        [
            (1j * d**2, "+00-", 0), (-1j * d**2, "-00+", 0),
            (c, "++--", 0), (-c, "--++", 0),
        ]
    )


def brute_density(mpo, d):
    """Literal 3^(d-2)-term enumeration of the MPO contraction."""
    mats = {"0": mpo.a0, "+": mpo.aplus, "-": mpo.aminus}
    w = LocalOperator.zero()
    for mid in itertools.product("0+-", repeat=d - 2):
        m = mpo.aplus
        for s in mid:
            m = m @ mats[s]
        m = m @ mpo.aminus
        c = m[L_IDX, R_IDX]
        if abs(c) > 1e-16:
            w = w + LocalOperator.build([(c, "+" + "".join(mid) + "-", 0)])
    return 1j * (w - adjoint(w))


# -- resonance / MPO construction ---------------------------------------------

def test_resonance_validation():
    for l, m in ((1, 1), (2, 4), (0, 3), (3, 3), (3, 2)):
        with pytest.raises(InvalidResonance):
            ResonantAnisotropy(l, m)
    assert ResonantAnisotropy(1, 3).delta == pytest.approx(0.5)
    assert ResonantAnisotropy(1, 2).delta == pytest.approx(0.0, abs=1e-15)


def test_mpo_examples():
    mpo = build_mpo(ResonantAnisotropy(1, 2))
    assert np.allclose(np.diag(mpo.a0), [1, 1, 0], atol=1e-15)
    mpo = build_mpo(ResonantAnisotropy(1, 3))
    assert np.allclose(np.diag(mpo.a0), [1, 1, 0.5, -0.5])
    assert np.count_nonzero(mpo.a0 - np.diag(np.diag(mpo.a0))) == 0


@pytest.mark.parametrize("l,m", RESONANCES)
def test_mpo_band_structure(l, m):
    """A+ moves the auxiliary index down by one (or 1 -> L); A- up (or 1 -> R)."""
    mpo = build_mpo(ResonantAnisotropy(l, m))
    dim = m + 1
    assert mpo.aplus[L_IDX, 2] == 1.0 and mpo.aminus[2, R_IDX] == 1.0
    for i in range(dim):
        for k in range(dim):
            if mpo.aplus[i, k] and (i, k) != (L_IDX, 2):
                assert k == i + 1 and i >= 2  # r -> r+1 band
            if mpo.aminus[i, k] and (i, k) != (2, R_IDX):
                assert i == k + 1 and k >= 2


# -- density golden values -------------------------------------------------------

@pytest.mark.parametrize("l,m", RESONANCES)
def test_low_order_densities_match_printed_forms(l, m):
    res = ResonantAnisotropy(l, m)
    mpo = build_mpo(res)
    assert density(mpo, 2).isclose(golden_q2(), tol=1e-12)
    assert density(mpo, 3).isclose(golden_q3(res.delta), tol=1e-12)
    assert density(mpo, 4).isclose(golden_q4(res.delta), tol=1e-12)


def test_q2_is_quarter_current():
    mpo = build_mpo(ResonantAnisotropy(2, 5))
    assert density(mpo, 2).isclose(0.25 * spin_current_density(), tol=1e-14)


def test_density_rejects_low_order():
    with pytest.raises(ValueError):
        density(build_mpo(ResonantAnisotropy(1, 3)), 1)


# -- sweep vs brute force ---------------------------------------------------------

@pytest.mark.parametrize("l,m", [(1, 2), (1, 3), (1, 4), (2, 5)])
def test_sweep_matches_bruteforce(l, m):
    mpo = build_mpo(ResonantAnisotropy(l, m))
    for d in range(2, 9):
        assert density(mpo, d).isclose(brute_density(mpo, d), tol=1e-12)


@pytest.mark.parametrize("l,m", [(1, 3), (2, 5), (3, 7)])
def test_density_invariants(l, m):
    mpo = build_mpo(ResonantAnisotropy(l, m))
    for d in range(2, 10):
        q = density(mpo, d)
        assert adjoint(q).isclose(q, tol=1e-13)
        assert spin_flip(q).isclose(-1 * q, tol=1e-13)


# -- norms ------------------------------------------------------------------------

@pytest.mark.parametrize("l,m", [(1, 2), (1, 3), (1, 4), (2, 5), (3, 7)])
def test_norms_closed_form_matches_materialized(l, m):
    res = ResonantAnisotropy(l, m)
    mpo = build_mpo(res)
    sq = density_norms_squared(res, 9)
    mat = [density(mpo, d).norm_hs() ** 2 for d in range(2, 10)]
    assert np.allclose(sq, mat, atol=1e-13)


def test_norms_nonincreasing_beyond_m():
    for l, m in RESONANCES:
        sq = density_norms_squared(ResonantAnisotropy(l, m), 24)
        tail = sq[m - 2 :]
        assert all(a >= b - 1e-15 for a, b in zip(tail, tail[1:]))


def test_cross_order_overlaps_vanish():
    from drudebound.pauli import ti_inner

    mpo = build_mpo(ResonantAnisotropy(2, 5))
    ops = {d: density(mpo, d) for d in range(2, 7)}
    for d in ops:
        for dp in ops:
            if d != dp:
                assert ti_inner(ops[d], ops[dp]) == 0


# -- assembled charge and boundary identity -----------------------------------------

def test_assemble_charge_low_order():
    from drudebound.charges import open_chain_sum

    res = ResonantAnisotropy(1, 3)
    q = assemble_charge(res, 2, n=7)
    assert q.isclose(open_chain_sum(0.25 * spin_current_density(), 7), tol=1e-14)


def test_assembled_norm_grows_linearly():
    res = ResonantAnisotropy(1, 2)  # only d=2 survives: exactly (n-1)/2
    for n in (4, 8, 12):
        q = assemble_charge(res, 2, n)
        assert q.norm_hs() ** 2 == pytest.approx((n - 1) * 0.5, rel=1e-12)


def test_boundary_residual_delta_zero_exact_at_dmax2():
    _, rn = boundary_residual(ResonantAnisotropy(1, 2), 2, 8)
    assert rn < 1e-12


def test_boundary_residual_decays_in_hs_norm_and_closes():
    res = ResonantAnisotropy(1, 3)
    hs = []
    for d_max in (4, 6, 8):
        r, _ = boundary_residual(res, d_max, 10)
        hs.append(r.norm_hs())
    assert hs[0] > hs[1] > hs[2] > 0
    _, rn = boundary_residual(res, 10, 10)
    assert rn < 1e-10


def test_boundary_residual_rejects_bad_sizes():
    with pytest.raises(ValueError):
        boundary_residual(ResonantAnisotropy(1, 3), 8, 6)


# -- decay fits ----------------------------------------------------------------------

def test_norm_decay_fit_positive_rate():
    gamma, xi = norm_decay_fit(ResonantAnisotropy(1, 3), 30)
    assert gamma > 0 and xi > 0
    sq = density_norms_squared(ResonantAnisotropy(1, 3), 30)
    # asymptotic decay rate is the dominant middle-block eigenvalue
    lam = sq[-1] / sq[-2]
    assert xi == pytest.approx(-0.5 * np.log(lam), rel=0.15)


def test_norm_decay_fit_degenerate_at_delta_zero():
    with pytest.raises(DegenerateFit):
        norm_decay_fit(ResonantAnisotropy(1, 2), 12)
    with pytest.raises(ValueError):
        norm_decay_fit(ResonantAnisotropy(1, 3), 5)


def test_charge_densities_container():
    zcd = charge_densities(ResonantAnisotropy(1, 3), 5)
    assert sorted(zcd.by_order) == [2, 3, 4, 5]
    norms = zcd.hs_norms()
    assert norms[2] == pytest.approx(np.sqrt(0.5))


# -- marginal family ------------------------------------------------------------------

def test_marginal_family():
    fam = marginal_charge_densities(1, 6)
    assert fam[2].isclose(golden_q2(), tol=1e-15)
    norms = [fam[d].norm_hs() for d in range(2, 7)]
    assert np.allclose(norms, norms[0])
    fam_m = marginal_charge_densities(-1, 5)
    ref = LocalOperator.build([(-1j, "+000-", 0), (1j, "-000+", 0)])
    assert fam_m[5].isclose(ref, tol=1e-15)
    with pytest.raises(ValueError):
        marginal_charge_densities(2, 5)
