"""Acceptance gate: one test per criterion, at the stated tolerances.

Each test is a self-contained pass/fail line under `pytest -v`; supporting
detail is printed so failures carry the measured numbers.
"""
import itertools
import time

import numpy as np
import pytest
from scipy.linalg import expm

from drudebound.charges import (
    XxzParams,
    generate_charges,
    hamiltonian_density,
)
from drudebound.drude import (
    dz_closed_form,
    dz_numeric,
    mazur_bound_multi,
    mazur_bound_zcharge,
)
from drudebound.ed import (
    clustering_fit,
    cn_of_t,
    current_matrix,
    diagonalize,
    hamiltonian_matrix,
    light_cone_scan,
    magnetization_matrix,
    suzuki_finite_check,
)
from drudebound.pauli import LocalOperator, adjoint, commutator, shift
from drudebound.zcharge import (
    L_IDX,
    R_IDX,
    ResonantAnisotropy,
    assemble_charge,
    boundary_residual,
    build_mpo,
    density,
)
from tests import golden

FIVE_RESONANCES = [(1, 2), (1, 3), (1, 4), (2, 5), (1, 5)]
ALL_TESTED_RESONANCES = FIVE_RESONANCES + [(2, 3), (3, 4), (3, 5), (4, 5), (3, 7), (2, 7)]


def test_criterion_01_golden_boost_charges():
    """Printed q3..q5, p2..p4 reproduced at Delta in {0.3, 0.5, 0.9} to 1e-10."""
    worst = 0.0
    for delta in (0.3, 0.5, 0.9):
        seq = generate_charges(XxzParams(delta), 5)
        pairs = [
            (seq.q(3), golden.q3(delta)),
            (seq.q(4), golden.q4(delta)),
            (seq.q(5), golden.q5(delta)),
            (seq.p(2), golden.p2(delta)),
            (seq.p(3), golden.p3(delta)),
            (seq.p(4), golden.p4(delta)),
        ]
        for got, want in pairs:
            diff = got - want
            err = max((abs(c) for c in diff.terms.values()), default=0.0)
            worst = max(worst, err)
            assert err <= 1e-10
    print(f"criterion 1 PASS: worst coefficient error {worst:.2e} <= 1e-10")


def test_criterion_02_golden_mpo_densities():
    """Printed q^(2), q^(3), q^(4) at every tested resonance to 1e-12."""
    def q2_ref():
        return LocalOperator.build([(1j, "+-", 0), (-1j, "-+", 0)])

    def q3_ref(d):
        return LocalOperator.build([(1j * d, "+0-", 0), (-1j * d, "-0+", 0)])

    def q4_ref(d):
        c = 2j * d * (d**2 - 1)
        return LocalOperator.build(
            [
                (1j * d**2, "+00-", 0), (-1j * d**2, "-00+", 0),
                (c, "++--", 0), (-c, "--++", 0),
            ]
        )

    for l, m in ALL_TESTED_RESONANCES:
        res = ResonantAnisotropy(l, m)
        mpo = build_mpo(res)
        assert density(mpo, 2).isclose(q2_ref(), tol=1e-12)
        assert density(mpo, 3).isclose(q3_ref(res.delta), tol=1e-12)
        assert density(mpo, 4).isclose(q4_ref(res.delta), tol=1e-12)
    print(f"criterion 2 PASS: q^(2..4) match at {len(ALL_TESTED_RESONANCES)} resonances <= 1e-12")


def test_criterion_03_boundary_identity():
    """[H_n, Q_n] = -2i z_1 + 2i z_n at d_max = n = 12, residual < 1e-10."""
    start = time.time()
    res = ResonantAnisotropy(1, 3)
    n = 12
    _, coeff_sum = boundary_residual(res, n, n)
    elapsed = time.time() - start
    assert coeff_sum < 1e-10
    assert elapsed < 60
    print(f"criterion 3 PASS: residual coefficient sum {coeff_sum:.2e} < 1e-10 "
          f"({elapsed:.1f}s)")


def test_criterion_04_fractal_stiffness():
    """dz_numeric matches the closed form to 1e-6 on the five resonances."""
    worst = 0.0
    for l, m in FIVE_RESONANCES:
        res = ResonantAnisotropy(l, m)
        err = abs(dz_numeric(res) - dz_closed_form(res))
        worst = max(worst, err)
        assert err <= 1e-6
    print(f"criterion 4 PASS: worst |dz_numeric - dz_closed| {worst:.2e} <= 1e-6")


def test_criterion_05_mazur_convergence():
    """(1,3) bound at d_max=40 within 1% of 2.25; monotone beyond d_max=m."""
    res = ResonantAnisotropy(1, 3)
    rep = mazur_bound_zcharge(res, 40)
    target = 4 * dz_closed_form(res)
    rel = abs(rep.bound - target) / target
    assert rel < 0.01
    tail = [b for d, b in rep.convergence if d >= res.m]
    assert all(a >= b - 1e-12 for a, b in zip(tail, tail[1:]))
    print(f"criterion 5 PASS: bound {rep.bound:.10f} vs 4*D_Z {target} "
          f"(rel err {rel:.2e} < 1%), monotone tail")


def test_criterion_06_symmetry_vanishing():
    """chi=0: all w_k (k<=5) < 1e-12 and bound 0; chi=0.5: bound > 0."""
    rep0 = mazur_bound_multi(generate_charges(XxzParams(0.5), 5))
    assert np.all(np.abs(rep0.wk) < 1e-12)
    assert abs(rep0.bound) < 1e-12
    rep = mazur_bound_multi(generate_charges(XxzParams(0.5, chi=0.5), 3))
    assert rep.bound > 0
    print(f"criterion 6 PASS: chi=0 max|w_k| {np.abs(rep0.wk).max():.2e}, bound "
          f"{rep0.bound:.2e}; chi=0.5 bound {rep.bound:.6f} > 0")


def test_criterion_07_suzuki_randomized():
    """lhs >= rhs - 1e-8 on 20 random (n, Delta, beta) configs with {M, H}."""
    rng = np.random.default_rng(20260826)
    worst_margin = np.inf
    for _ in range(20):
        n = int(rng.integers(3, 9))
        delta = float(rng.uniform(-2.0, 2.0))
        beta = float(rng.uniform(0.0, 2.0))
        spec = diagonalize(n, XxzParams(delta))
        lhs, rhs = suzuki_finite_check(
            spec, [magnetization_matrix(n), hamiltonian_matrix(n, spec.params)], beta
        )
        assert lhs >= rhs - 1e-8
        worst_margin = min(worst_margin, lhs - rhs)
    diagonalize.cache_clear()
    print(f"criterion 7 PASS: 20 configs, worst lhs-rhs margin {worst_margin:.2e} >= -1e-8")


def test_criterion_08_mpo_vs_bruteforce():
    """Sweep agrees with the literal 3^(d-2) enumeration for d<=10, m<=5."""
    start = time.time()
    for l, m in [lm for lm in ALL_TESTED_RESONANCES if lm[1] <= 5]:
        mpo = build_mpo(ResonantAnisotropy(l, m))
        mats = {"0": mpo.a0, "+": mpo.aplus, "-": mpo.aminus}
        for d in range(2, 11):
            coeffs = {}
            for mid in itertools.product("0+-", repeat=d - 2):
                vec = mpo.aplus[L_IDX]
                for s in mid:
                    vec = vec @ mats[s]
                c = (vec @ mpo.aminus)[R_IDX]
                if abs(c) > 1e-16:
                    coeffs["+" + "".join(mid) + "-"] = c
            w = LocalOperator.build([(c, s, 0) for s, c in coeffs.items()])
            brute = 1j * (w - adjoint(w))
            assert density(mpo, d).isclose(brute, tol=1e-12)
    elapsed = time.time() - start
    assert elapsed < 60
    print(f"criterion 8 PASS: sweep == brute force for d<=10, m<=5 ({elapsed:.1f}s)")


def test_criterion_09_dynamics_cross_check():
    """Spectral cn_of_t vs direct matrix-exponential evolution to 1e-8."""
    worst = 0.0
    for n, delta, beta in ((6, 0.5, 0.0), (8, 0.5, 0.7), (7, 1.0, 0.2)):
        par = XxzParams(delta)
        spec = diagonalize(n, par)
        h = hamiltonian_matrix(n, par)
        j = current_matrix(n)
        rho = expm(-beta * h)
        rho /= np.trace(rho)
        for t in (0.5, 2.5, 7.0, 12.5, 20.0):
            u = expm(1j * h * t)
            ref = float(np.trace(rho @ j @ u @ j @ u.conj().T).real) / n
            err = abs(cn_of_t(spec, t, beta) - ref)
            worst = max(worst, err)
            assert err <= 1e-8
    diagonalize.cache_clear()
    print(f"criterion 9 PASS: worst |spectral - expm| {worst:.2e} <= 1e-8 (t <= 20)")


def test_criterion_10_light_cone_clustering():
    """n=12, Delta=0.5: mu, rho > 0 at beta in {0.5, 1}; exact zeros at t=0."""
    z1 = LocalOperator.build([(1.0, "z", 1)])
    fit = light_cone_scan(
        12, XxzParams(0.5), z1, z1,
        t_grid=[0.0, 0.5, 1.0, 1.5], x_grid=[2, 4, 6, 8, 10], beta=0.5,
    )
    for x, t, nrm in fit.commutator_norms:
        if t == 0.0:
            assert nrm == 0.0  # disjoint supports: exactly zero
    assert fit.fitted_mu > 0
    assert fit.fitted_rho > 0
    assert fit.fitted_v > 0
    _, _, rho1 = clustering_fit(12, XxzParams(0.5), z1, z1, [2, 4, 6, 8, 10], 1.0)
    assert rho1 > 0
    diagonalize.cache_clear()
    print(f"criterion 10 PASS: mu {fit.fitted_mu:.3f} > 0, rho(0.5) "
          f"{fit.fitted_rho:.3f} > 0, rho(1.0) {rho1:.3f} > 0, v {fit.fitted_v:.2f} > 0; "
          f"t=0 disjoint norms exactly 0")
