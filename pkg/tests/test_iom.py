import cmath

import numpy as np
import pytest

from qtoroidal.fock import FockBasis
from qtoroidal.iom import (KINDS, Kernel, PrescriptionError, Truncation, build_iom,
                           classify_pole, contour_quadrature, duality_weights, h_kernel,
                           kind_nome, lattice_theta, lattice_theta_terms, qpoch_series,
                           series_at_nome, theta_q, theta_radius, verify_duality,
                           DualitySettings)
from qtoroidal.params import Q1, Q3, mono_inv, mono_mul, sample_params
from qtoroidal.series import qpoch, theta_p


@pytest.fixture(scope="module")
def params():
    return sample_params(2, 2, seed=0)


def laurent_at(coeffs: dict, z):
    return sum(c * z**k for k, c in coeffs.items())


def test_theta_series_low_orders():
    t0 = theta_q(0)
    assert t0.coeff(0, 0) == 1 and t0.coeff(0, 1) == -1 and t0.coeff(0, -1) == 0
    # p^1: (1 - z)(-1/z - 1 - z) = -1/z + z^2
    t1 = theta_q(1)
    got = {z: t1.coeff(1, z) for z in range(-2, 4)}
    assert got == {-2: 0, -1: -1, 0: 0, 1: 0, 2: 1, 3: 0}


def test_theta_series_numerically():
    p, z, K = 0.05 + 0.02j, 0.7 - 0.3j, 6
    val = laurent_at(series_at_nome(theta_q(K), p), z)
    assert abs(val - theta_p(z, p, 60)) < 10 * abs(p) ** (K + 1)


def test_qpoch_series_reciprocal():
    c, z, p, K = 0.5 - 0.2j, 0.3 + 0.1j, 0.05, 8
    plus = laurent_at(series_at_nome(qpoch_series(c, K, 1, 30), p), z)
    minus = laurent_at(series_at_nome(qpoch_series(c, K, -1, 30), p), z)
    assert abs(plus - qpoch(c * z, p, 60)) < 1e-10
    assert abs(plus * minus - 1) < 1e-10


def test_rank_two_theta_terms():
    # beta = k alpha_1: weight p^{k^2} p_1^{-k}, monomial z1^{2k} z2^{-2k}
    terms = {t.zexp: t for t in lattice_theta_terms(2, 0, 3)}
    for k in range(-3, 4):
        t = terms[(2 * k, -2 * k)]
        assert t.norm == k * k and t.lam == (k,)
    half = {t.zexp: t for t in lattice_theta_terms(2, 1, 2)}
    for k in range(-2, 3):
        assert float(half[(2 * k + 1, -2 * k - 1)].norm) == pytest.approx((k + 0.5) ** 2)


def test_rank_two_theta_values():
    lp, lp1 = cmath.log(0.1 + 0.05j), cmath.log(0.8 - 0.3j)
    th = lattice_theta(2, 0, lp, [lp1], 4)
    for k in range(-4, 5):
        want = cmath.exp(k * k * lp - k * lp1)
        assert abs(th.coeff(2 * k, -2 * k) - want) < 1e-15 * max(1, abs(want))


def test_theta_radius_converges():
    lp, lp1 = cmath.log(0.1), cmath.log(1.3j)
    B = theta_radius(0.1, 1e-16)
    a = lattice_theta(2, 1, lp, [lp1], B)
    b = lattice_theta(2, 1, lp, [lp1], B + 1)
    # value at z1 = z2 = 1
    assert abs(np.sum(a.coeffs) - np.sum(b.coeffs)) < 1e-14


def test_h_kernel_is_inverse_theta_product(params):
    spec = KINDS["G"]
    ker = h_kernel(params, spec, 30)
    p = params.val(kind_nome(params, spec)[0])
    t = 0.9 * cmath.exp(0.4j)
    want = 1 / (theta_p(t / params.q3, p, 60) * theta_p(params.q1 / t, p, 60))
    assert abs(ker.values(params, t) - want) < 1e-10 * abs(want)


def test_pole_classification(params):
    nome, coord = kind_nome(params, KINDS["G"])
    assert classify_pole(Q3, nome, coord, False)
    assert not classify_pole(mono_inv(Q3), nome, coord, False)
    assert classify_pole(mono_mul(mono_inv(Q1), nome), nome, coord, False)
    assert not classify_pole(mono_mul(Q1, mono_inv(nome)), nome, coord, False)
    assert not classify_pole(Q3, nome, coord, True)
    with pytest.raises(PrescriptionError):
        classify_pole((0, 1, 0), nome, coord, False)


def test_contour_adds_misplaced_residue(params):
    # t / (1 - t/q3): the pole at q3 lies outside the unit circle but belongs inside
    ker = Kernel(tpow=1, factors={mono_inv(Q3): -1})
    quad = contour_quadrature(ker, params, KINDS["G"])
    val = np.sum(quad.w * ker.values(params, quad.t))
    assert [c[2] for c in quad.corrected] == ["add"]
    assert abs(val + params.q3) < 1e-12


def test_build_iom_structure(params):
    basis = FockBasis(2, 2, 1, 1)
    w, wc = duality_weights(params)
    tr = Truncation(1, 1, K=2)
    for kind in KINDS:
        g = build_iom(params, basis, kind, 0, wc if KINDS[kind].dual else w, tr)
        assert g.op.degree == 0 and g.op.mat.nnz > 0
        assert g.meta["K"] == 2 and g.meta["B"] >= 1


def test_rank_three_not_supported():
    p = sample_params(3, 2, seed=0)
    w, _ = duality_weights(p)
    with pytest.raises(NotImplementedError):
        build_iom(p, FockBasis(3, 2, 0, 1), "G", 0, w, Truncation(0, 1, 1))


def test_duality_small_truncation(params):
    recs = verify_duality(params, DualitySettings(D_max=1, L_max=1, ladder=(1, 2, 3)))
    checks = {r.check for r in recs}
    assert {"iom-duality", "iom-control", "iom-self", "iom-block", "iom-vacuum"} <= checks
    bad = [(r.check, r.case) for r in recs if r.check in ("iom-block", "iom-vacuum")
           and not r.passed]
    assert not bad
    duality = {r.case["pair"]: r for r in recs if r.check == "iom-duality"}
    assert all(r.meta["monotone"] for r in duality.values())
    assert duality["G/Gc"].passed
    for r in duality.values():
        lad = list(r.meta["ladder"].values())
        assert lad[-1] < lad[0] / 20
