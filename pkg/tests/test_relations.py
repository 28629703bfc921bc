import pytest

from qtoroidal.coproduct import coproduct_cross_check
from qtoroidal.fock import FockBasis
from qtoroidal.highest_weight import (check_highest_weight, highest_weight_degree,
                                      highest_weight_lattice, split_charge)
from qtoroidal.params import sample_params
from qtoroidal.relations import (check_affine_commutativity, check_defining_relations,
                                 check_delta_commutators, check_pointwise_cancellation)


def failures(recs):
    return [(r.check, r.case, r.residual) for r in recs if not r.passed]


@pytest.fixture(scope="module")
def small():
    params = sample_params(2, 2, seed=1)
    return params, FockBasis(2, 2, 2, 1)


@pytest.mark.parametrize("dual", [False, True])
def test_defining_relations_small(small, dual):
    params, basis = small
    recs = check_defining_relations(params, basis, dual, window=2, r_max=2)
    assert not failures(recs)
    assert sum(not r.vacuous for r in recs) > 0.8 * len(recs)


def test_defining_relations_rank_three():
    params = sample_params(3, 2, seed=2)
    basis = FockBasis(3, 2, 1, 1)
    recs = check_defining_relations(params, basis, False, window=1, r_max=1, which=("CK", "EF"))
    assert recs and not failures(recs)


def test_affine_commutativity_and_witness(small):
    params, basis = small
    recs = check_affine_commutativity(params, basis, window=1, r_max=1)
    assert not failures(recs)
    witnesses = [r for r in recs if r.kind == "witness"]
    assert len(witnesses) == 1 and witnesses[0].residual > 1e3 * witnesses[0].tol


@pytest.mark.parametrize("dressed", [False, True])
def test_pointwise_cancellation(small, dressed):
    params, basis = small
    recs = check_pointwise_cancellation(params, basis, dressed)
    assert recs and not failures(recs)


def test_delta_commutators(small):
    params, basis = small
    recs = check_delta_commutators(params, basis, dressed=True, window=1)
    assert recs and not failures(recs)


def test_coproduct_cross_check():
    recs = coproduct_cross_check(sample_params(3, 2, seed=0), D_max=1, L_max=1, window=1, r_max=1)
    assert recs and not failures(recs)


def test_highest_weight_data():
    m = 3
    for s in range(-4, 5):
        lam = highest_weight_lattice(m, s)
        assert sum(lam) == s
        assert float(highest_weight_degree(m, s)) == pytest.approx(0.5 * sum(x * x for x in lam))
        l, nu = split_charge(m, s)
        assert s == m * l + nu and 0 <= nu < m


@pytest.mark.parametrize("m", [2, 3])
def test_highest_weight_vectors(m):
    recs = check_highest_weight(sample_params(m, 2, seed=3), s_max=2, D_max=2)
    assert recs and not failures(recs)
    assert all(r.exact_cols for r in recs)
