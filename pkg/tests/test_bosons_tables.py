import itertools

import numpy as np
import pytest

from qtoroidal.bosons import (check_boson_algebra, closed_contraction, commutator_magnitude,
                              contraction_series)
from qtoroidal.fock import FockBasis
from qtoroidal.params import sample_params
from qtoroidal.series import scaled_deviation
from qtoroidal.tables import (TABLE_ORDER, InvalidCase, check_contraction_tables,
                              table_closed_form, table_operands, tabulated_contraction)
from qtoroidal.vertex import osc_vertex_matrix


@pytest.mark.parametrize("m,n", [(2, 2), (2, 3), (3, 2)])
def test_boson_algebra(m, n):
    recs = check_boson_algebra(sample_params(m, n, seed=1), r_max=4)
    assert recs and all(r.passed for r in recs)


@pytest.mark.parametrize("seed", [0, 5])
@pytest.mark.parametrize("m,n", [(2, 2), (3, 2)])
def test_contraction_tables(m, n, seed):
    recs = check_contraction_tables(sample_params(m, n, seed=seed), order=6)
    assert len(recs) == len(TABLE_ORDER) + 1
    bad = [(r.check, r.residual) for r in recs if not r.passed]
    assert not bad


def test_closed_form_agrees_with_numeric_commutators():
    params = sample_params(2, 3, seed=2)
    for name in ("E-F", "dE-dE", "dF-dFc"):
        x, y = table_operands(name, 2, 3, 1, 0, 2, 1)
        a = contraction_series(x, y, params, 6)
        b = closed_contraction(x, y, params, 6, K=40)
        assert scaled_deviation(a, b, commutator_magnitude(x, y, params, 6)) < 1e-10


def test_printed_ff_cell_disagrees():
    # row i-1 = k, column j > l; m = 3 keeps it apart from the i+1 row
    params = sample_params(3, 2, seed=0)
    i, k, j, l = 1, 0, 1, 0
    x, y = table_operands("F-F", 3, 2, i, k, j, l)
    direct = contraction_series(x, y, params, 5)
    rho = commutator_magnitude(x, y, params, 5)
    fixed = tabulated_contraction("F-F", i, k, j, l, params, 5)
    printed = tabulated_contraction("F-F", i, k, j, l, params, 5, literal=True)
    assert scaled_deviation(direct, fixed, rho) < 1e-10
    assert scaled_deviation(direct, printed, rho) > 1e-3


def test_unlisted_row_raises():
    with pytest.raises(InvalidCase):
        # E-E has no row for k = i + 2 when m = 4
        table_closed_form("E-E", 0, 2, 0, 0, sample_params(4, 2, seed=0), 4)
    assert tabulated_contraction("E-E", 0, 2, 0, 0, sample_params(4, 2, seed=0), 4).coeff(1) == 0


@pytest.mark.parametrize("name", ["E-E", "E-F", "dE-dF", "dE-dEc", "dFc-dE"])
def test_product_of_vertex_matrices_reproduces_contraction(name):
    """Vacuum element of X(z) Y(w), summed over intermediate states degree by degree.

    The intermediate sum is a series in t = w/z whose coefficients come from
    the exponentiated oscillator matrices alone; it must match the tabulated
    factor product.
    """
    params = sample_params(2, 2, seed=4)
    D = 4
    basis = FockBasis(2, 2, D, 0)
    vac = basis.osc.index[()]
    degs = basis.osc.degrees
    for i, k, j, l in itertools.product(range(2), repeat=4):
        x, y = table_operands(name, 2, 2, i, k, j, l)
        X = osc_vertex_matrix(params, basis, x, None).tocsr()
        Y = osc_vertex_matrix(params, basis, None, y).tocsc()
        row = X[vac].toarray().ravel()
        col = Y[:, vac].toarray().ravel()
        got = [np.sum((row * col)[degs == d]) for d in range(D + 1)]
        want = tabulated_contraction(name, i, k, j, l, params, D)
        rho = commutator_magnitude(x, y, params, D)
        for d in range(D + 1):
            assert abs(got[d] - want.coeff(d)) <= 1e-9 * rho**d
