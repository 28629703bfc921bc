import numpy as np
import pytest

from qtoroidal.cache import OperatorCache, load_operator, save_operator
from qtoroidal.fock import (BasisTooLarge, FockBasis, apply_boson, apply_zero_mode,
                            boson_operator, commutator, relative_residual, zero_mode_operator)
from qtoroidal.params import sample_params


@pytest.fixture(scope="module")
def setup():
    params = sample_params(2, 2, seed=0)
    return params, FockBasis(2, 2, 2, 1)


def partitions_count(n_colors, D):
    # number of multisets of labels (colour, r) with total weight <= D
    gen = np.zeros(D + 1, dtype=object)
    gen[0] = 1
    for r in range(1, D + 1):
        for _ in range(n_colors):
            for k in range(r, D + 1):
                gen[k] += gen[k - r]
    return int(sum(gen))


@pytest.mark.parametrize("m,n,D,L", [(1, 1, 3, 1), (2, 2, 2, 1), (2, 3, 1, 1)])
def test_basis_size(m, n, D, L):
    b = FockBasis(m, n, D, L)
    assert b.size == partitions_count(m * n, D) * (2 * L + 1) ** (m * n)


def test_basis_order_and_lookup(setup):
    _, b = setup
    states = b.states()
    keys = [(s.lattice, s.osc) for s in states]
    assert keys == sorted(keys)
    for k in range(0, b.size, 37):
        assert b.index(states[k]) == k
    assert np.all(b.degrees >= 0)


def test_basis_cap():
    with pytest.raises(BasisTooLarge):
        FockBasis(3, 3, 3, 1, cap=1000)


def test_boson_matrix_matches_statewise_action(setup):
    params, b = setup
    for label in [(0, 1, -1), (1, 0, 2), (1, 1, -2)]:
        op = boson_operator(params, b, *label)
        dense = op.mat.toarray()
        for k in range(0, b.size, 11):
            img, trunc = apply_boson(params, b, label, b.state(k))
            col = np.zeros(b.size, complex)
            for st, c in img.items():
                col[b.index(st)] = c
            assert np.allclose(dense[:, k], col)
            if trunc:
                assert op.leak[k]


def test_heisenberg_commutator(setup):
    params, b = setup
    for r in (1, 2):
        a, ad = boson_operator(params, b, 0, 1, r), boson_operator(params, b, 0, 1, -r)
        lhs = commutator(a, ad)
        ref = params.bracket(r) ** 2 / r
        mask = lhs.exact
        d = lhs.mat.toarray()[:, mask] - ref * np.eye(b.size)[:, mask]
        assert np.abs(d).max() < 1e-12 and mask.sum() > 0


def test_zero_modes_anticommute(setup):
    _, b = setup
    x = zero_mode_operator(b, "e+", 0, 0)
    y = zero_mode_operator(b, "e+", 1, 1)
    res, ncols = relative_residual(x @ y, (y @ x).scale(-1))
    assert res == 0 and ncols > 0
    inv = zero_mode_operator(b, "e-", 0, 0)
    res, ncols = relative_residual(x @ inv, inv @ x)
    assert res == 0 and ncols > 0


def test_zero_mode_statewise(setup):
    _, b = setup
    op = zero_mode_operator(b, "e+", 1, 0).mat.toarray()
    for k in range(0, b.size, 13):
        img, _ = apply_zero_mode(b, "e+", 1, 0, b.state(k))
        for st, c in img.items():
            assert op[b.index(st), k] == c


def test_cache_roundtrip_and_mismatch(tmp_path, setup):
    params, b = setup
    op = boson_operator(params, b, 1, 0, -1)
    key = {"op": "a", "r": -1}
    path = tmp_path / "x.trip"
    save_operator(path, op, key)
    back = load_operator(path, b, key)
    assert abs(back.mat - op.mat).max() == 0
    assert np.array_equal(back.leak, op.leak) and back.degree == op.degree
    assert back.shifts == op.shifts
    assert load_operator(path, b, {"op": "a", "r": -2}) is None
    assert load_operator(path, FockBasis(2, 2, 1, 1), key) is None
    path.write_text("garbage")
    assert load_operator(path, b, key) is None


def test_operator_cache_counts(tmp_path, setup):
    params, b = setup
    store = OperatorCache(tmp_path)
    calls = []

    def build():
        calls.append(1)
        return boson_operator(params, b, 0, 0, 1)

    store.get_or_build(b, {"k": 1}, build)
    store.get_or_build(b, {"k": 1}, build)
    store.get_or_build(b, {"k": 2}, build)
    assert (store.hits, store.misses, len(calls)) == (1, 2, 2)
