import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtoroidal.params import (Q1, Q3, QC1, QC3, AlgebraParams, ParameterError, check_generic,
                              mono_inv, mono_mul, mono_pow, sample_params)
from qtoroidal.series import (TruncatedSeries, geometric_factor_series, p_order, qpoch,
                              theta_p)


def test_mono_arithmetic():
    assert mono_mul(Q1, Q3) == (-2, 0, 0)
    assert mono_mul(Q1, mono_inv(Q1)) == (0, 0, 0)
    assert mono_pow(QC1, 3) == (-3, 0, 3)


def test_q_parameters_multiply_to_one():
    p = sample_params(2, 2, seed=3)
    assert abs(p.q1 * p.q2 * p.q3 - 1) < 1e-12
    assert abs(p.qc1 * p.qc2 * p.qc3 - 1) < 1e-12


@pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (2, 3), (3, 2)])
def test_sampled_nomes_are_inside_unit_disc(m, n):
    p = sample_params(m, n, seed=11)
    assert p.moduli_ok()
    for z in (p.p, p.pstar, p.pc, p.pcstar):
        assert abs(z) < 1
    assert abs(p.p - p.val(p.p_mono)) < 1e-14
    assert abs(p.q1) < 1 < abs(p.q3)


def test_sampling_is_deterministic():
    assert sample_params(2, 2, seed=7).to_dict() == sample_params(2, 2, seed=7).to_dict()
    assert sample_params(2, 2, seed=7).to_dict() != sample_params(2, 2, seed=8).to_dict()


def test_dict_roundtrip():
    p = sample_params(2, 3, seed=1)
    assert AlgebraParams.from_dict(p.to_dict()) == p


def test_invalid_parameters_rejected():
    with pytest.raises(ParameterError):
        AlgebraParams(2, 2, 1.1, 0.3, 0.3, (1.0,), (1.0, 1.0))
    with pytest.raises(ParameterError):
        AlgebraParams(2, 2, 1.1, 0.0, 0.3, (1.0, 1.0), (1.0, 1.0))


def test_nongeneric_parameters_detected():
    # q1 = q^2 is a resonance
    q = 1.1 * cmath.exp(0.3j)
    p = AlgebraParams(2, 2, q, q**3, 0.3 * q, (1.0, 1.0), (1.0, 1.0))
    with pytest.raises(ParameterError):
        check_generic(p)


def test_bracket():
    p = sample_params(1, 1)
    assert abs(p.bracket(1) - 1) < 1e-14
    assert abs(p.bracket(2) - (p.q + 1 / p.q)) < 1e-13


# -- series -------------------------------------------------------------------

def test_qpoch_and_theta_examples():
    assert qpoch(0.5, 0.0, 5) == pytest.approx(0.5)
    p, z = 0.1, 0.3
    direct = np.prod([1 - z * p**k for k in range(40)])
    assert abs(qpoch(z, p, 39) - direct) < 1e-15
    # quasi-periodicity Theta(p z) = -z^{-1} Theta(z)
    assert abs(theta_p(p * z, p, 60) + theta_p(z, p, 60) / z) < 1e-12
    assert abs(theta_p(1 / z, p, 60) + theta_p(z, p, 60) / z) < 1e-12


def test_p_order():
    assert p_order(0.1, 1e-8) == 9
    assert p_order(0.0, 1e-8) == 0
    with pytest.raises(ValueError):
        p_order(1.0, 1e-8)


def test_geometric_factor_series_matches_direct_product():
    c, p, K = 0.7 - 0.2j, 0.1j, 3
    s = geometric_factor_series(c, p, K, sign=-1, order=6)
    t = 0.05
    direct = np.prod([1 / (1 - c * p**k * t) for k in range(K + 1)])
    val = sum(s.coeff(r) * t**r for r in range(7))
    assert abs(val - direct) < 1e-8


coeff = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(coeff, min_size=6, max_size=6))
def test_reciprocal_is_inverse(cs):
    cs[0] = 1
    s = TruncatedSeries.univariate(cs)
    one = s * s.reciprocal()
    assert one.max_abs_diff(TruncatedSeries.constant(1, order=5)) < 1e-8 * (1 + s.max_abs()) ** 6


@settings(max_examples=40, deadline=None)
@given(st.lists(coeff, min_size=5, max_size=5), st.lists(coeff, min_size=5, max_size=5))
def test_exp_turns_sums_into_products(a, b):
    a[0] = b[0] = 0
    x, y = TruncatedSeries.univariate(a), TruncatedSeries.univariate(b)
    assert ((x + y).exp()).max_abs_diff(x.exp() * y.exp()) < 1e-9 * 10 ** 5


def test_mismatched_variables_rejected():
    with pytest.raises(ValueError):
        TruncatedSeries.univariate([1, 2], "t") + TruncatedSeries.univariate([1, 2], "z")
