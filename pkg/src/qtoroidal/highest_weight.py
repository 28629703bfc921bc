"""Highest-weight data of the level-one modules ``F_{m,1}(u)``.

The sector of total charge ``s = m l + nu`` is generated by
``v(s) = |l+1, ..., l+1, l, ..., l>`` (``nu`` entries ``l+1``).  The first
Cartan mode of the rotated algebra, written as nested q-commutators of
``F_{i,k}`` with ``k in {-1, 0, 1}``, acts on ``v(s)`` by the ``1/z``
coefficient of ``log P_i(z) / (q - 1/q)``, where ``P_nu(z) = q (1 - u/(q2 z)) / (1 - u/z)``
and ``P_i = 1`` otherwise.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .fock import FockBasis, FockBasisState, GradedSparseOperator
from .params import AlgebraParams
from .report import CheckRecord
from .vertex import build_current


def qbracket(x: GradedSparseOperator, y: GradedSparseOperator, p: complex) -> GradedSparseOperator:
    """``[X, Y]_p = X Y - p Y X``."""
    return x @ y - (y @ x).scale(p)


def split_charge(m: int, s: int) -> tuple[int, int]:
    """``s = m l + nu`` with ``0 <= nu < m``."""
    l, nu = divmod(s, m)
    return l, nu


def highest_weight_lattice(m: int, s: int) -> tuple[int, ...]:
    l, nu = split_charge(m, s)
    return tuple([l + 1] * nu + [l] * (m - nu))


def highest_weight_degree(m: int, s: int) -> Fraction:
    l, nu = split_charge(m, s)
    return Fraction(nu, 2) * (l + 1) ** 2 + Fraction(m - nu, 2) * l**2


def highest_weight_spectral(params: AlgebraParams, u: complex, s: int) -> complex:
    """``u(s) = (-1)^m d^{-s-m/2} q u``."""
    m = params.m
    return (-1) ** m * params.dpow(Fraction(-2 * s - m, 2)) * params.q * u


def theta_inverse_H1(params: AlgebraParams, basis: FockBasis, i: int) -> GradedSparseOperator:
    """Image of ``H_{i,1}`` under the inverse rotation, on the level-one module.

    ``1 <= i <= m-1``: ``-(-d)^{-i} [[..[[..[F_{0,0}, F_{m-1,0}]_q .., F_{i+1,0}]_q,
    F_{1,0}]_q .. F_{i-1,0}]_q, F_{i,0}]_{q^2}``;
    ``i = 0``: ``-(-d)^{1-m} [[..[F_{1,1}, F_{2,0}]_q .., F_{m-1,0}]_q, F_{0,-1}]_{q^2}``.
    """
    m, q, d = params.m, params.q, params.d
    F = [build_current(params, basis, "F", j) for j in range(m)]
    i %= m
    if i:
        acc = F[0].mode(0)
        for j in list(range(m - 1, i, -1)) + list(range(1, i)):
            acc = qbracket(acc, F[j].mode(0), q)
        acc = qbracket(acc, F[i].mode(0), q**2)
        return acc.scale(-((-d) ** (-i)))
    acc = F[1].mode(1)
    for j in range(2, m):
        acc = qbracket(acc, F[j].mode(0), q)
    acc = qbracket(acc, F[0].mode(-1), q**2)
    return acc.scale(-((-d) ** (1 - m)))


def check_highest_weight(params: AlgebraParams, u: complex | None = None, s_max: int = 3,
                         D_max: int = 3, tol: float = 1e-8) -> list[CheckRecord]:
    """Degree, central charge and first Cartan eigenvalues of every ``v(s)``, ``|s| <= s_max``."""
    m, q = params.m, params.q
    u = params.u[0] if u is None else u
    lev = params.as_level_one(u)
    L = max(abs(x) for s in range(-s_max, s_max + 1) for x in highest_weight_lattice(m, s)) + 1
    basis = FockBasis(m, 1, D_max, L)
    thetas = [theta_inverse_H1(lev, basis, i) for i in range(m)]
    weights = basis.weights()
    out = []
    for s in range(-s_max, s_max + 1):
        l, nu = split_charge(m, s)
        k = basis.index(FockBasisState(highest_weight_lattice(m, s), ()))
        case = {"s": s, "nu": nu}
        t = highest_weight_degree(m, s)
        out.append(CheckRecord("hw-degree", case, abs(basis.degrees[k] - float(t)), tol,
                               "identity", 1))
        central = q ** float(weights[k].sum())
        out.append(CheckRecord("hw-central", case, abs(central - q**s) / abs(q**s), tol,
                               "identity", 1))
        us = highest_weight_spectral(lev, u, s)
        for i in range(m):
            expected = us * (1 - 1 / params.q2) / (q - 1 / q) if i == nu else 0.0
            op = thetas[i]
            col = op.mat[:, k].toarray().ravel()
            target = np.zeros(basis.size, dtype=complex)
            target[k] = expected
            res = float(np.abs(col - target).max()) / max(abs(expected), 1.0)
            out.append(CheckRecord("hw-theta-H1", {**case, "i": i}, res, tol, "identity",
                                   0 if op.leak[k] else 1, {"expected": expected}))
    return out
