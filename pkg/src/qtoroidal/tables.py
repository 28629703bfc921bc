"""Closed-form contraction tables, transcribed literally as an oracle.

Each table maps a row condition on ``(i, k)`` and a column condition on
``(j, l)`` to a product of factors ``(1 - C t)^e`` or ``(C t; P)_inf^e``.
``t`` is the ratio second/first variable of the ordered product.  When two
rows apply at once (``m = 2``: ``i+1 = i-1 mod 2``) their factors multiply.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bosons import BosonExpression, current_coefficient, factors_series
from .params import Q, Q1, Q2, Q3, QC1, QC3, ONE, AlgebraParams, Mono, mono_mul, mono_pow
from .series import TruncatedSeries


class InvalidCase(ValueError):
    pass


Factor = tuple[Mono, "Mono | None", int]  # (C, P or None, e)


def _q(a: int) -> Mono:
    return (a, 0, 0)


def _m(*parts: Mono) -> Mono:
    return mono_mul(*parts)


def _p(x: Mono, k: int) -> Mono:
    return mono_pow(x, k)


def _row(kind: str, m: int, i: int, k: int) -> bool:
    if kind == "eq":
        return (i - k) % m == 0
    if kind == "up":
        return (i + 1 - k) % m == 0
    if kind == "down":
        return (i - 1 - k) % m == 0
    raise AssertionError(kind)


def _col(kind: str, n: int, j: int, l: int) -> bool:
    return {
        "lt": j < l, "eq": j == l, "gt": j > l, "ne": j != l,
        "res": (j - l) % n == 0, "res-1": (j - l + 1) % n == 0,
    }[kind]


@dataclass(frozen=True)
class TableSpec:
    name: str
    first: str  # current kind of the left operator
    second: str
    first_is_ij: bool  # left operator carries (i, j)
    reversed_ratio: bool  # t = z/w rather than w/z
    cells: callable  # (m, n, i, j, k, l) -> {(row, col): [Factor]}


def _ndr_EE(m, n, i, j, k, l):
    q1, q2, q3 = Q1, Q2, Q3
    q2i, q1i, q3i = _p(Q2, -1), _p(Q1, -1), _p(Q3, -1)
    return {
        ("eq", "eq"): [(ONE, None, 1), (q2i, None, 1)],
        ("eq", "gt"): [(q2i, None, 1), (q2, None, -1)],
        ("up", "eq"): [(q1, None, -1)],
        ("up", "gt"): [(q3i, None, 1), (q1, None, -1)],
        ("down", "eq"): [(q3, None, -1)],
        ("down", "gt"): [(q1i, None, 1), (q3, None, -1)],
    }


def _ndr_FF(m, n, i, j, k, l):
    q2i, q1i, q3i = _p(Q2, -1), _p(Q1, -1), _p(Q3, -1)
    return {
        ("eq", "eq"): [(ONE, None, 1), (Q2, None, 1)],
        ("eq", "gt"): [(Q2, None, 1), (q2i, None, -1)],
        ("up", "eq"): [(q3i, None, -1)],
        ("up", "gt"): [(Q1, None, 1), (q3i, None, -1)],
        ("down", "eq"): [(q1i, None, -1)],
        ("down", "gt"): [(Q3, None, 1), (q1i, None, -1)],
    }


# Printed entries that disagree with the first-principles contraction.  The
# corrected factor is the default; ``literal=True`` restores the printed one.
ERRATA: dict[tuple[str, str, str], list] = {
    ("F-F", "down", "gt"): [(Q3, None, 1), (_p(Q3, -1), None, -1)],
}


def _EF(m, n, i, j, k, l):
    return {
        ("eq", "eq"): [(_q(-n + 2 * j), None, -1), (_q(-n + 2 * j + 2), None, -1)],
        ("up", "eq"): [(_m(_q(-n + 2 * j), _p(Q3, -1)), None, 1)],
        ("down", "eq"): [(_m(_q(-n + 2 * j), _p(Q1, -1)), None, 1)],
    }


def _FE(m, n, i, j, k, l):
    return {
        ("eq", "eq"): [(_q(n - 2 * j), None, -1), (_q(n - 2 * j - 2), None, -1)],
        ("up", "eq"): [(_m(_q(n - 2 * j), Q3), None, 1)],
        ("down", "eq"): [(_m(_q(n - 2 * j), Q1), None, 1)],
    }


def _dr_EE(m, n, i, j, k, l):
    P = _p(QC3, -n)  # p*
    q2i, q1i, q3i = _p(Q2, -1), _p(Q1, -1), _p(Q3, -1)
    return {
        ("eq", "lt"): [(Q2, P, 1), (q2i, P, -1)],
        ("eq", "eq"): [(ONE, None, 1), (Q2, P, 1), (_m(P, q2i), P, -1)],
        ("eq", "gt"): [(_m(P, Q2), P, 1), (_m(P, q2i), P, -1)],
        ("up", "lt"): [(Q1, P, 1), (q3i, P, -1)],
        ("up", "eq"): [(_m(P, Q1), P, 1), (q3i, P, -1)],
        ("up", "gt"): [(_m(P, Q1), P, 1), (_m(P, q3i), P, -1)],
        ("down", "lt"): [(Q3, P, 1), (q1i, P, -1)],
        ("down", "eq"): [(_m(P, Q3), P, 1), (q1i, P, -1)],
        ("down", "gt"): [(_m(P, Q3), P, 1), (_m(P, q1i), P, -1)],
    }


def _dr_FF(m, n, i, j, k, l):
    P = _p(QC1, n)  # p
    q2i, q1i, q3i = _p(Q2, -1), _p(Q1, -1), _p(Q3, -1)
    return {
        ("eq", "lt"): [(q2i, P, 1), (Q2, P, -1)],
        ("eq", "eq"): [(ONE, None, 1), (q2i, P, 1), (_m(P, Q2), P, -1)],
        ("eq", "gt"): [(_m(P, q2i), P, 1), (_m(P, Q2), P, -1)],
        ("up", "lt"): [(q3i, P, 1), (Q1, P, -1)],
        ("up", "eq"): [(_m(P, q3i), P, 1), (Q1, P, -1)],
        ("up", "gt"): [(_m(P, q3i), P, 1), (_m(P, Q1), P, -1)],
        ("down", "lt"): [(q1i, P, 1), (Q3, P, -1)],
        ("down", "eq"): [(_m(P, q1i), P, 1), (Q3, P, -1)],
        ("down", "gt"): [(_m(P, q1i), P, 1), (_m(P, Q3), P, -1)],
    }


def _cross(fn):
    """Cross tables: rows eq / down, columns j = l / j = l - 1 (residues)."""
    def cells(m, n, i, j, k, l):
        raw = fn(m, n, i, j, k, l)
        return {(r, {"l": "res", "l-1": "res-1"}[c]): [(C, None, e)] for (r, c), (C, e) in raw.items()}
    return cells


@_cross
def _EEc(m, n, i, j, k, l):
    return {
        ("eq", "l"): (_m(_q(m - n), _p(QC3, -j), _p(Q3, k)), -1),
        ("eq", "l-1"): (_m(_q(m - n - 2), _p(QC3, -j - 1), _p(Q3, k)), 1),
        ("down", "l"): (_m(_q(m - n + 2), _p(QC3, -j), _p(Q3, k + 1)), 1),
        ("down", "l-1"): (_m(_q(m - n), _p(QC3, -j - 1), _p(Q3, k + 1)), -1),
    }


@_cross
def _EcE(m, n, i, j, k, l):
    return {
        ("eq", "l"): (_m(_q(-m + n), _p(QC3, j), _p(Q3, -k)), -1),
        ("eq", "l-1"): (_m(_q(-m + n + 2), _p(QC3, j + 1), _p(Q3, -k)), 1),
        ("down", "l"): (_m(_q(-m + n - 2), _p(QC3, j), _p(Q3, -k - 1)), 1),
        ("down", "l-1"): (_m(_q(-m + n), _p(QC3, j + 1), _p(Q3, -k - 1)), -1),
    }


@_cross
def _FFc(m, n, i, j, k, l):
    return {
        ("eq", "l"): (_m(_p(QC1, j), _p(Q1, -k)), -1),
        ("eq", "l-1"): (_m(_q(2), _p(QC1, j + 1), _p(Q1, -k)), 1),
        ("down", "l"): (_m(_q(-2), _p(QC1, j), _p(Q1, -k - 1)), 1),
        ("down", "l-1"): (_m(_p(QC1, j + 1), _p(Q1, -k - 1)), -1),
    }


@_cross
def _FcF(m, n, i, j, k, l):
    return {
        ("eq", "l"): (_m(_p(QC1, -j), _p(Q1, k)), -1),
        ("eq", "l-1"): (_m(_q(-2), _p(QC1, -j - 1), _p(Q1, k)), 1),
        ("down", "l"): (_m(_q(2), _p(QC1, -j), _p(Q1, k + 1)), 1),
        ("down", "l-1"): (_m(_p(QC1, -j - 1), _p(Q1, k + 1)), -1),
    }


@_cross
def _EFc(m, n, i, j, k, l):
    return {
        ("eq", "l"): (_m(_q(-n + 2), _p(QC3, -j), _p(Q1, -k)), 1),
        ("eq", "l-1"): (_m(_q(-n), _p(QC3, -j - 1), _p(Q1, -k)), -1),
        ("down", "l"): (_m(_q(-n), _p(QC3, -j), _p(Q1, -k - 1)), -1),
        ("down", "l-1"): (_m(_q(-n - 2), _p(QC3, -j - 1), _p(Q1, -k - 1)), 1),
    }


@_cross
def _FcE(m, n, i, j, k, l):
    return {
        ("eq", "l"): (_m(_q(n - 2), _p(QC3, j), _p(Q1, k)), 1),
        ("eq", "l-1"): (_m(_q(n), _p(QC3, j + 1), _p(Q1, k)), -1),
        ("down", "l"): (_m(_q(n), _p(QC3, j), _p(Q1, k + 1)), -1),
        ("down", "l-1"): (_m(_q(n + 2), _p(QC3, j + 1), _p(Q1, k + 1)), 1),
    }


TABLES: dict[str, TableSpec] = {
    "E-E": TableSpec("E-E", "A", "A", True, False, _ndr_EE),
    "F-F": TableSpec("F-F", "B", "B", True, False, _ndr_FF),
    "E-F": TableSpec("E-F", "A", "B", True, False, _EF),
    "F-E": TableSpec("F-E", "B", "A", False, True, _FE),
    "dE-dE": TableSpec("dE-dE", "Ad", "Ad", True, False, _dr_EE),
    "dF-dF": TableSpec("dF-dF", "Bd", "Bd", True, False, _dr_FF),
    "dE-dF": TableSpec("dE-dF", "Ad", "Bd", True, False, _EF),
    "dF-dE": TableSpec("dF-dE", "Bd", "Ad", False, True, _FE),
    "dE-dEc": TableSpec("dE-dEc", "Ad", "Acd", True, False, _EEc),
    "dEc-dE": TableSpec("dEc-dE", "Acd", "Ad", False, True, _EcE),
    "dF-dFc": TableSpec("dF-dFc", "Bd", "Bcd", True, False, _FFc),
    "dFc-dF": TableSpec("dFc-dF", "Bcd", "Bd", False, True, _FcF),
    "dE-dFc": TableSpec("dE-dFc", "Ad", "Bcd", True, False, _EFc),
    "dFc-dE": TableSpec("dFc-dE", "Bcd", "Ad", False, True, _FcE),
}
TABLE_ORDER = list(TABLES)


def resolve_table(table_id) -> TableSpec:
    if isinstance(table_id, int):
        if not 1 <= table_id <= len(TABLE_ORDER):
            raise InvalidCase(f"no table {table_id}")
        return TABLES[TABLE_ORDER[table_id - 1]]
    try:
        return TABLES[table_id]
    except KeyError:
        raise InvalidCase(f"no table {table_id!r}") from None


def matching_factors(table_id, m: int, n: int, i: int, k: int, j: int, l: int,
                     literal: bool = False) -> list[Factor]:
    """Factors of all cells whose conditions hold; raises if none does."""
    spec = resolve_table(table_id)
    cells = spec.cells(m, n, i, j, k, l)
    if literal:
        for (name, r, c), fs in ERRATA.items():
            if name == spec.name:
                cells[(r, c)] = fs
    hits = [fs for (r, c), fs in cells.items() if _row(r, m, i, k) and _col(c, n, j, l)]
    # a listed row with an unlisted column is the constant 1
    row_ok = any(_row(r, m, i, k) for r in {rr for rr, _ in cells})
    if not hits and not row_ok:
        raise InvalidCase(f"{spec.name}: indices (i,k,j,l)=({i},{k},{j},{l}) match no row")
    return [f for fs in hits for f in fs]


def expand_factors(factors: list[Factor], params: AlgebraParams, order: int, K: int) -> TruncatedSeries:
    flat: list[tuple[Mono, complex]] = []
    for C, P, e in factors:
        if P is None:
            flat.append((C, e))
        else:
            flat.extend((mono_mul(C, mono_pow(P, s)), e) for s in range(K + 1))
    return factors_series(flat, params, order)


def table_closed_form(table_id, i: int, k: int, j: int, l: int, params: AlgebraParams,
                      order: int, K: int = 30, literal: bool = False) -> TruncatedSeries:
    """Expand the tabulated contraction; raises ``InvalidCase`` if no row applies."""
    facs = matching_factors(table_id, params.m, params.n, i, k, j, l, literal)
    return expand_factors(facs, params, order, K)


def tabulated_contraction(table_id, i, k, j, l, params, order, K=30,
                          literal: bool = False) -> TruncatedSeries:
    """As ``table_closed_form`` but with the constant 1 outside the listed rows."""
    try:
        return table_closed_form(table_id, i, k, j, l, params, order, K, literal)
    except InvalidCase:
        return TruncatedSeries.constant(1.0, ("t",), order)


def table_operands(table_id, m: int, n: int, i: int, k: int, j: int, l: int
                   ) -> tuple[BosonExpression, BosonExpression]:
    """The annihilation part of the left current and creation part of the right."""
    spec = resolve_table(table_id)
    left = (i, j) if spec.first_is_ij else (k, l)
    right = (k, l) if spec.first_is_ij else (i, j)
    return (current_coefficient(spec.first, m, n, *left, +1),
            current_coefficient(spec.second, m, n, *right, -1))


# -- zero-mode contractions ------------------------------------------------

@dataclass(frozen=True)
class ZeroModeContraction:
    """``(q^var_q * var)^var_pow * q^q_exp * d^d_exp * dc^dc_exp``."""

    var: str
    var_q: int
    var_pow: int
    q_exp: Fraction
    d_exp: Fraction
    dc_exp: Fraction

    def value(self, params: AlgebraParams, z: complex, w: complex) -> complex:
        x = z if self.var == "z" else w
        return ((params.q**self.var_q * x) ** self.var_pow * params.qpow(self.q_exp)
                * params.dpow(self.d_exp) * params.dcpow(self.dc_exp))

    def exponents(self) -> tuple[int, Fraction, Fraction, Fraction]:
        """(power of the variable, total q, d, dc exponents)."""
        return (self.var_pow, Fraction(self.var_q * self.var_pow) + self.q_exp,
                self.d_exp, self.dc_exp)


def _dl(m, a, b):
    return 1 if (a - b) % m == 0 else 0


def zero_mode_contraction(pair: str, i: int, j: int, k: int, l: int, m: int, n: int
                          ) -> ZeroModeContraction:
    """Tabulated zero-mode contractions.

    ``pair`` is one of ``UU, VV, UV, VU`` (both factors of the level-n
    action, left one carrying ``(i,j)``; for ``VU`` the left one is
    ``V^{k,l}(w)``) or ``UUc, UcU, VVc, VcV, UVc, VcU`` (left/right as
    written, the unchecked factor always carrying ``(i,j)``).
    """
    F = Fraction
    if pair in ("UU", "VV", "UV", "VU"):
        abar = -_dl(m, i - 1, k) + 2 * _dl(m, i, k) - _dl(m, i + 1, k)

        def pm(a, b):
            return a * (-_dl(m, a - 1, b) + 2 * _dl(m, a, b) - _dl(m, a + 1, b)) + \
                m * _dl(m, a, 0) * (_dl(m, b, 0) - _dl(m, b, -1))

        djl = _dl(n, j, l)
        half = F(_dl(m, i - 1, k) - _dl(m, i + 1, k), 2)
        if pair == "UU":
            return ZeroModeContraction("z", n - j - 1, abar * djl, F(-(j < l) * abar),
                                       -half - pm(i, k) * (1 - djl), F(0))
        if pair == "VV":
            return ZeroModeContraction("z", j, abar * djl, F(-(j > l) * abar),
                                       -half - pm(i, k) * (1 - djl), F(0))
        if pair == "UV":
            return ZeroModeContraction("z", n - j - 1, -abar * djl, F((j < l) * abar),
                                       half + pm(i, k) * (1 - djl), F(0))
        return ZeroModeContraction("w", l, -abar * djl, F((j < l) * abar),
                                   -half + pm(k, i) * (1 - djl), F(0))
    Dm = _dl(m, i, k) - _dl(m, i - 1, k)
    Dn = _dl(n, j, l) - _dl(n, j, l - 1)
    dpart = (-k * _dl(m, i, k) + (k + 1) * _dl(m, i - 1, k)) * Dn
    dcpart = Dm * (-j * _dl(n, j, l) + (j + 1) * _dl(n, j, l - 1))
    if pair == "UUc":
        return ZeroModeContraction("z", n - 1 - j, -Dm * Dn, F(Dm * (_dl(n, j, l - 1) - _dl(n, 0, l))),
                                   F(dpart), F(0))
    if pair == "UcU":
        return ZeroModeContraction("w", m - 1 - k, -Dm * Dn, F((_dl(m, i - 1, k) - _dl(m, i, 0)) * Dn),
                                   F(0), F(dcpart))
    if pair == "VVc":
        return ZeroModeContraction("z", j, -Dm * Dn, F(-Dm * (_dl(n, j, l) - _dl(n, 0, l))),
                                   F(dpart), F(0))
    if pair == "VcV":
        return ZeroModeContraction("w", k, -Dm * Dn, F(-(_dl(m, i, k) - _dl(m, i, 0)) * Dn),
                                   F(0), F(dcpart))
    if pair == "UVc":
        return ZeroModeContraction("z", n - 1 - j, Dm * Dn, F(-Dm * (_dl(n, j, l - 1) - _dl(n, 0, l))),
                                   F(-dpart), F(0))
    if pair == "VcU":
        return ZeroModeContraction("w", k, Dm * Dn, F((_dl(m, i, k) - _dl(m, i, 0)) * Dn),
                                   F(0), F(-dcpart))
    raise InvalidCase(f"unknown zero-mode pair {pair!r}")


# -- verification against first principles ------------------------------------

ZERO_MODE_PAIRS = {
    # pair -> (left kind, left index, right kind, right index); "a" = (i, j), "b" = (k, l)
    "UU": ("U", "a", "U", "b"), "VV": ("V", "a", "V", "b"), "UV": ("U", "a", "V", "b"),
    "VU": ("V", "b", "U", "a"), "UUc": ("U", "a", "Uc", "b"), "UcU": ("Uc", "b", "U", "a"),
    "VVc": ("V", "a", "Vc", "b"), "VcV": ("Vc", "b", "V", "a"), "UVc": ("U", "a", "Vc", "b"),
    "VcU": ("Vc", "b", "U", "a"),
}


def check_contraction_tables(params: AlgebraParams, order: int = 8, tol: float = 1e-8) -> list:
    """Every cell of every table against the contraction computed from ``[a, a]``.

    Nome products are cut where the omitted tail is below ``tol / 10``.
    Series are compared after the rescaling of ``scaled_deviation``.  One
    record per table holds the worst cell.  A last record compares the
    zero-mode contractions with the rule used by the normal-ordered products.
    """
    import itertools

    from .bosons import commutator_magnitude, contraction_series
    from .report import CheckRecord
    from .series import p_order, scaled_deviation
    from .vertex import zero_mode_contraction_exponents, zero_mode_factor

    m, n = params.m, params.n
    nome = max(abs(params.p), abs(params.pstar), abs(params.pc), abs(params.pcstar))
    K = p_order(nome, tol)
    out = []
    for name in TABLE_ORDER:
        worst, cells = 0.0, 0
        for i, k, j, l in itertools.product(range(m), range(m), range(n), range(n)):
            x, y = table_operands(name, m, n, i, k, j, l)
            direct = contraction_series(x, y, params, order)
            table = tabulated_contraction(name, i, k, j, l, params, order, K)
            rho = commutator_magnitude(x, y, params, order)
            worst = max(worst, scaled_deviation(direct, table, rho))
            cells += 1
        out.append(CheckRecord(f"contraction-{name}", {"order": order, "K": K}, worst, tol,
                               "identity", cells))
    bad = 0
    for pair, (lk, li, rk, ri) in ZERO_MODE_PAIRS.items():
        for i, j, k, l in itertools.product(range(m), range(n), range(m), range(n)):
            idx = {"a": (i, j), "b": (k, l)}
            got = zero_mode_contraction_exponents(zero_mode_factor(lk, m, n, *idx[li]),
                                                  zero_mode_factor(rk, m, n, *idx[ri]), m, n)
            bad += tuple(got) != tuple(zero_mode_contraction(pair, i, j, k, l, m, n).exponents())
    out.append(CheckRecord("contraction-zero-mode", {}, float(bad), 0.0, "identity", 1))
    return out
