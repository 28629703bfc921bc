"""Linear combinations of the bosons ``a^{i,j}_{+-r}`` with r-dependent coefficients.

A coefficient is a sum of terms ``k * B^r * [r]^e * r^s / prod_P (1 - P^r)`` where
``B`` and every ``P`` are Laurent monomials in ``(q, d, dc)``.  Keeping this
shape symbolic lets us evaluate at any ``r`` and, for commutators, read the
contraction off as an infinite product in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from .params import (ONE, Q, Q1, Q2, Q3, QC1, QC3, AlgebraParams, Mono, mono_inv,
                     mono_mul, mono_pow)
from .series import TruncatedSeries


@dataclass(frozen=True)
class RTerm:
    coef: complex
    base: Mono = ONE
    bpow: int = 0  # power of [r]
    rpow: int = 0  # power of r
    dress: tuple[Mono, ...] = ()  # factors 1/(1 - P^r)

    def key(self):
        return (self.base, self.bpow, self.rpow, tuple(sorted(self.dress)))

    def times(self, other: "RTerm") -> "RTerm":
        return RTerm(self.coef * other.coef, mono_mul(self.base, other.base),
                     self.bpow + other.bpow, self.rpow + other.rpow,
                     tuple(sorted(self.dress + other.dress)))

    def value(self, params: AlgebraParams, r: int) -> complex:
        v = self.coef * params.val(self.base) ** r * params.bracket(r) ** self.bpow * float(r) ** self.rpow
        for P in self.dress:
            v /= 1 - params.val(P) ** r
        return v


def _combine(terms: Iterable[RTerm]) -> list[RTerm]:
    acc: dict = {}
    for t in terms:
        k = t.key()
        acc[k] = acc.get(k, 0) + t.coef
    return [RTerm(c, k[0], k[1], k[2], k[3]) for k, c in acc.items() if c != 0]


def T(coef=1, base: Mono = ONE, bpow: int = 0, rpow: int = 0, dress=()) -> RTerm:
    return RTerm(complex(coef), base, bpow, rpow, tuple(dress))


@dataclass
class BosonExpression:
    """``sum_{i,j} c_{i,j}(r) a^{i,j}_{sign*r}`` with symbolic ``c``."""

    m: int
    n: int
    sign: int  # +1 annihilation, -1 creation
    terms: dict[tuple[int, int], list[RTerm]] = field(default_factory=dict)
    name: str = ""

    def add(self, i: int, j: int, *ts: RTerm) -> "BosonExpression":
        key = (i % self.m, j % self.n)
        self.terms[key] = _combine(self.terms.get(key, []) + list(ts))
        if not self.terms[key]:
            del self.terms[key]
        return self

    def _compatible(self, other: "BosonExpression"):
        if (self.m, self.n, self.sign) != (other.m, other.n, other.sign):
            raise ValueError("expressions live on different spaces or modes")

    def __add__(self, other: "BosonExpression") -> "BosonExpression":
        self._compatible(other)
        out = BosonExpression(self.m, self.n, self.sign, dict(self.terms), self.name)
        for (i, j), ts in other.terms.items():
            out.add(i, j, *ts)
        return out

    def scaled(self, factor: RTerm | Iterable[RTerm], name: str | None = None) -> "BosonExpression":
        """Multiply every coefficient by a term (or a sum of terms)."""
        fs = [factor] if isinstance(factor, RTerm) else list(factor)
        out = BosonExpression(self.m, self.n, self.sign, {}, self.name if name is None else name)
        for (i, j), ts in self.terms.items():
            out.add(i, j, *[t.times(f) for t in ts for f in fs])
        return out

    def __neg__(self):
        return self.scaled(T(-1))

    def __sub__(self, other):
        return self + (-other)

    def coefficients(self, params: AlgebraParams, r: int) -> dict[tuple[int, int], complex]:
        if r <= 0:
            raise ValueError("evaluate at r >= 1; the sign is part of the expression")
        return {k: sum(t.value(params, r) for t in ts) for k, ts in self.terms.items()}

    def equals(self, other: "BosonExpression", params: AlgebraParams, r_max: int = 6,
               rtol: float = 1e-10) -> bool:
        return expression_deviation(self, other, params, r_max) <= rtol


def expression_deviation(x: BosonExpression, y: BosonExpression, params: AlgebraParams,
                         r_max: int = 6) -> float:
    """Largest coefficient difference relative to the largest coefficient."""
    x._compatible(y)
    worst = 0.0
    for r in range(1, r_max + 1):
        cx, cy = x.coefficients(params, r), y.coefficients(params, r)
        keys = set(cx) | set(cy)
        scale = max([abs(v) for v in cx.values()] + [abs(v) for v in cy.values()] + [1e-300])
        diff = max((abs(cx.get(k, 0) - cy.get(k, 0)) for k in keys), default=0.0)
        worst = max(worst, diff / scale if scale > 1e-300 else diff)
    return worst


def zero_expression(m: int, n: int, sign: int, name: str = "0") -> BosonExpression:
    return BosonExpression(m, n, sign, {}, name)


# -- derived bosons ---------------------------------------------------------

def derived_boson(kind: str, m: int, n: int, i: int, j: int, sign: int) -> BosonExpression:
    """``b^{i,j}_{sign r}`` (kind ``'b'``) or the checked ``bc`` (kind ``'bc'``)."""
    e = BosonExpression(m, n, sign, {}, f"{kind}^{i},{j}_{'+' if sign > 0 else '-'}r")
    if kind == "b":
        if sign > 0:
            e.add(i - 1, j, T(1, mono_mul(Q, Q3)))
            e.add(i, j, T(-1, Q))
        else:
            e.add(i - 1, j, T(1, Q1))
            e.add(i, j, T(-1))
    elif kind == "bc":
        if sign > 0:
            e.add(i, j - 1, T(-1, mono_mul(Q, QC3)))
            e.add(i, j, T(1, Q))
        else:
            e.add(i, j - 1, T(-1, QC1))
            e.add(i, j, T(1))
    else:
        raise ValueError(f"unknown derived boson {kind!r}")
    return e


def _sum(exprs: list[BosonExpression], m, n, sign, name) -> BosonExpression:
    out = zero_expression(m, n, sign, name)
    for x in exprs:
        out = out + x
    out.name = name
    return out


CURRENT_KINDS = ("A", "B", "Ac", "Bc", "Ad", "Bd", "Acd", "Bcd")


def current_coefficient(kind: str, m: int, n: int, i: int, j: int, sign: int) -> BosonExpression:
    """Fourier coefficient at mode ``sign*r`` of the current of the given kind.

    Kinds: ``A, B, Ac, Bc`` (undressed, ``c`` = checked) and the dressed
    ``Ad, Bd, Acd, Bcd``.  Indices are used literally in the monomial
    prefactors, so the dressed kinds are defined for every integer index.
    """
    b = lambda s, t: derived_boson("b", m, n, s, t, sign)  # noqa: E731
    bc = lambda s, t: derived_boson("bc", m, n, s, t, sign)  # noqa: E731
    name = f"{kind}^{i},{j}_{'+' if sign > 0 else '-'}r"
    if kind == "A":
        if sign > 0:
            f = T(-1, mono_mul(mono_pow(Q, -(n - 1)), mono_pow(QC3, -j)), -1)
            return b(i, j).scaled(f, name)
        pre = mono_pow(Q, n - 2)
        parts = [b(i, j).scaled(T(1, mono_mul(pre, mono_pow(QC3, j)), -1))]
        for t in range(j + 1, n):
            base = mono_mul(pre, mono_pow(QC3, t))
            parts.append(b(i, t).scaled([T(1, base, -1), T(-1, mono_mul(base, Q2), -1)]))
        return _sum(parts, m, n, sign, name)
    if kind == "B":
        if sign < 0:
            return b(i, j).scaled(T(-1, mono_pow(QC1, -j), -1), name)
        parts = [b(i, j).scaled(T(1, mono_mul(Q, mono_pow(QC1, j)), -1))]
        for t in range(j):
            base = mono_mul(Q, mono_pow(QC1, t))
            parts.append(b(i, t).scaled([T(1, base, -1), T(-1, mono_mul(base, mono_inv(Q2)), -1)]))
        return _sum(parts, m, n, sign, name)
    if kind == "Ac":
        if sign > 0:
            f = T(-1, mono_mul(mono_pow(Q, -(m - 1)), mono_pow(Q3, -i)), -1)
            return bc(i, j).scaled(f, name)
        pre = mono_pow(Q, m - 2)
        parts = [bc(i, j).scaled(T(1, mono_mul(pre, mono_pow(Q3, i)), -1))]
        for s in range(i + 1, m):
            base = mono_mul(pre, mono_pow(Q3, s))
            parts.append(bc(s, j).scaled([T(1, base, -1), T(-1, mono_mul(base, Q2), -1)]))
        return _sum(parts, m, n, sign, name)
    if kind == "Bc":
        if sign < 0:
            return bc(i, j).scaled(T(-1, mono_pow(Q1, -i), -1), name)
        parts = [bc(i, j).scaled(T(1, mono_mul(Q, mono_pow(Q1, i)), -1))]
        for s in range(i):
            base = mono_mul(Q, mono_pow(Q1, s))
            parts.append(bc(s, j).scaled([T(1, base, -1), T(-1, mono_mul(base, mono_inv(Q2)), -1)]))
        return _sum(parts, m, n, sign, name)
    if kind == "Ad":
        if sign > 0:
            return current_coefficient("A", m, n, i, j, sign).scaled(T(1), name)
        pstar = mono_pow(QC3, -n)
        pre = mono_mul(mono_pow(Q, n - 2), mono_pow(QC3, j))
        parts = [b(i, j).scaled(T(1, pre, -1))]
        for t in range(n):
            base = mono_mul(pre, mono_pow(QC3, -t))
            parts.append(b(i, j - t).scaled([T(-1, base, -1, dress=(pstar,)),
                                             T(1, mono_mul(base, Q2), -1, dress=(pstar,))]))
        return _sum(parts, m, n, sign, name)
    if kind == "Bd":
        if sign < 0:
            return current_coefficient("B", m, n, i, j, sign).scaled(T(1), name)
        p = mono_pow(QC1, n)
        pre = mono_mul(Q, mono_pow(QC1, j))
        parts = [b(i, j).scaled(T(1, pre, -1))]
        for t in range(n):
            base = mono_mul(pre, mono_pow(QC1, t))
            parts.append(b(i, j + t).scaled([T(-1, base, -1, dress=(p,)),
                                             T(1, mono_mul(base, mono_inv(Q2)), -1, dress=(p,))]))
        return _sum(parts, m, n, sign, name)
    if kind == "Acd":
        if sign > 0:
            return current_coefficient("Ac", m, n, i, j, sign).scaled(T(1), name)
        pcstar = mono_pow(Q3, -m)
        pre = mono_mul(mono_pow(Q, m - 2), mono_pow(Q3, i))
        parts = [bc(i, j).scaled(T(1, pre, -1))]
        for s in range(m):
            base = mono_mul(pre, mono_pow(Q3, -s))
            parts.append(bc(i - s, j).scaled([T(-1, base, -1, dress=(pcstar,)),
                                              T(1, mono_mul(base, Q2), -1, dress=(pcstar,))]))
        return _sum(parts, m, n, sign, name)
    if kind == "Bcd":
        if sign < 0:
            return current_coefficient("Bc", m, n, i, j, sign).scaled(T(1), name)
        pc = mono_pow(Q1, m)
        pre = mono_mul(Q, mono_pow(Q1, i))
        parts = [bc(i, j).scaled(T(1, pre, -1))]
        for s in range(m):
            base = mono_mul(pre, mono_pow(Q1, s))
            parts.append(bc(i + s, j).scaled([T(-1, base, -1, dress=(pc,)),
                                              T(1, mono_mul(base, mono_inv(Q2)), -1, dress=(pc,))]))
        return _sum(parts, m, n, sign, name)
    raise ValueError(f"unknown current kind {kind!r}")


def cartan_boson(kind: str, m: int, n: int, i: int, sign: int, literal: bool = False
                 ) -> BosonExpression:
    """``H_{i, sign r}`` (kind ``'H'``) or the dual ``Hc_{i, sign r}`` (kind ``'Hc'``)."""
    name = f"{kind}_{i},{'+' if sign > 0 else '-'}r"
    if kind == "H":
        parts = []
        for j in range(n):
            base = mono_pow(QC1, j) if sign > 0 else mono_mul(mono_pow(Q, n - 1), mono_pow(QC3, j))
            parts.append(derived_boson("b", m, n, i, j, sign).scaled(T(1, base)))
        return _sum(parts, m, n, sign, name)
    if kind == "Hc":
        parts = []
        for s in range(m):
            if literal:
                base = mono_pow(Q3, -s) if sign > 0 else mono_mul(mono_pow(Q, -(m - 1)), mono_pow(Q1, -s))
            else:
                # mirror image of the H weights; the other form is not a Cartan current
                base = mono_pow(Q1, s) if sign > 0 else mono_mul(mono_pow(Q, m - 1), mono_pow(Q3, s))
            parts.append(derived_boson("bc", m, n, s, i, sign).scaled(T(1, base)))
        return _sum(parts, m, n, sign, name)
    raise ValueError(f"unknown Cartan kind {kind!r}")


# -- commutators and contractions ------------------------------------------------

def commutator_terms(x: BosonExpression, y: BosonExpression) -> list[RTerm]:
    """``[X_r, Y_{-r}]`` as a symbolic function of ``r``."""
    if x.sign != 1 or y.sign != -1:
        raise ValueError("need X at +r and Y at -r")
    out = []
    for k, xs in x.terms.items():
        for yt in y.terms.get(k, []):
            for xt in xs:
                out.append(xt.times(yt).times(T(1, bpow=2, rpow=-1)))
    return _combine(out)


def pair_commutator(x: BosonExpression, y: BosonExpression, params: AlgebraParams, r: int) -> complex:
    """Numerical ``[X_r, Y_{-r}]`` from ``[a_r, a_{-r}] = [r]^2 / r``."""
    if x.sign != 1 or y.sign != -1:
        raise ValueError("need X at +r and Y at -r")
    cx, cy = x.coefficients(params, r), y.coefficients(params, r)
    br = params.bracket(r) ** 2 / r
    return sum(v * cy[k] for k, v in cx.items() if k in cy) * br


def commutator_magnitude(x: BosonExpression, y: BosonExpression, params: AlgebraParams,
                         order: int) -> float:
    """Growth radius of the summands of ``[X_r, Y_{-r}]``: a scale for rounding."""
    rho = 1.0
    for r in range(1, order + 1):
        cx, cy = x.coefficients(params, r), y.coefficients(params, r)
        mag = sum(abs(v) * abs(cy[k]) for k, v in cx.items() if k in cy)
        mag *= abs(params.bracket(r)) ** 2 / r
        if mag > 0:
            rho = max(rho, mag ** (1.0 / r))
    return rho


Family = Callable[[int], BosonExpression]


def contraction_series(x_ann: BosonExpression, y_cre: BosonExpression, params: AlgebraParams,
                       order: int, name: str = "t") -> TruncatedSeries:
    """``exp(sum_{r=1}^{N} [X_r, Y_{-r}] t^r)`` with ``t = w/z``."""
    coeffs = np.zeros(order + 1, dtype=complex)
    for r in range(1, order + 1):
        coeffs[r] = pair_commutator(x_ann, y_cre, params, r)
    return TruncatedSeries.univariate(coeffs, name).exp()


def contraction_factors(terms: list[RTerm], K: int) -> list[tuple[Mono, complex]]:
    """Closed form of ``exp(sum_r c(r) t^r)`` as factors ``(1 - C t)^e``.

    Each term must have the shape ``k B^r / (r prod (1 - P^r))``; it yields
    ``prod_{l in N^#P} (1 - B P^l t)^{-k}``, with every ``l_a <= K``.
    """
    out: list[tuple[Mono, complex]] = []
    for t in terms:
        if t.bpow != 0 or t.rpow != -1:
            raise ValueError(f"term {t} is not of logarithmic shape")
        bases = [t.base]
        for P in t.dress:
            bases = [mono_mul(b, mono_pow(P, l)) for b in bases for l in range(K + 1)]
        out.extend((b, -t.coef) for b in bases)
    return out


def factors_series(factors: list[tuple[Mono, complex]], params: AlgebraParams, order: int,
                   name: str = "t") -> TruncatedSeries:
    """Expand ``prod (1 - C t)^e`` to ``t^order``."""
    coeffs = np.zeros(order + 1, dtype=complex)
    for C, e in factors:
        c = params.val(C)
        for r in range(1, order + 1):
            coeffs[r] -= e * c**r / r
    return TruncatedSeries.univariate(coeffs, name).exp()


def closed_contraction(x_ann: BosonExpression, y_cre: BosonExpression, params: AlgebraParams,
                       order: int, K: int) -> TruncatedSeries:
    return factors_series(contraction_factors(commutator_terms(x_ann, y_cre), K), params, order)


# -- the boson algebra itself ----------------------------------------------------

def _dl(period: int, a: int, b: int) -> int:
    return int((a - b) % period == 0)


def derived_commutator_rhs(pair: str, params: AlgebraParams, r: int, i: int, j: int,
                           k: int, l: int) -> complex:
    """Closed form of ``[b_r, b_-r]``, ``[bc_r, bc_-r]``, ``[b_r, bc_-r]``, ``[bc^{k,l}_r, b^{i,j}_-r]``."""
    m, n = params.m, params.n
    q, q1, q2, q3, qc1, qc3 = (params.q, params.q1, params.q2, params.q3, params.qc1,
                               params.qc3)
    pre = params.bracket(r) ** 2 / r * q**r
    if pair == "b-b":
        return pre * ((1 + q2 ** (-r)) * _dl(m, i, k) - q1**r * _dl(m, i + 1, k)
                      - q3**r * _dl(m, i - 1, k)) * _dl(n, j, l)
    if pair == "bc-bc":
        return pre * _dl(m, i, k) * ((1 + q2 ** (-r)) * _dl(n, j, l) - qc1**r * _dl(n, j, l - 1)
                                     - qc3**r * _dl(n, j, l + 1))
    if pair == "b-bc":
        return -pre * (q3**r * _dl(m, i - 1, k) - _dl(m, i, k)) * \
            (qc1**r * _dl(n, j, l - 1) - _dl(n, j, l))
    if pair == "bc-b":
        return -pre * (q1**r * _dl(m, i - 1, k) - _dl(m, i, k)) * \
            (qc3**r * _dl(n, j, l - 1) - _dl(n, j, l))
    raise ValueError(f"unknown pair {pair!r}")


def check_boson_algebra(params: AlgebraParams, r_max: int = 6, tol: float = 1e-8) -> list:
    """``[a, a]`` on the oscillator space and the derived ``[b, b]`` relations.

    The first is checked on matrices: for ``a^{i,j}_r`` against ``a^{k,l}_{-s}``
    (and equal-sign pairs) on the columns whose image stays below the degree
    cap.  The second expands each commutator bilinearly over ``[a, a]`` and
    compares it with the closed form, relative to ``max(|rhs|, 1)``.
    """
    from .fock import OscBasis
    from .report import CheckRecord

    m, n = params.m, params.n
    osc = OscBasis(m, n, r_max)
    deg = osc.degrees
    labels = [(i, j) for i in range(m) for j in range(n)]
    out = []
    for r in range(1, r_max + 1):
        br = params.bracket(r) ** 2 / r
        worst, cols = 0.0, 0
        for s in range(1, r_max + 1):
            bs = params.bracket(s) ** 2 / s
            exact = np.flatnonzero(deg <= r_max - max(r, s))
            ident = sp.identity(len(osc), dtype=complex, format="csr")[:, exact]
            cols = max(cols, len(exact))
            for (i, j), (k, l) in itertools.product(labels, labels):
                ar, ars = osc.boson(i, j, r, br), osc.boson(i, j, -r)
                for x, y, expect in ((ar, osc.boson(k, l, -s), br * ((i, j, r) == (k, l, s))),
                                     (ar, osc.boson(k, l, s, bs), 0.0),
                                     (ars, osc.boson(k, l, -s), 0.0)):
                    c = (x @ y - y @ x)[:, exact] - ident * expect
                    worst = max(worst, float(abs(c).max()) / max(abs(br), 1.0))
        out.append(CheckRecord("boson-aa", {"r": r}, worst, tol, "identity", cols))
    kinds = {"b-b": ("b", "b"), "bc-bc": ("bc", "bc"), "b-bc": ("b", "bc"), "bc-b": ("bc", "b")}
    for pair, (kx, ky) in kinds.items():
        for r in range(1, r_max + 1):
            worst = 0.0
            for i, j, k, l in itertools.product(range(m), range(n), range(m), range(n)):
                if pair == "bc-b":
                    x, y = derived_boson(kx, m, n, k, l, 1), derived_boson(ky, m, n, i, j, -1)
                else:
                    x, y = derived_boson(kx, m, n, i, j, 1), derived_boson(ky, m, n, k, l, -1)
                got = pair_commutator(x, y, params, r)
                want = derived_commutator_rhs(pair, params, r, i, j, k, l)
                worst = max(worst, abs(got - want) / max(abs(want), 1.0))
            out.append(CheckRecord(f"boson-{pair}", {"r": r}, worst, tol, "identity", 1))
    return out
