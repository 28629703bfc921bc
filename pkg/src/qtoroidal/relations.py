"""Defining relations of both toroidal algebras, checked in mode form.

Generating-function identities become identities between finitely many mode
matrices.  Writing ``g(z,w) = sum c_ab z^a w^b`` the exchange relation
``d g_ij(z,w) E_i(z) E_j(w) + g_ji(w,z) E_j(w) E_i(z) = 0`` reads, at the
coefficient of ``z^-k w^-l``,

    sum_ab d c_ab E_{i,k+a} E_{j,l+b} + sum_ab c'_ab E_{j,l+a} E_{i,k+b} = 0.

The delta-function relation gives
``[E_{i,k}, F_{i,l}] = (C^k K+_{i,k+l} - C^l K-_{i,-k-l}) / (q - 1/q)``
with ``K+_s = 0`` for ``s < 0`` and ``K-_{-s} = 0`` for ``s < 0``; at
``k + l = 0`` both terms are present.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fock import FockBasis, GradedSparseOperator, commutator, relative_residual
from .params import AlgebraParams
from .report import CheckRecord
from .vertex import (CurrentFamily, Factor, assemble_family, build_current, cartan_mode, component,
                     extended_component, k_modes, normal_product_modes, weight_values)


@dataclass
class Action:
    """Lazily built currents of one of the two actions on a truncated space."""

    params: AlgebraParams
    basis: FockBasis
    dual: bool = False
    dressed: bool = False
    _cache: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.params.n if self.dual else self.params.m

    @property
    def level(self) -> complex:
        return self.params.q ** (self.params.m if self.dual else self.params.n)

    @property
    def q1(self) -> complex:
        return self.params.qc1 if self.dual else self.params.q1

    @property
    def q3(self) -> complex:
        return self.params.qc3 if self.dual else self.params.q3

    @property
    def dd(self) -> complex:
        return self.params.dc if self.dual else self.params.d

    def _name(self, base: str) -> str:
        return ("d" if self.dressed else "") + base + ("c" if self.dual else "")

    def E(self, i: int) -> CurrentFamily:
        key = ("E", i % self.rank)
        if key not in self._cache:
            self._cache[key] = build_current(self.params, self.basis, self._name("E"), i % self.rank)
        return self._cache[key]

    def F(self, i: int) -> CurrentFamily:
        key = ("F", i % self.rank)
        if key not in self._cache:
            self._cache[key] = build_current(self.params, self.basis, self._name("F"), i % self.rank)
        return self._cache[key]

    def H(self, i: int, r: int) -> GradedSparseOperator:
        key = ("H", i % self.rank, r)
        if key not in self._cache:
            self._cache[key] = cartan_mode(self.params, self.basis, i % self.rank, r, self.dual)
        return self._cache[key]

    def K(self, i: int, sign: int, max_mode: int) -> dict[int, GradedSparseOperator]:
        key = ("K", i % self.rank, sign, max_mode)
        if key not in self._cache:
            self._cache[key] = k_modes(self.params, self.basis, i % self.rank, sign, max_mode, self.dual)
        return self._cache[key]

    # structure data
    def a(self, i: int, j: int, r: int) -> complex:
        q, d, size = self.params.q, self.dd, self.rank
        br = self.params.bracket(abs(r)) * (1 if r > 0 else -1)
        val = (q**r + q**-r) * _delta(size, i, j) - d**r * _delta(size, i, j - 1) \
            - d ** (-r) * _delta(size, i, j + 1)
        return br / r * val

    def g(self, i: int, j: int) -> dict[tuple[int, int], complex]:
        """``g_{i,j}(z,w)`` as ``{(a, b): c}`` meaning ``c z^a w^b``."""
        q1, q2, q3, size = self.q1, self.params.q2, self.q3, self.rank
        if size == 2:
            if _delta(2, i, j):
                return {(1, 0): 1, (0, 1): -q2}
            return {(2, 0): 1, (1, 1): -(q1 + q3), (0, 2): q1 * q3}
        if _delta(size, i, j - 1):
            return {(1, 0): 1, (0, 1): -q1}
        if _delta(size, i, j):
            return {(1, 0): 1, (0, 1): -q2}
        if _delta(size, i, j + 1):
            return {(1, 0): 1, (0, 1): -q3}
        return {(1, 0): 1, (0, 1): -1}

    def dsign(self, i: int, j: int) -> complex:
        size = self.rank
        if size >= 3:
            if _delta(size, i, j - 1):
                return 1 / self.dd
            if _delta(size, i, j + 1):
                return self.dd
            return 1.0
        return -1.0 if not _delta(2, i, j) else 1.0


def _delta(size: int, a: int, b: int) -> int:
    return 1 if (a - b) % size == 0 else 0


def _rec(check, case, lhs, rhs, tol, **meta) -> CheckRecord:
    res, ncols = relative_residual(lhs, rhs)
    return CheckRecord(check, case, res, tol, "identity", ncols, meta)


def _lincomb(basis: FockBasis, terms: list[tuple[complex, GradedSparseOperator]], degree=None
             ) -> GradedSparseOperator:
    acc = GradedSparseOperator.zero(basis, degree)
    for c, op in terms:
        acc = acc + op.scale(c)
    return acc


def check_ck(act: Action, window: int, tol: float) -> list[CheckRecord]:
    """``q^{eps_s}`` conjugation and ``D`` covariance of every E/F mode."""
    out = []
    basis, q = act.basis, act.params.q
    w = weight_values(basis, act.dual)
    deg = basis.degrees
    for i in range(act.rank):
        for name, fam, sgn in (("E", act.E(i), 1), ("F", act.F(i), -1)):
            for k in range(-window, window + 1):
                X = fam.mode(k)
                for s in range(act.rank):
                    pairing = _delta(act.rank, s, i - 1) - _delta(act.rank, s, i)
                    lhs = X.conj_diag(q ** w[:, s].astype(float))
                    out.append(_rec("CK-weight", {"current": name, "i": i, "k": k, "s": s},
                                    lhs, X.scale(q ** (sgn * pairing)), tol))
                lhs = X.conj_diag(np.exp(deg * np.log(q)))
                out.append(_rec("CK-D", {"current": name, "i": i, "k": k},
                                lhs, X.scale(q ** (-k)), tol))
    return out


def check_h_relations(act: Action, window: int, r_max: int, tol: float) -> list[CheckRecord]:
    out = []
    C = act.level
    for i in range(act.rank):
        for j in range(act.rank):
            for r in [x for x in range(-r_max, r_max + 1) if x]:
                H = act.H(i, r)
                a = act.a(i, j, r)
                for k in range(-window, window + 1):
                    lhs = commutator(H, act.E(j).mode(k))
                    rhs = act.E(j).mode(k + r).scale(a * C ** (-(r + abs(r)) / 2))
                    out.append(_rec("HE", {"i": i, "j": j, "r": r, "k": k}, lhs, rhs, tol))
                    lhs = commutator(H, act.F(j).mode(k))
                    rhs = act.F(j).mode(k + r).scale(-a * C ** (-(r - abs(r)) / 2))
                    out.append(_rec("HF", {"i": i, "j": j, "r": r, "k": k}, lhs, rhs, tol))
                for s in [x for x in range(-r_max, r_max + 1) if x]:
                    lhs = commutator(H, act.H(j, s))
                    scal = a * (C**r - C**-r) / (act.params.q - 1 / act.params.q) if r + s == 0 else 0
                    rhs = GradedSparseOperator.identity(act.basis, scal)
                    out.append(_rec("HH", {"i": i, "j": j, "r": r, "s": s}, lhs, rhs, tol))
    return out


def ef_rhs(act: Action, i: int, k: int, l: int) -> GradedSparseOperator:
    q, C = act.params.q, act.level
    s = k + l
    Kp = act.K(i, +1, max(abs(s), 1))
    Km = act.K(i, -1, max(abs(s), 1))
    rhs = GradedSparseOperator.zero(act.basis, float(-s))
    if s >= 0:
        rhs = rhs + Kp[s].scale(C**k / (q - 1 / q))
    if s <= 0:
        rhs = rhs - Km[s].scale(C**l / (q - 1 / q))
    return rhs


def check_ef(act: Action, window: int, tol: float) -> list[CheckRecord]:
    out = []
    for i in range(act.rank):
        for j in range(act.rank):
            for k in range(-window, window + 1):
                for l in range(-window, window + 1):
                    lhs = commutator(act.E(i).mode(k), act.F(j).mode(l))
                    if i == j:
                        rhs = ef_rhs(act, i, k, l)
                    else:
                        rhs = GradedSparseOperator.zero(act.basis, float(-k - l))
                    out.append(_rec("EF", {"i": i, "j": j, "k": k, "l": l}, lhs, rhs, tol,
                                    double_support=(i == j and k + l == 0)))
    return out


def exchange_terms(act: Action, X, i: int, j: int, k: int, l: int, kind: str):
    """Both sides of the E-E (``kind='E'``) or F-F exchange relation at ``(k, l)``."""
    gij, gji = act.g(i, j), act.g(j, i)
    Xi, Xj = X(i), X(j)
    if kind == "E":
        d = act.dsign(i, j)
        left = [(d * c, Xi.mode(k + a) @ Xj.mode(l + b)) for (a, b), c in gij.items()]
        right = [(-c, Xj.mode(l + a) @ Xi.mode(k + b)) for (a, b), c in gji.items()]
    else:
        d = act.dsign(j, i)
        left = [(d * c, Xi.mode(k + b) @ Xj.mode(l + a)) for (a, b), c in gji.items()]
        right = [(-c, Xj.mode(l + b) @ Xi.mode(k + a)) for (a, b), c in gij.items()]
    deg = None
    return _lincomb(act.basis, left, deg), _lincomb(act.basis, right, deg)


def check_exchange(act: Action, window: int, tol: float) -> list[CheckRecord]:
    out = []
    size = act.rank
    for i in range(size):
        for j in range(size):
            far = size >= 4 and not (_delta(size, i, j) or _delta(size, i, j + 1) or _delta(size, i, j - 1))
            for k in range(-window, window + 1):
                for l in range(-window, window + 1):
                    for kind, X in (("E", act.E), ("F", act.F)):
                        lhs, rhs = exchange_terms(act, X, i, j, k, l, kind)
                        out.append(_rec(kind * 2, {"i": i, "j": j, "k": k, "l": l}, lhs, rhs, tol))
                        if far:
                            c = commutator(X(i).mode(k), X(j).mode(l))
                            out.append(_rec(kind * 2 + "-far", {"i": i, "j": j, "k": k, "l": l},
                                            c, GradedSparseOperator.zero(act.basis), tol))
    return out


def check_defining_relations(params: AlgebraParams, basis: FockBasis, dual: bool = False,
                             window: int = 3, r_max: int = 3, tol: float = 1e-7,
                             which: tuple[str, ...] = ("CK", "H", "EF", "EE")) -> list[CheckRecord]:
    act = Action(params, basis, dual)
    out: list[CheckRecord] = []
    if "CK" in which:
        out += check_ck(act, window, tol)
    if "H" in which:
        out += check_h_relations(act, window, r_max, tol)
    if "EF" in which:
        out += check_ef(act, window, tol)
    if "EE" in which:
        out += check_exchange(act, window, tol)
    fam = "Ec" if dual else "E"
    for r in out:
        r.case["family"] = fam
    return out


def _vanish(check, case, op, tol) -> CheckRecord:
    return _rec(check, case, op, GradedSparseOperator.zero(op.basis, op.degree), tol)


def check_affine_commutativity(params: AlgebraParams, basis: FockBasis, window: int = 2,
                               r_max: int = 2, tol: float = 1e-7) -> list[CheckRecord]:
    """The two vertical affine subalgebras commute; the full toroidal actions do not.

    Affine indices are ``1 <= i <= m-1`` and ``1 <= l <= n-1``.  One
    out-of-range commutator ``[E_{0,0}, Ec_{1,0}]`` is recorded as a witness
    that must exceed ``1e3 * tol``.
    """
    A, B = Action(params, basis), Action(params, basis, dual=True)
    out = []
    ks = range(-window, window + 1)
    rs = [r for r in range(-r_max, r_max + 1) if r]
    pairs = (("affine-EE", A.E, B.E), ("affine-FF", A.F, B.F),
             ("affine-EF", A.E, B.F), ("affine-FE", B.E, A.F))
    for name, X, Y in pairs:
        dual_first = X.__self__ is B
        for i in range(1, params.m):
            for l in range(1, params.n):
                a, b = (l, i) if dual_first else (i, l)
                for k in ks:
                    for kk in ks:
                        out.append(_vanish(name, {"i": i, "l": l, "k": k, "kk": kk},
                                           commutator(X(a).mode(k), Y(b).mode(kk)), tol))
    # Cartan modes commute unless both indices are 0; H against currents needs both affine
    for i in range(params.m):
        for l in range(params.n):
            if not (i or l):
                continue
            for r in rs:
                for s in rs:
                    out.append(_vanish("affine-HH", {"i": i, "l": l, "r": r, "s": s},
                                       commutator(A.H(i, r), B.H(l, s)), tol))
    for i in range(1, params.m):
        for l in range(1, params.n):
            for r in rs:
                for k in ks:
                    for nm, Y in (("E", B.E), ("F", B.F)):
                        out.append(_vanish("affine-HX", {"H": i, "X": nm + "c", "j": l, "r": r, "k": k},
                                           commutator(A.H(i, r), Y(l).mode(k)), tol))
    for l in range(1, params.n):
        for i in range(1, params.m):
            for r in rs:
                for k in ks:
                    for nm, Y in (("E", A.E), ("F", A.F)):
                        out.append(_vanish("affine-HX", {"H": f"c{l}", "X": nm, "j": i, "r": r, "k": k},
                                           commutator(B.H(l, r), Y(i).mode(k)), tol))
    res, ncols = relative_residual(commutator(A.E(0).mode(0), B.E(1).mode(0)),
                                   GradedSparseOperator.zero(basis))
    out.append(CheckRecord("affine-witness", {"pair": "E0-Ec1", "k": 0, "l": 0}, res, 1e3 * tol,
                           "witness", ncols))
    return out


# -- pointwise cancellation -------------------------------------------------------

def _cancellation_cases(params: AlgebraParams, dressed: bool):
    """``(label, i, l, point, first, second)`` for each identity.

    ``first`` and ``second`` are ``((name, i, j, const), (name, i, j))``
    meaning ``const * :X^{i,j}(z) Y^{i,j}(w):``; the identity says
    ``first + second = 0`` at ``w = point * z``.
    """
    q, m, n = params.q, params.m, params.n
    P = "d" if dressed else ""
    labels = ("EbEb", "FbFb", "EbFb") if dressed else ("relUU", "relVV", "relUV")
    start = 0 if dressed else 1
    for i in range(start, m):
        for l in range(start, n):
            yield (labels[0], i, l, q ** (n - m) * params.q3 ** (-i) * params.qc3 ** l,
                   ((P + "E", i, l, 1.0), (P + "Ec", i, l)),
                   ((P + "E", i, l - 1, q ** -2), (P + "Ec", i - 1, l)))
            yield (labels[1], i, l, params.q1 ** i * params.qc1 ** (-l),
                   ((P + "F", i, l, 1.0), (P + "Fc", i, l)),
                   ((P + "F", i, l - 1, q ** 2), (P + "Fc", i - 1, l)))
            yield (labels[2], i, l, q ** n * params.q1 ** i * params.qc3 ** l,
                   ((P + "E", i, l, 1.0), (P + "Fc", i - 1, l)),
                   ((P + "E", i, l - 1, q ** -2), (P + "Fc", i, l)))


def _normal_pair(params, basis, pair, point):
    (xn, xi, xj, const), (yn, yi, yj) = pair
    fx = extended_component(params, xn, xi, xj)
    fy = extended_component(params, yn, yi, yj)
    fx = replace(fx, const=fx.const * const)
    fy = replace(fy, scale=fy.scale * point)
    return normal_product_modes(params, basis, [fx, fy])


def _mode_sum_residual(basis, x: dict, y: dict) -> tuple[float, int]:
    zero = GradedSparseOperator.zero(basis)
    worst, cols = 0.0, 0
    for k in set(x) | set(y):
        res, nc = relative_residual(x.get(k, zero), -y.get(k, zero))
        worst = max(worst, res)
        cols += nc
    return worst, cols


def check_pointwise_cancellation(params: AlgebraParams, basis: FockBasis, dressed: bool = False,
                                 tol: float = 1e-7, control: complex = 1.37 - 0.21j
                                 ) -> list[CheckRecord]:
    """Two normal-ordered products cancel at a specific ratio ``w/z``.

    The first case is repeated at ``w = control * point * z`` as a witness
    that the cancellation is specific to the point.
    """
    out = []
    for n_case, (label, i, l, point, first, second) in enumerate(_cancellation_cases(params, dressed)):
        x = _normal_pair(params, basis, first, point)
        y = _normal_pair(params, basis, second, point)
        res, nc = _mode_sum_residual(basis, x, y)
        out.append(CheckRecord(label, {"i": i, "l": l}, res, tol, "identity", nc))
        if n_case == 0:
            x = _normal_pair(params, basis, first, point * control)
            y = _normal_pair(params, basis, second, point * control)
            res, nc = _mode_sum_residual(basis, x, y)
            out.append(CheckRecord(label + "-generic", {"i": i, "l": l, "control": control},
                                   res, 1e-3, "witness", nc))
    return out


# -- delta-function commutators of components -----------------------------------------

@dataclass
class DeltaCase:
    """``X(z) Y(w) - q^twist Y(w) X(z) = coef * delta(c w / z) * P * :X(z) Y(w):``.

    ``P`` is ``(beta * z)^-1`` or ``(beta * w)^-1`` (``var``); ``coef = 0``
    means a pure exchange relation.
    """

    pair: str
    x: tuple[str, int, int]
    y: tuple[str, int, int]
    twist: int
    c: complex = 1.0
    beta: complex = 1.0
    var: str = "z"
    coef: complex = 0.0


def _plain_cases(params: AlgebraParams):
    """Components of the undressed currents, affine ``i`` and ``l``, all ``j``, ``k``."""
    q, m, n, q1, q3, qc1, qc3, dc = (params.q, params.m, params.n, params.q1, params.q3,
                                     params.qc1, params.qc3, params.dc)
    for i in range(1, m):
        for l in range(1, n):
            for j in range(n):
                for k in range(m):
                    same, prev = _delta(m, i, k) and _delta(n, j, l), \
                        _delta(m, i - 1, k) and _delta(n, j, l - 1)
                    coef = 1.0 if same else q ** -2 if prev else 0.0
                    yield DeltaCase("E-Ec", ("E", i, j), ("Ec", k, l), 0,
                                    q ** (m - n) * q3 ** i * qc3 ** (-l),
                                    q ** (m - 1 - i) * dc ** l, "w", coef)
                    coef = q ** -2 if same else 1.0 if prev else 0.0
                    yield DeltaCase("F-Fc", ("F", i, j), ("Fc", k, l), 0,
                                    q1 ** (-i) * qc1 ** l, q ** (i - 1) * dc ** l, "w", coef)
                    a = _delta(m, i - 1, k) and _delta(n, j, l)
                    b = _delta(m, i, k) and _delta(n, j, l - 1)
                    coef = 1.0 if a else q ** -2 if b else 0.0
                    yield DeltaCase("E-Fc", ("E", i, j), ("Fc", k, l), 0,
                                    q ** (-n) * q1 ** (-i) * qc3 ** (-l),
                                    q ** (i - 1) * dc ** l, "w", coef)


def _dressed_cases(params: AlgebraParams):
    """Twisted commutators of dressed components, all indices."""
    q, m, n, q1, q3, qc1, qc3, d = (params.q, params.m, params.n, params.q1, params.q3,
                                    params.qc1, params.qc3, params.d)
    for i in range(m):
        for j in range(n):
            for k in range(m):
                for l in range(n):
                    di, dl = _delta(m, i, 0), _delta(n, 0, l)
                    Dm = _delta(m, i, k) - _delta(m, i - 1, k)
                    Dn = _delta(n, j, l) - _delta(n, j, l - 1)
                    same_i, prev_i = _delta(m, i, k), _delta(m, i - 1, k)
                    same_j, prev_j = _delta(n, j, l), _delta(n, j, l - 1)
                    X, Y = ("dE", i, j), ("dEc", k, l)
                    if same_i and same_j:
                        yield DeltaCase("dE-dEc", X, Y, di - dl, q ** (m - n) * q3 ** k * qc3 ** (-j),
                                        q ** (n - 1 - j), "z", d ** (-k) * q ** (-dl))
                    elif prev_i and prev_j:
                        yield DeltaCase("dE-dEc", X, Y, -di + dl,
                                        q ** (m - n) * q3 ** (k + 1) * qc3 ** (-j - 1),
                                        q ** (n - 1 - j), "z", d ** (-k - 1) * q ** (-1 + dl))
                    else:
                        yield DeltaCase("dE-dEc", X, Y, -Dm * dl + Dn * di)
                    X, Y = ("dF", i, j), ("dFc", k, l)
                    if same_i and same_j:
                        yield DeltaCase("dF-dFc", X, Y, -di + dl, q1 ** (-k) * qc1 ** j,
                                        q ** j, "z", d ** (-k) * q ** (-1 + dl))
                    elif prev_i and prev_j:
                        yield DeltaCase("dF-dFc", X, Y, di - dl, q1 ** (-k - 1) * qc1 ** (j + 1),
                                        q ** j, "z", d ** (-k - 1) * q ** (-dl))
                    else:
                        yield DeltaCase("dF-dFc", X, Y, Dm * dl - Dn * di)
                    X, Y = ("dE", i, j), ("dFc", k, l)
                    # delta(a z / w) = delta(w / (a z))
                    if same_i and prev_j:
                        yield DeltaCase("dE-dFc", X, Y, -di + dl,
                                        1 / (q ** n * q1 ** k * qc3 ** (j + 1)),
                                        q ** (n - 1 - j), "z", d ** (-k) * q ** (-1 + dl))
                    elif prev_i and same_j:
                        yield DeltaCase("dE-dFc", X, Y, di - dl,
                                        1 / (q ** n * q1 ** (k + 1) * qc3 ** j),
                                        q ** (n - 1 - j), "z", d ** (-k - 1) * q ** (-dl))
                    else:
                        yield DeltaCase("dE-dFc", X, Y, Dm * dl + Dn * di)


def delta_cases(params: AlgebraParams, dressed: bool = False) -> list[DeltaCase]:
    return list(_dressed_cases(params) if dressed else _plain_cases(params))


def check_delta_case(params: AlgebraParams, basis: FockBasis, case: DeltaCase, window: int,
                     tol: float, cache: dict | None = None) -> CheckRecord:
    """Mode form: ``X_k Y_l - q^t Y_l X_k = c^-l G_{k+l}`` with
    ``G(z) = coef * P|_{w=z/c} * :X(z) Y(z/c):``."""
    cache = {} if cache is None else cache

    def fam(spec):
        if spec not in cache:
            cache[spec] = assemble_family(params, basis, "%s^%d,%d" % spec,
                                          [component(params, *spec)])
        return cache[spec]

    X, Y = fam(case.x), fam(case.y)
    tw = params.q ** case.twist
    G: dict[int, GradedSparseOperator] = {}
    if case.coef:
        N = normal_product_modes(params, basis, [Factor(component(params, *case.x)),
                                                 Factor(component(params, *case.y), 1 / case.c)])
        pref = case.coef / case.beta * (case.c if case.var == "w" else 1.0)
        G = {s + 1: op.scale(pref) for s, op in N.items()}
    worst, cols = 0.0, 0
    for k in range(-window, window + 1):
        for l in range(-window, window + 1):
            lhs = X.mode(k) @ Y.mode(l) - (Y.mode(l) @ X.mode(k)).scale(tw)
            rhs = G[k + l].scale(case.c ** (-l)) if k + l in G else \
                GradedSparseOperator.zero(basis, float(-k - l))
            res, nc = relative_residual(lhs, rhs)
            worst, cols = max(worst, res), cols + nc
    meta = {"x": list(case.x), "y": list(case.y), "twist": case.twist}
    return CheckRecord("delta-" + case.pair, meta, worst, tol, "identity", cols,
                       {"exchange": not case.coef})


def check_delta_commutators(params: AlgebraParams, basis: FockBasis, dressed: bool = False,
                            window: int = 2, tol: float = 1e-7) -> list[CheckRecord]:
    cache: dict = {}
    return [check_delta_case(params, basis, c, window, tol, cache)
            for c in delta_cases(params, dressed)]
