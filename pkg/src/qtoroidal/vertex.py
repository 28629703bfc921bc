"""Vertex-operator currents as families of graded sparse mode matrices.

A component current is ``weight * :exp(X(z)): * Z(z)`` with ``X`` a boson
current and ``Z`` a zero-mode factor.  On a basis state the oscillator part
contributes ``z^(deg t - deg s)`` and the zero-mode part ``z^{affine(m)}``, so
each matrix entry belongs to exactly one mode ``k`` (coefficient of ``z^-k``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .bosons import BosonExpression, cartan_boson, current_coefficient
from .fock import FockBasis, GradedSparseOperator
from .params import AlgebraParams

# -- zero-mode factors ---------------------------------------------------------


@dataclass(frozen=True)
class Affine:
    """``const + sum coef[(s,t)] * d_{s,t}`` with rational coefficients."""

    const: Fraction = Fraction(0)
    coef: tuple[tuple[tuple[int, int], Fraction], ...] = ()

    @classmethod
    def build(cls, const=0, terms: dict | None = None) -> "Affine":
        acc: dict = {}
        for key, c in (terms or {}).items():
            if c:
                acc[key] = acc.get(key, 0) + Fraction(c)
        return cls(Fraction(const), tuple(sorted((k, v) for k, v in acc.items() if v)))

    def vector(self, m: int, n: int) -> np.ndarray:
        v = np.zeros(m * n)
        for (s, t), c in self.coef:
            v[(s % m) * n + (t % n)] += float(c)
        return v

    def evaluate(self, lat: np.ndarray, m: int, n: int) -> np.ndarray:
        return float(self.const) + lat @ self.vector(m, n)

    def __add__(self, other: "Affine") -> "Affine":
        terms = dict(self.coef)
        for k, v in other.coef:
            terms[k] = terms.get(k, 0) + v
        return Affine.build(self.const + other.const, terms)

    def __neg__(self):
        return Affine(-self.const, tuple((k, -v) for k, v in self.coef))


def _lin(const=0, **_) -> Affine:
    return Affine.build(const)


def _sum_row(m, n, s, coef) -> dict:
    """``coef * e_s = coef * sum_t d_{s,t}``."""
    return {(s % m, t): Fraction(coef) for t in range(n)}


def _sum_col(m, n, t, coef) -> dict:
    """``coef * ec_t = -coef * sum_s d_{s,t}``."""
    return {(s, t % n): -Fraction(coef) for s in range(m)}


def _merge(*ds: dict) -> dict:
    out: dict = {}
    for d in ds:
        for k, v in d.items():
            out[k] = out.get(k, 0) + v
    return out


@dataclass(frozen=True)
class ZeroModeFactor:
    """``e-shifts * (q^zq z)^{z_exp} * d^{d_exp} dc^{dc_exp} q^{q_exp}``.

    ``shifts`` lists ``(step, i, j)`` for ``e^{step*eps_{i,j}}`` from left to
    right; the exponent forms are evaluated on the source lattice point.
    """

    shifts: tuple[tuple[int, int, int], ...]
    zq: int
    z_exp: Affine
    d_exp: Affine = Affine()
    dc_exp: Affine = Affine()
    q_exp: Affine = Affine()

    def lattice_shift(self, m: int, n: int) -> tuple[int, ...]:
        v = [0] * (m * n)
        for step, i, j in self.shifts:
            v[(i % m) * n + (j % n)] += step
        return tuple(v)


def zero_mode_factor(kind: str, m: int, n: int, i: int, j: int) -> ZeroModeFactor:
    """``U`` / ``V`` of the level-n action, ``Uc`` / ``Vc`` of the dual one."""
    F = Fraction
    if kind in ("U", "V"):
        ip = (i - 1) % m
        zq = n - 1 - j if kind == "U" else j
        zsign = 1 if kind == "U" else -1
        z_exp = Affine.build(1, {(ip, j): zsign, (i, j): -zsign})
        if i % m != 0:
            d = _merge(_sum_row(m, n, ip, F(1, 2) - i), _sum_row(m, n, i, F(1, 2) + i),
                       {(ip, j): i, (i, j): -i})
        else:
            d = _merge(_sum_row(m, n, m - 1, F(1, 2) - m), _sum_row(m, n, 0, F(1, 2)),
                       {(m - 1, j): m})
        if kind == "U":
            qd = {}
            for t in range(j + 1, n):
                qd = _merge(qd, {(ip, t): -1, (i, t): 1})
            shifts = ((-1, i, j), (1, ip, j))
            d_exp = Affine.build(0, d)
        else:
            qd = {}
            for t in range(j):
                qd = _merge(qd, {(ip, t): 1, (i, t): -1})
            shifts = ((-1, ip, j), (1, i, j))
            d_exp = -Affine.build(0, d)
        return ZeroModeFactor(shifts, zq, z_exp, d_exp, Affine(), Affine.build(0, qd))
    if kind in ("Uc", "Vc"):
        jp = (j - 1) % n
        zq = m - 1 - i if kind == "Uc" else i
        zsign = 1 if kind == "Uc" else -1
        z_exp = Affine.build(1, {(i, jp): -zsign, (i, j): zsign})
        if j % n != 0:
            dc = _merge(_sum_col(m, n, jp, F(1, 2) - j), _sum_col(m, n, j, F(1, 2) + j),
                        {(i, jp): -j, (i, j): j})
        else:
            dc = _merge(_sum_col(m, n, n - 1, F(1, 2) - n), _sum_col(m, n, 0, F(1, 2)),
                        {(i, n - 1): -n})
        qd = {}
        if kind == "Uc":
            for s in range(i + 1, m):
                qd = _merge(qd, {(s, jp): 1, (s, j): -1})
            shifts = ((1, i, j), (-1, i, jp))
            dc_exp = Affine.build(0, dc)
        else:
            for s in range(i):
                qd = _merge(qd, {(s, jp): -1, (s, j): 1})
            shifts = ((1, i, jp), (-1, i, j))
            dc_exp = -Affine.build(0, dc)
        return ZeroModeFactor(shifts, zq, z_exp, Affine(), dc_exp, Affine.build(0, qd))
    raise ValueError(f"unknown zero-mode factor {kind!r}")


def zero_mode_action(basis: FockBasis, params: AlgebraParams, zm: ZeroModeFactor):
    """Per source lattice point: target index (or -1), coefficient, z exponent."""
    box = basis.lattice
    m, n = basis.m, basis.n
    lat = box.array
    zexp = zm.z_exp.evaluate(lat, m, n)
    if not np.allclose(zexp, np.round(zexp)):
        raise ArithmeticError("non-integral z exponent in zero-mode factor")
    zexp = np.round(zexp).astype(int)
    dexp = zm.d_exp.evaluate(lat, m, n)
    dcexp = zm.dc_exp.evaluate(lat, m, n)
    qexp = zm.q_exp.evaluate(lat, m, n)
    coef = np.array([params.dpow(a) * params.dcpow(b) for a, b in zip(dexp, dcexp)], dtype=complex)
    coef *= params.q ** np.round(qexp + zm.zq * zexp).astype(int).astype(float) \
        if np.allclose(qexp, np.round(qexp)) else np.exp((qexp + zm.zq * zexp) * np.log(params.q))
    target = np.full(len(box), -1, dtype=int)
    for li, pt in enumerate(box.points):
        cur = list(pt)
        sign = 1
        for step, i, j in reversed(zm.shifts):
            sign *= box.sign(tuple(cur), i, j)
            cur[box.flat(i, j)] += step
        t = box.index.get(tuple(cur))
        if t is not None:
            target[li] = t
        coef[li] *= sign
    return target, coef, zexp


# -- oscillator exponentials -----------------------------------------------------

def _osc_linear(params: AlgebraParams, basis: FockBasis, expr_at: dict[int, BosonExpression],
                sign: int, scale: complex = 1.0) -> sp.csr_matrix:
    """``sum_r c(r) a_{sign r}`` on the oscillator space (no z)."""
    osc = basis.osc
    out = sp.csr_matrix((len(osc), len(osc)), dtype=complex)
    for r, expr in expr_at.items():
        for (i, j), c in expr.coefficients(params, r).items():
            if c != 0:
                out = out + osc.boson(i, j, sign * r, params.bracket(r) ** 2 / r) * (c * scale**r)
    return out


def expm_nilpotent(a: sp.csr_matrix, max_power: int) -> sp.csr_matrix:
    out = sp.identity(a.shape[0], dtype=complex, format="csr")
    term = out
    for k in range(1, max_power + 1):
        term = (term @ a) / k
        if term.nnz == 0:
            break
        out = out + term
    return out.tocsr()


def osc_vertex_matrix(params: AlgebraParams, basis: FockBasis, ann: BosonExpression | None,
                      cre: BosonExpression | None) -> sp.coo_matrix:
    """``exp(sum_r X_{-r} a_{-r}) exp(sum_r X_r a_r)`` on the oscillator host."""
    D = basis.D_max
    size = len(basis.osc)
    O = sp.identity(size, dtype=complex, format="csr")
    if cre is not None and D > 0:
        O = expm_nilpotent(_osc_linear(params, basis, {r: cre for r in range(1, D + 1)}, -1), D) @ O
    if ann is not None and D > 0:
        O = O @ expm_nilpotent(_osc_linear(params, basis, {r: ann for r in range(1, D + 1)}, +1), D)
    return O.tocoo()


# -- components and families ---------------------------------------------------------

@dataclass
class VertexComponent:
    name: str
    ann: BosonExpression | None
    cre: BosonExpression | None
    zm: ZeroModeFactor
    weight: complex = 1.0


def component_modes(params: AlgebraParams, basis: FockBasis, comp: VertexComponent
                    ) -> dict[int, GradedSparseOperator]:
    """All modes of a component current that have entries on the host."""
    O = osc_vertex_matrix(params, basis, comp.ann, comp.cre)
    keep = np.abs(O.data) > 0
    orow, ocol, odata = O.row[keep], O.col[keep], O.data[keep]
    odeg = basis.osc.degrees
    dd = odeg[orow] - odeg[ocol]
    target, coef, zexp = zero_mode_action(basis, params, comp.zm)
    nosc = len(basis.osc)
    src = np.flatnonzero(target >= 0)
    rows = (target[src][:, None] * nosc + orow[None, :]).ravel()
    cols = (src[:, None] * nosc + ocol[None, :]).ravel()
    vals = (coef[src][:, None] * odata[None, :]).ravel() * comp.weight
    ks = (-(dd[None, :] + zexp[src][:, None])).ravel()
    shift = comp.zm.lattice_shift(basis.m, basis.n)
    out = {}
    for k in np.unique(ks):
        sel = ks == k
        mat = sp.csr_matrix((vals[sel], (rows[sel], cols[sel])), shape=(basis.size, basis.size))
        out[int(k)] = GradedSparseOperator(basis, mat, float(-k), frozenset({shift}),
                                           basis.image_leaks(-int(k), shift), f"{comp.name}_{int(k)}")
    return out


@dataclass
class CurrentFamily:
    """Modes ``X_k`` of a current, summed over its weighted components."""

    name: str
    basis: FockBasis
    shifts: tuple[tuple[int, ...], ...]
    modes: dict[int, GradedSparseOperator] = field(default_factory=dict)

    def mode(self, k: int) -> GradedSparseOperator:
        if k in self.modes:
            return self.modes[k]
        leak = np.zeros(self.basis.size, dtype=bool)
        for s in self.shifts:
            leak |= self.basis.image_leaks(-k, s)
        op = GradedSparseOperator.zero(self.basis, float(-k), f"{self.name}_{k}")
        return op.with_leak(leak)

    def support(self) -> list[int]:
        return sorted(self.modes)

    def scaled_argument(self, c: complex, name: str | None = None) -> "CurrentFamily":
        """Modes of ``X(c z)``: ``X_k -> c^{-k} X_k``."""
        return CurrentFamily(name or self.name, self.basis, self.shifts,
                             {k: op.scale(c ** (-k)) for k, op in self.modes.items()})

    def right_diag(self, values: np.ndarray, name: str | None = None) -> "CurrentFamily":
        d = sp.diags(np.asarray(values, dtype=complex))
        return CurrentFamily(name or self.name, self.basis, self.shifts,
                             {k: GradedSparseOperator(self.basis, op.mat @ d, op.degree, op.shifts,
                                                      op.leak, op.tag)
                              for k, op in self.modes.items()})


def assemble_family(params: AlgebraParams, basis: FockBasis, name: str,
                    comps: list[VertexComponent]) -> CurrentFamily:
    modes: dict[int, GradedSparseOperator] = {}
    shifts = []
    for comp in comps:
        shifts.append(comp.zm.lattice_shift(basis.m, basis.n))
        for k, op in component_modes(params, basis, comp).items():
            modes[k] = modes[k] + op if k in modes else op
    for k, op in modes.items():
        op.tag = f"{name}_{k}"
    return CurrentFamily(name, basis, tuple(dict.fromkeys(shifts)), modes)


# -- the currents of both actions ---------------------------------------------------------

CURRENTS = {
    # name: (boson kind, zero-mode kind, dual?)
    "E": ("A", "U", False), "F": ("B", "V", False),
    "Ec": ("Ac", "Uc", True), "Fc": ("Bc", "Vc", True),
    "dE": ("Ad", "U", False), "dF": ("Bd", "V", False),
    "dEc": ("Acd", "Uc", True), "dFc": ("Bcd", "Vc", True),
}


def component(params: AlgebraParams, name: str, i: int, j: int, weight: complex = 1.0
              ) -> VertexComponent:
    """``X^{i,j}(z)`` for ``name`` in ``CURRENTS`` (no spectral weight by default)."""
    bkind, zkind, _ = CURRENTS[name]
    m, n = params.m, params.n
    ann = current_coefficient(bkind, m, n, i, j, +1)
    cre = current_coefficient(bkind, m, n, i, j, -1)
    return VertexComponent(f"{name}^{i},{j}", ann, cre, zero_mode_factor(zkind, m, n, i, j), weight)


def spectral_weight(params: AlgebraParams, name: str, i: int, j: int) -> complex:
    """``u_j^{-+delta_{i,0}}`` (level-n action) or ``uc_i^{-+delta_{j,0}}`` (dual)."""
    _, _, dual = CURRENTS[name]
    is_e = name.lstrip("d").startswith("E")
    if not dual:
        return params.u[j] ** (-1 if is_e else 1) if i % params.m == 0 else 1.0
    return params.uc[i] ** (-1 if is_e else 1) if j % params.n == 0 else 1.0


def build_current(params: AlgebraParams, basis: FockBasis, name: str, idx: int) -> CurrentFamily:
    """Full current ``E_i = sum_j u_j^{-delta} E^{i,j}`` (or its analogues)."""
    _, _, dual = CURRENTS[name]
    comps = []
    if not dual:
        for j in range(params.n):
            comps.append(component(params, name, idx, j, spectral_weight(params, name, idx, j)))
    else:
        for i in range(params.m):
            comps.append(component(params, name, i, idx, spectral_weight(params, name, i, idx)))
    return assemble_family(params, basis, f"{name}_{idx}", comps)


def build_component(params: AlgebraParams, basis: FockBasis, name: str, i: int, j: int
                    ) -> CurrentFamily:
    return assemble_family(params, basis, f"{name}^{i},{j}", [component(params, name, i, j)])


# -- Cartan part ----------------------------------------------------------------------------

def lift_osc(basis: FockBasis, osc: sp.csr_matrix) -> sp.csr_matrix:
    return sp.kron(sp.identity(len(basis.lattice), format="csr"), osc, format="csr")


def cartan_mode(params: AlgebraParams, basis: FockBasis, i: int, r: int, dual: bool = False
                ) -> GradedSparseOperator:
    """``H_{i,r}`` (or the dual ``Hc_{i,r}``) as an operator; ``r`` signed."""
    if r == 0:
        raise ValueError("H modes are nonzero")
    expr = cartan_boson("Hc" if dual else "H", params.m, params.n, i, 1 if r > 0 else -1)
    osc = _osc_linear(params, basis, {abs(r): expr}, 1 if r > 0 else -1)
    zero = (0,) * (basis.m * basis.n)
    leak = basis.image_leaks(-r, zero) if r < 0 else None
    return GradedSparseOperator(basis, lift_osc(basis, osc), float(-r), frozenset({zero}), leak,
                                f"{'Hc' if dual else 'H'}_{i},{r}")


def weight_values(basis: FockBasis, dual: bool = False) -> np.ndarray:
    """``e_s`` (shape ``(size, m)``) or ``ec_t`` (shape ``(size, n)``) per state."""
    return basis.dual_weights() if dual else basis.weights()


def k_scalar(params: AlgebraParams, basis: FockBasis, i: int, dual: bool = False) -> np.ndarray:
    """Diagonal of ``K_i = q^{e_{i-1} - e_i}`` (or its dual)."""
    w = weight_values(basis, dual)
    size = w.shape[1]
    return params.q ** (w[:, (i - 1) % size] - w[:, i % size]).astype(float)


def k_modes(params: AlgebraParams, basis: FockBasis, i: int, sign: int, max_mode: int,
            dual: bool = False) -> dict[int, GradedSparseOperator]:
    """Modes of ``K^{+}_i(z) = sum_{s>=0} K^+_{s} z^{-s}`` (keys ``s``) or of
    ``K^-_i(z) = sum_{s>=0} K^-_{-s} z^{s}`` (keys ``-s``)."""
    q = params.q
    h = {r: cartan_mode(params, basis, i, sign * r, dual).scale(sign * (q - 1 / q))
         for r in range(1, max_mode + 1)}
    S = {0: GradedSparseOperator.identity(basis)}
    for s in range(1, max_mode + 1):
        acc = None
        for r in range(1, s + 1):
            term = (h[r] @ S[s - r]).scale(r)
            acc = term if acc is None else acc + term
        S[s] = acc.scale(1.0 / s)
    kd = k_scalar(params, basis, i, dual) ** sign
    K = GradedSparseOperator.diagonal(basis, kd, "K")
    return {sign * s: K @ op for s, op in S.items()}


# -- normal-ordered products -----------------------------------------------------------

@dataclass
class Factor:
    """``X(c z) * const * q^{q_exp(d)}`` for one component ``X``."""

    comp: VertexComponent
    scale: complex = 1.0
    const: complex = 1.0
    q_exp: Affine = Affine()


def weight_affine(m: int, n: int, s: int, sign: int = 1, dual: bool = False) -> Affine:
    """``sign * e_s`` (or ``sign * ec_s``) as an affine form in the lattice."""
    if dual:
        return Affine.build(0, _sum_col(m, n, s % n, -sign))
    return Affine.build(0, _sum_row(m, n, s % m, sign))


def extended_component(params: AlgebraParams, name: str, i: int, j: int) -> Factor:
    """Dressed components with index ``-1`` continued through the nome.

    ``dE^{i,-1}(z) = dE^{i,n-1}(p* z) dc^-n q^{-e_{i-1}+e_i}`` and similarly
    for ``dF`` (nome ``p``).  The dual currents use ``pc*``, ``pc``, ``d^-m``
    and ``q^{ec_{j-1} - ec_j}``.
    """
    m, n = params.m, params.n
    _, _, dual = CURRENTS[name]
    if not dual and j == -1:
        nome = params.pstar if name == "dE" else params.p
        q_exp = weight_affine(m, n, i - 1, -1) + weight_affine(m, n, i, 1)
        return Factor(component(params, name, i, n - 1), nome, params.dc ** (-n), q_exp)
    if dual and i == -1:
        nome = params.pcstar if name == "dEc" else params.pc
        # the weight ratio enters with the opposite sign to the level-n case
        q_exp = weight_affine(m, n, j - 1, 1, True) + weight_affine(m, n, j, -1, True)
        return Factor(component(params, name, m - 1, j), nome, params.d ** (-m), q_exp)
    return Factor(component(params, name, i % m, j % n))


def normal_product_modes(params: AlgebraParams, basis: FockBasis, factors: list[Factor]
                         ) -> dict[int, GradedSparseOperator]:
    """Modes in ``z`` of ``:X_1(c_1 z) X_2(c_2 z) ...:``.

    Oscillators are normal ordered as usual; the ``e``-shifts keep their order
    and every ``d``-dependent factor is evaluated on the source lattice.
    """
    m, n = basis.m, basis.n
    D = basis.D_max
    size = len(basis.osc)
    cre = sp.csr_matrix((size, size), dtype=complex)
    ann = sp.csr_matrix((size, size), dtype=complex)
    box = basis.lattice
    lat = box.array
    coef = np.ones(len(box), dtype=complex)
    zexp = np.zeros(len(box))
    shifts: list[tuple[int, int, int]] = []
    for f in factors:
        c = f.comp
        if D > 0:
            if c.cre is not None:
                cre = cre + _osc_linear(params, basis, {r: c.cre for r in range(1, D + 1)}, -1, f.scale)
            if c.ann is not None:
                ann = ann + _osc_linear(params, basis, {r: c.ann for r in range(1, D + 1)}, +1,
                                        1 / f.scale)
        zm = c.zm
        ze = zm.z_exp.evaluate(lat, m, n)
        qe = zm.q_exp.evaluate(lat, m, n) + zm.zq * ze + f.q_exp.evaluate(lat, m, n)
        dpow = zm.d_exp.evaluate(lat, m, n)
        dcpow = zm.dc_exp.evaluate(lat, m, n)
        coef *= np.array([params.dpow(a) * params.dcpow(b) for a, b in zip(dpow, dcpow)])
        coef *= np.exp(qe * np.log(params.q)) * f.scale ** np.round(ze) * f.const * c.weight
        zexp += ze
        shifts.extend(zm.shifts)
    if not np.allclose(zexp, np.round(zexp)):
        raise ArithmeticError("non-integral z exponent in normal-ordered product")
    zexp = np.round(zexp).astype(int)
    target = np.full(len(box), -1, dtype=int)
    for li, pt in enumerate(box.points):
        cur = list(pt)
        sign = 1
        for step, i, j in reversed(shifts):
            sign *= box.sign(tuple(cur), i, j)
            cur[box.flat(i, j)] += step
        target[li] = box.index.get(tuple(cur), -1)
        coef[li] *= sign
    O = sp.identity(size, dtype=complex, format="csr")
    if D > 0:
        O = (expm_nilpotent(cre, D) @ expm_nilpotent(ann, D)).tocsr()
    O = O.tocoo()
    keep = np.abs(O.data) > 0
    orow, ocol, odata = O.row[keep], O.col[keep], O.data[keep]
    odeg = basis.osc.degrees
    dd = odeg[orow] - odeg[ocol]
    total_shift = [0] * (m * n)
    for step, i, j in shifts:
        total_shift[box.flat(i, j)] += step
    total_shift = tuple(total_shift)
    src = np.flatnonzero(target >= 0)
    rows = (target[src][:, None] * size + orow[None, :]).ravel()
    cols = (src[:, None] * size + ocol[None, :]).ravel()
    vals = (coef[src][:, None] * odata[None, :]).ravel()
    ks = (-(dd[None, :] + zexp[src][:, None])).ravel()
    out = {}
    for k in np.unique(ks):
        sel = ks == k
        mat = sp.csr_matrix((vals[sel], (rows[sel], cols[sel])), shape=(basis.size, basis.size))
        out[int(k)] = GradedSparseOperator(basis, mat, float(-k), frozenset({total_shift}),
                                           basis.image_leaks(-int(k), total_shift), f":{int(k)}:")
    return out


def _linear_at(a: Affine, vec: list[int], m: int, n: int) -> Fraction:
    return sum((c * vec[(s % m) * n + t % n] for (s, t), c in a.coef), Fraction(0))


def zero_mode_contraction_exponents(left: ZeroModeFactor, right: ZeroModeFactor, m: int, n: int
                                    ) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """``left(x) right(y) = (q^a x)^b ... :left right:`` as exponents.

    Moving the lattice-dependent part of ``left`` past the shifts of
    ``right`` evaluates it on the shifted lattice, so the contraction is the
    linear part of ``left`` evaluated on the shift of ``right``.  Returns
    ``(power of x, q, d, dc)`` exponents.
    """
    vec = list(right.lattice_shift(m, n))
    zpow = _linear_at(left.z_exp, vec, m, n)
    return (zpow, left.zq * zpow + _linear_at(left.q_exp, vec, m, n),
            _linear_at(left.d_exp, vec, m, n), _linear_at(left.dc_exp, vec, m, n))
