"""Integrals of motion of the first and second kind and their duals.

For rank ``m = 2`` and one integration variable per node the double
constant term reduces to a single contour integral in ``t = x_2 / x_1``:

    G = sum_j  sum_b  C^{(j)}_b  *  oint_C dt / (2 pi i t)  t^b g_j(t)

where ``C^{(j)}_b`` are the Laurent coefficients in ``t`` of the normal
ordered operator part (exact, computed by sampling on roots of unity) and
``g_j`` collects the oscillator contraction, the theta quotient of ``h`` and
the lattice theta function.  ``g_j`` is a product of factors
``(1 - c t)^e`` with monomial ``c`` times an entire theta series, so the
contour integral is the unit-circle constant term corrected by the residues
of the poles that the prescribed contour puts on the other side of the
unit circle.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .bosons import commutator_terms, contraction_factors
from .fock import FockBasis, FockBasisState, GradedSparseOperator
from .report import CheckRecord
from .params import AlgebraParams, Mono, Q1, Q3, QC1, QC3, mono_inv, mono_mul, mono_pow
from .series import TruncatedSeries
from .vertex import (Factor, component, normal_product_modes, spectral_weight,
                     zero_mode_contraction_exponents)


class PrescriptionError(ValueError):
    """A pole cannot be placed inside or outside the integration contour."""


# -- weight parameters ---------------------------------------------------------------

@dataclass(frozen=True)
class WeightParams:
    """``pbar, pbar_1 .. pbar_{r-1}`` of one side (rank ``r``, other rank ``s``).

    Per sector ``p_i = pbar_i q^{-e_{i-1} + e_i}`` and ``p*_i`` with the
    inverse power of ``q``; ``p = pbar q^{-s}``, ``p* = pbar q^{s}``.
    Logarithms are carried so that fractional powers use one fixed branch.
    """

    q: complex
    rank: int
    other: int
    pbar: complex
    pbar_i: tuple[complex, ...]

    @property
    def log_q(self) -> complex:
        return cmath.log(self.q)

    def log_nome(self, star: bool = False) -> complex:
        return cmath.log(self.pbar) + (1 if star else -1) * self.other * self.log_q

    def nome(self, star: bool = False) -> complex:
        return self.pbar * self.q ** (self.other if star else -self.other)

    def log_sector(self, e: np.ndarray, star: bool = False) -> np.ndarray:
        """``log p_i`` (or ``log p*_i``), ``i = 1 .. rank-1``, for weights ``e``."""
        sgn = 1 if star else -1
        return np.array([cmath.log(self.pbar_i[i - 1]) + sgn * (e[i - 1] - e[i]) * self.log_q
                         for i in range(1, self.rank)])

    def perturbed(self, factor: complex) -> "WeightParams":
        """``pbar_1 -> factor * pbar_1``; used to break the duality constraint."""
        return WeightParams(self.q, self.rank, self.other, self.pbar,
                            (self.pbar_i[0] * factor,) + self.pbar_i[1:])


def duality_weights(params: AlgebraParams) -> tuple[WeightParams, WeightParams]:
    """Weight parameters of both sides with the duality constraints imposed.

    ``p = qc1^n`` and ``pc = q1^m``; ``pbar_i = uc_i / uc_{i-1}`` and the dual
    ``pbar_l = u_l / u_{l-1}``.
    """
    m, n, q = params.m, params.n, params.q
    w = WeightParams(q, m, n, params.p * q**n,
                     tuple(params.uc[i] / params.uc[i - 1] for i in range(1, m)))
    wc = WeightParams(q, n, m, params.pc * q**m,
                      tuple(params.u[l] / params.u[l - 1] for l in range(1, n)))
    return w, wc


# -- theta series --------------------------------------------------------------------

def _poly_mul(a: dict, b: dict, K: int) -> dict:
    out: dict = {}
    for (pa, za), ca in a.items():
        for (pb, zb), cb in b.items():
            if pa + pb <= K:
                key = (pa + pb, za + zb)
                out[key] = out.get(key, 0) + ca * cb
    return out


def _as_series(terms: dict, K: int) -> TruncatedSeries:
    terms = {k: v for k, v in terms.items() if v != 0}
    hi = (K, max([z for _, z in terms] + [0]))
    return TruncatedSeries.from_dict(terms, ("p", "z"), hi)


def qpoch_series(c: complex, K: int, sign: int = 1, z_order: int | None = None) -> TruncatedSeries:
    """``(c z; p)_inf^{sign}`` as a series in ``(p, z)`` to ``p^K`` (and ``z^z_order``)."""
    z_order = K + 1 if z_order is None else z_order
    acc = {(0, 0): 1.0 + 0j}
    for k in range(K + 1):
        if sign > 0:
            fac = {(0, 0): 1.0, (k, 1): -c}
        else:
            fac = {(k * r, r): c**r for r in range(z_order + 1) if k * r <= K}
        acc = _poly_mul(acc, fac, K)
        acc = {key: v for key, v in acc.items() if key[1] <= z_order}
    return _as_series(acc, K)


def theta_q(K: int) -> TruncatedSeries:
    """``Theta_p(z) = (z; p)(p/z; p)(p; p)`` as a series in ``(p, z)`` to ``p^K``."""
    acc = {(0, 0): 1.0 + 0j}
    for k in range(K + 1):
        acc = _poly_mul(acc, {(0, 0): 1.0, (k, 1): -1.0}, K)
        acc = _poly_mul(acc, {(0, 0): 1.0, (k + 1, -1): -1.0}, K)
        acc = _poly_mul(acc, {(0, 0): 1.0, (k + 1, 0): -1.0}, K)
    return _as_series(acc, K)


def series_at_nome(s: TruncatedSeries, p: complex) -> dict[int, complex]:
    """Substitute a numeric nome into a ``(p, z)`` series; returns ``{z exponent: coeff}``."""
    out: dict[int, complex] = {}
    plo, zlo = s.lo
    for (a, b), c in np.ndenumerate(s.coeffs):
        if c != 0:
            out[b + zlo] = out.get(b + zlo, 0) + c * p ** (a + plo)
    return out


# -- lattice theta function -----------------------------------------------------------

def _roots_and_weights(m: int):
    """Simple roots ``alpha_i = eps_{i-1} - eps_i`` (``i = 1..m``, cyclic) and the
    fundamental weights dual to them, the traceless projections of
    ``Lambda_s = eps_0 + ... + eps_{s-1}`` (``s = 0..m-1``)."""
    eye = np.eye(m)
    alpha = [eye[(i - 1) % m] - eye[i % m] for i in range(1, m + 1)]
    proj = eye - np.full((m, m), 1.0 / m)
    lam = [proj @ eye[:s].sum(axis=0) for s in range(m)]
    return alpha, lam


def _frac(x: float) -> Fraction:
    return Fraction(x).limit_denominator(4 * 64)


@dataclass(frozen=True)
class ThetaTerm:
    norm: Fraction                   # (beta, beta) / 2
    lam: tuple[Fraction, ...]        # (beta, Lambda_s), s = 1 .. m-1
    zexp: tuple[int, ...]            # (beta, alpha_i), i = 1 .. m


def lattice_theta_terms(m: int, mu: int, B: int) -> list[ThetaTerm]:
    """Lattice vectors ``beta in Q + Lambda_mu`` with root coordinates ``|k_i| <= B``."""
    alpha, lam = _roots_and_weights(m)
    out = []
    for ks in itertools.product(range(-B, B + 1), repeat=m - 1):
        beta = lam[mu % m] + sum((k * a for k, a in zip(ks, alpha[:m - 1])), np.zeros(m))
        zexp = tuple(int(round(beta @ a)) for a in alpha)
        out.append(ThetaTerm(_frac(beta @ beta / 2), tuple(_frac(beta @ l) for l in lam[1:]), zexp))
    return out


def theta_weight(term: ThetaTerm, log_p: complex, log_ps: np.ndarray) -> complex:
    """``p^{(beta,beta)/2} prod_s p_s^{-(beta, Lambda_s)}`` on the fixed branch."""
    x = float(term.norm) * log_p - sum(float(c) * lp for c, lp in zip(term.lam, log_ps))
    return cmath.exp(x)


def lattice_theta(m: int, mu: int, log_p: complex, log_ps, B: int,
                  invert: bool = False) -> TruncatedSeries:
    """``theta_mu(z_1 .. z_m)`` as a Laurent polynomial (``z -> 1/z`` if ``invert``)."""
    sgn = -1 if invert else 1
    terms: dict[tuple[int, ...], complex] = {}
    for t in lattice_theta_terms(m, mu, B):
        key = tuple(sgn * e for e in t.zexp)
        terms[key] = terms.get(key, 0) + theta_weight(t, log_p, np.asarray(log_ps))
    hi = tuple(max(k[v] for k in terms) for v in range(m))
    return TruncatedSeries.from_dict(terms, tuple(f"z{i}" for i in range(1, m + 1)), hi)


def theta_radius(p_abs: float, tol: float, cap: int = 50) -> int:
    """Smallest ``B`` whose omitted shell lies below ``tol`` (shell norm grows like ``B^2``)."""
    B = 1
    while p_abs ** ((B + 0.5) ** 2 / 2) > tol and B < cap:
        B += 1
    return B


# -- the scalar kernel ---------------------------------------------------------------

@dataclass
class Kernel:
    """``const * mono * t^tpow * prod_c (1 - c t)^{e_c}`` with exact monomials ``c``."""

    const: complex = 1.0
    mono: Mono = (0, 0, 0)
    tpow: int = 0
    factors: dict = field(default_factory=dict)

    def mul_factor(self, c: Mono, e: int, sigma: int = 1) -> None:
        """Multiply by ``(1 - c t^sigma)^e``."""
        if e == 0:
            return
        if sigma < 0:
            # 1 - c/t = (-c) t^-1 (1 - t/c)
            self.tpow -= e
            self.const *= (-1) ** (e % 2)
            self.mono = mono_mul(self.mono, mono_pow(c, e))
            c = mono_inv(c)
        new = self.factors.get(c, 0) + e
        if new:
            self.factors[c] = new
        else:
            self.factors.pop(c, None)

    def values(self, params: AlgebraParams, t, skip: Mono | None = None) -> np.ndarray:
        t = np.asarray(t, dtype=complex)
        # summed in logs: at high nome order the monomial and the factors are
        # separately out of range while their product is not
        a, b, c = self.mono
        log = (cmath.log(self.const) + a * cmath.log(params.q) + b * params.log_d
               + c * params.log_dc) + self.tpow * np.log(t)
        for c, e in self.factors.items():
            if c != skip:
                log = log + e * np.log(1 - params.val(c) * t)
        return np.exp(log)

    def poles(self) -> list[tuple[Mono, int]]:
        """``(t0 as monomial, order)`` for every factor with negative exponent."""
        return [(mono_inv(c), -e) for c, e in self.factors.items() if e < 0]


# -- contour --------------------------------------------------------------------------

@dataclass(frozen=True)
class KindSpec:
    """Ordered current pair, nome and ``h`` data of one kind of integral."""

    dual: bool
    star: bool
    left: tuple[str, int, int]       # (current, node index, variable 1 or 2)
    right: tuple[str, int, int]

    @property
    def left_is_x1(self) -> bool:
        return self.left[2] == 1


KINDS = {
    "G": KindSpec(False, False, ("dF", 1, 1), ("dF", 0, 2)),
    "G*": KindSpec(False, True, ("dE", 0, 2), ("dE", 1, 1)),
    "Gc": KindSpec(True, False, ("dFc", 1, 1), ("dFc", 0, 2)),
    "Gc*": KindSpec(True, True, ("dEc", 0, 2), ("dEc", 1, 1)),
}


def kind_nome(params: AlgebraParams, spec: KindSpec) -> tuple[Mono, int]:
    """Nome monomial and the coordinate (``dc`` or ``d`` exponent) that counts its powers."""
    if spec.dual:
        return (params.pcstar_mono if spec.star else params.pc_mono), 1
    return (params.pstar_mono if spec.star else params.p_mono), 2


def classify_pole(t0: Mono, nome: Mono, coord: int, star: bool) -> bool:
    """Whether the contour encloses the pole ``t = t0`` of the ``t = x_2/x_1`` integrand.

    Write ``t0 = c * nome^k``.  Poles with ``k > 0`` are inside and ``k < 0``
    outside; for ``k = 0`` the reference regime decides: ``|q1|, |q3| < 1``
    for the first kind (``q`` counts as large) and ``> 1`` for the second.
    """
    k = Fraction(t0[coord], nome[coord])
    if k.denominator != 1:
        raise PrescriptionError(f"pole {t0} is not a nome multiple of a q-monomial")
    k = int(k)
    if k:
        return k > 0
    size = -t0[0] if star else t0[0]
    if size == 0:
        raise PrescriptionError(f"pole {t0} has no reference size")
    return size < 0


@dataclass
class Quadrature:
    """Nodes and weights for ``oint_C dt / (2 pi i t) f(t)``."""

    t: np.ndarray
    w: np.ndarray
    corrected: list = field(default_factory=list)


def contour_quadrature(kernel: Kernel, params: AlgebraParams, spec: KindSpec,
                       S: int = 128, S_small: int = 64, margin: float = 1e-3) -> Quadrature:
    """Unit circle plus small circles around the poles it puts on the wrong side."""
    nome, coord = kind_nome(params, spec)
    th = 2 * np.pi * np.arange(S) / S
    ts, ws = [np.exp(1j * th)], [np.full(S, 1.0 / S, dtype=complex)]
    poles = [(mono, order, params.val(mono)) for mono, order in kernel.poles()]
    corrected = []
    for mono, order, t0 in poles:
        inside = classify_pole(mono, nome, coord, spec.star)
        r = abs(t0)
        if abs(r - 1) < margin:
            raise PrescriptionError(f"pole {mono} lies on the unit circle")
        if inside == (r < 1):
            continue
        others = [abs(t0 - v) for mm, _, v in poles if mm != mono]
        rho = 0.4 * min([r] + others)
        z = t0 + rho * np.exp(1j * np.arange(S_small) * 2 * np.pi / S_small)
        sgn = 1.0 if inside else -1.0
        ts.append(z)
        ws.append(sgn * rho * np.exp(1j * np.arange(S_small) * 2 * np.pi / S_small) / (z * S_small))
        corrected.append((mono, order, "add" if inside else "remove"))
    return Quadrature(np.concatenate(ts), np.concatenate(ws), corrected)


# -- building the operators ---------------------------------------------------------------

@dataclass
class Truncation:
    D_max: int = 2
    L_max: int = 1
    K: int = 3
    B: int | None = None
    S_op: int = 32
    S: int = 128
    theta_tol: float = 1e-16


def h_kernel(params: AlgebraParams, spec: KindSpec, K: int) -> Kernel:
    """``1 / (Theta(q3^-1 x2/x1) Theta(q1 x1/x2))`` with each product cut at ``p^K``."""
    nome, _ = kind_nome(params, spec)
    a, b = (QC3, QC1) if spec.dual else (Q3, Q1)
    ker = Kernel()
    pp = 1.0
    for k in range(K + 1):
        pk, pk1 = mono_pow(nome, k), mono_pow(nome, k + 1)
        # Theta(z) = (z; p)(p/z; p)(p; p) at z = a^-1 t and z = b / t
        ker.mul_factor(mono_mul(mono_inv(a), pk), -1, 1)
        ker.mul_factor(mono_mul(a, pk1), -1, -1)
        ker.mul_factor(mono_mul(b, pk), -1, -1)
        ker.mul_factor(mono_mul(mono_inv(b), pk1), -1, 1)
        pp *= (1 - params.val(pk1)) ** 2
    ker.const /= pp
    return ker


def kind_components(params: AlgebraParams, side: tuple[str, int, int]) -> list:
    """Weighted components of the dressed current ``side = (name, node, var)``."""
    name, node, _ = side
    if name.endswith("c"):
        return [component(params, name, i, node, spectral_weight(params, name, i, node))
                for i in range(params.m)]
    return [component(params, name, node, j, spectral_weight(params, name, node, j))
            for j in range(params.n)]


def pair_kernel(params: AlgebraParams, spec: KindSpec, X, Y, K: int) -> tuple[Kernel, int]:
    """Scalar kernel of ``X(x_a) Y(x_b)`` times ``h``; also the power of ``x_a``
    produced by the zero-mode contraction."""
    ker = h_kernel(params, spec, K)
    sigma = 1 if spec.left_is_x1 else -1
    if X.ann is not None and Y.cre is not None:
        for C, e in contraction_factors(commutator_terms(X.ann, Y.cre), K):
            if abs(e - round(e.real)) > 1e-12:
                raise ValueError(f"non-integral contraction exponent {e}")
            ker.mul_factor(C, int(round(e.real)), sigma)
    zpow, qe, de, dce = zero_mode_contraction_exponents(X.zm, Y.zm, params.m, params.n)
    if zpow.denominator != 1:
        raise ArithmeticError("non-integral zero-mode contraction power")
    ker.const *= params.qpow(qe) * params.dpow(de) * params.dcpow(dce)
    return ker, int(zpow)


def operator_coefficients(params: AlgebraParams, basis: FockBasis, spec: KindSpec, X, Y,
                          zpow: int, S: int) -> dict[int, sp.csr_matrix]:
    """Laurent coefficients in ``t`` of the ``x^0`` part of ``:X(x_a) Y(x_b):``.

    The product is a Laurent polynomial in ``t`` on the truncated space, so
    ``S`` samples on the roots of unity recover it exactly once ``S`` exceeds
    its width; the two outermost coefficients must vanish as a guard.
    """
    ts = np.exp(2j * np.pi * np.arange(S) / S)
    samples = []
    for t in ts:
        scale = t if spec.left_is_x1 else 1 / t
        modes = normal_product_modes(params, basis, [Factor(X), Factor(Y, scale)])
        op = modes.get(zpow)
        samples.append(op.mat if op is not None else sp.csr_matrix((basis.size, basis.size),
                                                                   dtype=complex))
    out = {}
    scale = max(float(abs(s).max()) if s.nnz else 0.0 for s in samples) or 1.0
    for b in range(-(S // 2), S // 2):
        acc = sum((s * (t ** (-b) / S) for s, t in zip(samples, ts)),
                  sp.csr_matrix((basis.size, basis.size), dtype=complex))
        acc = sp.csr_matrix(acc)
        acc.data[abs(acc.data) < 1e-13 * scale] = 0
        acc.eliminate_zeros()
        if acc.nnz:
            if abs(b) >= S // 2 - 1:
                raise OverflowError(f"t-window of {S} samples too narrow for this truncation")
            out[b] = acc
    return out


def theta_values(spec: KindSpec, w: WeightParams, mu: int, e: np.ndarray, B: int,
                 t: np.ndarray) -> np.ndarray:
    """Lattice theta at ``(x_1, x_2) = (1, t)`` (inverted arguments for the second kind)."""
    log_p = w.log_nome(spec.star)
    log_ps = w.log_sector(e, spec.star)
    sgn = -1 if spec.star else 1
    out = np.zeros(t.shape, dtype=complex)
    for term in lattice_theta_terms(w.rank, mu, B):
        out += theta_weight(term, log_p, log_ps) * t ** (sgn * term.zexp[1])
    return out


@dataclass
class IomOperator:
    kind: str
    index: int
    order: int
    op: GradedSparseOperator
    meta: dict = field(default_factory=dict)


def build_iom(params: AlgebraParams, basis: FockBasis, kind: str, mu: int, w: WeightParams,
              trunc: Truncation, cache: dict | None = None) -> IomOperator:
    """``G_{mu,1}``, ``G*_{mu,1}`` or their duals (``kind`` in ``KINDS``) on ``basis``.

    ``cache`` may hold the operator coefficients across calls; they do not
    depend on ``mu`` or the weight parameters.
    """
    spec = KINDS[kind]
    rank = params.n if spec.dual else params.m
    if rank != 2:
        raise NotImplementedError("integrals of motion are built for rank 2 only")
    nome = abs(w.nome(spec.star))
    B = trunc.B if trunc.B is not None else theta_radius(nome, trunc.theta_tol)
    e_all = basis.dual_weights() if spec.dual else basis.weights()
    sectors: dict[tuple, list[int]] = {}
    for c, e in enumerate(map(tuple, e_all)):
        sectors.setdefault(e, []).append(c)
    cache = {} if cache is None else cache
    total = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    leak = np.zeros(basis.size, dtype=bool)
    corrected = []
    for X in kind_components(params, spec.left):
        for Y in kind_components(params, spec.right):
            ker, zpow = pair_kernel(params, spec, X, Y, trunc.K)
            key = (kind, X.name, Y.name, basis.D_max, basis.L_max, trunc.S_op)
            if key not in cache:
                cache[key] = operator_coefficients(params, basis, spec, X, Y, zpow, trunc.S_op)
            coeffs = cache[key]
            if not coeffs:
                continue
            quad = contour_quadrature(ker, params, spec, trunc.S)
            corrected.extend(quad.corrected)
            base = quad.w * ker.values(params, quad.t)
            J = {b: np.zeros(basis.size, dtype=complex) for b in coeffs}
            for e, cols in sectors.items():
                g = base * theta_values(spec, w, mu, np.asarray(e), B, quad.t)
                for b in coeffs:
                    J[b][cols] = np.sum(g * quad.t ** b)
            for b, C in coeffs.items():
                total = total + C @ sp.diags(J[b])
            shift = tuple(a + c for a, c in zip(X.zm.lattice_shift(params.m, params.n),
                                                Y.zm.lattice_shift(params.m, params.n)))
            leak |= basis.image_leaks(0.0, shift)
    op = GradedSparseOperator(basis, total.tocsr(), 0.0, None, leak, f"{kind}_{mu}")
    meta = {"K": trunc.K, "B": B, "S": trunc.S, "S_op": trunc.S_op,
            "corrected_poles": sorted({(m_, o, s) for m_, o, s in corrected})}
    return IomOperator(kind, mu, 1, op, meta)


# -- verification -----------------------------------------------------------------------

PAIRINGS = (("G", "Gc"), ("G*", "Gc"), ("G", "Gc*"), ("G*", "Gc*"))


def commutator_residual(x: GradedSparseOperator, y: GradedSparseOperator) -> tuple[float, int]:
    """``max|[X, Y]| / (max|X| max|Y|)`` over the exact columns of the commutator."""
    c = x @ y - y @ x
    mask = c.exact
    den = x.block_max(mask) * y.block_max(mask)
    return (c.block_max(mask) / den if den else 0.0), int(mask.sum())


def block_diagonal(op: GradedSparseOperator, tol: float = 0.0) -> bool:
    """Every entry connects states of equal degree, weights ``e`` and dual weights."""
    b = op.basis
    coo = op.mat.tocoo()
    keep = abs(coo.data) > tol
    r, c = coo.row[keep], coo.col[keep]
    return bool(np.allclose(b.degrees[r], b.degrees[c])
                and (b.weights()[r] == b.weights()[c]).all()
                and (b.dual_weights()[r] == b.dual_weights()[c]).all())


def duality_bound(params: AlgebraParams, K: int, floor: float = 1e-6) -> float:
    """``max(floor, 10 (|p|^(K+1) + |pc|^(K+1)))``, the tolerance of both commutativity checks."""
    return max(floor, 10 * (abs(params.p) ** (K + 1) + abs(params.pc) ** (K + 1)))


def nome_bound(params: AlgebraParams, pair: tuple[str, str], K: int, floor: float = 1e-6) -> float:
    """As ``duality_bound`` but with the nomes the two operators are actually built from.

    Starred kinds converge in ``p*`` (or ``pc*``), which exceeds ``p`` when
    ``|q| > 1``; this is reported next to the asserted bound.
    """
    nomes = [abs(params.val(kind_nome(params, KINDS[k])[0])) for k in pair]
    return max(floor, 10 * sum(x ** (K + 1) for x in nomes))


@dataclass
class DualitySettings:
    D_max: int = 2
    L_max: int = 1
    ladder: tuple[int, ...] = (1, 2, 3, 4)
    delta: float = 0.5
    control_ratio: float = 1e2
    noise: float = 2.0


def iom_key(params: AlgebraParams, basis: FockBasis, kind: str, mu: int, w: WeightParams,
            trunc: Truncation) -> dict:
    """Everything an integral of motion depends on, for the operator cache."""
    return {"op": kind, "index": mu, "params": params.to_dict(), "D_max": basis.D_max,
            "L_max": basis.L_max, "K": trunc.K, "B": trunc.B, "S": trunc.S,
            "weights": [w.pbar, *w.pbar_i]}


def _build_all(params, basis, w, wc, K, cache, kinds=tuple(KINDS), store=None):
    tr = Truncation(basis.D_max, basis.L_max, K)
    out = {}
    for k in kinds:
        wk = wc if KINDS[k].dual else w
        for mu in range(2):
            def build(k=k, mu=mu, wk=wk):
                return build_iom(params, basis, k, mu, wk, tr, cache).op
            out[k, mu] = (store.get_or_build(basis, iom_key(params, basis, k, mu, wk, tr), build)
                          if store is not None else build())
    return out


def _pair_residual(ops, a, b) -> tuple[float, int]:
    vals = [commutator_residual(ops[a, mu], ops[b, nu]) for mu in range(2) for nu in range(2)]
    return max(v for v, _ in vals), min(n for _, n in vals)


def verify_duality(params: AlgebraParams, settings: DualitySettings | None = None,
                   cache: dict | None = None, store=None) -> list[CheckRecord]:
    """Commutators of both families with the dual ones along a p-order ladder.

    Records: ``iom-duality`` (top rung below the truncation-scaled bound, and
    monotone along the ladder within the noise factor), ``iom-control``
    (constraint broken by ``1 + delta``: residual grows by ``control_ratio``),
    ``iom-self`` (one-sided commutativity), ``iom-block`` and ``iom-vacuum``.
    """
    s = settings or DualitySettings()
    cache = {} if cache is None else cache
    basis = FockBasis(params.m, params.n, s.D_max, s.L_max)
    w, wc = duality_weights(params)
    ladder: dict[tuple[str, str], list[float]] = {p: [] for p in PAIRINGS}
    ncols = {}
    for K in s.ladder:
        ops = _build_all(params, basis, w, wc, K, cache, store=store)
        for pair in PAIRINGS:
            res, ncols[pair] = _pair_residual(ops, *pair)
            ladder[pair].append(res)
    top = s.ladder[-1]
    out = []
    for pair, vals in ladder.items():
        mono = all(b <= s.noise * a for a, b in zip(vals, vals[1:]))
        out.append(CheckRecord("iom-duality", {"pair": "/".join(pair)},
                               vals[-1] if mono else math.inf, duality_bound(params, top),
                               "identity", ncols[pair],
                               {"ladder": dict(zip(s.ladder, vals)), "monotone": mono,
                                "operator_nome_bound": nome_bound(params, pair, top)}))
    broken = _build_all(params, basis, w.perturbed(1 + s.delta), wc, top, cache, ("G", "G*"),
                        store)
    broken.update({k: v for k, v in ops.items() if KINDS[k[0]].dual})
    for pair in PAIRINGS:
        res, n = _pair_residual(broken, *pair)
        base = max(ladder[pair][-1], 1e-300)
        out.append(CheckRecord("iom-control", {"pair": "/".join(pair), "delta": s.delta},
                               res / base, s.control_ratio, "witness", n,
                               {"broken": res, "baseline": ladder[pair][-1]}))
    for a, b in (("G", "G"), ("G", "G*"), ("G*", "G*"), ("Gc", "Gc"), ("Gc", "Gc*"),
                 ("Gc*", "Gc*")):
        res, n = _pair_residual(ops, a, b)
        out.append(CheckRecord("iom-self", {"pair": f"{a}/{b}"}, res,
                               duality_bound(params, top), "identity", n,
                               {"operator_nome_bound": nome_bound(params, (a, b), top)}))
    vac = basis.index(FockBasisState((0,) * (params.m * params.n), ()))
    for key, op in ops.items():
        out.append(CheckRecord("iom-block", {"op": key[0], "index": key[1]},
                               0.0 if block_diagonal(op) else 1.0, 0.0, "identity", 1))
    worst = 0.0
    for pair in PAIRINGS:
        for mu in range(2):
            for nu in range(2):
                x, y = ops[pair[0], mu], ops[pair[1], nu]
                c = x @ y - y @ x
                worst = max(worst, abs(c.mat[vac, vac]))
    out.append(CheckRecord("iom-vacuum", {}, worst, 0.0, "identity", 1))
    return out
