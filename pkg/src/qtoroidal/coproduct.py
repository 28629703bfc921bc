"""Level-two action rebuilt from two level-one factors through the coproduct.

For ``n = 2`` the space ``F_{m,2}`` is identified with
``F_{m,1}(u_0) (x) F_{m,1}(u_1)``:

* oscillators of factor ``j`` map to ``a^{i,j}`` with ``a_{+-r} -> dc^{+-jr} a^{i,j}_{+-r}``;
* lattice vectors are concatenated, with the sign
  ``(-1)^{sum_{s' < s} m_{s,0} m_{s',1}}`` that reconciles the single ordering
  of ``e^{eps_{s,t}}`` on ``F_{m,2}`` with the factorwise ordering.

The coproduct is

    D E_i(z) = E_i(C_2 z) (x) K-_i(z) + 1 (x) E_i(z)
    D F_i(z) = F_i(z) (x) 1 + K+_i(z) (x) F_i(C_1 z)
    D H_{i,r} = H_{i,r} (x) 1 + C_1^{-r} 1 (x) H_{i,r}
    D H_{i,-r} = C_2^{r} H_{i,-r} (x) 1 + 1 (x) H_{i,-r}

followed by conjugation with ``d^Z``,
``Z = -sum_s (s + 1/2) m_{s,0} m_{s,1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis, GradedSparseOperator, relative_residual
from .params import AlgebraParams
from .report import CheckRecord
from .vertex import build_current, cartan_mode, k_modes


@dataclass
class ProductOp:
    mat: sp.csr_matrix
    leak: np.ndarray

    def __add__(self, other: "ProductOp") -> "ProductOp":
        return ProductOp((self.mat + other.mat).tocsr(), self.leak | other.leak)


def kron_op(a: GradedSparseOperator | None, b: GradedSparseOperator | None, size: int,
            scale: complex = 1.0) -> ProductOp:
    """``a (x) b`` with ``None`` standing for the identity."""
    ident = sp.identity(size, dtype=complex, format="csr")
    la = a.leak if a is not None else np.zeros(size, dtype=bool)
    lb = b.leak if b is not None else np.zeros(size, dtype=bool)
    mat = sp.kron(a.mat if a is not None else ident, b.mat if b is not None else ident,
                  format="csr") * scale
    leak = (la[:, None] | lb[None, :]).ravel()
    return ProductOp(mat, leak)


class TensorEmbedding:
    """Index map and basis rescaling from ``F_{m,2}`` into the product of factors."""

    def __init__(self, params: AlgebraParams, big: FockBasis, factor: FockBasis):
        if params.n != 2 or big.n != 2 or factor.n != 1:
            raise ValueError("the coproduct check is defined for n = 2")
        m = params.m
        nf = factor.size
        self.big, self.factor = big, factor
        self.prod_index = np.empty(big.size, dtype=int)
        self.coef = np.empty(big.size, dtype=complex)
        for k, st in enumerate(big.states()):
            lat = np.asarray(st.lattice).reshape(m, 2)
            halves = []
            for t in range(2):
                osc = tuple(sorted((i, 0, r) for i, j, r in st.osc if j == t))
                halves.append(factor.index(type(st)(tuple(int(x) for x in lat[:, t]), osc)))
            self.prod_index[k] = halves[0] * nf + halves[1]
            sgn = sum(int(lat[s, 0]) * int(lat[sp_, 1]) for s in range(m) for sp_ in range(s))
            dres = sum(r for _, j, r in st.osc if j == 1)
            self.coef[k] = (-1) ** (sgn % 2) * params.dc ** (-dres)
        self.prod_size = nf * nf
        self.inside = np.zeros(self.prod_size, dtype=bool)
        self.inside[self.prod_index] = True
        lat = big.lattice_array().reshape(big.size, m, 2)
        zexp = -np.einsum("s,ks->k", np.arange(m) + 0.5, lat[:, :, 0] * lat[:, :, 1])
        self.gauge = np.array([params.dpow(z) for z in zexp])

    def pull_back(self, op: ProductOp, degree: float | None = None) -> GradedSparseOperator:
        """``d^Z T op T^-1 d^-Z`` on ``F_{m,2}``, leaking where the image leaves it."""
        P = self.prod_index
        cols = op.mat[:, P]
        outside = np.asarray(abs(cols[~self.inside, :]).sum(axis=0)).ravel() > 0
        sub = cols[P, :]
        scale = self.coef * self.gauge
        mat = sp.diags(scale) @ sub @ sp.diags(1 / scale)
        leak = op.leak[P] | outside
        return GradedSparseOperator(self.big, mat.tocsr(), degree, leak=leak)


def coproduct_operators(params: AlgebraParams, D_max: int, L_max: int, window: int, r_max: int):
    """Yield ``(name, case, from coproduct, closed form)`` for every generator checked."""
    m, q = params.m, params.q
    big = FockBasis(m, 2, D_max, L_max)
    fac = FockBasis(m, 1, D_max, L_max)
    emb = TensorEmbedding(params, big, fac)
    lev = [params.as_level_one(params.u[0]), params.as_level_one(params.u[1])]
    nf = fac.size
    for i in range(m):
        E = [build_current(p, fac, "E", i) for p in lev]
        F = [build_current(p, fac, "F", i) for p in lev]
        Km = k_modes(lev[1], fac, i, -1, D_max)
        Kp = k_modes(lev[0], fac, i, +1, D_max)
        bigE, bigF = build_current(params, big, "E", i), build_current(params, big, "F", i)
        for k in range(-window, window + 1):
            acc = kron_op(None, E[1].mode(k), nf)
            for b in range(-D_max, 1):
                acc = acc + kron_op(E[0].mode(k - b), Km[b], nf, q ** (-(k - b)))
            yield "E", {"i": i, "k": k}, emb.pull_back(acc, float(-k)), bigE.mode(k)
            acc = kron_op(F[0].mode(k), None, nf)
            for s in range(0, D_max + 1):
                acc = acc + kron_op(Kp[s], F[1].mode(k - s), nf, q ** (-(k - s)))
            yield "F", {"i": i, "k": k}, emb.pull_back(acc, float(-k)), bigF.mode(k)
        for r in range(1, r_max + 1):
            for sgn in (1, -1):
                h0 = cartan_mode(lev[0], fac, i, sgn * r)
                h1 = cartan_mode(lev[1], fac, i, sgn * r)
                c0, c1 = (1.0, q ** (-r)) if sgn > 0 else (q ** r, 1.0)
                acc = kron_op(h0, None, nf, c0) + kron_op(None, h1, nf, c1)
                yield "H", {"i": i, "r": sgn * r}, emb.pull_back(acc, float(-sgn * r)), \
                    cartan_mode(params, big, i, sgn * r)


def coproduct_cross_check(params: AlgebraParams, D_max: int = 2, L_max: int = 1,
                          window: int = 2, r_max: int = 2, tol: float = 1e-10
                          ) -> list[CheckRecord]:
    """Entrywise comparison of the closed level-2 formulas with the coproduct action."""
    out = []
    for name, case, lhs, rhs in coproduct_operators(params, D_max, L_max, window, r_max):
        res, ncols = relative_residual(lhs, rhs)
        out.append(CheckRecord("coproduct-" + name, case, res, tol, "identity", ncols))
    return out
