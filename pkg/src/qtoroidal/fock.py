"""Truncated total Fock space and the elementary operators on it.

A basis vector is ``a^{i1,j1}_{-r1} ... a^{iN,jN}_{-rN} |m>``: a multiset of
creation labels ``(i, j, r)`` times a lattice point ``m in Z^{mn}``.  We work
in this monomial basis (not normalised); annihilators act as
``([r]^2 / r) * d/da_{-r}``.

The truncated space keeps oscillator degree ``<= D_max`` and lattice points in
the box ``|m_{s,t}| <= L_max``.  Operators are compressions to this space; each
carries a *leak mask* marking source states whose true image leaves the box.
Products propagate the mask, so identities are compared only on columns where
no truncation could have entered.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .params import AlgebraParams

Label = tuple[int, int, int]  # (i, j, r)


class BasisTooLarge(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class FockBasisState:
    lattice: tuple[int, ...]  # row-major m_{s,t}
    osc: tuple[Label, ...]  # sorted creation labels

    @property
    def osc_degree(self) -> int:
        return sum(r for _, _, r in self.osc)

    @property
    def degree(self) -> float:
        return self.osc_degree + 0.5 * sum(x * x for x in self.lattice)


def lattice_degree(lat: Iterable[int]) -> float:
    return 0.5 * sum(x * x for x in lat)


def _multisets(labels: list[Label], budget: int) -> list[tuple[Label, ...]]:
    out: list[tuple[Label, ...]] = []

    def rec(start: int, acc: list[Label], left: int):
        out.append(tuple(acc))
        for k in range(start, len(labels)):
            r = labels[k][2]
            if r <= left:
                acc.append(labels[k])
                rec(k, acc, left - r)
                acc.pop()

    rec(0, [], budget)
    return sorted(out)


class OscBasis:
    """Oscillator monomials of degree ``<= D_max`` for ``m x n`` boson families."""

    def __init__(self, m: int, n: int, D_max: int):
        self.m, self.n, self.D_max = m, n, D_max
        self.labels: list[Label] = sorted(
            (i, j, r) for i in range(m) for j in range(n) for r in range(1, D_max + 1))
        self.states = _multisets(self.labels, D_max)
        self.index = {s: k for k, s in enumerate(self.states)}
        self.degrees = np.array([sum(r for *_, r in s) for s in self.states], dtype=int)

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def _cache(self) -> dict:
        return {}

    def boson(self, i: int, j: int, r: int, bracket_sq_over_r: complex = 1.0) -> sp.csr_matrix:
        """Matrix of ``a^{i,j}_r`` on the oscillator space (``r`` signed).

        ``bracket_sq_over_r`` is ``[|r|]^2/|r|`` and only used for ``r > 0``.
        """
        i %= self.m
        j %= self.n
        key = (i, j, r, complex(bracket_sq_over_r))
        if key in self._cache:
            return self._cache[key]
        rows, cols, vals = [], [], []
        lab = (i, j, abs(r))
        for c, st in enumerate(self.states):
            if r < 0:
                new = tuple(sorted(st + (lab,)))
                t = self.index.get(new)
                if t is not None:
                    rows.append(t)
                    cols.append(c)
                    vals.append(1.0)
            else:
                mult = st.count(lab)
                if mult:
                    lst = list(st)
                    lst.remove(lab)
                    rows.append(self.index[tuple(lst)])
                    cols.append(c)
                    vals.append(mult * bracket_sq_over_r)
        mat = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)),
                            shape=(len(self), len(self)))
        self._cache[key] = mat
        return mat


class LatticeBox:
    def __init__(self, m: int, n: int, L_max: int):
        self.m, self.n, self.L_max = m, n, L_max
        rng = range(-L_max, L_max + 1)
        self.points: list[tuple[int, ...]] = list(itertools.product(rng, repeat=m * n))
        self.index = {pt: k for k, pt in enumerate(self.points)}
        self.array = np.array(self.points, dtype=int).reshape(len(self.points), m * n)

    def __len__(self) -> int:
        return len(self.points)

    def flat(self, i: int, j: int) -> int:
        return (i % self.m) * self.n + (j % self.n)

    def sign(self, pt: tuple[int, ...], i: int, j: int) -> int:
        """Sign of ``e^{+-eps_{i,j}}`` on ``|pt>``."""
        i %= self.m
        j %= self.n
        s = sum(pt[: i * self.n]) + sum(pt[i * self.n: i * self.n + j])
        return -1 if s % 2 else 1


class FockBasis:
    """Canonically ordered basis of the truncated Fock space.

    Order: lattice points lexicographically, then oscillator multisets
    lexicographically in their sorted labels.
    """

    def __init__(self, m: int, n: int, D_max: int, L_max: int, cap: int = 200_000):
        if D_max < 0 or L_max < 0:
            raise ValueError("D_max and L_max must be nonnegative")
        self.m, self.n, self.D_max, self.L_max = m, n, D_max, L_max
        self.osc = OscBasis(m, n, D_max)
        self.lattice = LatticeBox(m, n, L_max)
        size = len(self.osc) * len(self.lattice)
        if size > cap:
            raise BasisTooLarge(f"basis size {size} exceeds cap {cap}")
        self.size = size
        lat_deg = 0.5 * (self.lattice.array**2).sum(axis=1)
        self.lattice_degrees = lat_deg
        self.degrees = (lat_deg[:, None] + self.osc.degrees[None, :]).ravel()

    @classmethod
    def for_params(cls, params: AlgebraParams, D_max: int, L_max: int, **kw) -> "FockBasis":
        return cls(params.m, params.n, D_max, L_max, **kw)

    def __len__(self) -> int:
        return self.size

    def index_of(self, lat_idx: int, osc_idx: int) -> int:
        return lat_idx * len(self.osc) + osc_idx

    def state(self, k: int) -> FockBasisState:
        li, oi = divmod(k, len(self.osc))
        return FockBasisState(self.lattice.points[li], self.osc.states[oi])

    def index(self, state: FockBasisState) -> int | None:
        li = self.lattice.index.get(tuple(state.lattice))
        oi = self.osc.index.get(tuple(state.osc))
        if li is None or oi is None:
            return None
        return self.index_of(li, oi)

    def states(self) -> list[FockBasisState]:
        return [self.state(k) for k in range(self.size)]

    def lattice_array(self) -> np.ndarray:
        """``(size, m*n)`` array of lattice entries per basis state."""
        return np.repeat(self.lattice.array, len(self.osc), axis=0)

    def weights(self) -> np.ndarray:
        """``e_i = sum_t m_{i,t}`` per state, shape ``(size, m)``."""
        lat = self.lattice_array().reshape(self.size, self.m, self.n)
        return lat.sum(axis=2)

    def dual_weights(self) -> np.ndarray:
        """``ec_j = -sum_s m_{s,j}`` per state, shape ``(size, n)``."""
        lat = self.lattice_array().reshape(self.size, self.m, self.n)
        return -lat.sum(axis=1)

    def image_leaks(self, degree_shift: float, lattice_shift: tuple[int, ...]) -> np.ndarray:
        """Sources whose image (total degree + shift, lattice + shift) leaves the box.

        Used for operators with a definite degree and lattice shift: the image
        sector is nonempty iff its oscillator degree is nonnegative.
        """
        lat = self.lattice.array + np.asarray(lattice_shift, dtype=int)[None, :]
        in_box = (np.abs(lat) <= self.L_max).all(axis=1)
        new_lat_deg = 0.5 * (lat**2).sum(axis=1)
        tot = self.degrees.reshape(len(self.lattice), len(self.osc)) + degree_shift
        osc_deg = tot - new_lat_deg[:, None]
        nonempty = osc_deg >= -1e-9
        leaks = nonempty & ((~in_box)[:, None] | (osc_deg > self.D_max + 1e-9))
        return leaks.ravel()


class GradedSparseOperator:
    """Sparse matrix on a truncated Fock space with grading metadata.

    ``degree`` is the declared change of total degree (``None`` if mixed);
    ``shifts`` the set of lattice shifts connecting nonzero entries.
    ``leak[c]`` is true when column ``c`` may be wrong because the true image
    of basis state ``c`` leaves the truncated space somewhere in the
    computation that produced this operator.
    """

    def __init__(self, basis: FockBasis, mat, degree: float | None = None,
                 shifts: frozenset | None = None, leak: np.ndarray | None = None,
                 tag: str = ""):
        self.basis = basis
        self.mat = sp.csr_matrix(mat, dtype=complex)
        self.degree = degree
        self.shifts = shifts
        self.leak = np.zeros(basis.size, dtype=bool) if leak is None else np.asarray(leak, bool)
        self.tag = tag

    # -- construction helpers --------------------------------------------
    @classmethod
    def zero(cls, basis: FockBasis, degree: float | None = None, tag: str = "0"):
        return cls(basis, sp.csr_matrix((basis.size, basis.size), dtype=complex),
                   degree, frozenset(), None, tag)

    @classmethod
    def identity(cls, basis: FockBasis, scale: complex = 1.0):
        zero_shift = (0,) * (basis.m * basis.n)
        return cls(basis, sp.identity(basis.size, dtype=complex, format="csr") * scale,
                   0.0, frozenset({zero_shift}), None, "id")

    @classmethod
    def diagonal(cls, basis: FockBasis, values, tag: str = "diag"):
        zero_shift = (0,) * (basis.m * basis.n)
        return cls(basis, sp.diags(np.asarray(values, dtype=complex), format="csr"),
                   0.0, frozenset({zero_shift}), None, tag)

    # -- algebra -----------------------------------------------------------
    def __matmul__(self, other: "GradedSparseOperator") -> "GradedSparseOperator":
        mat = self.mat @ other.mat
        pattern = abs(other.mat).T.tocsr()
        hidden = (pattern @ self.leak.astype(float)) > 0
        leak = other.leak | hidden
        deg = None if self.degree is None or other.degree is None else self.degree + other.degree
        shifts = None
        if self.shifts is not None and other.shifts is not None:
            shifts = frozenset(tuple(a + b for a, b in zip(s1, s2))
                               for s1 in self.shifts for s2 in other.shifts)
        return GradedSparseOperator(self.basis, mat, deg, shifts, leak,
                                    f"({self.tag})({other.tag})")

    def _combine(self, other, mat, sign: str):
        deg = self.degree if self.degree == other.degree else None
        shifts = None
        if self.shifts is not None and other.shifts is not None:
            shifts = self.shifts | other.shifts
        return GradedSparseOperator(self.basis, mat, deg, shifts, self.leak | other.leak,
                                    f"{self.tag}{sign}{other.tag}")

    def __add__(self, other: "GradedSparseOperator") -> "GradedSparseOperator":
        return self._combine(other, self.mat + other.mat, "+")

    def __sub__(self, other: "GradedSparseOperator") -> "GradedSparseOperator":
        return self._combine(other, self.mat - other.mat, "-")

    def scale(self, c: complex) -> "GradedSparseOperator":
        return GradedSparseOperator(self.basis, self.mat * c, self.degree, self.shifts,
                                    self.leak.copy(), self.tag)

    def __mul__(self, c: complex) -> "GradedSparseOperator":
        return self.scale(c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def conj_diag(self, values: np.ndarray) -> "GradedSparseOperator":
        """``diag(values) @ self @ diag(values)^{-1}`` (no leak change)."""
        v = np.asarray(values, dtype=complex)
        mat = sp.diags(v) @ self.mat @ sp.diags(1.0 / v)
        return GradedSparseOperator(self.basis, mat, self.degree, self.shifts,
                                    self.leak.copy(), self.tag)

    def with_leak(self, extra: np.ndarray) -> "GradedSparseOperator":
        return GradedSparseOperator(self.basis, self.mat, self.degree, self.shifts,
                                    self.leak | extra, self.tag)

    @property
    def exact(self) -> np.ndarray:
        return ~self.leak

    def block_max(self, cols: np.ndarray | None = None) -> float:
        """Max absolute entry over the exact columns (or the given mask)."""
        mask = self.exact if cols is None else cols
        sub = self.mat[:, np.flatnonzero(mask)]
        return float(abs(sub).max()) if sub.nnz else 0.0

    def nnz(self) -> int:
        return self.mat.count_nonzero()

    def check_grading(self, tol: float = 0.0) -> bool:
        """Every nonzero entry respects the declared degree and lattice shifts."""
        coo = self.mat.tocoo()
        keep = abs(coo.data) > tol
        rows, cols = coo.row[keep], coo.col[keep]
        if self.degree is not None:
            dd = self.basis.degrees[rows] - self.basis.degrees[cols]
            if not np.allclose(dd, self.degree):
                return False
        if self.shifts is not None:
            nosc = len(self.basis.osc)
            lat = self.basis.lattice.array
            diff = lat[rows // nosc] - lat[cols // nosc]
            allowed = {tuple(s) for s in self.shifts}
            if any(tuple(x) not in allowed for x in diff):
                return False
        return True


def commutator(a: GradedSparseOperator, b: GradedSparseOperator, c: complex = 1.0):
    """``ab - c ba``."""
    return a @ b - (b @ a).scale(c)


def relative_residual(lhs: GradedSparseOperator, rhs: GradedSparseOperator) -> tuple[float, int]:
    """``max|lhs - rhs| / max(|lhs|, |rhs|, 1)`` on the common exact columns.

    Returns the residual and the number of exact columns used.
    """
    mask = lhs.exact & rhs.exact
    diff = (lhs.mat - rhs.mat)[:, np.flatnonzero(mask)]
    num = float(abs(diff).max()) if diff.nnz else 0.0
    den = max(lhs.block_max(mask), rhs.block_max(mask), 1.0)
    return num / den, int(mask.sum())


# -- elementary operators on the full space -----------------------------------

def enumerate_basis(params: AlgebraParams, D_max: int, L_max: int, cap: int = 200_000):
    """Ordered list of basis states with O(1) index lookup through ``FockBasis``."""
    return FockBasis.for_params(params, D_max, L_max, cap=cap)


def apply_boson(params: AlgebraParams, basis: FockBasis, label: tuple[int, int, int],
                state: FockBasisState) -> tuple[dict[FockBasisState, complex], bool]:
    """Act with ``a^{i,j}_r`` (``r`` signed) on a basis state.

    Returns the image as ``{state: coeff}`` and a truncation flag.
    """
    i, j, r = label
    i %= params.m
    j %= params.n
    if r == 0:
        raise ValueError("boson mode must be nonzero")
    lab = (i, j, abs(r))
    if r < 0:
        new = FockBasisState(state.lattice, tuple(sorted(state.osc + (lab,))))
        if new.osc_degree > basis.D_max:
            return {}, True
        return {new: 1.0}, False
    mult = state.osc.count(lab)
    if not mult:
        return {}, False
    lst = list(state.osc)
    lst.remove(lab)
    return {FockBasisState(state.lattice, tuple(lst)):
            mult * params.bracket(r) ** 2 / r}, False


def apply_zero_mode(basis: FockBasis, kind: str, i: int, j: int,
                    state: FockBasisState) -> tuple[dict[FockBasisState, complex], bool]:
    """Act with ``e^{+eps_{i,j}}`` (``kind='e+'``), ``e^{-eps}`` (``'e-'``) or ``d_{i,j}`` (``'d'``)."""
    box = basis.lattice
    pos = box.flat(i, j)
    if kind == "d":
        c = state.lattice[pos]
        return ({state: float(c)} if c else {}), False
    step = {"e+": 1, "e-": -1}[kind]
    sign = box.sign(state.lattice, i, j)
    lat = list(state.lattice)
    lat[pos] += step
    new = FockBasisState(tuple(lat), state.osc)
    if abs(lat[pos]) > basis.L_max:
        return {}, True
    return {new: float(sign)}, False


def degree(state: FockBasisState) -> float:
    return state.degree


def boson_operator(params: AlgebraParams, basis: FockBasis, i: int, j: int, r: int
                   ) -> GradedSparseOperator:
    """``a^{i,j}_r`` as a graded operator on the full truncated space."""
    k = abs(r)
    osc = basis.osc.boson(i, j, r, params.bracket(k) ** 2 / k)
    mat = sp.kron(sp.identity(len(basis.lattice), format="csr"), osc, format="csr")
    zero = (0,) * (basis.m * basis.n)
    leak = basis.image_leaks(-r, zero) if r < 0 else None
    return GradedSparseOperator(basis, mat, float(-r), frozenset({zero}), leak,
                                f"a^{i % basis.m},{j % basis.n}_{r}")


def zero_mode_operator(basis: FockBasis, kind: str, i: int, j: int) -> GradedSparseOperator:
    box = basis.lattice
    nosc = len(basis.osc)
    pos = box.flat(i, j)
    zero = [0] * (basis.m * basis.n)
    if kind == "d":
        vals = np.repeat(box.array[:, pos], nosc)
        return GradedSparseOperator.diagonal(basis, vals, f"d_{i},{j}")
    step = {"e+": 1, "e-": -1}[kind]
    rows, cols, vals = [], [], []
    for li, pt in enumerate(box.points):
        new = list(pt)
        new[pos] += step
        t = box.index.get(tuple(new))
        if t is None:
            continue
        s = box.sign(pt, i, j)
        rows.append(t)
        cols.append(li)
        vals.append(float(s))
    latmat = sp.csr_matrix((vals, (rows, cols)), shape=(len(box), len(box)))
    mat = sp.kron(latmat, sp.identity(nosc), format="csr")
    shift = list(zero)
    shift[pos] = step
    out_of_box = np.abs(box.array[:, pos] + step) > basis.L_max
    leak = np.repeat(out_of_box, nosc)
    deg = None  # depends on the lattice entry
    return GradedSparseOperator(basis, mat, deg, frozenset({tuple(shift)}), leak,
                                f"e^{'+' if step > 0 else '-'}eps_{i},{j}")
