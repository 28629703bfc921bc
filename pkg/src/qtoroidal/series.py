"""Truncated multivariate Laurent series.

Coefficients live in a dense numpy array; variable ``v`` covers exponents
``lo[v] .. lo[v] + shape[v] - 1``.  Products drop everything beyond the upper
end of each window, which is the truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve


@dataclass
class TruncatedSeries:
    coeffs: np.ndarray
    lo: tuple[int, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != len(self.lo) or len(self.lo) != len(self.names):
            raise ValueError("coefficient rank, windows and names must agree")

    # -- constructors --------------------------------------------------------
    @classmethod
    def constant(cls, c: complex, names=("t",), order: int | tuple[int, ...] = 0):
        orders = (order,) * len(names) if isinstance(order, int) else tuple(order)
        arr = np.zeros(tuple(o + 1 for o in orders), dtype=complex)
        arr[(0,) * len(names)] = c
        return cls(arr, (0,) * len(names), tuple(names))

    @classmethod
    def from_dict(cls, terms: dict[tuple[int, ...], complex], names, hi: tuple[int, ...]):
        nv = len(names)
        lo = tuple(min([e[v] for e in terms] + [0]) for v in range(nv))
        arr = np.zeros(tuple(h - l + 1 for h, l in zip(hi, lo)), dtype=complex)
        for e, c in terms.items():
            if all(x <= h for x, h in zip(e, hi)):
                arr[tuple(x - l for x, l in zip(e, lo))] += c
        return cls(arr, lo, tuple(names))

    @classmethod
    def univariate(cls, coeffs, name: str = "t", lo: int = 0):
        return cls(np.asarray(coeffs, dtype=complex), (lo,), (name,))

    # -- windows ---------------------------------------------------------------
    @property
    def hi(self) -> tuple[int, ...]:
        return tuple(l + s - 1 for l, s in zip(self.lo, self.coeffs.shape))

    def coeff(self, *exps: int) -> complex:
        idx = tuple(e - l for e, l in zip(exps, self.lo))
        if any(i < 0 or i >= s for i, s in zip(idx, self.coeffs.shape)):
            return 0j
        return complex(self.coeffs[idx])

    def _regrid(self, lo, hi) -> np.ndarray:
        out = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)), dtype=complex)
        src, dst = [], []
        for l0, h0, l1, h1 in zip(self.lo, self.hi, lo, hi):
            a, b = max(l0, l1), min(h0, h1)
            if a > b:
                return out
            src.append(slice(a - l0, b - l0 + 1))
            dst.append(slice(a - l1, b - l1 + 1))
        out[tuple(dst)] = self.coeffs[tuple(src)]
        return out

    def truncate(self, hi: tuple[int, ...]) -> "TruncatedSeries":
        hi = tuple(min(h, x) for h, x in zip(hi, self.hi))
        return TruncatedSeries(self._regrid(self.lo, hi), self.lo, self.names)

    # -- arithmetic --------------------------------------------------------------
    def _check(self, other: "TruncatedSeries"):
        if self.names != other.names:
            raise ValueError(f"variable mismatch {self.names} vs {other.names}")

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self + TruncatedSeries.constant(other, self.names, tuple(0 for _ in self.names))
        self._check(other)
        lo = tuple(min(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        hi = tuple(max(h, l) for h, l in zip(hi, lo))
        return TruncatedSeries(self._regrid(lo, hi) + other._regrid(lo, hi), lo, self.names)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.lo, self.names)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.coeffs * other, self.lo, self.names)
        self._check(other)
        lo = tuple(a + b for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a + other.lo[v], self.lo[v] + b)
                   for v, (a, b) in enumerate(zip(self.hi, other.hi)))
        full = fftconvolve(self.coeffs, other.coeffs) if self.coeffs.size > 4096 else \
            _direct_convolve(self.coeffs, other.coeffs)
        shape = tuple(h - l + 1 for l, h in zip(lo, hi))
        return TruncatedSeries(full[tuple(slice(0, s) for s in shape)], lo, self.names)

    __rmul__ = __mul__

    def exp(self) -> "TruncatedSeries":
        """``exp`` of a series with zero constant term and nonnegative exponents."""
        if any(l < 0 for l in self.lo) or abs(self.coeff(*([0] * len(self.lo)))) > 0:
            raise ValueError("exp needs a series in positive powers with zero constant term")
        order = sum(self.hi)
        result = TruncatedSeries.constant(1.0, self.names, self.hi)
        term = result
        for k in range(1, order + 1):
            term = (term * self) * (1.0 / k)
            if not np.any(term.coeffs):
                break
            result = result + term
        return result

    def reciprocal(self) -> "TruncatedSeries":
        """``1/f`` for ``f`` with unit constant term and nonnegative exponents."""
        zero = tuple(0 for _ in self.lo)
        if any(l < 0 for l in self.lo) or abs(self.coeff(*zero) - 1) > 1e-14:
            raise ValueError("reciprocal needs unit constant term")
        g = TruncatedSeries.constant(1.0, self.names, self.hi) - self
        result = TruncatedSeries.constant(1.0, self.names, self.hi)
        term = result
        for _ in range(sum(self.hi)):
            term = term * g
            if not np.any(term.coeffs):
                break
            result = result + term
        return result

    def max_abs_diff(self, other: "TruncatedSeries") -> float:
        self._check(other)
        lo = tuple(min(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        return float(np.abs(self._regrid(lo, hi) - other._regrid(lo, hi)).max(initial=0.0))

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max(initial=0.0))


def _direct_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return np.convolve(a, b)
    out = np.zeros(tuple(x + y - 1 for x, y in zip(a.shape, b.shape)), dtype=complex)
    for idx in zip(*np.nonzero(a)):
        sl = tuple(slice(i, i + s) for i, s in zip(idx, b.shape))
        out[sl] += a[idx] * b
    return out


# -- q-series helpers ---------------------------------------------------------

def qpoch(z: complex, p: complex, K: int) -> complex:
    """``(z; p)_inf`` truncated to ``K + 1`` factors."""
    out = 1.0 + 0j
    pk = 1.0 + 0j
    for _ in range(K + 1):
        out *= 1 - z * pk
        pk *= p
    return out


def theta_p(z: complex, p: complex, K: int) -> complex:
    """``Theta_p(z) = (z;p)(p/z;p)(p;p)`` with each product truncated at ``K``."""
    return qpoch(z, p, K) * qpoch(p / z, p, K) * qpoch(p, p, K)


def p_order(p_abs: float, tol: float, cap: int = 400) -> int:
    """Smallest ``K`` with ``|p|^(K+1) < tol / 10``."""
    if p_abs == 0:
        return 0
    if p_abs >= 1:
        raise ValueError("nome must have modulus < 1")
    K = 0
    while p_abs ** (K + 1) >= tol / 10:
        K += 1
        if K > cap:
            raise ValueError("nome too close to the unit circle")
    return K


def geometric_factor_series(c: complex, p: complex, K: int, sign: int, order: int,
                            name: str = "t") -> TruncatedSeries:
    """``prod_{k=0}^{K} (1 - c p^k t)^{sign}`` expanded to ``t^order``."""
    # log(1 - x) = -sum x^r / r
    coeffs = np.zeros(order + 1, dtype=complex)
    for r in range(1, order + 1):
        geo = sum((c * p**k) ** r for k in range(K + 1))
        coeffs[r] = -sign * geo / r
    return TruncatedSeries.univariate(coeffs, name).exp()


def growth_radius(*series: TruncatedSeries) -> float:
    """``max(1, max_r |a_r|^(1/r))`` over univariate series in positive powers."""
    rho = 1.0
    for s in series:
        for e in range(max(1, s.lo[0]), s.hi[0] + 1):
            c = abs(s.coeff(e))
            if c > 0:
                rho = max(rho, c ** (1.0 / e))
    return rho


def scaled_deviation(a: TruncatedSeries, b: TruncatedSeries, rho: float | None = None) -> float:
    """Coefficient deviation after rescaling ``t -> t / rho``.

    Geometric growth ``|C|^r`` of the coefficients makes raw float
    comparison at high order meaningless; in the rescaled variable every
    coefficient is O(1) and the relative comparison is fair.
    """
    rho = max(growth_radius(a, b), rho or 1.0)
    hi = min(a.hi[0], b.hi[0])
    lo = min(a.lo[0], b.lo[0])
    diff = scale = 0.0
    for e in range(lo, hi + 1):
        w = rho ** (-e)
        diff = max(diff, abs(a.coeff(e) - b.coeff(e)) * w)
        scale = max(scale, abs(a.coeff(e)) * w, abs(b.coeff(e)) * w)
    return diff / max(scale, 1.0)
