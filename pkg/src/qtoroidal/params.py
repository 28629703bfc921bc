"""Scalar parameters of the two toroidal algebras.

Every scalar that enters a structure constant is a Laurent monomial in the
three fundamental parameters ``q, d, dc`` (``dc`` is the checked ``d``).  We
keep such monomials as integer exponent triples so that equality of two
contraction bases is decided exactly rather than up to rounding.
"""

from __future__ import annotations

import cmath
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Mono = tuple[int, int, int]

ONE: Mono = (0, 0, 0)
Q: Mono = (1, 0, 0)
D: Mono = (0, 1, 0)
DC: Mono = (0, 0, 1)


def mono_mul(*ms: Mono) -> Mono:
    a = b = c = 0
    for m in ms:
        a += m[0]
        b += m[1]
        c += m[2]
    return (a, b, c)


def mono_pow(m: Mono, k: int) -> Mono:
    return (m[0] * k, m[1] * k, m[2] * k)


def mono_inv(m: Mono) -> Mono:
    return (-m[0], -m[1], -m[2])


Q1: Mono = (-1, 1, 0)
Q2: Mono = (2, 0, 0)
Q3: Mono = (-1, -1, 0)
QC1: Mono = (-1, 0, 1)
QC3: Mono = (-1, 0, -1)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class AlgebraParams:
    """Parameters ``(m, n, q, d, dc, u, uc)`` of the pair of Fock actions.

    ``u`` has length ``n`` (spectral parameters of the level-n action of the
    ``gl_m`` algebra), ``uc`` has length ``m``.
    """

    m: int
    n: int
    q: complex
    d: complex
    dc: complex
    u: tuple[complex, ...]
    uc: tuple[complex, ...]
    # fixed branch for d**x, dc**x with half-integer x
    log_d: complex = field(default=None)  # type: ignore[assignment]
    log_dc: complex = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ParameterError("m and n must be positive")
        if len(self.u) != self.n or len(self.uc) != self.m:
            raise ParameterError("need len(u) == n and len(uc) == m")
        for name in ("q", "d", "dc"):
            if getattr(self, name) == 0:
                raise ParameterError(f"{name} must be nonzero")
        if any(x == 0 for x in self.u + self.uc):
            raise ParameterError("spectral parameters must be nonzero")
        object.__setattr__(self, "u", tuple(complex(x) for x in self.u))
        object.__setattr__(self, "uc", tuple(complex(x) for x in self.uc))
        for name in ("q", "d", "dc"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.log_d is None:
            object.__setattr__(self, "log_d", cmath.log(self.d))
        if self.log_dc is None:
            object.__setattr__(self, "log_dc", cmath.log(self.dc))

    # -- monomials -------------------------------------------------------
    def val(self, mono: Mono) -> complex:
        a, b, c = mono
        try:
            return self.q**a * self.d**b * self.dc**c
        except OverflowError:
            # integer powers are branch independent; logs avoid the huge partial products
            return cmath.exp(a * cmath.log(self.q) + b * self.log_d + c * self.log_dc)

    def dpow(self, x: float) -> complex:
        """``d**x`` on the fixed branch (``x`` may be half-integral)."""
        if float(x).is_integer():
            return self.d ** int(x)
        return cmath.exp(x * self.log_d)

    def dcpow(self, x: float) -> complex:
        if float(x).is_integer():
            return self.dc ** int(x)
        return cmath.exp(x * self.log_dc)

    def qpow(self, x: float) -> complex:
        return self.q ** int(x) if float(x).is_integer() else cmath.exp(x * cmath.log(self.q))

    def bracket(self, r: int) -> complex:
        q = self.q
        return (q**r - q**-r) / (q - 1 / q)

    @property
    def q1(self) -> complex:
        return self.val(Q1)

    @property
    def q2(self) -> complex:
        return self.val(Q2)

    @property
    def q3(self) -> complex:
        return self.val(Q3)

    @property
    def qc1(self) -> complex:
        return self.val(QC1)

    @property
    def qc2(self) -> complex:
        return self.val(Q2)

    @property
    def qc3(self) -> complex:
        return self.val(QC3)

    # p = qc1^n, p* = qc3^-n, pc = q1^m, pc* = q3^-m
    @property
    def p_mono(self) -> Mono:
        return mono_pow(QC1, self.n)

    @property
    def pstar_mono(self) -> Mono:
        return mono_pow(QC3, -self.n)

    @property
    def pc_mono(self) -> Mono:
        return mono_pow(Q1, self.m)

    @property
    def pcstar_mono(self) -> Mono:
        return mono_pow(Q3, -self.m)

    @property
    def p(self) -> complex:
        return self.val(self.p_mono)

    @property
    def pstar(self) -> complex:
        return self.val(self.pstar_mono)

    @property
    def pc(self) -> complex:
        return self.val(self.pc_mono)

    @property
    def pcstar(self) -> complex:
        return self.val(self.pcstar_mono)

    def moduli_ok(self) -> bool:
        return max(abs(self.p), abs(self.pstar), abs(self.pc), abs(self.pcstar)) < 1

    def with_spectral(self, u=None, uc=None) -> "AlgebraParams":
        return AlgebraParams(self.m, self.n, self.q, self.d, self.dc,
                             tuple(u) if u is not None else self.u,
                             tuple(uc) if uc is not None else self.uc,
                             self.log_d, self.log_dc)

    def as_level_one(self, u: complex) -> "AlgebraParams":
        """Parameters of the level-one factor ``F_{m,1}(u)``."""
        return AlgebraParams(self.m, 1, self.q, self.d, self.dc, (u,),
                             self.uc, self.log_d, self.log_dc)

    def to_dict(self) -> dict:
        def c(z):
            return [z.real, z.imag]

        return {
            "m": self.m, "n": self.n, "q": c(self.q), "d": c(self.d), "dc": c(self.dc),
            "u": [c(x) for x in self.u], "uc": [c(x) for x in self.uc],
            "log_d": c(self.log_d), "log_dc": c(self.log_dc),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlgebraParams":
        def c(v):
            return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)

        return cls(int(data["m"]), int(data["n"]), c(data["q"]), c(data["d"]), c(data["dc"]),
                   tuple(c(x) for x in data["u"]), tuple(c(x) for x in data["uc"]),
                   c(data["log_d"]) if "log_d" in data else None,
                   c(data["log_dc"]) if "log_dc" in data else None)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def genericity_margin(q1: complex, q2: complex, q3: complex, box: int) -> float:
    """Smallest ``|q1^i q2^j q3^k - 1|`` over the box, excluding ``i == j == k``."""
    worst = math.inf
    for i, j, k in itertools.product(range(-box, box + 1), repeat=3):
        if i == j == k:
            continue
        worst = min(worst, abs(q1**i * q2**j * q3**k - 1))
    return worst


def check_generic(params: AlgebraParams, box: int = 4, eps: float = 1e-3) -> None:
    for label, trip in (("q", (params.q1, params.q2, params.q3)),
                        ("qc", (params.qc1, params.qc2, params.qc3))):
        margin = genericity_margin(*trip, box)
        if margin <= eps:
            raise ParameterError(f"{label}-family fails genericity certificate "
                                 f"(margin {margin:.3g} <= {eps})")


def sample_params(m: int, n: int, seed: int = 0, *, q_mod: Sequence[float] = (1.05, 1.2),
                  q1_mod: Sequence[float] = (0.25, 0.3), qc1_mod: Sequence[float] = (0.25, 0.3),
                  u_mod: Sequence[float] = (0.8, 1.25), gen_box: int = 4,
                  gen_eps: float = 1e-3, max_tries: int = 200) -> AlgebraParams:
    """Draw parameters from annuli, rejecting non-generic draws.

    The annuli are chosen so that ``|q1|, |qc1| < 1 < |q3|, |qc3|``; then all
    four elliptic nomes have modulus below one.
    """
    rng = np.random.default_rng(seed)

    def draw(lo, hi):
        return rng.uniform(lo, hi) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))

    for _ in range(max_tries):
        q = draw(*q_mod)
        q1 = draw(*q1_mod)
        qc1 = draw(*qc1_mod)
        d = q1 * q
        dc = qc1 * q
        u = tuple(draw(*u_mod) for _ in range(n))
        uc = tuple(draw(*u_mod) for _ in range(m))
        params = AlgebraParams(m, n, q, d, dc, u, uc)
        if not params.moduli_ok():
            continue
        try:
            check_generic(params, gen_box, gen_eps)
        except ParameterError:
            continue
        return params
    raise ParameterError("could not sample generic parameters in the requested annuli")
