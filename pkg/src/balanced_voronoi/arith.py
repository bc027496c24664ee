"""Exact arithmetic over the ramified primes R (the primes dividing c).

Elements of F_R^x / O_R^x are stored as exponent maps (``RClass``); the unit
part is never stored.  Adelic elements over R, whose p-components need not
come from a single rational, are stored as ``RAdele`` (prime -> Fraction).
The finite additive character is

    psi_R(x) = prod_{p in R} exp(2 pi i {x_p}_p),

with {.}_p the p-adic fractional part.  Phases are accumulated as exact
rationals mod 1 and turned into a complex number only once.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import mpmath
from sympy import factorint


class ArithmeticDomainError(ValueError):
    """Argument lies outside the arithmetic domain of R (non-unit, stray prime)."""


@lru_cache(maxsize=65536)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((int(p), int(e)) for p, e in factorint(n).items()))


def factorize(n: int) -> dict[int, int]:
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    return dict(_factor(n))


def totient(d: int) -> int:
    out = d
    for p in factorize(d):
        out = out // p * (p - 1)
    return out


def valuation(x: Fraction | int, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of 0")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@dataclass(frozen=True)
class Modulus:
    c: int
    factorization: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "factorization", _factor(self.c))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factorization)

    def exponent(self, p: int) -> int:
        return dict(self.factorization).get(p, 0)

    def divisors(self) -> list[int]:
        divs = [1]
        for p, e in self.factorization:
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)


@dataclass(frozen=True)
class RClass:
    """Class in F_R^x / O_R^x; ``exponents`` are (p, f_p) with |x|_p = p^{-f_p}."""

    exponents: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        clean = tuple(sorted((p, f) for p, f in dict(self.exponents).items() if f != 0))
        object.__setattr__(self, "exponents", clean)

    @classmethod
    def from_map(cls, m: Mapping[int, int]) -> "RClass":
        return cls(tuple(m.items()))

    @classmethod
    def of_abs(cls, d: int) -> "RClass":
        """The class with |t|_R = d, i.e. exponents -ord_p(d)."""
        return cls(tuple((p, -e) for p, e in factorize(d).items()))

    def f(self, p: int) -> int:
        return dict(self.exponents).get(p, 0)

    def __mul__(self, other: "RClass") -> "RClass":
        m = dict(self.exponents)
        for p, f in other.exponents:
            m[p] = m.get(p, 0) + f
        return RClass.from_map(m)

    def inverse(self) -> "RClass":
        return RClass(tuple((p, -f) for p, f in self.exponents))

    @property
    def value(self) -> Fraction:
        out = Fraction(1)
        for p, f in self.exponents:
            out *= Fraction(p) ** f
        return out

    @property
    def abs_R(self) -> Fraction:
        """prod_p |x|_p over the primes carried by the class."""
        return 1 / self.value

    def denominator(self) -> int:
        """d = prod p^{max(-f_p, 0)}."""
        d = 1
        for p, f in self.exponents:
            if f < 0:
                d *= p ** (-f)
        return d


@dataclass(frozen=True)
class UnitCosetRep:
    """The class of w/d in t O_R^x / O_R, with 1 <= w <= d and gcd(w, d) = 1."""

    w: int
    d: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.w % self.d, self.d) if self.d > 1 else Fraction(0)


@dataclass(frozen=True)
class ZetaParam:
    """zeta = a/c, with |zeta|_p = p^{e_p} on R."""

    a: int
    modulus: Modulus

    def __post_init__(self):
        if math.gcd(self.a, self.modulus.c) != 1:
            raise ArithmeticDomainError(f"gcd({self.a}, {self.modulus.c}) != 1")

    @classmethod
    def of(cls, a: int, c: int) -> "ZetaParam":
        return cls(a, Modulus(c))

    @property
    def c(self) -> int:
        return self.modulus.c

    @property
    def value(self) -> Fraction:
        return Fraction(self.a, self.c)

    def as_adele(self) -> "RAdele":
        return RAdele.diagonal(self.value, self.modulus.primes)


@dataclass(frozen=True)
class RAdele:
    """Element of A_R = prod_{p in R} Q_p, one rational per prime."""

    components: tuple[tuple[int, Fraction], ...]

    @classmethod
    def diagonal(cls, x: Fraction | int, primes: Iterable[int]) -> "RAdele":
        x = Fraction(x)
        return cls(tuple((p, x) for p in sorted(primes)))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.components)

    def at(self, p: int) -> Fraction:
        return dict(self.components)[p]

    def __mul__(self, other: "RAdele | Fraction | int") -> "RAdele":
        if isinstance(other, RAdele):
            o = dict(other.components)
            return RAdele(tuple((p, x * o[p]) for p, x in self.components))
        return RAdele(tuple((p, x * other) for p, x in self.components))

    __rmul__ = __mul__

    def inverse(self) -> "RAdele":
        return RAdele(tuple((p, 1 / x) for p, x in self.components))

    def valuations(self) -> dict[int, int]:
        return {p: valuation(x, p) for p, x in self.components}

    def abs_at(self, p: int) -> Fraction:
        return Fraction(p) ** (-valuation(self.at(p), p))


def padic_frac(x: Fraction, p: int) -> Fraction:
    """The p-adic fractional part {x}_p in [0, 1), with p-power denominator."""
    x = Fraction(x)
    num, den = x.numerator, x.denominator
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    if k == 0:
        return Fraction(0)
    pk = p**k
    r = (num * pow(den, -1, pk)) % pk
    return Fraction(r, pk)


def invert_mod(w: int, d: int) -> int:
    """u with 1 <= u <= d and u*w = 1 mod d."""
    if d < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(w, d) != 1:
        raise ArithmeticDomainError(f"{w} is not a unit mod {d}")
    if d == 1:
        return 1
    return pow(w, -1, d)


def phase_R(x: Fraction | int | RAdele, primes: Iterable[int] | None = None) -> Fraction:
    """Exact phase theta in [0, 1) with psi_R(x) = exp(2 pi i theta).

    A plain rational is checked to have denominator supported on ``primes``
    (when given) and its phase is its fractional part.
    """
    if isinstance(x, RAdele):
        theta = sum((padic_frac(xp, p) for p, xp in x.components), Fraction(0))
        return theta - math.floor(theta)
    x = Fraction(x)
    if primes is not None:
        den = x.denominator
        for p in primes:
            while den % p == 0:
                den //= p
        if den != 1:
            raise ArithmeticDomainError(f"denominator of {x} not supported on R={tuple(primes)}")
    return x - math.floor(x)


def expi(theta: Fraction, dps: int | None = None, sign: int = 1) -> complex:
    """exp(2 pi i sign theta), one transcendental evaluation per call."""
    theta = Fraction(theta) % 1
    if dps is None:
        # reduce to [-1/2, 1/2) to keep the argument small
        t = theta if theta < Fraction(1, 2) else theta - 1
        return cmath.exp(sign * 2j * math.pi * (t.numerator / t.denominator))
    with mpmath.workdps(dps):
        return mpmath.expjpi(sign * 2 * mpmath.mpf(theta.numerator) / theta.denominator)


def psi_R(x: Fraction | int | RAdele, primes: Iterable[int] | None = None,
          dps: int | None = None, sign: int = 1) -> complex:
    return expi(phase_R(x, primes), dps=dps, sign=sign)


def enumerate_unit_coset(t: RClass) -> list[UnitCosetRep]:
    """Representatives of t O_R^x / O_R for a class with all f_p <= 0."""
    if any(f > 0 for _, f in t.exponents):
        raise ArithmeticDomainError(f"class {t} is not in the integral-denominator range")
    d = t.denominator()
    if d == 1:
        return [UnitCosetRep(0, 1)]
    return [UnitCosetRep(w, d) for w in range(1, d + 1) if math.gcd(w, d) == 1]


@lru_cache(maxsize=8)
def _spf(limit: int):
    import numpy as np

    spf = np.zeros(limit + 1, dtype=np.int64)
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i::i][spf[i::i] == 0] = i
    return spf


def factor_small(n: int, limit: int = 1 << 20) -> dict[int, int]:
    """Factor |n| with a smallest-prime-factor sieve; falls back to sympy above ``limit``."""
    n = abs(n)
    if n > limit:
        return factorize(n)
    spf = _spf(limit)
    out: dict[int, int] = {}
    while n > 1:
        p = int(spf[n])
        out[p] = out.get(p, 0) + 1
        n //= p
    return out
