"""Hyper-Kloosterman sums over the ramified primes and the Kloosterman integral.

For a chain t = (t_2, ..., t_{N-1}) and x in A_R,

    Kl_N(x, t) = sum_{v_i in t_i O^x / O} psi(v_2 + ... + v_{N-1})
                                         psi((-1)^n x v_2^{-1} ... v_{N-1}^{-1}).

Representatives: v_i = w/d_i with 1 <= w <= d_i, gcd(w, d_i) = 1; at a prime
p with |t_i|_p = 1 the coset is O_p^x / O_p = {0} and the unit
representative 1 is used for v_i^{-1}.  On the support of the Whittaker
function (ord_p x + sum_j k_j + k_i >= 0 whenever k_i > 0) the sum does not
depend on these choices; ``is_well_defined`` checks that condition.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import prod

from .arith import (
    ArithmeticDomainError,
    RAdele,
    ZetaParam,
    enumerate_unit_coset,
    expi,
    invert_mod,
    padic_frac,
    valuation,
)
from .torus import TorusChain, complete_chain, enumerate_chains

DEFAULT_TERM_BUDGET = 10**7


class SignExponent(str, enum.Enum):
    """Reading of the (-1)^n in the Kl display.

    RANK: n is the rank of the sum itself (Kl_K uses (-1)^K).
    AMBIENT: n is the ambient GL_N rank for every sum.
    """

    RANK = "N"
    AMBIENT = "n-literal"


class TermBudgetError(RuntimeError):
    pass


def _as_adele(x, primes) -> RAdele:
    if isinstance(x, RAdele):
        return x
    x = Fraction(x)
    den = x.denominator
    for p in primes:
        while den % p == 0:
            den //= p
    if den != 1:
        raise ArithmeticDomainError(f"{x} has denominator outside R={primes}")
    return RAdele.diagonal(x, primes)


def sign_for(rank: int, convention: SignExponent, ambient: int | None) -> int:
    n = rank if convention is SignExponent.RANK or ambient is None else ambient
    return -1 if n % 2 else 1


def term_count(t: TorusChain) -> int:
    return prod(len(enumerate_unit_coset(e)) for e in t.entries)


def is_well_defined(x: RAdele, t: TorusChain) -> bool:
    for j, p in enumerate(t.primes):
        xp = x.at(p)
        if xp == 0:
            continue
        total = valuation(xp, p) + sum(row[j] for row in t.levels)
        if any(row[j] > 0 and total + row[j] < 0 for row in t.levels):
            return False
    return True


def kl_phases(x, t: TorusChain, sign: int = -1) -> list[Fraction]:
    """Exact phases (mod 1) of every term of the nested sum, in a fixed order."""
    primes = t.primes
    xa = _as_adele(x, primes)
    cosets = [enumerate_unit_coset(e) for e in t.entries]
    out = []
    for reps in itertools.product(*cosets):
        theta = sum((r.value for r in reps), Fraction(0))
        for j, p in enumerate(primes):
            y = sign * xa.at(p)
            if y == 0:
                continue
            for r, row in zip(reps, t.levels):
                if row[j] > 0:
                    y *= Fraction(r.d, r.w)
            theta += padic_frac(y, p)
        out.append(theta % 1)
    return out


def hyper_kl(N: int, x, t: TorusChain, sign_exponent: SignExponent = SignExponent.RANK,
             ambient: int | None = None, psi_sign: int = 1, budget: int = DEFAULT_TERM_BUDGET,
             dps: int | None = None) -> complex:
    """Direct nested summation of Kl_N(x, t)."""
    if t.N != N:
        raise ValueError(f"chain rank {t.N} != {N}")
    n_terms = term_count(t)
    if n_terms > budget:
        raise TermBudgetError(f"{n_terms} terms exceed budget {budget}")
    sgn = sign_for(N, sign_exponent, ambient)
    phases = kl_phases(x, t, sgn)
    if dps is None:
        return complex(math.fsum(expi(th, sign=psi_sign).real for th in phases),
                       math.fsum(expi(th, sign=psi_sign).imag for th in phases))
    import mpmath
    with mpmath.workdps(dps):
        return complex(mpmath.fsum(expi(th, dps=dps, sign=psi_sign) for th in phases))


def hyper_kl_crt(N: int, x, t: TorusChain, sign_exponent: SignExponent = SignExponent.RANK,
                 ambient: int | None = None, psi_sign: int = 1) -> complex:
    """Product of local sums over p | c, using local representatives u/p^k.

    Agrees with :func:`hyper_kl` whenever ``is_well_defined`` holds.
    """
    sgn = sign_for(N, sign_exponent, ambient)
    xa = _as_adele(x, t.primes)
    total = complex(1)
    for j, p in enumerate(t.primes):
        ks = [row[j] for row in t.levels]
        units = [[u for u in range(1, p**k + 1) if u % p] if k else [None] for k in ks]
        local = []
        for us in itertools.product(*units):
            theta = sum((Fraction(u, p**k) for u, k in zip(us, ks) if u is not None), Fraction(0))
            y = sgn * xa.at(p)
            if y != 0:
                for u, k in zip(us, ks):
                    if u is not None:
                        y *= Fraction(p**k, u)
                theta += padic_frac(y, p)
            local.append(expi(theta, sign=psi_sign))
        total *= complex(math.fsum(z.real for z in local), math.fsum(z.imag for z in local))
    return total


def classical_kl(a: int, b: int, m: int) -> complex:
    """S(a, b; m) = sum_{w in (Z/m)^x} e((a w + b w^{-1}) / m)."""
    if m < 1:
        raise ValueError("m must be positive")
    terms = []
    for w in range(1, m + 1):
        if math.gcd(w, m) != 1:
            continue
        wbar = pow(w, -1, m) if m > 1 else 1
        terms.append(expi(Fraction(a * w + b * wbar, m)))
    s = complex(math.fsum(z.real for z in terms), math.fsum(z.imag for z in terms))
    if m > 2 and abs(s.imag) > 1e-10 * max(1.0, abs(s)):
        raise AssertionError(f"S({a},{b};{m}) not real: {s}")
    return s


@dataclass(frozen=True)
class KlConvention:
    """How a classical S(1, b; p) sits inside Kl_3: x = a / p^scale and b = sign * a."""

    scale: int = 2
    sign: int = -1


def kloosterman_integral(gamma: Fraction, zeta: ZetaParam | RAdele, N: int, provider,
                         sign_exponent: SignExponent = SignExponent.RANK,
                         include_zeta_power: bool = True, psi_sign: int = 1) -> complex:
    """K_R(gamma, zeta, W~) = |zeta|^{N-2} sum_t W~_R(diag(gamma,1) a(t)) Kl_N(gamma zeta^{-1}, t).

    ``provider.wtilde_local(p, ords)`` gives the local contragredient
    Whittaker value at a diagonal matrix with the given p-adic orders.
    """
    zeta_a = zeta.as_adele() if isinstance(zeta, ZetaParam) else zeta
    bounds = {p: max(0, -valuation(zeta_a.at(p), p)) for p in zeta_a.primes}
    bounds = {p: e for p, e in bounds.items() if e > 0}
    primes = tuple(sorted(bounds))
    gamma = Fraction(gamma)
    if not primes:
        return complex(1)
    z_red = RAdele(tuple((p, zeta_a.at(p)) for p in primes))
    scale = prod(p**e for p, e in bounds.items()) ** (N - 2) if include_zeta_power else 1
    total = complex(0)
    x = z_red.inverse() * gamma
    for t in enumerate_chains(N, bounds):
        a = complete_chain(t)
        w = complex(1)
        for p in primes:
            ords = list(a.ord_at(p))
            ords[0] += valuation(gamma, p)
            w *= provider.wtilde_local(p, tuple(ords))
            if w == 0:
                break
        if w == 0:
            continue
        total += w * hyper_kl(N, x, t, sign_exponent, psi_sign=psi_sign)
    return scale * total


def kloosterman_table(m: int):
    """S(a, b; m) for all 0 <= a, b < m, as an m x m complex array (one matrix product)."""
    import numpy as np

    units = np.array([w for w in range(1, m + 1) if math.gcd(w, m) == 1], dtype=np.int64)
    inv = np.array([invert_mod(int(w), m) for w in units], dtype=np.int64)
    r = np.arange(m, dtype=np.int64)
    e1 = np.exp(2j * np.pi * ((r[:, None] * units[None, :]) % m) / m)
    e2 = np.exp(2j * np.pi * ((r[:, None] * inv[None, :]) % m) / m)
    return e1 @ e2.T
