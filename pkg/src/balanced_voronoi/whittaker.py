"""Coefficient providers: unramified Whittaker values and Fourier coefficients.

Local values come from the Casselman-Shalika formula

    W_p(diag(p^lam)) = delta^{1/2}(p^lam) s_lam(alpha_p),  lam dominant,

and vanish off the dominant cone.  The contragredient is
W~(g) = W(w g^{-T}), which on a diagonal matrix reverses and negates the
orders.  Over Q the finite Whittaker function at Delta_m is
prod_i m_i^{-i(N-i)/2} A(m_1, ..., m_{N-1}).
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from sympy import primerange

from .arith import factorize, valuation

TABLE_VERSION = 1


# --------------------------------------------------------------------------- #
# symmetric functions

def complete_homogeneous(alpha: Sequence[complex], kmax: int) -> list[complex]:
    """h_0, ..., h_kmax of the variables alpha."""
    h = [1.0 + 0j] + [0j] * kmax
    for a in alpha:
        for k in range(1, kmax + 1):
            h[k] = h[k] + a * h[k - 1]
    return h


def schur(lam: Sequence[int], alpha: Sequence[complex]) -> complex:
    """s_lam(alpha) by Jacobi-Trudi; negative parts handled by a determinant shift."""
    n = len(alpha)
    lam = list(lam) + [0] * (n - len(lam))
    if any(lam[i] < lam[i + 1] for i in range(n - 1)):
        return 0j
    shift = lam[-1]
    lam = [x - shift for x in lam]
    h = complete_homogeneous(alpha, max(lam[0] + n, 1))

    def hk(k):
        return h[k] if 0 <= k < len(h) else 0j

    mat = np.array([[hk(lam[i] - i + j) for j in range(n)] for i in range(n)], dtype=complex)
    val = complex(np.linalg.det(mat)) if n > 1 else complex(mat[0, 0])
    if shift:
        val *= complex(np.prod(alpha)) ** shift
    return val


def delta_half(p: int, lam: Sequence[int]) -> float:
    """delta^{1/2}(diag(p^lam)) = prod_i p^{-lam_i (N+1-2i)/2}."""
    N = len(lam)
    expo = sum(l * (N + 1 - 2 * (i + 1)) for i, l in enumerate(lam)) / 2
    return float(p) ** (-expo)


def is_dominant(lam: Sequence[int]) -> bool:
    return all(lam[i] >= lam[i + 1] for i in range(len(lam) - 1))


def cs_whittaker(alpha: Sequence[complex], lam: Sequence[int], p: int) -> complex:
    """Casselman-Shalika value at diag(p^lam); 0 for non-dominant lam."""
    if not is_dominant(lam):
        return 0j
    return delta_half(p, lam) * schur(lam, alpha)


def lam_of_m(exps: Sequence[int]) -> tuple[int, ...]:
    """Orders of Delta_m = diag(m_1...m_{N-1}, ..., m_{N-1}, 1) at one prime."""
    N = len(exps) + 1
    return tuple(sum(exps[i:]) for i in range(N - 1)) + (0,)


# --------------------------------------------------------------------------- #
# providers

@dataclass
class SatakeProvider:
    """Unramified everywhere; ``satake(p)`` returns (alpha_1, ..., alpha_N).

    ``unitary`` asserts |prod alpha| = 1 whenever parameters are produced.
    """

    N: int
    satake: Callable[[int], tuple[complex, ...]]
    name: str = "satake"
    unitary: bool = True
    cuspidal: bool = True
    _alpha: dict = field(default_factory=dict, repr=False)
    _local: dict = field(default_factory=dict, repr=False)

    def alpha(self, p: int) -> tuple[complex, ...]:
        if p not in self._alpha:
            a = tuple(complex(x) for x in self.satake(p))
            if len(a) != self.N:
                raise ValueError(f"need {self.N} Satake parameters at {p}")
            if self.unitary and abs(abs(np.prod(a)) - 1) > 1e-9:
                raise ValueError(f"non-unitary central character at {p}")
            self._alpha[p] = a
        return self._alpha[p]

    def dual(self) -> "SatakeProvider":
        return SatakeProvider(self.N, lambda p: tuple(1 / a for a in self.alpha(p)),
                              name=f"dual({self.name})", unitary=self.unitary, cuspidal=self.cuspidal)

    def local_whittaker(self, p: int, lam: Sequence[int]) -> complex:
        lam = tuple(lam)
        key = (p, lam)
        if key not in self._local:
            self._local[key] = cs_whittaker(self.alpha(p), lam, p)
        return self._local[key]

    def wtilde_local(self, p: int, ords: Sequence[int]) -> complex:
        """W~ at diag(x) with ord_p(x_i) = ords[i]."""
        return self.local_whittaker(p, tuple(-o for o in reversed(ords)))

    def coefficient(self, m: Sequence[int]) -> complex:
        """A(m_1, ..., m_{N-1}) = prod_p s_lam(alpha_p)."""
        if any(x < 1 for x in m):
            raise ValueError("indices must be positive")
        primes = set()
        for x in m:
            primes |= set(factorize(x))
        out = complex(1)
        for p in sorted(primes):
            lam = lam_of_m([valuation(x, p) for x in m])
            out *= schur(lam, self.alpha(p))
        return out

    def whittaker_finite(self, diag: Sequence[Fraction], dual: bool = False) -> complex:
        """prod_p W_p (or W~_p) at a rational diagonal matrix."""
        diag = [Fraction(x) for x in diag]
        primes = set()
        for x in diag:
            primes |= set(factorize(abs(x.numerator))) | set(factorize(x.denominator))
        out = complex(1)
        for p in sorted(primes):
            ords = tuple(valuation(x, p) for x in diag)
            w = self.wtilde_local(p, ords) if dual else self.local_whittaker(p, ords)
            if w == 0:
                return 0j
            out *= w
        return out


def divisor_coeffs(n: int) -> int:
    """Number of divisors of n."""
    return math.prod(e + 1 for e in factorize(n).values())


def divisor_provider() -> SatakeProvider:
    return SatakeProvider(2, lambda p: (1.0, 1.0), name="divisor", cuspidal=False)


# --------------------------------------------------------------------------- #
# Ramanujan tau

def _eta_cubed(cutoff: int) -> dict[int, int]:
    """Jacobi: prod (1-q^m)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}."""
    out, k = {}, 0
    while k * (k + 1) // 2 <= cutoff:
        out[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return out


@lru_cache(maxsize=4)
def tau_table(cutoff: int) -> tuple[int, ...]:
    """tau(0..cutoff) exactly, from Delta = q (prod (1-q^m)^3)^8."""
    sparse = _eta_cubed(cutoff)
    poly = [0] * (cutoff + 1)
    poly[0] = 1
    for _ in range(8):
        new = [0] * (cutoff + 1)
        for i, ci in enumerate(poly):
            if ci:
                for j, cj in sparse.items():
                    if i + j > cutoff:
                        break
                    new[i + j] += ci * cj
        poly = new
    return (0,) + tuple(poly[:cutoff])


def tau_coeffs(n: int, cutoff: int | None = None) -> int:
    cutoff = cutoff or max(n, 64)
    if n > cutoff:
        raise ValueError(f"tau({n}) beyond cutoff {cutoff}")
    if n < 1:
        raise ValueError("n must be positive")
    return tau_table(_round_cutoff(cutoff))[n]


def _round_cutoff(n: int) -> int:
    return 1 << max(6, (n - 1).bit_length())


def tau_satake(p: int, tau_p: int | None = None) -> tuple[complex, complex]:
    """(alpha, beta) with alpha + beta = tau(p)/p^{11/2}, alpha beta = 1."""
    if tau_p is None:
        tau_p = tau_coeffs(p)
    a = tau_p / p**5.5
    disc = cmath.sqrt(a * a - 4)
    return ((a + disc) / 2, (a - disc) / 2)


def tau_provider() -> SatakeProvider:
    return SatakeProvider(2, tau_satake, name="tau")


def sym2_satake(p: int, tau_p: int | None = None) -> tuple[complex, complex, complex]:
    al, be = tau_satake(p, tau_p)
    return (al * al, al * be, be * be)


def sym2_provider() -> SatakeProvider:
    return SatakeProvider(3, sym2_satake, name="sym2-delta")


# --------------------------------------------------------------------------- #
# normalization bridge

def fc_normalize(A: complex, m: Sequence[int], n: int | None = None) -> complex:
    """prod_i m_i^{-i(n-i)/2} A(m); ``n`` defaults to N = len(m) + 1."""
    if any(x < 1 for x in m):
        raise ValueError("zero or negative index")
    n = len(m) + 1 if n is None else n
    return A * math.prod(float(x) ** (-(i + 1) * (n - i - 1) / 2) for i, x in enumerate(m))


def fc_denormalize(W: complex, m: Sequence[int], n: int | None = None) -> complex:
    n = len(m) + 1 if n is None else n
    return W * math.prod(float(x) ** ((i + 1) * (n - i - 1) / 2) for i, x in enumerate(m))


def delta_m(m: Sequence[int]) -> tuple[int, ...]:
    return tuple(math.prod(m[i:]) for i in range(len(m))) + (1,)


# --------------------------------------------------------------------------- #
# Hecke checks

@dataclass
class HeckeReport:
    checks: int
    max_defect: float
    worst: tuple | None

    @property
    def ok(self) -> bool:
        return self.max_defect < 1e-9


def hecke_verify(coeff: Callable[[int], complex], nmax: int = 200,
                 p_recursion: Callable[[int, int], float] | None = None,
                 primes: Iterable[int] | None = None) -> HeckeReport:
    """Coprime multiplicativity up to ``nmax`` plus an optional p-power defect.

    ``p_recursion(p, k)`` returns the defect of the rank-specific recursion
    at p^k.
    """
    worst, defect, checks = None, 0.0, 0
    vals = {n: coeff(n) for n in range(1, nmax + 1)}
    for m in range(2, nmax + 1):
        for n in range(2, nmax // m + 1):
            if math.gcd(m, n) == 1 and m * n <= nmax:
                d = abs(vals[m * n] - vals[m] * vals[n])
                scale = max(1.0, abs(vals[m * n]))
                checks += 1
                if d / scale > defect:
                    defect, worst = d / scale, (m, n)
    if p_recursion is not None:
        for p in primes or primerange(2, 50):
            for k in (2, 3):
                d = p_recursion(p, k)
                checks += 1
                if d > defect:
                    defect, worst = d, (p, k)
    return HeckeReport(checks, defect, worst)


# --------------------------------------------------------------------------- #
# tables

@dataclass
class FourierTable:
    source: str
    entries: dict[tuple[int, ...], complex | int] = field(default_factory=dict)

    @classmethod
    def from_provider(cls, provider: SatakeProvider, indices: Iterable[tuple[int, ...]]) -> "FourierTable":
        return cls(provider.name, {tuple(m): provider.coefficient(m) for m in indices})

    @classmethod
    def tau(cls, nmax: int) -> "FourierTable":
        return cls("tau", {(n,): tau_coeffs(n, nmax) for n in range(1, nmax + 1)})

    @classmethod
    def random(cls, seed: int, box: Iterable[tuple[int, ...]]) -> "FourierTable":
        rng = np.random.default_rng(seed)
        box = sorted(box)
        z = (rng.standard_normal(len(box)) + 1j * rng.standard_normal(len(box))) / math.sqrt(2)
        return cls(f"random-{seed}", dict(zip(box, (complex(v) for v in z))))

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index_tuple", "re", "im", "source", "version"])
            for idx in sorted(self.entries):
                v = self.entries[idx]
                key = "-".join(map(str, idx))
                if isinstance(v, int):
                    w.writerow([key, str(v), "0", self.source, TABLE_VERSION])
                else:
                    w.writerow([key, repr(v.real), repr(v.imag), self.source, TABLE_VERSION])

    @classmethod
    def load(cls, path: str | Path) -> "FourierTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            return cls("empty")
        if any(int(r["version"]) != TABLE_VERSION for r in rows):
            raise ValueError("table version mismatch")
        entries: dict = {}
        for r in rows:
            idx = tuple(int(x) for x in r["index_tuple"].split("-"))
            if r["source"] == "tau":
                entries[idx] = int(r["re"])
            else:
                entries[idx] = complex(float(r["re"]), float(r["im"]))
        return cls(rows[0]["source"], entries)


def gl3_hecke_defect(provider: SatakeProvider) -> Callable[[int, int], float]:
    """A(p^k,1) = A(p,1)A(p^{k-1},1) - A(1,p)A(p^{k-2},1) + A(p^{k-3},1)."""

    def A(i, j):
        return provider.coefficient((i, j))

    def defect(p, k):
        rhs = A(p, 1) * A(p ** (k - 1), 1) - A(1, p) * A(p ** (k - 2), 1)
        if k >= 3:
            rhs += A(p ** (k - 3), 1)
        return abs(A(p**k, 1) - rhs)

    return defect

