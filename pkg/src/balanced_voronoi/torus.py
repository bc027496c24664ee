"""Torus cosets T_zeta / T_o as divisor chains.

A chain (t_2, ..., t_{N-1}) is stored per prime as the levels
k_{i,p} = -ord_p(t_i), so |t_i|_p = p^{k_{i,p}} and

    0 <= k_{2,p} <= ... <= k_{N-1,p} <= e_p,     |zeta|_p = p^{e_p}.

Equivalently the denominators d_i = prod_p p^{k_{i,p}} form a divisor chain
d_2 | d_3 | ... | d_{N-1} | c.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, prod
from typing import Mapping

from .arith import RClass, ZetaParam


class SplitConvention(str, enum.Enum):
    """Where s_1 sits inside (t_2, ..., t_{N-1}).

    LOW:  s_1 = (t_2, ..., t_{L-1}), s_2 = (t_L, ..., t_{N-1})
    HIGH: s_2 = (t_2, ..., t_{M-1}), s_1 = (t_M, ..., t_{N-1})
    """

    LOW = "s1-low"
    HIGH = "s1-high"


def _bounds_of(zeta: ZetaParam | Mapping[int, int]) -> tuple[tuple[int, int], ...]:
    if isinstance(zeta, ZetaParam):
        return zeta.modulus.factorization
    return tuple(sorted((p, e) for p, e in zeta.items() if e > 0))


@dataclass(frozen=True)
class TorusChain:
    N: int
    bounds: tuple[tuple[int, int], ...]  # (p, e_p)
    levels: tuple[tuple[int, ...], ...]  # levels[i][j] = k for position i+2, prime j

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("rank must be >= 2")
        if len(self.levels) != self.N - 2:
            raise ValueError(f"chain of rank {self.N} needs {self.N - 2} entries")
        for j, (p, e) in enumerate(self.bounds):
            col = [row[j] for row in self.levels]
            if any(k < 0 or k > e for k in col) or col != sorted(col):
                raise ValueError(f"levels at p={p} not weakly increasing in [0, {e}]: {col}")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.bounds)

    @property
    def entries(self) -> tuple[RClass, ...]:
        return tuple(
            RClass(tuple((p, -row[j]) for j, (p, _) in enumerate(self.bounds))) for row in self.levels
        )

    def denominators(self) -> tuple[int, ...]:
        return tuple(prod(p**k for (p, _), k in zip(self.bounds, row)) for row in self.levels)

    def level(self, i: int, p: int) -> int:
        """k for chain position i (2 <= i <= N-1) at prime p."""
        j = self.primes.index(p)
        return self.levels[i - 2][j]


@dataclass(frozen=True)
class CompletedTorus:
    """a(t) = diag(t_1, ..., t_N); ``ords[p]`` lists ord_p(t_i)."""

    N: int
    ords: tuple[tuple[int, tuple[int, ...]], ...]

    def ord_at(self, p: int) -> tuple[int, ...]:
        return dict(self.ords).get(p, (0,) * self.N)

    @property
    def entries(self) -> tuple[RClass, ...]:
        return tuple(RClass(tuple((p, o[i]) for p, o in self.ords)) for i in range(self.N))


@dataclass(frozen=True)
class SplitCoset:
    s1: TorusChain
    s2: TorusChain
    convention: SplitConvention


def count_chains(N: int, zeta: ZetaParam | Mapping[int, int]) -> int:
    return prod(comb(e + N - 2, N - 2) for _, e in _bounds_of(zeta))


def _weak_tuples(length: int, top: int):
    return itertools.combinations_with_replacement(range(top + 1), length)


def enumerate_chains(N: int, zeta: ZetaParam | Mapping[int, int]) -> list[TorusChain]:
    """Every chain of rank N bounded by |zeta|, as a per-prime product."""
    if N < 2:
        raise ValueError("rank must be >= 2")
    bounds = _bounds_of(zeta)
    per_prime = [list(_weak_tuples(N - 2, e)) for _, e in bounds]
    if not bounds:
        return [TorusChain(N, bounds, ((),) * (N - 2))]
    # weak tuples are valid levels by construction, so validation is skipped
    new, setattr_ = object.__new__, object.__setattr__
    out = []
    for combo in itertools.product(*per_prime):
        t = new(TorusChain)
        setattr_(t, "N", N)
        setattr_(t, "bounds", bounds)
        setattr_(t, "levels", tuple(zip(*combo)))
        out.append(t)
    return out


def complete_chain(t: TorusChain) -> CompletedTorus:
    """Fill in t_1 and t_N: |t_N|_p = |zeta|_p and |t_1 ... t_N|_p = 1."""
    ords = []
    for j, (p, e) in enumerate(t.bounds):
        middle = tuple(-row[j] for row in t.levels)
        first = e - sum(middle)
        ords.append((p, (first,) + middle + (-e,)))
    return CompletedTorus(t.N, tuple(ords))


def split_coset(s: TorusChain, L: int, M: int,
                convention: SplitConvention = SplitConvention.LOW) -> SplitCoset:
    if L < 2 or M < 2 or L + M != s.N + 2:
        raise ValueError(f"incompatible split L={L}, M={M} for N={s.N}")
    if convention is SplitConvention.LOW:
        lo, hi = s.levels[: L - 2], s.levels[L - 2:]
        return SplitCoset(TorusChain(L, s.bounds, lo), TorusChain(M, s.bounds, hi), convention)
    lo, hi = s.levels[: M - 2], s.levels[M - 2:]
    return SplitCoset(TorusChain(L, s.bounds, hi), TorusChain(M, s.bounds, lo), convention)


def recombine(split: SplitCoset) -> TorusChain:
    N = split.s1.N + split.s2.N - 2
    if split.convention is SplitConvention.LOW:
        levels = split.s1.levels + split.s2.levels
    else:
        levels = split.s2.levels + split.s1.levels
    return TorusChain(N, split.s1.bounds, levels)


def balanced_constant(zeta: ZetaParam | Mapping[int, int], s: TorusChain | None, M: int) -> int:
    """c(zeta, s) read literally: the number of rank-M chains bounded by |zeta|.

    ``s`` does not enter the defining set; it is accepted so callers can pass
    it alongside the measured constant.
    """
    return count_chains(M, zeta)


def det_chain(s: TorusChain) -> Fraction:
    """prod_i |t_i|_R."""
    return Fraction(prod(s.denominators()))
