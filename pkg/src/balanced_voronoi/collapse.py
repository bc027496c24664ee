"""Exact finite-sum comparison of the opened balanced formula with its collapsed form.

The contragredient Whittaker values are replaced by an arbitrary coefficient
map B(gamma, orders), where ``orders`` lists, for each p | c, the p-adic
orders of diag(gamma, 1, ..., 1) a.  B vanishes off the dominant cone, as
W~ does.  Each side becomes a finite linear functional in B, stored as a
dictionary {(gamma, orders): coefficient}, so identities can be checked
for every B at once as well as for seeded random B.
"""
from __future__ import annotations

import hashlib
import itertools
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

import numpy as np

from .arith import RAdele, RClass, UnitCosetRep, enumerate_unit_coset, expi, valuation
from .engine import (
    ConventionBundle,
    FormulaParams,
    KlOrientation,
    chain_label,
    completed_orders,
    embed_chain,
    expand_open_klM,
    kl_argument,
)
from .kloosterman import SignExponent, hyper_kl, sign_for
from .torus import (
    SplitConvention,
    TorusChain,
    balanced_constant,
    complete_chain,
    det_chain,
    enumerate_chains,
    split_coset,
)

Key = tuple  # (gamma, ((p, orders), ...))


# --------------------------------------------------------------------------- #
# coefficient maps

def is_dominant_orders(orders: tuple[int, ...]) -> bool:
    return all(a >= b for a, b in zip(orders, orders[1:]))


def random_coefficient(seed: int, key: Key) -> complex:
    """Seeded standard complex Gaussian, a pure function of (seed, key)."""
    gamma, orders = key
    if not all(is_dominant_orders(o) for _, o in orders):
        return 0j
    h = hashlib.blake2b(f"{seed}|{gamma}|{orders}".encode(), digest_size=16).digest()
    u1, u2 = struct.unpack("<QQ", h)
    a, b = (u1 + 0.5) / 2**64, (u2 + 0.5) / 2**64
    r = math.sqrt(-2 * math.log(a))
    return complex(r * math.cos(2 * math.pi * b), r * math.sin(2 * math.pi * b))


def _key(gamma: Fraction, torus: dict[int, tuple[int, ...]], primes) -> Key | None:
    orders = []
    for p in primes:
        o = list(torus.get(p, ()))
        if not o:
            return None
        o[0] += valuation(gamma, p)
        if not is_dominant_orders(o):
            return None
        orders.append((p, tuple(o)))
    return (gamma, tuple(orders))


def _gamma_grid(p: FormulaParams) -> list[Fraction]:
    """gamma = n / D with D = prod p^{N e_p} and |gamma| <= gamma_max."""
    D = prod(q ** (p.N * e) for q, e in p.zeta.modulus.factorization)
    nmax = int(math.floor(p.gamma_max * D))
    return [Fraction(n, D) for n in itertools.chain(range(-nmax, 0), range(1, nmax + 1))]


def _add(acc: dict, key: Key, val: complex) -> None:
    acc.setdefault(key, []).append(val)


def _freeze(acc: dict) -> dict:
    out = {}
    for k in sorted(acc, key=lambda k: (k[0], k[1])):
        vs = acc[k]
        out[k] = complex(math.fsum(v.real for v in vs), math.fsum(v.imag for v in vs))
    return out


def _full_torus(levels, bounds, N, primes) -> dict[int, tuple[int, ...]]:
    torus = completed_orders(levels, bounds)
    for q in primes:
        torus.setdefault(q, (0,) * N)
    return torus


# --------------------------------------------------------------------------- #
# the two forms

def opened_functional(p: FormulaParams, gammas: list[Fraction] | None = None) -> dict[Key, complex]:
    """Opened left side with the rank-N formula applied to each twisted character.

    Sum over (t, v) of psi(sum v) |zeta'|^{N-2} sum_s sum_gamma Kl_N(gamma/zeta', s) B(gamma, a(s)),
    zeta' being the twist of the opened term.
    """
    gammas = _gamma_grid(p) if gammas is None else gammas
    primes = p.zeta.modulus.primes
    ps = p.bundle.psi_sign
    acc: dict = {}
    for term in expand_open_klM(p):
        ph = expi(term.phase, sign=ps)
        x = term.twist
        bounds = tuple((q, -valuation(x.at(q), q)) for q in primes if valuation(x.at(q), q) < 0)
        scale = prod(q**e for q, e in bounds) ** (p.N - 2)
        if not bounds:
            for g in gammas:
                k = _key(g, {q: (0,) * p.N for q in primes}, primes)
                if k is not None:
                    _add(acc, k, ph)
            continue
        x_red = RAdele(tuple((q, x.at(q)) for q, _ in bounds))
        for s in enumerate_chains(p.N, dict(bounds)):
            torus = _full_torus(s.levels, bounds, p.N, primes)
            for g in gammas:
                k = _key(g, torus, primes)
                if k is None:
                    continue
                kl = hyper_kl(p.N, x_red.inverse() * g, s, p.bundle.sign_exponent, psi_sign=ps)
                _add(acc, k, ph * scale * kl)
    return _freeze(acc)


def pairs_functional(p: FormulaParams, gammas: list[Fraction] | None = None) -> dict[Key, complex]:
    """Same as :func:`opened_functional` with each Kl_N opened down to Kl_L over s_1.

    Kl_N(x, s_1 s_2) = sum_u psi(sum u) Kl_L((-1)^{N-L} x u^{-1}, s_1); agreement
    with the opened functional checks this expansion exactly.
    """
    gammas = _gamma_grid(p) if gammas is None else gammas
    primes = p.zeta.modulus.primes
    ps = p.bundle.psi_sign
    acc: dict = {}
    for term in expand_open_klM(p):
        ph = expi(term.phase, sign=ps)
        x = term.twist
        bounds = tuple((q, -valuation(x.at(q), q)) for q in primes if valuation(x.at(q), q) < 0)
        scale = prod(q**e for q, e in bounds) ** (p.N - 2)
        if not bounds:
            for g in gammas:
                k = _key(g, {q: (0,) * p.N for q in primes}, primes)
                if k is not None:
                    _add(acc, k, ph)
            continue
        x_red = RAdele(tuple((q, x.at(q)) for q, _ in bounds))
        for s in enumerate_chains(p.N, dict(bounds)):
            torus = _full_torus(s.levels, bounds, p.N, primes)
            sp = split_coset(s, p.L, p.M, p.bundle.split)
            s1, s2 = sp.s1, sp.s2
            us = [enumerate_unit_coset(e) for e in s2.entries]
            for g in gammas:
                k = _key(g, torus, primes)
                if k is None:
                    continue
                base = x_red.inverse() * g
                total = []
                for reps in itertools.product(*us):
                    theta = sum((r.value for r in reps), Fraction(0))
                    comps = []
                    for j, q in enumerate(s.primes):
                        y = base.at(q) * (-1) ** (p.N - p.L)
                        for r, row in zip(reps, s2.levels):
                            if row[j] > 0:
                                y *= Fraction(r.d, r.w)
                        comps.append((q, y))
                    kl = hyper_kl(p.L, RAdele(tuple(comps)), s1, SignExponent.RANK, psi_sign=ps)
                    total.append(expi(theta, sign=ps) * kl)
                _add(acc, k, ph * scale * complex(math.fsum(z.real for z in total),
                                                  math.fsum(z.imag for z in total)))
    return _freeze(acc)


def collapsed_functionals(p: FormulaParams, gammas: list[Fraction] | None = None
                        ) -> list[tuple[TorusChain, dict[Key, complex]]]:
    """Per s in T^L: det(s) sum_gamma Kl_L(gamma zeta^{+-1}, s) B(gamma, a(s)), constant not applied."""
    gammas = _gamma_grid(p) if gammas is None else gammas
    primes = p.zeta.modulus.primes
    bounds = p.zeta.modulus.factorization
    out = []
    for s in enumerate_chains(p.L, p.zeta):
        torus = _full_torus(embed_chain(s, p.N, p.bundle.split), bounds, p.N, primes)
        det = float(det_chain(s))
        acc: dict = {}
        for g in gammas:
            k = _key(g, torus, primes)
            if k is None:
                continue
            kl = hyper_kl(p.L, kl_argument(g, p), s, p.bundle.sign_exponent, ambient=p.N,
                          psi_sign=p.bundle.psi_sign)
            _add(acc, k, det * kl)
        out.append((s, _freeze(acc)))
    return out


def evaluate(functional: dict[Key, complex], seed: int) -> complex:
    vals = [c * random_coefficient(seed, k) for k, c in functional.items()]
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


# --------------------------------------------------------------------------- #
# diagnostic

@dataclass
class CollapseReport:
    params: dict
    bundle: dict
    seeds: list[int]
    opened: list[complex]
    collapsed: list[complex]
    residual: float            # max over seeds |opened - collapsed|
    relative_residual: float   # residual / max |opened|
    pairs_residual: float      # opened vs pairs expansion, max over keys
    measured_constants: list[dict]
    fitted_residual: float     # max over keys after fitting one constant per s
    fitted_relative: float     # fitted_residual / max |opened coefficient|
    keys_opened_only: int
    keys_collapsed_only: int
    term_counts: dict
    per_coset: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.residual <= 1e-9

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["opened"] = [[z.real, z.imag] for z in self.opened]
        d["collapsed"] = [[z.real, z.imag] for z in self.collapsed]
        d["passed"] = self.passed
        return d


def _fit_constants(opened: dict, parts: list[dict]) -> tuple[np.ndarray, float]:
    keys = sorted(set(opened).union(*[set(q) for q in parts]), key=lambda k: (k[0], k[1]))
    if not keys or not parts:
        return np.zeros(len(parts), complex), max((abs(v) for v in opened.values()), default=0.0)
    A = np.array([[q.get(k, 0j) for q in parts] for k in keys], dtype=complex)
    b = np.array([opened.get(k, 0j) for k in keys], dtype=complex)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol, float(np.max(np.abs(A @ sol - b)))


def collapse_diagnostic(p: FormulaParams, seeds=tuple(range(1, 11)), check_pairs: bool = True) -> CollapseReport:
    gammas = _gamma_grid(p)
    opened = opened_functional(p, gammas)
    pairs_res = 0.0
    if check_pairs and p.M > 2:
        pairs = pairs_functional(p, gammas)
        keys = set(opened) | set(pairs)
        pairs_res = max((abs(opened.get(k, 0j) - pairs.get(k, 0j)) for k in keys), default=0.0)
    parts = collapsed_functionals(p, gammas)
    consts = [balanced_constant(p.zeta, s, p.M) for s, _ in parts]
    collapsed: dict[Key, list] = {}
    for (s, f), cst in zip(parts, consts):
        for k, v in f.items():
            collapsed.setdefault(k, []).append(cst * v)
    collapsed_f = _freeze(collapsed)
    o_vals = [evaluate(opened, sd) for sd in seeds]
    t_vals = [evaluate(collapsed_f, sd) for sd in seeds]
    res = max(abs(a - b) for a, b in zip(o_vals, t_vals))
    scale = max(max(abs(a) for a in o_vals), 1e-300)
    chat, fit_res = _fit_constants(opened, [f for _, f in parts])
    measured = [{"s": chain_label(s), "c_hat": [float(z.real), float(z.imag)], "c_literal": cst}
                for (s, _), z, cst in zip(parts, chat, consts)]
    per_coset = []
    for (s, f), cst in zip(parts, consts):
        v = evaluate(f, seeds[0]) * cst
        per_coset.append({"coset": chain_label(s), "re": v.real, "im": v.imag, "terms": len(f)})
    return CollapseReport(
        params=p.as_dict(), bundle=p.bundle.as_dict(), seeds=list(seeds),
        opened=o_vals, collapsed=t_vals, residual=float(res), relative_residual=float(res / scale),
        pairs_residual=float(pairs_res), measured_constants=measured, fitted_residual=fit_res,
        fitted_relative=fit_res / max((abs(v) for v in opened.values()), default=1.0),
        keys_opened_only=len(set(opened) - set(collapsed_f)),
        keys_collapsed_only=len(set(collapsed_f) - set(opened)),
        term_counts={"gamma": len(gammas), "opened_keys": len(opened), "collapsed_keys": len(collapsed_f),
                     "open_terms": len(expand_open_klM(p))},
        per_coset=per_coset,
    )


def key_lemma_sum(t: RClass, u: UnitCosetRep | Fraction, psi_sign: int = 1) -> complex:
    """sum over v in t O^x / O of psi(v + u), by direct summation."""
    uval = u.value if isinstance(u, UnitCosetRep) else Fraction(u)
    vals = [expi(r.value + uval, sign=psi_sign) for r in enumerate_unit_coset(t)]
    return complex(math.fsum(z.real for z in vals), math.fsum(z.imag for z in vals))


# --------------------------------------------------------------------------- #
# convention search

def all_bundles() -> list[ConventionBundle]:
    return [ConventionBundle(se, o, sp, ps)
            for se in SignExponent for o in KlOrientation for sp in SplitConvention for ps in (1, -1)]


@dataclass
class SearchResult:
    best: ConventionBundle
    consistent: bool
    table: list[dict]  # one row per bundle: max relative residuals over the grid

    def as_dict(self) -> dict:
        return {"best": self.best.as_dict(), "consistent": self.consistent, "table": self.table}


def convention_search(grid: list[tuple[int, int, int, int, int]], seeds=(1,), gamma_max: float = 1.0,
                      tol: float = 1e-6) -> SearchResult:
    """Try every bundle on every (N, L, M, c, a) instance.

    A bundle is consistent when the literal form matches on every instance.
    Bundles are ranked by the worst residual left after fitting one constant
    per chain (the shape of the formula), then by the literal residual.
    """
    from .arith import ZetaParam

    table = []
    for b in all_bundles():
        worst, fitted, worst_inst = 0.0, 0.0, None
        for N, L, M, c, a in grid:
            p = FormulaParams(N, L, M, ZetaParam.of(a, c), b, gamma_max=gamma_max)
            rep = collapse_diagnostic(p, seeds, check_pairs=False)
            fitted = max(fitted, rep.fitted_relative)
            if rep.relative_residual >= worst:
                worst, worst_inst = rep.relative_residual, (N, L, M, c, a)
        table.append({"bundle": b.as_dict(), "max_relative_residual": worst,
                      "max_fitted_relative": fitted, "worst_instance": worst_inst})
    order = sorted(range(len(table)), key=lambda i: (round(table[i]["max_fitted_relative"], 12),
                                                     round(table[i]["max_relative_residual"], 12), i))
    best = all_bundles()[order[0]]
    return SearchResult(best, table[order[0]]["max_relative_residual"] <= tol, table)
