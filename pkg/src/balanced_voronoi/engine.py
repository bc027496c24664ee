"""Numeric evaluation of Voronoi-type summation formulas over Q.

Every side is a finite sum over divisor chains and rational gamma, weighted
by a test weight (left sides) or a dual weight (right sides).  The Whittaker
factors come from a :class:`SatakeProvider`, one prime at a time, and the
hyper-Kloosterman factors are exact sums.  Each evaluator returns a
:class:`SideValue` carrying a per-chain breakdown and a truncation estimate.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

import numpy as np
from scipy import integrate

from .arith import RAdele, ZetaParam, factor_small, psi_R, valuation
from .hankel import DualWeight
from .kloosterman import SignExponent, hyper_kl, term_count
from .torus import (
    CompletedTorus,
    SplitConvention,
    TorusChain,
    complete_chain,
    enumerate_chains,
)


class KlOrientation(str, enum.Enum):
    """Argument of the right-hand Kloosterman sum.

    ZETA_INV: Kl(gamma zeta^{-1}, s);  ZETA: Kl(gamma zeta, s);
    TWISTED: Kl((-1)^M gamma zeta, s).
    """

    ZETA_INV = "gamma/zeta"
    ZETA = "gamma*zeta"
    TWISTED = "(-1)^M*gamma*zeta"


@dataclass(frozen=True)
class ConventionBundle:
    sign_exponent: SignExponent = SignExponent.RANK
    orientation: KlOrientation = KlOrientation.ZETA_INV
    split: SplitConvention = SplitConvention.LOW
    psi_sign: int = 1  # finite character e(psi_sign * {x}_p)

    def as_dict(self) -> dict:
        return {"sign_exponent": self.sign_exponent.value, "orientation": self.orientation.value,
                "split": self.split.value, "psi_sign": self.psi_sign}

    @classmethod
    def from_dict(cls, d: dict) -> "ConventionBundle":
        return cls(SignExponent(d["sign_exponent"]), KlOrientation(d["orientation"]),
                   SplitConvention(d["split"]), int(d["psi_sign"]))


@dataclass(frozen=True)
class FormulaParams:
    N: int
    L: int
    M: int
    zeta: ZetaParam
    bundle: ConventionBundle = ConventionBundle()
    gamma_max: float = 1e9
    tail_tol: float = 1e-13

    def __post_init__(self):
        if self.L + self.M != self.N + 2:
            raise ValueError(f"need L + M = N + 2, got L={self.L}, M={self.M}, N={self.N}")
        if self.L < 2 or self.M < 2:
            raise ValueError("L and M must be at least 2")
        if self.gamma_max < 1:
            raise ValueError("gamma_max must be >= 1")

    def as_dict(self) -> dict:
        return {"N": self.N, "L": self.L, "M": self.M, "a": self.zeta.a, "c": self.zeta.c,
                "gamma_max": self.gamma_max, "tail_tol": self.tail_tol}


@dataclass
class SideValue:
    value: complex
    terms: int
    tail: float
    per_coset: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "terms": self.terms, "tail": self.tail}


def _fsum_c(zs) -> complex:
    zs = list(zs)
    return complex(math.fsum(z.real for z in zs), math.fsum(z.imag for z in zs))


def _combine(rows: list[dict], tail: float) -> SideValue:
    return SideValue(_fsum_c(complex(r["re"], r["im"]) for r in rows),
                     sum(r["terms"] for r in rows), tail, rows)


def _row(label: str, value: complex, terms: int) -> dict:
    return {"coset": label, "re": value.real, "im": value.imag, "terms": terms}


# --------------------------------------------------------------------------- #
# finite Whittaker values

def finite_whittaker(provider, gamma: Fraction, torus: dict[int, tuple[int, ...]] | None = None,
                     dual: bool = False) -> complex:
    """W (or W~) at diag(gamma, 1, ..., 1) a over all finite primes.

    ``torus`` maps p to the p-adic orders of the diagonal a; primes not listed
    carry the identity.
    """
    torus = torus or {}
    N = provider.N
    gamma = Fraction(gamma)
    primes = set(torus) | set(factor_small(gamma.numerator)) | set(factor_small(gamma.denominator))
    out = complex(1)
    for p in sorted(primes):
        ords = list(torus.get(p, (0,) * N))
        ords[0] += valuation(gamma, p)
        w = provider.wtilde_local(p, ords) if dual else provider.local_whittaker(p, ords)
        if w == 0:
            return 0j
        out *= w
    return out


def _coeff_bound(provider, D: int) -> float:
    """Working size estimate 2^{N-1} D^{(N-1)/2} for W~ at diag(gamma, 1) a, gamma in Z/D.

    Tempered parameters bound each unramified local factor by a divisor-type
    count; the completed torus contributes at most D^{(N-1)/2}.
    """
    return 2.0 ** (provider.N - 1) * float(D) ** ((provider.N - 1) / 2)


def chain_label(t: TorusChain | None) -> str:
    if t is None or not t.levels:
        return "()"
    return "(" + ",".join(str(d) for d in t.denominators()) + ")"


# --------------------------------------------------------------------------- #
# dual-weight truncation

def _dual_cutoff(dual: DualWeight, rel_tol: float) -> float:
    """Y such that beyond |y| = Y the grid values of w~ stay below the larger of
    rel_tol times the sup norm and a multiple of the transform's roundoff floor."""
    y, mag = _dual_profile(dual)
    noise = float(np.max(mag[y >= y[-1] / 10]))
    level = max(rel_tol * float(mag.max()), 30 * noise)
    big = np.nonzero(mag > level)[0]
    return float(y[big[-1] + 1]) if len(big) else float(y[0])


def _dual_profile(dual: DualWeight) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = np.log(dual.certified[0]), np.log(dual.certified[1])
    sel = (dual.log_y >= lo) & (dual.log_y <= hi)
    return np.exp(dual.log_y[sel]), np.abs(dual.values_pos[sel]) + np.abs(dual.values_neg[sel])


def _tail_estimate(dual: DualWeight, Yc: float, Y: float, denom: int, coeff_bound: float) -> float:
    """Estimate of sum_{|gamma| > Yc, gamma in Z/denom} coeff_bound |w~(gamma)|.

    Riemann-sum bound denom * int_{Yc}^{e^2 Y} |w~| dy + 2 sup_{|y| >= Yc} |w~|,
    with |w~(y)| + |w~(-y)| read off the grid; beyond e^2 Y the grid is at the
    roundoff floor.
    """
    y, mag = _dual_profile(dual)
    sel = (y >= Yc) & (y <= math.e**2 * max(Y, Yc))
    if sel.sum() < 2:
        return 0.0
    integral = float(np.trapezoid(mag[sel], y[sel]))
    return coeff_bound * (denom * integral + 2 * float(mag[sel].max()))


# --------------------------------------------------------------------------- #
# ordinary formula sides

def _reduced(zeta: ZetaParam | RAdele) -> tuple[RAdele | None, dict[int, int]]:
    za = zeta.as_adele() if isinstance(zeta, ZetaParam) else zeta
    bounds = {p: -v for p, v in za.valuations().items() if v < 0}
    if not bounds:
        return None, {}
    return RAdele(tuple((p, za.at(p)) for p in sorted(bounds))), bounds


def ordinary_lhs(zeta: ZetaParam | RAdele, provider, weight, psi_sign: int = 1) -> SideValue:
    """sum_gamma psi(gamma zeta) W(diag(gamma, 1, ..., 1)) w(gamma) over gamma in Z."""
    lo, hi = weight.support
    za = zeta.as_adele() if isinstance(zeta, ZetaParam) else zeta
    terms = []
    for n in range(max(1, math.ceil(lo)), math.floor(hi) + 1):
        wv = float(weight(np.array([float(n)]))[0])
        if wv == 0:
            continue
        W = finite_whittaker(provider, Fraction(n))
        terms.append(psi_R(za * n, sign=psi_sign) * W * wv)
    return _combine([_row("()", _fsum_c(terms), len(terms))], 0.0)


def ordinary_rhs(N: int, zeta: ZetaParam | RAdele, provider, dual: DualWeight,
                 sign_exponent: SignExponent = SignExponent.RANK, psi_sign: int = 1,
                 include_zeta_power: bool = True, rel_tol: float = 1e-13,
                 gamma_max: float = math.inf) -> SideValue:
    """sum_t sum_gamma |zeta|^{N-2} Kl_N(gamma zeta^{-1}, t) W~(diag(gamma,1) a(t)) w~(gamma).

    gamma runs over |gamma| <= min(Y, gamma_max), Y being where w~ reaches its
    floor; the omitted range enters the tail estimate.
    """
    z_red, bounds = _reduced(zeta)
    scale = prod(p**e for p, e in bounds.items()) ** (N - 2) if include_zeta_power else 1
    Y = _dual_cutoff(dual, rel_tol)
    Yc = min(Y, gamma_max)
    chains = enumerate_chains(N, bounds) if bounds else [None]
    rows, tail = [], 0.0
    for t in chains:
        torus = dict(complete_chain(t).ords) if t is not None else {}
        D = prod(p ** max(0, o[0] - o[1]) for p, o in torus.items())
        nmax = int(math.floor(Yc * D))
        ns = np.concatenate([np.arange(-nmax, 0), np.arange(1, nmax + 1)])
        wt = dual(ns / D)
        kl_cache: dict[int, complex] = {}
        n_kl = term_count(t) if t is not None else 1
        terms = []
        for n, wv in zip(ns.tolist(), wt.tolist()):
            if wv == 0:
                continue
            gamma = Fraction(n, D)
            W = finite_whittaker(provider, gamma, torus, dual=True)
            if W == 0:
                continue
            if t is None:
                kl = 1.0
            else:
                r = n % D
                if r not in kl_cache:
                    kl_cache[r] = hyper_kl(N, z_red.inverse() * gamma, t, sign_exponent, psi_sign=psi_sign)
                kl = kl_cache[r]
            terms.append(W * kl * wv)
        value = scale * _fsum_c(terms)
        rows.append(_row(chain_label(t), value, len(terms)))
        tail += _tail_estimate(dual, Yc, Y, D, scale * n_kl * _coeff_bound(provider, D))
    return _combine(rows, tail)


def polar_term(provider, weight, zeta: ZetaParam) -> complex:
    """Residual main term of the divisor-function formula (pole of zeta(s)^2 at s = 1)."""
    if provider.cuspidal:
        return 0j
    if provider.N != 2:
        raise NotImplementedError("polar terms are implemented for the divisor function only")
    c = zeta.c
    lo, hi = weight.support

    def f(x):
        return float(weight(np.array([x]))[0]) * x**-0.5 * (math.log(x) + 2 * np.euler_gamma - 2 * math.log(c))

    val, _ = integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=400)
    return complex(val / c)


def ordinary_voronoi_sides(N: int, zeta: ZetaParam, provider, weight, dual: DualWeight,
                           sign_exponent: SignExponent = SignExponent.RANK, psi_sign: int = 1,
                           include_zeta_power: bool = True, rel_tol: float = 1e-13
                           ) -> tuple[SideValue, SideValue]:
    """(LHS, RHS) of the rank-N Voronoi formula twisted by the additive character of zeta."""
    lhs = ordinary_lhs(zeta, provider, weight, psi_sign)
    rhs = ordinary_rhs(N, zeta, provider, dual, sign_exponent, psi_sign, include_zeta_power, rel_tol)
    main = polar_term(provider, weight, zeta)
    if main:
        rhs.per_coset.append(_row("polar", main, 1))
        rhs.value = _fsum_c(complex(r["re"], r["im"]) for r in rhs.per_coset)
        rhs.terms += 1
    return lhs, rhs


# --------------------------------------------------------------------------- #
# balanced sides

@dataclass(frozen=True)
class OpenTerm:
    """One term of the opened left-hand Kloosterman sum.

    The inner character is psi(gamma * twist) with
    twist = (-1)^K zeta v_2^{-1} ... v_{M-1}^{-1} (units at untouched primes).
    """

    chain: TorusChain | None
    reps: tuple
    phase: Fraction  # psi(v_2 + ... + v_{M-1}) = e(phase)
    twist: RAdele


def _open_sign(p: FormulaParams) -> int:
    from .kloosterman import sign_for
    return sign_for(p.M, p.bundle.sign_exponent, p.N)


def expand_open_klM(p: FormulaParams, budget: int = 10**6) -> list[OpenTerm]:
    """All (t, v_2, ..., v_{M-1}) with their phases and twisted arguments."""
    import itertools

    from .arith import enumerate_unit_coset
    from .kloosterman import TermBudgetError

    za = p.zeta.as_adele()
    sgn = _open_sign(p)
    if not za.primes:
        return [OpenTerm(None, (), Fraction(0), za * sgn)]
    out: list[OpenTerm] = []
    for t in enumerate_chains(p.M, p.zeta):
        cosets = [enumerate_unit_coset(e) for e in t.entries]
        for reps in itertools.product(*cosets):
            if len(out) >= budget:
                raise TermBudgetError(f"opened sum exceeds {budget} terms")
            phase = sum((r.value for r in reps), Fraction(0)) % 1
            comps = []
            for j, q in enumerate(t.primes):
                x = sgn * za.at(q)
                for r, row in zip(reps, t.levels):
                    if row[j] > 0:
                        x *= Fraction(r.d, r.w)
                comps.append((q, x))
            out.append(OpenTerm(t, reps, phase, RAdele(tuple(comps))))
    return out


def lhs_balanced(p: FormulaParams, provider, weight) -> SideValue:
    """sum_t sum_gamma Kl_M(gamma zeta, t) W(diag(gamma, 1, ..., 1)) w(gamma)."""
    if provider.N != p.N:
        raise ValueError("provider rank differs from N")
    lo, hi = weight.support
    hi = min(hi, p.gamma_max)
    ns = [n for n in range(max(1, math.ceil(lo)), math.floor(hi) + 1)]
    wv = weight(np.array(ns, dtype=float)) if ns else np.zeros(0)
    Ws = [finite_whittaker(provider, Fraction(n)) for n in ns]
    za = p.zeta.as_adele()
    chains = enumerate_chains(p.M, p.zeta) if za.primes else [None]
    rows = []
    for t in chains:
        terms = []
        for n, w, W in zip(ns, wv.tolist(), Ws):
            if w == 0 or W == 0:
                continue
            if t is None:
                kl = 1.0
            else:
                kl = hyper_kl(p.M, za * n, t, p.bundle.sign_exponent, ambient=p.N,
                              psi_sign=p.bundle.psi_sign)
            terms.append(kl * W * w)
        rows.append(_row(chain_label(t), _fsum_c(terms), len(terms)))
    return _combine(rows, 0.0)


def embed_chain(s: TorusChain, N: int, split: SplitConvention) -> tuple[tuple[int, ...], ...]:
    """Levels of the rank-N chain carrying s in the s_1 slot and unit classes elsewhere."""
    pad = ((0,) * len(s.bounds),) * (N - s.N)
    return s.levels + pad if split is SplitConvention.LOW else pad + s.levels


def completed_orders(levels, bounds) -> dict[int, tuple[int, ...]]:
    """p-adic orders of a(t) for raw levels (no monotonicity check)."""
    out = {}
    for j, (q, e) in enumerate(bounds):
        middle = tuple(-row[j] for row in levels)
        out[q] = (e - sum(middle),) + middle + (-e,)
    return out


def kl_argument(gamma: Fraction, p: FormulaParams) -> RAdele:
    za = p.zeta.as_adele()
    o = p.bundle.orientation
    if o is KlOrientation.ZETA_INV:
        return za.inverse() * gamma
    if o is KlOrientation.ZETA:
        return za * gamma
    return za * (gamma * (-1) ** p.M)


def rhs_balanced(p: FormulaParams, provider, dual: DualWeight, rel_tol: float | None = None,
                 constant=None) -> SideValue:
    """sum_s c(zeta, s) det(s) sum_gamma Kl_L(gamma zeta^{+-1}, s) W~(diag(gamma,1) a(s)) w~(gamma).

    ``constant(s)`` defaults to the number of rank-M chains bounded by zeta.
    """
    from .torus import balanced_constant, det_chain

    rel_tol = p.tail_tol if rel_tol is None else rel_tol
    za = p.zeta.as_adele()
    if not za.primes:
        rhs = ordinary_rhs(p.N, p.zeta, provider, dual, p.bundle.sign_exponent,
                           p.bundle.psi_sign, rel_tol=rel_tol)
        return rhs
    constant = constant or (lambda s: balanced_constant(p.zeta, s, p.M))
    Y = _dual_cutoff(dual, rel_tol)
    Yc = min(Y, p.gamma_max)
    bounds = p.zeta.modulus.factorization
    rows, tail = [], 0.0
    for s in enumerate_chains(p.L, p.zeta):
        torus = completed_orders(embed_chain(s, p.N, p.bundle.split), bounds)
        D = prod(q ** max(0, o[0] - o[1]) for q, o in torus.items())
        factor = constant(s) * float(det_chain(s))
        nmax = int(math.floor(Yc * D))
        ns = np.concatenate([np.arange(-nmax, 0), np.arange(1, nmax + 1)])
        wt = dual(ns / D)
        cache: dict[int, complex] = {}
        terms = []
        for n, wv in zip(ns.tolist(), wt.tolist()):
            if wv == 0:
                continue
            gamma = Fraction(n, D)
            W = finite_whittaker(provider, gamma, torus, dual=True)
            if W == 0:
                continue
            r = n % (D * p.zeta.c)
            if r not in cache:
                cache[r] = hyper_kl(p.L, kl_argument(gamma, p), s, p.bundle.sign_exponent,
                                    ambient=p.N, psi_sign=p.bundle.psi_sign)
            terms.append(cache[r] * W * wv)
        rows.append(_row(chain_label(s), factor * _fsum_c(terms), len(terms)))
        tail += _tail_estimate(dual, Yc, Y, D, abs(factor) * term_count(s) * _coeff_bound(provider, D))
    return _combine(rows, tail)


def opened_rhs(p: FormulaParams, provider, dual: DualWeight, rel_tol: float | None = None) -> SideValue:
    """The left side after opening Kl_M and applying the rank-N formula to each twist.

    Equal to :func:`lhs_balanced` up to truncation whenever the rank-N formula
    holds; one row per opened term.
    """
    rel_tol = p.tail_tol if rel_tol is None else rel_tol
    rows, tail = [], 0.0
    for term in expand_open_klM(p):
        inner = ordinary_rhs(p.N, term.twist, provider, dual, p.bundle.sign_exponent,
                             p.bundle.psi_sign, rel_tol=rel_tol)
        from .arith import expi
        ph = expi(term.phase, sign=p.bundle.psi_sign)
        label = chain_label(term.chain) + ":" + ",".join(f"{r.w}/{r.d}" for r in term.reps)
        rows.append(_row(label, ph * inner.value, inner.terms))
        tail += inner.tail
    return _combine(rows, tail)
