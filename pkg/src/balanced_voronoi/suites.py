"""Verification suites behind the ``verify`` command.

Each runner takes a :class:`RunConfig` and returns a :class:`SuiteResult`:
a JSON-ready report, CSV plot rows ``(x, value, tail_bound)`` and the first
failing instance (``None`` when every assertion holds).  Reports carry no
timing or cache-status fields, so equal configs give byte-equal reports.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from sympy import primerange

from .arith import ZetaParam, psi_R, totient
from .collapse import collapse_diagnostic, convention_search
from .engine import (
    ConventionBundle,
    FormulaParams,
    lhs_balanced,
    opened_rhs,
    ordinary_voronoi_sides,
    rhs_balanced,
)
from .hankel import (
    LogGaussianWeight,
    TestWeight,
    bessel_dual_holomorphic,
    divisor_gamma,
    dual_weight,
    gamma_factor,
    holomorphic_gamma,
    mellin,
    mellin_of_samples,
    sample_points,
    sym2_holomorphic_gamma,
)
from .kloosterman import KlConvention, SignExponent, classical_kl, hyper_kl, kloosterman_table
from .probe import functional_equation_probe, zeta_squared_completed
from .torus import TorusChain, count_chains, enumerate_chains
from .whittaker import (
    divisor_coeffs,
    divisor_provider,
    gl3_hecke_defect,
    hecke_verify,
    sym2_provider,
    tau_coeffs,
    tau_provider,
)

SUITES = ("exact-collapse", "kl-properties", "torus-counts", "voronoi-gl2", "balanced-gl3",
          "convention-search", "all-primary")
PROVIDERS = ("divisor", "tau-delta", "sym2-delta")
COLLAPSE_TOL = 1e-9
VORONOI_TOL = 1e-5
BALANCED_TOL = 1e-3
PROBE_TOL = 1e-4
HANKEL_TOL = 1e-7
BESSEL_TOL = 1e-6


class ConfigError(ValueError):
    """Invalid run configuration (usage error)."""


# --------------------------------------------------------------------------- #
# persisted conventions

DEFAULTS_FILE = "conventions.json"


def load_conventions(path: str | Path | None = None) -> dict:
    """The persisted convention defaults: bundle, classical Kloosterman mapping and evidence."""
    if path is None:
        text = resources.files("balanced_voronoi").joinpath("data", DEFAULTS_FILE).read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def default_bundle(path: str | Path | None = None) -> ConventionBundle:
    return ConventionBundle.from_dict(load_conventions(path)["bundle"])


def default_kl_convention(path: str | Path | None = None) -> KlConvention:
    d = load_conventions(path)["kl_convention"]
    return KlConvention(int(d["scale"]), int(d["sign"]))


def conventions_payload(search: dict, grid: list, kl: KlConvention = KlConvention()) -> dict:
    return {"bundle": search["best"], "consistent": search["consistent"],
            "kl_convention": {"scale": kl.scale, "sign": kl.sign},
            "evidence": {"grid": [list(g) for g in grid],
                         "best_max_relative_residual": min(r["max_relative_residual"] for r in search["table"]),
                         "best_max_fitted_relative": min(r["max_fitted_relative"] for r in search["table"])}}


# --------------------------------------------------------------------------- #
# configuration

@dataclass(frozen=True)
class RunConfig:
    suite: str
    N: int | None = None
    L: int | None = None
    M: int | None = None
    c: tuple[int, ...] | None = None
    a: tuple[int, ...] | None = None
    seeds: tuple[int, ...] | None = None
    gamma_max: float | None = None
    precision: float = 1e-13
    threads: int = 1
    provider: str | None = None
    conventions: str | None = None
    out: str = "verify-out"
    cache_dir: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.provider is not None and self.provider not in PROVIDERS:
            raise ConfigError(f"unknown provider {self.provider!r}; choose from {', '.join(PROVIDERS)}")
        if self.c is not None and any(x < 1 for x in self.c):
            raise ConfigError("moduli must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0 < self.precision < 1:
            raise ConfigError("precision must lie in (0, 1)")
        if self.gamma_max is not None and self.gamma_max < 1:
            raise ConfigError("gamma-max must be >= 1")
        if self.N is not None or self.L is not None or self.M is not None:
            N, L, M = self.N, self.L, self.M
            if self.suite in ("exact-collapse", "balanced-gl3", "convention-search"):
                if None in (N, L, M):
                    raise ConfigError("--N, --L and --M must be given together")
                try:
                    FormulaParams(N, L, M, ZetaParam.of(1, 1))
                except ValueError as e:
                    raise ConfigError(str(e)) from None
            elif N is not None and N < 2:
                raise ConfigError("N must be >= 2")
        for c in self.c or ():
            for a in self.a or (1,):
                if math.gcd(a, c) != 1:
                    raise ConfigError(f"a = {a} is not a unit modulo c = {c}")

    def numeric_dict(self) -> dict:
        """Fields that determine the numbers (threads, paths and cache excluded)."""
        d = asdict(self)
        for k in ("threads", "out", "cache_dir"):
            d.pop(k)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.numeric_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SuiteResult:
    report: dict
    plot: list[tuple[float, float, float]] = field(default_factory=list)
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _schema(**kw) -> dict:
    base = {"params": None, "convention_bundle": None, "lhs": None, "rhs": None, "residual": None,
            "tail_bound": None, "term_counts": None, "per_coset": None, "measured_constants": None}
    base.update(kw)
    return base


def _cx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _pmap(fn: Callable, items: list, threads: int) -> list:
    """Ordered map; instances are independent so the result does not depend on ``threads``."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


def _first_failure(instances: list[dict], name: Callable[[dict], str]) -> str | None:
    for inst in instances:
        if not inst["ok"]:
            return name(inst)
    return None


# --------------------------------------------------------------------------- #
# character algebra

def character_checks(cmax: int = 200) -> dict:
    """psi homomorphism, orthogonality over Z/c and sum_{d | c} phi(d) = c for c <= cmax."""
    hom = orth = 0.0
    count_fail = []
    for c in range(1, cmax + 1):
        xs = [Fraction(k, c) for k in range(c)]
        table = np.array([complex(psi_R(x)) for x in xs])
        # homomorphism on a deterministic sample of pairs
        for i in range(0, c, max(1, c // 17)):
            for j in range(0, c, max(1, c // 13)):
                hom = max(hom, abs(psi_R(xs[i] + xs[j]) - table[i] * table[j]))
        # orthogonality: sum_x psi(k x / c) = c [k = 0 mod c], via the character matrix
        chars = table[(np.outer(np.arange(c), np.arange(c)) % c)]
        gram = chars @ chars.conj().T
        orth = max(orth, float(np.max(np.abs(gram - c * np.eye(c)))))
        if sum(totient(d) for d in range(1, c + 1) if c % d == 0) != c:
            count_fail.append(c)
    return {"homomorphism": float(hom), "orthogonality": float(orth), "coset_count_failures": count_fail,
            "ok": hom <= 1e-12 and orth <= 1e-12 * max(1, cmax) and not count_fail}


# --------------------------------------------------------------------------- #
# torus counts

def _torus_instance(N: int, c: int) -> dict:
    chains = enumerate_chains(N, ZetaParam.of(1, c))
    n = len(chains)
    distinct = len({t.levels for t in chains})
    expected = count_chains(N, ZetaParam.of(1, c))
    return {"N": N, "c": c, "count": n, "expected": expected, "duplicates": n - distinct,
            "ok": n == expected and distinct == n}


def torus_sweep(cmax: int = 10**4, nmax: int = 6, max_primes: int = 3) -> dict:
    from .arith import factor_small

    worst = None
    checked = 0
    for c in range(2, cmax + 1):
        if len(factor_small(c)) > max_primes:
            continue
        for N in range(2, nmax + 1):
            inst = _torus_instance(N, c)
            checked += 1
            if not inst["ok"] and worst is None:
                worst = inst
    return {"checked": checked, "first_failure": worst, "ok": worst is None}


def run_torus_counts(cfg: RunConfig) -> SuiteResult:
    Ns = (cfg.N,) if cfg.N else (2, 3, 4, 5, 6)
    cs = cfg.c or (12,)
    instances = [_torus_instance(N, c) for N in Ns for c in cs]
    for inst in instances:
        if len(instances) == 1:
            inst["chains"] = [repr(t.levels) for t in enumerate_chains(inst["N"], ZetaParam.of(1, inst["c"]))]
    worst = instances[0]
    report = _schema(params={"N": list(Ns), "c": list(cs)},
                     term_counts={f"N={i['N']},c={i['c']}": i["count"] for i in instances},
                     residual=max(abs(i["count"] - i["expected"]) for i in instances),
                     per_coset=worst.get("chains"), instances=instances)
    plot = [(float(i["c"]), float(i["count"]), 0.0) for i in instances]
    fail = _first_failure(instances, lambda i: f"N={i['N']} c={i['c']}: {i['count']} chains, "
                                                f"expected {i['expected']}, {i['duplicates']} duplicates")
    return SuiteResult(report, plot, fail)


# --------------------------------------------------------------------------- #
# Kloosterman properties

def prime_chain(p: int) -> TorusChain:
    """The rank-3 chain at a single prime p with middle level 1."""
    return TorusChain(3, ((p, 1),), ((1,),))


def kl_crosscheck(pmax: int = 31, kl: KlConvention = KlConvention()) -> dict:
    """hyper_kl(3, a / p^scale, chain) against S(1, sign * a; p) for every residue a mod p."""
    worst, where = 0.0, None
    rows = []
    for p in primerange(2, pmax + 1):
        t = prime_chain(p)
        err_p = 0.0
        for a in range(p):
            got = hyper_kl(3, Fraction(a, p**kl.scale), t, SignExponent.RANK)
            ref = classical_kl(1, kl.sign * a, p)
            err = abs(got - ref)
            err_p = max(err_p, err)
            if err > worst:
                worst, where = err, (int(p), a)
        rows.append((int(p), err_p))
    return {"max_error": worst, "worst": where, "per_prime": rows, "ok": worst <= 1e-10}


def weil_check(pmax: int = 200) -> dict:
    ratios = []
    for p in primerange(2, pmax + 1):
        T = kloosterman_table(int(p))[1:, 1:]
        ratios.append((int(p), float(np.max(np.abs(T)) / (2 * math.sqrt(p)))))
    worst = max(r for _, r in ratios)
    return {"max_ratio": worst, "per_prime": ratios, "ok": worst <= 1 + 1e-12}


def run_kl_properties(cfg: RunConfig) -> SuiteResult:
    kl = default_kl_convention(cfg.conventions)
    pmax = max(cfg.c) if cfg.c else 31
    cross = kl_crosscheck(pmax, kl)
    weil = weil_check(max(200, pmax))
    report = _schema(params={"pmax_crosscheck": pmax, "pmax_weil": max(200, pmax),
                             "kl_convention": {"scale": kl.scale, "sign": kl.sign}},
                     residual=cross["max_error"], crosscheck=cross, weil=weil)
    plot = [(float(p), r, 0.0) for p, r in weil["per_prime"]]
    fail = None
    if not cross["ok"]:
        fail = f"hyper_kl vs classical at (p, a) = {cross['worst']}: error {cross['max_error']:.3e}"
    elif not weil["ok"]:
        fail = f"Weil bound ratio {weil['max_ratio']:.6f} > 1"
    return SuiteResult(report, plot, fail)


# --------------------------------------------------------------------------- #
# exact collapse

def _collapse_job(args) -> dict:
    N, L, M, c, a, bundle, gamma_max, seeds = args
    p = FormulaParams(N, L, M, ZetaParam.of(a, c), ConventionBundle.from_dict(bundle), gamma_max=gamma_max)
    rep = collapse_diagnostic(p, seeds)
    d = rep.as_dict()
    d["ok"] = rep.passed
    return d


def run_exact_collapse(cfg: RunConfig) -> SuiteResult:
    conv = load_conventions(cfg.conventions)
    bundle = conv["bundle"]
    if cfg.N is not None:
        grid = [(cfg.N, cfg.L, cfg.M, c) for c in (cfg.c or (2, 3))]
    else:
        grid = [(3, 2, 3, c) for c in (cfg.c or (2, 3, 4, 5, 6, 9))] + \
               [(4, 3, 3, c) for c in (cfg.c or (2, 3, 4))]
    seeds = tuple(cfg.seeds or range(1, 11))
    gmax = cfg.gamma_max or 1.0
    jobs = [(N, L, M, c, a, bundle, gmax, seeds) for N, L, M, c in grid for a in (cfg.a or (1,))
            if math.gcd(a, c) == 1]
    instances = _pmap(_collapse_job, jobs, cfg.threads)
    worst = max(instances, key=lambda d: d["relative_residual"])
    report = _schema(params=worst["params"], convention_bundle=bundle,
                     lhs=worst["opened"][0], rhs=worst["collapsed"][0], residual=worst["residual"],
                     tail_bound=0.0, term_counts=worst["term_counts"], per_coset=worst["per_coset"],
                     measured_constants=worst["measured_constants"], instances=instances,
                     conventions_consistent=conv["consistent"])
    if any(not d["ok"] for d in instances):
        report["falsification"] = {
            "best_bundle": bundle,
            "search_best_max_relative_residual": conv["evidence"]["best_max_relative_residual"],
            "residuals": [{"N": d["params"]["N"], "c": d["params"]["c"], "a": d["params"]["a"],
                           "residual": d["residual"], "relative_residual": d["relative_residual"],
                           "pairs_residual": d["pairs_residual"], "fitted_residual": d["fitted_residual"],
                           "measured_constants": d["measured_constants"]}
                          for d in instances],
        }
    plot = [(float(d["params"]["c"]), d["residual"], 0.0) for d in instances]
    fail = _first_failure(instances, lambda d: f"N={d['params']['N']} L={d['params']['L']} "
                                               f"M={d['params']['M']} c={d['params']['c']} a={d['params']['a']}: "
                                               f"residual {d['residual']:.3e} > {COLLAPSE_TOL:g}")
    return SuiteResult(report, plot, fail)


def search_grid(cfg: RunConfig) -> list[tuple[int, int, int, int, int]]:
    N, L, M = (cfg.N, cfg.L, cfg.M) if cfg.N is not None else (3, 2, 3)
    return [(N, L, M, c, a) for c in (cfg.c or (2, 3, 5)) for a in (cfg.a or (1,)) if math.gcd(a, c) == 1]


def _search_job(args) -> dict:
    grid, seeds, gamma_max = args
    return convention_search(grid, seeds, gamma_max).as_dict()


def run_convention_search(cfg: RunConfig) -> SuiteResult:
    grid = search_grid(cfg)
    res = _search_job((grid, tuple(cfg.seeds or (1,)), cfg.gamma_max or 1.0))
    payload = conventions_payload(res, grid)
    report = _schema(params={"grid": [list(g) for g in grid]}, convention_bundle=res["best"],
                     residual=payload["evidence"]["best_max_relative_residual"],
                     search=res, conventions=payload)
    plot = [(float(i), r["max_relative_residual"], 0.0) for i, r in enumerate(res["table"])]
    fail = None if res["consistent"] else (
        f"no convention bundle is consistent; best {res['best']} has max relative residual "
        f"{payload['evidence']['best_max_relative_residual']:.4g}")
    return SuiteResult(report, plot, fail)


# --------------------------------------------------------------------------- #
# numeric Voronoi suites

GL2_WEIGHT = LogGaussianWeight(x0=2.0, h=0.6)
GL3_WEIGHT = LogGaussianWeight(x0=30.0, h=0.4)


def _dual(weight, g, cache_dir):
    if cache_dir is None:
        return dual_weight(weight, g)
    from .cache import cached_dual_weight

    return cached_dual_weight(weight, g, cache_dir)[0]


def _provider(name: str):
    return {"divisor": divisor_provider, "tau-delta": tau_provider, "sym2-delta": sym2_provider}[name]()


def _gamma_of(name: str, psi_sign: int):
    g = {"divisor": divisor_gamma, "tau-delta": lambda: holomorphic_gamma(12),
         "sym2-delta": lambda: sym2_holomorphic_gamma(12)}[name]()
    return g.with_psi_sign(-psi_sign)


def probe_for(name: str) -> dict:
    """Functional-equation probe of the gamma data attached to a provider."""
    if name == "divisor":
        rep = functional_equation_probe(divisor_coeffs, divisor_gamma(), 2, completed=zeta_squared_completed,
                                        poles=(0, 1))
    elif name == "tau-delta":
        rep = functional_equation_probe(lambda n: tau_coeffs(n, 512) / n**5.5, holomorphic_gamma(12), 2)
    else:
        sp = sym2_provider()
        rep = functional_equation_probe(lambda n: sp.coefficient((n, 1)), sym2_holomorphic_gamma(12), 3)
    d = rep.as_dict()
    d["ok"] = rep.max_defect <= PROBE_TOL
    return d


def _gl2_job(args) -> dict:
    name, c, a, psi_sign, rel_tol, cache_dir = args
    provider = _provider(name)
    dw = _dual(GL2_WEIGHT, _gamma_of(name, psi_sign), cache_dir)
    lhs, rhs = ordinary_voronoi_sides(2, ZetaParam.of(a, c), provider, GL2_WEIGHT, dw,
                                      psi_sign=psi_sign, rel_tol=rel_tol)
    gap = abs(lhs.value - rhs.value) / abs(lhs.value)
    tail = rhs.tail / abs(lhs.value)
    return {"params": {"N": 2, "c": c, "a": a, "provider": name, "weight": GL2_WEIGHT.key()},
            "lhs": _cx(lhs.value), "rhs": _cx(rhs.value), "residual": gap, "tail_bound": tail,
            "term_counts": {"lhs": lhs.terms, "rhs": rhs.terms}, "per_coset": rhs.per_coset,
            "ok": gap <= VORONOI_TOL and tail <= VORONOI_TOL}


def gl2_convergence(name: str, c: int, a: int, psi_sign: int, cache_dir=None,
                    gammas=(0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2)) -> list[tuple[float, float, float]]:
    """|LHS - RHS| / |LHS| and the tail estimate against the truncation Gamma_max of the dual sum."""
    from .engine import ordinary_lhs, ordinary_rhs, polar_term

    provider = _provider(name)
    dw = _dual(GL2_WEIGHT, _gamma_of(name, psi_sign), cache_dir)
    z = ZetaParam.of(a, c)
    lhs = ordinary_lhs(z, provider, GL2_WEIGHT, psi_sign).value
    main = polar_term(provider, GL2_WEIGHT, z)
    rows = []
    for G in gammas:
        r = ordinary_rhs(2, z, provider, dw, psi_sign=psi_sign, gamma_max=G)
        rows.append((G, abs(lhs - r.value - main) / abs(lhs), r.tail / abs(lhs)))
    return rows


def run_voronoi_gl2(cfg: RunConfig) -> SuiteResult:
    name = cfg.provider or "divisor"
    probe = probe_for(name)
    psi_sign = default_bundle(cfg.conventions).psi_sign
    cs = cfg.c or (1, 5)
    jobs = [(name, c, (cfg.a or (2,))[0] % c if c > 1 else 0, psi_sign, cfg.precision, cfg.cache_dir)
            for c in cs]
    jobs = [(n, c, a if math.gcd(a, c) == 1 else 1, s, r, d) for n, c, a, s, r, d in jobs]
    instances = _pmap(_gl2_job, jobs, cfg.threads) if probe["ok"] else []
    worst = max(instances, key=lambda d: d["residual"]) if instances else {}
    report = _schema(params=worst.get("params"), convention_bundle={"psi_sign": psi_sign},
                     lhs=worst.get("lhs"), rhs=worst.get("rhs"), residual=worst.get("residual"),
                     tail_bound=worst.get("tail_bound"), term_counts=worst.get("term_counts"),
                     per_coset=worst.get("per_coset"), probe=probe, instances=instances)
    plot = []
    if probe["ok"]:
        c = max(cs)
        plot = gl2_convergence(name, c, jobs[cs.index(c)][2], psi_sign, cfg.cache_dir)
    if not probe["ok"]:
        return SuiteResult(report, plot, f"functional-equation probe defect {probe['max_defect']:.3e}")
    fail = _first_failure(instances, lambda d: f"c={d['params']['c']} a={d['params']['a']}: relative gap "
                                               f"{d['residual']:.3e}, tail {d['tail_bound']:.3e}")
    return SuiteResult(report, plot, fail)


def hecke_check_sym2() -> dict:
    sp = sym2_provider()
    rep = hecke_verify(lambda n: sp.coefficient((n, 1)), nmax=120, p_recursion=gl3_hecke_defect(sp),
                       primes=list(primerange(2, 14)))
    return {"checks": rep.checks, "max_defect": rep.max_defect, "ok": rep.ok}


def _gl3_job(args) -> dict:
    N, L, M, c, a, bundle, name, rel_tol, cache_dir = args
    b = ConventionBundle.from_dict(bundle)
    p = FormulaParams(N, L, M, ZetaParam.of(a, c), b, tail_tol=rel_tol)
    provider = _provider(name)
    dw = _dual(GL3_WEIGHT, _gamma_of(name, b.psi_sign), cache_dir)
    lhs = lhs_balanced(p, provider, GL3_WEIGHT)
    rhs = rhs_balanced(p, provider, dw)
    opened = opened_rhs(p, provider, dw)
    gap = abs(lhs.value - rhs.value) / abs(lhs.value)
    return {"params": {**p.as_dict(), "provider": name, "weight": GL3_WEIGHT.key()},
            "lhs": _cx(lhs.value), "rhs": _cx(rhs.value), "opened": _cx(opened.value),
            "residual": gap, "opened_residual": abs(lhs.value - opened.value) / abs(lhs.value),
            "tail_bound": rhs.tail / abs(lhs.value), "opened_tail_bound": opened.tail / abs(lhs.value),
            "term_counts": {"lhs": lhs.terms, "rhs": rhs.terms, "opened": opened.terms},
            "per_coset": rhs.per_coset, "ok": gap <= BALANCED_TOL}


def run_balanced_gl3(cfg: RunConfig) -> SuiteResult:
    name = cfg.provider or "sym2-delta"
    N, L, M = (cfg.N, cfg.L, cfg.M) if cfg.N is not None else (3, 2, 3)
    want = {"sym2-delta": 3, "tau-delta": 2, "divisor": 2}[name]
    if want != N:
        raise ConfigError(f"provider {name} has rank {want}, not N = {N}")
    bundle = load_conventions(cfg.conventions)["bundle"]
    hecke = hecke_check_sym2() if name == "sym2-delta" else {"ok": True}
    probe = probe_for(name)
    cs = cfg.c or (1, 2)
    jobs = [(N, L, M, c, next(a for a in (cfg.a or (1,)) + (1,) if math.gcd(a, c) == 1), bundle, name,
             cfg.precision, cfg.cache_dir) for c in cs]
    instances = _pmap(_gl3_job, jobs, cfg.threads) if hecke["ok"] and probe["ok"] else []
    worst = max(instances, key=lambda d: d["residual"]) if instances else {}
    report = _schema(params=worst.get("params"), convention_bundle=bundle, lhs=worst.get("lhs"),
                     rhs=worst.get("rhs"), residual=worst.get("residual"), tail_bound=worst.get("tail_bound"),
                     term_counts=worst.get("term_counts"), per_coset=worst.get("per_coset"),
                     hecke=hecke, probe=probe, instances=instances)
    plot = [(float(d["params"]["c"]), d["residual"], d["tail_bound"]) for d in instances]
    if not hecke["ok"]:
        return SuiteResult(report, plot, f"Hecke relations fail: defect {hecke['max_defect']:.3e}")
    if not probe["ok"]:
        return SuiteResult(report, plot, f"functional-equation probe defect {probe['max_defect']:.3e}")
    fail = _first_failure(instances, lambda d: f"c={d['params']['c']} a={d['params']['a']}: relative gap "
                                               f"{d['residual']:.3e} > {BALANCED_TOL:g} (opened form "
                                               f"{d['opened_residual']:.1e})")
    return SuiteResult(report, plot, fail)


# --------------------------------------------------------------------------- #
# Hankel checks

def hankel_checks(points: int = 10, shift: float = 0.25) -> dict:
    """Defining relation at probe points, contour independence and the J_{k-1} kernel."""
    w = GL2_WEIGHT
    rel = shift_err = 0.0
    ys = np.array([0.05, 0.2, 1.0, 3.0, -0.05, -0.2, -1.0, -3.0])
    for g in (divisor_gamma(), holomorphic_gamma(12), sym2_holomorphic_gamma(12)):
        dw = dual_weight(w, g)
        for s in sample_points(dw, points):
            u = s - (g.N - 1) / 2
            for d in (0, 1):
                lhs = mellin_of_samples(dw, u, d)
                rhs = (-1) ** (d * (g.N - 1)) * gamma_factor(s, g, d) * mellin(w, 2 - g.N - u)
                rel = max(rel, abs(lhs - rhs) / abs(rhs))
        base = np.abs(dw(ys)).max()
        for dsig in (-shift, shift):
            moved = dual_weight(w, g, sigma=dw.sigma + dsig)
            shift_err = max(shift_err, float(np.abs(moved(ys) - dw(ys)).max() / base))
    tw = TestWeight(2.0, 0.8)
    dw = dual_weight(tw, holomorphic_gamma(12))
    bessel = 0.0
    for y in (0.5, 1.0, 2.0, 4.0, 8.0):
        ref = bessel_dual_holomorphic(tw, 12, y)
        bessel = max(bessel, abs(complex(dw(np.array([-y]))[0]) - ref) / abs(ref))
    return {"defining_relation": float(rel), "contour_shift": shift_err, "bessel_kernel": float(bessel),
            "ok": rel <= HANKEL_TOL and shift_err <= HANKEL_TOL and bessel <= BESSEL_TOL}


# --------------------------------------------------------------------------- #
# all primary

def run_all_primary(cfg: RunConfig) -> SuiteResult:
    parts = {}
    parts["characters"] = character_checks()
    parts["torus"] = torus_sweep()
    subs = [("kl-properties", run_kl_properties), ("exact-collapse", run_exact_collapse),
            ("voronoi-gl2", run_voronoi_gl2), ("balanced-gl3", run_balanced_gl3)]
    fail = None
    if not parts["characters"]["ok"]:
        fail = "character algebra"
    if not parts["torus"]["ok"] and fail is None:
        fail = f"torus counts: {parts['torus']['first_failure']}"
    plot = []
    for name, fn in subs:
        sub = fn(RunConfig(name, precision=cfg.precision, threads=cfg.threads, conventions=cfg.conventions,
                           cache_dir=cfg.cache_dir))
        parts[name] = {"report": sub.report, "ok": sub.ok, "failure": sub.failure}
        if fail is None and sub.failure:
            fail = f"{name}: {sub.failure}"
        if name == "exact-collapse":
            plot = sub.plot
    parts["hankel"] = hankel_checks()
    if fail is None and not parts["hankel"]["ok"]:
        fail = "hankel checks"
    return SuiteResult(_schema(suites=parts), plot, fail)


RUNNERS = {
    "exact-collapse": run_exact_collapse,
    "kl-properties": run_kl_properties,
    "torus-counts": run_torus_counts,
    "voronoi-gl2": run_voronoi_gl2,
    "balanced-gl3": run_balanced_gl3,
    "convention-search": run_convention_search,
    "all-primary": run_all_primary,
}


def run(cfg: RunConfig) -> SuiteResult:
    res = RUNNERS[cfg.suite](cfg)
    res.report = {"suite": cfg.suite, "config": cfg.numeric_dict(), "config_hash": cfg.config_hash(),
                  "ok": res.ok, "first_failure": res.failure, **res.report}
    return res


def write_outputs(cfg: RunConfig, res: SuiteResult) -> tuple[Path, Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rpath = out / f"{cfg.suite}.json"
    rpath.write_text(json.dumps(res.report, sort_keys=True, indent=1, default=_json_default) + "\n")
    ppath = out / f"{cfg.suite}.csv"
    with open(ppath, "w") as fh:
        fh.write(f"# suite={cfg.suite} config={cfg.config_hash()}\n")
        fh.write("x,value,tail_bound\n")
        for x, v, t in res.plot:
            fh.write(f"{x!r},{v!r},{t!r}\n")
    if cfg.suite == "convention-search":
        (out / DEFAULTS_FILE).write_text(json.dumps(res.report["conventions"], sort_keys=True, indent=1) + "\n")
    return rpath, ppath


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")
