"""Approximate-functional-equation check of archimedean gamma data.

For L(s) = sum a_n n^{-s} with completed Lambda(s) = L_inf(s) L(s) and
Lambda(s) = eps Lambda~(1 - s), the smoothed split with G(w) = exp(w^2 / A) is

    Lambda(s) = sum a_n n^{-s} Phi(s, n/X) + eps sum conj(a_n) n^{s-1} Phi~(1-s, n X) - P(s, X),

    Phi(s, y) = (1/2 pi i) int_(c) L_inf(s+w) G(w) y^{-w} dw/w,

P collecting residues at the poles of Lambda(s+w).  The right side does not
depend on X exactly when the gamma data, root number and coefficients are
consistent, so the spread over two values of X measures the defect.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from .hankel import GammaData

DEFAULT_POINTS = (0.5 + 3j, 0.5 + 5j, 0.5 + 7j)


class InsufficientCoefficients(RuntimeError):
    pass


@dataclass
class ProbeReport:
    points: list[complex]
    values: list[complex]
    defects: list[float]
    oracle_defects: list[float] = field(default_factory=list)

    @property
    def max_defect(self) -> float:
        return max(self.defects)

    def as_dict(self) -> dict:
        return {"points": [[z.real, z.imag] for z in self.points],
                "values": [[z.real, z.imag] for z in self.values],
                "defects": self.defects, "oracle_defects": self.oracle_defects,
                "max_defect": self.max_defect}


SMOOTH_A = 12.0


def _phi(g: GammaData, s: complex, ys: np.ndarray, c: float = 2.0, T: float = 32.0, dt: float = 0.02,
         dual: bool = False) -> np.ndarray:
    t = np.arange(-T, T + dt / 2, dt)
    w = c + 1j * t
    gg = g.dual() if dual else g
    logL = np.array([gg.log_L_inf(s + wi) for wi in w])
    base = np.exp(logL + w * w / SMOOTH_A) / w  # L_inf(s+w) G(w) / w
    # (1/2 pi i) int ... dw = (1/2 pi) int ... dt
    ker = np.exp(-np.outer(np.log(ys), w))
    return (ker * base[None, :]).sum(axis=1) * dt / (2 * math.pi)


def _smoothed(coeffs: Sequence[complex], g: GammaData, s: complex, X: float, dual: bool) -> complex:
    n = np.arange(1, len(coeffs) + 1, dtype=float)
    phi = _phi(g, s, n / X, dual=dual)
    terms = np.asarray(coeffs) * n ** (-s) * phi
    if abs(terms[-1]) > 1e-16 * max(1.0, float(np.abs(terms).max())):
        raise InsufficientCoefficients(f"tail term {abs(terms[-1]):.2e} with {len(coeffs)} coefficients")
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def _polar(completed: Callable[[complex], complex], poles: Sequence[complex], s: complex, X: float,
           radius: float = 0.05, nodes: int = 64) -> complex:
    """Residues of Lambda(s+w) G(w) X^w / w at w = rho - s, by the trapezoid rule on circles."""
    total = 0j
    for rho in poles:
        w0 = rho - s
        acc = 0j
        for k in range(nodes):
            e = cmath.exp(2j * math.pi * k / nodes)
            w = w0 + radius * e
            acc += completed(s + w) * cmath.exp(w * w / SMOOTH_A) * X**w / w * radius * e
        total += acc / nodes
    return total


def functional_equation_probe(coeffs: Callable[[int], complex], g: GammaData, degree: int | None = None,
                              points: Sequence[complex] = DEFAULT_POINTS, X: tuple[float, float] = (1.0, 1.4),
                              nmax: int = 400, completed: Callable[[complex], complex] | None = None,
                              poles: Sequence[complex] = ()) -> ProbeReport:
    """Relative spread of the smoothed two-sided expression over two values of X.

    ``completed`` (with ``poles``) supplies Lambda near its poles for
    non-cuspidal data; it is also used as an external reference for the value.
    """
    if degree is not None and degree != g.N:
        raise ValueError(f"degree {degree} does not match gamma data of degree {g.N}")
    a = [complex(coeffs(n)) for n in range(1, nmax + 1)]
    a_dual = [z.conjugate() for z in a]
    eps = complex(g.epsilon(0))
    vals, defects, oracle = [], [], []
    for s in points:
        got = []
        for x in X:
            v = _smoothed(a, g, s, x, dual=False) + eps * _smoothed(a_dual, g, 1 - s, 1 / x, dual=True)
            if poles:
                v -= _polar(completed, poles, s, x)
            got.append(v)
        vals.append(got[0])
        defects.append(abs(got[0] - got[1]) / max(abs(got[0]), abs(got[1]), 1e-300))
        if completed is not None:
            ref = completed(s)
            oracle.append(abs(got[0] - ref) / abs(ref))
    return ProbeReport(list(points), vals, defects, oracle)


def riemann_completed(s: complex) -> complex:
    return complex(mpmath.pi ** (-s / 2) * mpmath.gamma(s / 2) * mpmath.zeta(s))


def zeta_squared_completed(s: complex) -> complex:
    return riemann_completed(s) ** 2
