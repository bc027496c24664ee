import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from balanced_voronoi.hankel import (
    LogGaussianWeight,
    PrecisionError,
    TestWeight,
    WeightSum,
    bessel_dual_divisor,
    bessel_dual_holomorphic,
    divisor_gamma,
    dual_weight,
    gamma_factor,
    holomorphic_gamma,
    mellin,
    mellin_of_samples,
    sample_points,
    sym2_holomorphic_gamma,
    trivial_gamma,
)


def quad_mellin(w, s):
    """int_0^oo w(y) y^s dy/y by adaptive quadrature in log y."""
    lo, hi = (math.log(x) for x in w.support)

    def part(f):
        return integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]

    re = part(lambda u: float(w(np.array([math.exp(u)]))[0]) * cmath.exp(s * u).real)
    im = part(lambda u: float(w(np.array([math.exp(u)]))[0]) * cmath.exp(s * u).imag)
    return complex(re, im)


def completed_riemann_ratio(s):
    """Gamma_R(s) / Gamma_R(1 - s) with Gamma_R(s) = pi^{-s/2} Gamma(s/2)."""
    gr = lambda z: mpmath.pi ** (-z / 2) * mpmath.gamma(z / 2)  # noqa: E731
    return complex(gr(s) / gr(1 - s))


@pytest.mark.parametrize("s", [0.7, 1.5 + 2j, -0.3 + 5j])
def test_loggauss_mellin_against_quadrature(s):
    w = LogGaussianWeight(x0=2.0, h=0.6)
    assert abs(mellin(w, s) - quad_mellin(w, s)) <= 1e-11 * abs(mellin(w, s))


@pytest.mark.parametrize("s", [0.5, 1.0 + 3j, 2.0 - 7j])
def test_bump_mellin_against_quadrature(s):
    w = TestWeight(x0=1.5, h=0.7)
    assert abs(mellin(w, s) - quad_mellin(w, s)) <= 1e-10 * max(1.0, abs(mellin(w, s)))


def test_mellin_line_matches_pointwise():
    for w in (TestWeight(1.3, 0.9), LogGaussianWeight(3.0, 0.5)):
        line = w.mellin_line(0.4, 0.1, 20)
        for k in (-20, -7, 0, 13, 20):
            assert abs(line[k + 20] - mellin(w, 0.4 + 1j * k * 0.1)) <= 1e-10 * max(1.0, abs(line[k + 20]))


def test_weight_sum_is_linear():
    a, b = TestWeight(1.0, 0.5), LogGaussianWeight(2.0, 0.4)
    s = 0.8 + 1j
    assert abs(mellin(WeightSum((a, b)), s) - mellin(a, s) - mellin(b, s)) <= 1e-12


def test_scaling_shifts_mellin():
    w = LogGaussianWeight(1.5, 0.5)
    s = 0.3 + 2j
    assert abs(mellin(w.scaled(3.0), s) - 3.0**s * mellin(w, s)) <= 1e-12 * abs(mellin(w, s))


@pytest.mark.parametrize("s", [0.3 + 1j, 0.5 + 4j, 0.8 - 2.5j, 2.2 + 0.5j])
def test_riemann_gamma_factor_against_mpmath(s):
    assert abs(gamma_factor(s, trivial_gamma()) - completed_riemann_ratio(s)) <= 1e-12 * abs(completed_riemann_ratio(s))


@given(st.floats(0.05, 0.95), st.floats(-20, 20), st.integers(0, 1))
def test_gamma_factor_reflection(sig, t, delta):
    # gamma(1 - s) gamma(s) = eps^2 for self-dual data; the sign drops out of the product of both
    for g in (divisor_gamma(), holomorphic_gamma(12)):
        s = complex(sig, t)
        prod = gamma_factor(s, g, delta) * gamma_factor(1 - s, g, delta)
        assert abs(prod - g.epsilon(delta) ** 2) <= 1e-9


def test_gamma_factor_refuses_poles():
    with pytest.raises(PrecisionError):
        gamma_factor(0.0, divisor_gamma())


def test_gamma_ratio_zero_is_not_nan():
    # Gamma_R(1 - s) has a pole at s = 1: the ratio vanishes there
    assert gamma_factor(1.0, divisor_gamma()) == 0


@pytest.fixture(scope="module")
def duals():
    w = LogGaussianWeight(2.0, 0.6)
    return w, {g.name: (g, dual_weight(w, g)) for g in (divisor_gamma(), holomorphic_gamma(12),
                                                        sym2_holomorphic_gamma(12))}


@pytest.mark.parametrize("name", ["zeta^2", "D_12", "sym2 D_12"])
def test_defining_relation(duals, name):
    w, table = duals
    g, dw = table[name]
    for s in sample_points(dw, 10):
        u = s - (g.N - 1) / 2
        for d in (0, 1):
            lhs = mellin_of_samples(dw, u, d)
            rhs = (-1) ** (d * (g.N - 1)) * gamma_factor(s, g, d) * mellin(w, 2 - g.N - u)
            assert abs(lhs - rhs) <= 1e-7 * abs(rhs)


@pytest.mark.parametrize("name", ["zeta^2", "sym2 D_12"])
def test_contour_independence(duals, name):
    w, table = duals
    g, dw = table[name]
    ys = np.array([0.03, 0.3, 1.0, 4.0, -0.03, -0.3, -1.0, -4.0])
    base = np.abs(dw(ys)).max()
    for shift in (-0.25, 0.25):
        moved = dual_weight(w, g, sigma=dw.sigma + shift)
        assert np.abs(moved(ys) - dw(ys)).max() <= 1e-7 * base


def test_contour_left_of_pole_is_refused():
    with pytest.raises(PrecisionError):
        dual_weight(LogGaussianWeight(2.0, 0.6), divisor_gamma(), sigma=0.05)


def test_interpolant_agrees_with_direct_sum(duals):
    _, table = duals
    _, dw = table["sym2 D_12"]
    assert dw.interp_error <= 1e-9
    ys = np.array([0.011, 0.37, 2.9, -0.011, -0.37, -2.9])
    assert np.abs(dw(ys) - dw.direct(ys)).max() <= 1e-9 * np.abs(dw.direct(ys)).max()


def test_decay_certificate_bounds_samples(duals):
    _, table = duals
    _, dw = table["D_12"]
    y = np.array([1.0, 10.0, 100.0])
    assert np.all(np.abs(dw(y)) <= dw.tail_bound(y, 2) * (1 + 1e-12))


@pytest.mark.parametrize("y", [0.5, 1.0, 2.0, 4.0, 8.0])
def test_holomorphic_kernel_is_bessel_j(y):
    w = TestWeight(2.0, 0.8)
    dw = dual_weight(w, holomorphic_gamma(12))
    ref = bessel_dual_holomorphic(w, 12, y)
    assert abs(complex(dw(np.array([-y]))[0]) - ref) <= 1e-6 * abs(ref)


@pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
def test_divisor_kernel_is_bessel_y_and_k(y):
    w = TestWeight(2.0, 0.8)
    dw = dual_weight(w, divisor_gamma())
    got = dw(np.array([-y, y]))
    ref_y, ref_k = bessel_dual_divisor(w, y), bessel_dual_divisor(w, -y)
    assert abs(got[0] - ref_y) <= 1e-6 * abs(ref_y)
    assert abs(got[1] - ref_k) <= 1e-6 * abs(ref_y)


def test_sample_points_are_seeded():
    assert sample_points(None, 5, seed=3) == sample_points(None, 5, seed=3)
    assert all(1.1 <= s.real <= 1.4 for s in sample_points(None, 10))
