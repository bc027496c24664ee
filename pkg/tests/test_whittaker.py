import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from balanced_voronoi.whittaker import (
    FourierTable,
    cs_whittaker,
    divisor_coeffs,
    divisor_provider,
    gl3_hecke_defect,
    hecke_verify,
    lam_of_m,
    schur,
    sym2_provider,
    tau_coeffs,
    tau_provider,
    tau_satake,
)

# coefficients of q prod (1 - q^n)^24 by integer polynomial multiplication, frozen
FROZEN_TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920, 534612, -370944, -577738]

partitions = st.lists(st.integers(0, 4), min_size=3, max_size=3).map(lambda v: tuple(sorted(v, reverse=True)))
params = st.lists(st.complex_numbers(min_magnitude=0.3, max_magnitude=2.0), min_size=3, max_size=3)


def bialternant(lam, alpha):
    """s_lam = det(a_i^{lam_j + n - j}) / det(a_i^{n - j})."""
    n = len(alpha)
    num = np.array([[a ** (lam[j] + n - 1 - j) for j in range(n)] for a in alpha])
    den = np.array([[a ** (n - 1 - j) for j in range(n)] for a in alpha])
    return np.linalg.det(num) / np.linalg.det(den)


def monomial_sum(lam, alpha):
    """s_lam as a sum over semistandard tableaux, for two-row-or-fewer shapes in 2 variables."""
    a, b = alpha
    l1, l2 = lam
    return (a * b) ** l2 * sum(a**k * b ** (l1 - l2 - k) for k in range(l1 - l2 + 1))


@given(partitions, params)
def test_schur_matches_bialternant(lam, alpha):
    alpha = [a + 0.1 * i for i, a in enumerate(alpha)]  # keep the Vandermonde away from zero
    ref = bialternant(lam, alpha)
    assert abs(schur(lam, alpha) - ref) <= 1e-8 * max(1.0, abs(ref))


@given(st.integers(0, 6), st.integers(0, 6), st.complex_numbers(min_magnitude=0.5, max_magnitude=1.5),
       st.complex_numbers(min_magnitude=0.5, max_magnitude=1.5))
def test_schur_gl2_tableaux(l1, l2, a, b):
    lam = (max(l1, l2), min(l1, l2))
    ref = monomial_sum(lam, (a, b))
    assert abs(schur(lam, (a, b)) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_schur_negative_parts_shift_by_determinant():
    alpha = (0.7 + 0.2j, 1.1 - 0.3j, 0.9)
    lam = (1, 0, -2)
    shifted = tuple(x + 2 for x in lam)
    assert abs(schur(lam, alpha) * np.prod(alpha) ** 2 - schur(shifted, alpha)) <= 1e-12


def test_non_dominant_is_zero():
    assert cs_whittaker((1, 1), (0, 1), 5) == 0
    assert schur((0, 1), (1.0, 2.0)) == 0


def test_lam_of_m():
    assert lam_of_m([2, 1]) == (3, 1, 0)
    assert lam_of_m([0]) == (0, 0)


def test_tau_frozen():
    assert [tau_coeffs(n) for n in range(1, 14)] == FROZEN_TAU


@pytest.mark.parametrize("n", [2, 3, 4, 8, 9, 12, 25, 27, 100])
def test_tau_provider_coefficients(n):
    # Hecke-normalized A(n) = tau(n) / n^{11/2}
    got = tau_provider().coefficient((n,))
    assert abs(got - tau_coeffs(n) / n**5.5) <= 1e-12


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13])
def test_tau_satake_unitary(p):
    a, b = tau_satake(p)
    assert abs(abs(a) - 1) <= 1e-12 and abs(abs(b) - 1) <= 1e-12
    assert abs(a + b - tau_coeffs(p) / p**5.5) <= 1e-12


@given(st.integers(1, 2000))
def test_divisor_provider_is_divisor_function(n):
    assert abs(divisor_provider().coefficient((n,)) - divisor_coeffs(n)) <= 1e-9


def test_divisor_function_values():
    assert [divisor_coeffs(n) for n in (1, 2, 6, 12, 36, 97)] == [1, 2, 4, 6, 9, 2]


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_sym2_first_coefficient(p):
    # A(p, 1) = alpha^2 + alpha beta + beta^2 = lambda(p)^2 - 1
    lam = tau_coeffs(p) / p**5.5
    assert abs(sym2_provider().coefficient((p, 1)) - (lam * lam - 1)) <= 1e-12


def test_sym2_is_self_dual():
    sp = sym2_provider()
    for m in itertools.product((1, 2, 3, 4), repeat=2):
        assert abs(sp.coefficient(m) - sp.coefficient(m[::-1]).conjugate()) <= 1e-12


def test_hecke_relations_hold_for_tau_and_sym2():
    assert hecke_verify(lambda n: tau_coeffs(n) / n**5.5, nmax=150).ok
    sp = sym2_provider()
    rep = hecke_verify(lambda n: sp.coefficient((n, 1)), nmax=100, p_recursion=gl3_hecke_defect(sp),
                       primes=[2, 3, 5, 7])
    assert rep.ok and rep.checks > 100


def test_hecke_verify_detects_corruption():
    def bad(n):
        return tau_coeffs(n) / n**5.5 * (1.001 if n == 6 else 1.0)

    rep = hecke_verify(bad, nmax=50)
    assert not rep.ok and math.prod(rep.worst) == 6


def test_unitarity_guard():
    from balanced_voronoi.whittaker import SatakeProvider

    with pytest.raises(ValueError):
        SatakeProvider(2, lambda p: (2.0, 1.0)).alpha(3)


def test_whittaker_finite_factorizes():
    sp = sym2_provider()
    diag = (Fraction(12), Fraction(1), Fraction(1))
    assert abs(sp.whittaker_finite(diag) - sp.local_whittaker(2, (2, 0, 0)) * sp.local_whittaker(3, (1, 0, 0))) <= 1e-14


def test_dual_whittaker_is_contragredient():
    sp = tau_provider()
    # W~(diag(p^a, 1)) = W(diag(1, p^-a)) on the contragredient, equal to W for a self-dual form
    for a in range(4):
        assert abs(sp.wtilde_local(5, (a, 0)) - sp.dual().local_whittaker(5, (a, 0))) <= 1e-12


def test_table_roundtrip(tmp_path):
    t = FourierTable.tau(40)
    t.save(tmp_path / "tau.csv")
    back = FourierTable.load(tmp_path / "tau.csv")
    assert back.entries == t.entries and back.source == "tau"
    r = FourierTable.random(3, [(1, 1), (1, 2), (2, 1)])
    r.save(tmp_path / "r.csv")
    assert FourierTable.load(tmp_path / "r.csv").entries == r.entries


def test_table_version_mismatch(tmp_path):
    path = tmp_path / "t.csv"
    FourierTable.tau(5).save(path)
    path.write_text(path.read_text().replace(",tau,1", ",tau,99"))
    with pytest.raises(ValueError):
        FourierTable.load(path)


def test_random_table_is_seeded():
    box = [(i, j) for i in range(1, 4) for j in range(1, 4)]
    assert FourierTable.random(7, box).entries == FourierTable.random(7, box).entries
    assert FourierTable.random(7, box).entries != FourierTable.random(8, box).entries
