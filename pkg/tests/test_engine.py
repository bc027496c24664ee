from fractions import Fraction

import numpy as np
import pytest

from balanced_voronoi.arith import ZetaParam
from balanced_voronoi.engine import (
    ConventionBundle,
    FormulaParams,
    KlOrientation,
    expand_open_klM,
    finite_whittaker,
    kl_argument,
    lhs_balanced,
    opened_rhs,
    ordinary_lhs,
    ordinary_rhs,
    ordinary_voronoi_sides,
    polar_term,
    rhs_balanced,
)
from balanced_voronoi.hankel import dual_weight, holomorphic_gamma
from balanced_voronoi.kloosterman import SignExponent
from balanced_voronoi.suites import GL2_WEIGHT, GL3_WEIGHT, _dual, _gamma_of, _provider
from balanced_voronoi.torus import SplitConvention, count_chains
from balanced_voronoi.whittaker import divisor_coeffs, divisor_provider, tau_coeffs


@pytest.fixture(scope="module")
def divisor_dual():
    return _dual(GL2_WEIGHT, _gamma_of("divisor", 1), None)


@pytest.fixture(scope="module")
def sym2_dual():
    return _dual(GL3_WEIGHT, _gamma_of("sym2-delta", 1), None)


def test_params_validation():
    z = ZetaParam.of(1, 3)
    with pytest.raises(ValueError):
        FormulaParams(3, 2, 2, z)
    with pytest.raises(ValueError):
        FormulaParams(2, 1, 3, z)
    with pytest.raises(ValueError):
        FormulaParams(3, 2, 3, z, gamma_max=0.5)


def test_bundle_roundtrip():
    b = ConventionBundle(SignExponent.AMBIENT, KlOrientation.TWISTED, SplitConvention.HIGH, -1)
    assert ConventionBundle.from_dict(b.as_dict()) == b


def test_finite_whittaker_at_integers_is_hecke_normalized():
    for n in (1, 2, 6, 12, 30):
        assert abs(finite_whittaker(divisor_provider(), Fraction(n)) - divisor_coeffs(n) / n**0.5) <= 1e-12
    assert finite_whittaker(divisor_provider(), Fraction(1, 2)) == 0


def test_ordinary_lhs_against_direct_sum():
    z = ZetaParam.of(2, 5)
    got = ordinary_lhs(z, divisor_provider(), GL2_WEIGHT).value
    ns = np.arange(1, int(GL2_WEIGHT.support[1]) + 1)
    w = GL2_WEIGHT(ns.astype(float))
    ref = sum(divisor_coeffs(int(n)) / n**0.5 * np.exp(2j * np.pi * 2 * n / 5) * wv for n, wv in zip(ns, w))
    assert abs(got - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("c,a", [(1, 0), (5, 2), (4, 3)])
def test_divisor_voronoi(divisor_dual, c, a):
    lhs, rhs = ordinary_voronoi_sides(2, ZetaParam.of(a, c), divisor_provider(), GL2_WEIGHT, divisor_dual)
    assert abs(lhs.value - rhs.value) <= 1e-9 * abs(lhs.value)


def test_dual_side_is_not_negligible(divisor_dual):
    # guards against a check dominated by the polar term
    z = ZetaParam.of(2, 5)
    rhs = ordinary_rhs(2, z, divisor_provider(), divisor_dual)
    assert abs(rhs.value) > 0.1 * abs(polar_term(divisor_provider(), GL2_WEIGHT, z))


def test_ramanujan_tau_voronoi():
    dw = dual_weight(GL2_WEIGHT, holomorphic_gamma(12).with_psi_sign(-1))
    lhs, rhs = ordinary_voronoi_sides(2, ZetaParam.of(1, 2), _provider("tau-delta"), GL2_WEIGHT, dw)
    assert abs(lhs.value - rhs.value) <= 1e-9 * abs(lhs.value)


def test_zeta_power_is_needed(sym2_dual):
    z = ZetaParam.of(1, 3)
    prov = _provider("sym2-delta")
    lhs = ordinary_lhs(z, prov, GL3_WEIGHT).value
    good = ordinary_rhs(3, z, prov, sym2_dual).value
    bad = ordinary_rhs(3, z, prov, sym2_dual, include_zeta_power=False).value
    assert abs(lhs - good) <= 1e-9 * abs(lhs)
    assert abs(lhs - bad) > 0.1 * abs(lhs)


def test_truncation_error_shrinks(divisor_dual):
    z = ZetaParam.of(2, 5)
    prov = divisor_provider()
    target = ordinary_lhs(z, prov, GL2_WEIGHT).value - polar_term(prov, GL2_WEIGHT, z)
    gaps = [abs(ordinary_rhs(2, z, prov, divisor_dual, gamma_max=G).value - target) for G in (0.1, 0.4, 1.6)]
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("c", [2, 3, 4, 6])
def test_open_terms_count(c):
    p = FormulaParams(3, 2, 3, ZetaParam.of(1, c))
    # one term per divisor chain and unit representative: c in total for M = 3
    assert len(expand_open_klM(p)) == c


def test_open_terms_level_one():
    terms = expand_open_klM(FormulaParams(3, 2, 3, ZetaParam.of(0, 1)))
    assert len(terms) == 1 and terms[0].chain is None


def test_kl_argument_orientations():
    z = ZetaParam.of(1, 3)
    g = Fraction(2)
    za = z.as_adele()
    assert kl_argument(g, FormulaParams(3, 2, 3, z)) == za.inverse() * g
    assert kl_argument(g, FormulaParams(3, 2, 3, z, ConventionBundle(orientation=KlOrientation.ZETA))) == za * g
    tw = FormulaParams(3, 2, 3, z, ConventionBundle(orientation=KlOrientation.TWISTED))
    assert kl_argument(g, tw) == za * (-g)


@pytest.mark.parametrize("c", [2, 3])
def test_opened_form_equals_left_side(sym2_dual, c):
    p = FormulaParams(3, 2, 3, ZetaParam.of(1, c))
    prov = _provider("sym2-delta")
    lhs = lhs_balanced(p, prov, GL3_WEIGHT).value
    opened = opened_rhs(p, prov, sym2_dual).value
    assert abs(lhs - opened) <= 1e-9 * abs(lhs)


def test_balanced_level_one_reduces_to_ordinary(sym2_dual):
    p = FormulaParams(3, 2, 3, ZetaParam.of(0, 1))
    prov = _provider("sym2-delta")
    lhs = lhs_balanced(p, prov, GL3_WEIGHT).value
    rhs = rhs_balanced(p, prov, sym2_dual).value
    assert abs(lhs - rhs) <= 1e-7 * abs(lhs)


def test_balanced_constant_default(sym2_dual):
    # an explicit constant equal to the default reproduces the default side
    p = FormulaParams(3, 2, 3, ZetaParam.of(1, 2))
    prov = _provider("sym2-delta")
    a = rhs_balanced(p, prov, sym2_dual).value
    b = rhs_balanced(p, prov, sym2_dual, constant=lambda s: count_chains(3, p.zeta)).value
    assert a == b


def test_provider_rank_mismatch(divisor_dual):
    with pytest.raises(ValueError):
        lhs_balanced(FormulaParams(3, 2, 3, ZetaParam.of(1, 2)), divisor_provider(), GL3_WEIGHT)


def test_tau_coefficients_feed_the_provider():
    prov = _provider("tau-delta")
    assert abs(finite_whittaker(prov, Fraction(6)) - tau_coeffs(6) / 6**5.5 / 6**0.5) <= 1e-14
