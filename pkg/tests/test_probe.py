import pytest

from balanced_voronoi.hankel import divisor_gamma, holomorphic_gamma, trivial_gamma
from balanced_voronoi.probe import (
    InsufficientCoefficients,
    functional_equation_probe,
    riemann_completed,
    zeta_squared_completed,
)
from balanced_voronoi.suites import PROBE_TOL, probe_for
from balanced_voronoi.whittaker import divisor_coeffs


def test_riemann_zeta_is_consistent_and_matches_mpmath():
    rep = functional_equation_probe(lambda n: 1, trivial_gamma(), 1, completed=riemann_completed, poles=(0, 1))
    assert rep.max_defect <= 1e-10
    assert max(rep.oracle_defects) <= 1e-10


def test_zeta_squared_is_consistent():
    rep = functional_equation_probe(divisor_coeffs, divisor_gamma(), 2, completed=zeta_squared_completed,
                                    poles=(0, 1))
    assert rep.max_defect <= 1e-9
    assert max(rep.oracle_defects) <= 1e-9


def test_wrong_gamma_shift_is_detected():
    rep = functional_equation_probe(divisor_coeffs, divisor_gamma().shifted(0.3), 2,
                                    completed=zeta_squared_completed, poles=(0, 1))
    assert rep.max_defect > 0.1


def test_wrong_weight_is_detected():
    from balanced_voronoi.whittaker import tau_coeffs

    rep = functional_equation_probe(lambda n: tau_coeffs(n, 512) / n**5.5, holomorphic_gamma(10), 2)
    assert rep.max_defect > PROBE_TOL


def test_degree_mismatch_raises():
    with pytest.raises(ValueError):
        functional_equation_probe(divisor_coeffs, divisor_gamma(), 3)


def test_too_few_coefficients_raises():
    with pytest.raises(InsufficientCoefficients):
        functional_equation_probe(divisor_coeffs, divisor_gamma(), 2, nmax=20, completed=zeta_squared_completed,
                                  poles=(0, 1))


@pytest.mark.parametrize("name", ["divisor", "tau-delta", "sym2-delta"])
def test_shipped_providers_pass(name):
    assert probe_for(name)["ok"]
