"""Both sides of the twisted divisor-function Voronoi formula, and how the dual sum converges.

Run: python3 demos/ordinary_voronoi.py
"""
from balanced_voronoi.arith import ZetaParam
from balanced_voronoi.engine import ordinary_voronoi_sides, polar_term
from balanced_voronoi.hankel import divisor_gamma, dual_weight
from balanced_voronoi.suites import GL2_WEIGHT, gl2_convergence
from balanced_voronoi.whittaker import divisor_provider

# the archimedean character runs opposite to the finite one
dual = dual_weight(GL2_WEIGHT, divisor_gamma().with_psi_sign(-1))
for c, a in ((1, 0), (5, 2), (7, 3)):
    z = ZetaParam.of(a, c)
    lhs, rhs = ordinary_voronoi_sides(2, z, divisor_provider(), GL2_WEIGHT, dual)
    main = polar_term(divisor_provider(), GL2_WEIGHT, z)
    print(f"a/c = {a}/{c}: lhs {lhs.value:.12f}  rhs {rhs.value:.12f}  polar part {main.real:.6f}  "
          f"relative gap {abs(lhs.value - rhs.value) / abs(lhs.value):.1e}")

print("\ntruncation of the dual sum at |gamma| <= G, a/c = 2/5")
for G, gap, tail in gl2_convergence("divisor", 5, 2, 1):
    print(f"  G = {G:<5}  gap {gap:.2e}  tail estimate {tail:.2e}")
