"""Lotka-Volterra center: first-order jets, vanishing conditions and a numeric check."""
import random

from averaging_jets import averaging_jet, catalog, conditions, generic_perturbation
from averaging_jets.numeric import NumericBinding, displacement
from averaging_jets.solver import generic_rank, solve_vanishing

s = generic_perturbation(catalog("LV"), 1)
print(s)

J = averaging_jet(s, 1, 5)
print(J)

# two coefficients fix two parameters
sub = solve_vanishing(J, [1, 3], ["a110", "a102"])
print("conditions:")
print(sub)
print("M1^[7] after conditions is zero:", averaging_jet(s, 1, 7).substitute(sub.bindings).is_zero())

rk = generic_rank(J.truncate(3), [1, 3])
print(f"rank {rk.rank} -> at least {rk.bound} limit cycle")

# compare eps*M1 with the integrated return map
rng = random.Random(0)
vals = {p: rng.uniform(-1, 1) for p in s.perturbation_parameters()}
J9 = averaging_jet(s, 1, 9)
for r in (0.05, 0.1, 0.2):
    d, err = displacement(s, NumericBinding(vals, 1e-5), r)
    print(f"r={r:<5} d={d: .6e}  eps*M1={1e-5 * J9.evaluate(r, vals): .6e}  err={err:.1e}")

# under the stored conditions the line integral is zero far from the origin too
from averaging_jets.numeric import melnikov_line_integral
sc = s.substitute(conditions(s))
vc = {p: rng.uniform(-1, 1) for p in sc.perturbation_parameters()}
for r in (0.3, 0.9):
    print(f"line integral at r={r}: {melnikov_line_integral(sc, vc, r):.2e}")
