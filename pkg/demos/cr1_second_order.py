"""Reversible cubic CR1 at alpha = 0: second-order relations among m2,9 .. m2,17."""
import time

from averaging_jets import averaging_jet, catalog, conditions, generic_perturbation
from averaging_jets.ring import parse_poly as P
from averaging_jets.solver import reparametrize, transversality_probe

t0 = time.perf_counter()
s = generic_perturbation(generic_perturbation(catalog("CR1", {"alpha": 0}), 1), 2)
s = s.substitute(conditions(s))
J = averaging_jet(s, 2, 17)
print(f"M2^[17] in {time.perf_counter() - t0:.1f}s")

targets = [(1, "A1", "b201", "pi"), (3, "A2", "b221", "pi"), (5, "A3", "b203", "pi"), (7, "A4", "a230", "pi")]
rewrites = {"b120": P("A5 - 6*a111 + 11*b102"), "a120": P("A6 - a102"),
            "b102": P("A7/12 - A6/12 + a111/2"), "b111": P("A8/6 + 11*A6/6 - 2*a102")}
R = reparametrize(J, targets, rewrites)
K = R.jet.substitute({"A1": 0, "A2": 0, "A3": 0, "A4": 0})
for k in range(9, 18, 2):
    print(f"m2,{k} = {K[k]}")

# m2,15 and m2,17 are combinations of m2,9, m2,11, m2,13
m = {k: K[k] for k in (9, 11, 13)}
print("m2,15 - (365/56 m9 - 495/56 m11 + 5 m13) =",
      K[15] - (P("365/56") * m[9] - P("495/56") * m[11] + P("5") * m[13]))

args = ([9, 11, 13], ["A5", "A6", "A7"])
print("Jacobian at A = 0:", transversality_probe(K, {"A5": 0, "A6": 0, "A7": 0, "A8": 0}, *args))
print("Jacobian at (1, 2, 3, 1):", transversality_probe(K, {"A5": 1, "A6": 2, "A7": 3, "A8": 1}, *args))
