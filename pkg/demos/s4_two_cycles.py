"""Isochronous S4: second-order jet in auxiliary parameters, then two cycles at eps = 1e-2."""
import numpy as np

from averaging_jets.constructions import construct_cycles, second_order_setup
from averaging_jets.numeric import NumericBinding, count_cycles, displacement_profile

system, rep = second_order_setup("S4")
for k in (1, 3, 5, 7):
    print(f"m2,{k} = {rep.jet[k]}")

c = construct_cycles("S4")
print("A values:", {k: round(v, 6) for k, v in c.exact.items()})
print("predicted radii:", [round(r, 5) for r in c.predicted])

grid = np.arange(0.01, 0.18, 0.01)
prof = displacement_profile(c.system, NumericBinding(c.values, 1e-2), grid)
for r, d, e in zip(prof.r, prof.d, prof.err):
    print(f"{r:.2f}  {d: .3e}  (pred {c.predicted_displacement(r, 1e-2): .3e}, err {e:.0e})")

cc = count_cycles(prof, c.system)
print(f"{cc.count} certified sign changes at", [round(r, 5) for r in cc.radii])
prof.to_csv("s4_profile.csv")
