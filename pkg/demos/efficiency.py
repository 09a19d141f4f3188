"""
How many steps pay off?
=======================

One step costs n^2 scalar evaluations, the second doubles that, and every
further step adds only n.  Larger systems therefore favour more steps.
"""

# %%
from steffkit import efficiency_index, optimal_steps

for n in (1, 2, 5, 10, 50, 100):
    best = optimal_steps(n)
    star = "-" if best.m_star is None else f"{float(best.m_star):.3f}"
    print(f"n={n:>3}: m*={star:>7}  best m={best.m_best:>3}  index={float(best.index_best):.10f}")

# %%
# The one- and two-step schemes always tie.
print(efficiency_index(1, 7) == efficiency_index(2, 7))
