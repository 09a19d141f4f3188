"""
Order of convergence on a chained sine system
==============================================

Each extra inner step of the frozen-operator scheme adds two to the order.
Memory variants rebuild the Steffensen parameters from the previous iterate
and land in between.
"""

# %%
# The system couples neighbouring unknowns: x_i sin(x_{i+1}) = 1.
from mpmath import nstr

from steffkit import sine_chain, solve

F = sine_chain(5)
print(F.name, "dimension", F.n)

# %%
# Plain variants at 2048 bits.  The ACOC is read off the last three increments.
for m in (1, 2, 3):
    t = solve(F, "1.3", m, precision=2048, tol="1e-200")
    print(f"SW_{m}: {t.iterations} iterations, ACOC {float(t.acoc):.4f}")

# %%
# With memory: the previous iterate defaults to x0 + 0.1.
for memory in ("divided-difference", "kurchatov"):
    for m in (1, 2, 3):
        t = solve(F, "1.3", m, memory=memory, precision=2048, tol="1e-200")
        print(f"{memory:>18} m={m}: ACOC {float(t.acoc):.4f}")

# %%
# The trace keeps every increment and residual for closer inspection.
t = solve(F, "1.3", 2, precision=2048, tol="1e-200")
for k, (inc, res) in enumerate(zip(t.increments, t.residuals), 1):
    print(k, nstr(inc, 5), nstr(res, 5))
