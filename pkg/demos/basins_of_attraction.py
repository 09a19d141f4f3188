"""
Basins of attraction for (z - 1)^3 = 1
======================================

Every pixel is a starting point; its colour names the root the orbit
reaches, and black marks pixels that never settle within the cap.
"""

# %%
import tempfile
from pathlib import Path

from steffkit import BasinSpec, PrecisionContext, SolverConfig, cubic_p1, render_plain, write_ppm
from steffkit.basins import P1_PALETTE
from steffkit.numkernel import Field
from steffkit.weights import paper_poly, reciprocal

F = cubic_p1()
ctx = PrecisionContext(64, Field.COMPLEX)
roots = F.known_roots(ctx)
spec = BasinSpec(width=200, height=200, palette=P1_PALETTE)
out = Path(tempfile.mkdtemp())

# %%
# Compare the two built-in weights.  The reciprocal weight keeps more of the
# plane convergent as the number of steps grows.
for m in (1, 2, 3):
    for weight in (paper_poly(), reciprocal()):
        img = render_plain(F, roots, spec, SolverConfig(m=m, weight=weight, precision=ctx), workers=4)
        converged = sum(v for k, v in img.shares().items() if k >= 0)
        path = out / f"p1_sw{m}_{weight.label}.ppm"
        write_ppm(img, path)
        print(f"SW_{m} {weight.label:>10}: {100 * converged:5.1f}% converged -> {path}")
