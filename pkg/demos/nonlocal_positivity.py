"""Lower bounds for the fractional form and its convergence under refinement.

Run with ``python3 demos/nonlocal_positivity.py``.
"""

import numpy as np

from lpdissip.model import GridFunction, box_grid, make_exponent
from lpdissip.nonlocal_forms import bilinear_form, check_positivity_bound, fractional_kernel
from lpdissip.probe import bump

o, h, X = box_grid(-1.2, 1.2, 49, 1)
u = GridFunction(bump(X, 0.9) * (1 + 0.4 * X[0]) - 0.6 * bump(X, 0.4, center=[0.3]), o, h)
print("  p     s     form      bound/2   bound as printed")
for p in (1.5, 2, 3, 7):
    for s in (0.25, 0.75):
        rep = check_positivity_bound(u, make_exponent(p), fractional_kernel(1, s), s=s)
        print(f"{p:4}  {s:4}  {rep.lhs:8.4f}  {rep.rhs_half:8.4f}  {rep.rhs_printed:8.4f}")

print("\nbilinear form B(u, u^2) under grid halving (s = 0.5)")
k = fractional_kernel(1, 0.5)
prev = None
for N in (13, 25, 49, 97, 193):
    o, h, X = box_grid(-1.2, 1.2, N, 1)
    b = bump(X, 1.0) * (1 + 0.5 * X[0])
    val = bilinear_form(GridFunction(b, o, h), GridFunction(b ** 2, o, h), k)
    print(f"  h = {h:.4f}  B = {val:.8f}" + ("" if prev is None else f"  change {abs(val - prev):.2e}"))
    prev = val
