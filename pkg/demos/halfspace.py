"""Harmonic extension to the half-space and the boundary energy it carries.

Run with ``python3 demos/halfspace.py``.
"""

import numpy as np

from lpdissip.model import GridFunction, box_grid, make_exponent
from lpdissip.oblique import (
    check_real_oblique,
    dirichlet_energy_halfspace,
    harmonic_extension,
    lambda_half_form,
)
from lpdissip.probe import bump

# The Dirichlet energy of the extension equals <Lambda u, u> on the boundary.
for h in (0.04, 0.02, 0.01):
    o, hh, X = box_grid(-20, 20, int(round(40 / h)) + 1, 1)
    x = X[0]
    u = GridFunction(np.where(np.abs(x) < 1, x * (1 - x * x) ** 4, 0.0), o, hh)
    levels = list(np.arange(h / 2, 2 + 1e-12, h / 2))
    while levels[-1] < 40:
        levels.append(levels[-1] * 1.03)
    E = dirichlet_energy_halfspace(harmonic_extension(u, levels))
    ref = lambda_half_form(u, u).real
    print(f"h = {h:<5} extension energy {E:.6f}  boundary form {ref:.6f}  relative gap {(E - ref) / ref:.1e}")

# A compressive real drift a = -k x b(x) breaks dissipativity once k is large.
o, h, X = box_grid(-2, 2, 41, 1)
grid = GridFunction(np.zeros(41), o, h)
for k in (0.5, 2.0, 5.0, 20.0):
    a = -k * X[0] * bump(X, 1.5)
    v = check_real_oblique(a[None], make_exponent(3), grid, np.gradient(a, h))
    print(f"k = {k:<5} {v.status.value:22s} extremal ratio {v.details['ratio']:.3f}")
