"""Trace the planar Lame dissipativity boundary and probe both sides of it.

Run with ``python3 demos/elasticity_boundary.py``.
"""

import numpy as np

from lpdissip.model import make_exponent
from lpdissip.probe import search_lame_counterexample
from lpdissip.systems import elasticity_planar, planar_threshold

# For each p, the admissible Poisson ratios below 1/2 form an interval
# ending where (1/2 - 1/p)^2 meets the threshold curve.
nus = np.linspace(-2, 0.4999, 20001)
thr = planar_threshold(nus)
print(" p      largest admissible nu < 1/2")
for p in (2.5, 3, 4, 6, 10, 40):
    ok = nus[thr >= (0.5 - 1 / p) ** 2]
    print(f"{p:5.1f}   {ok.max():.4f}")

print("\nLame functional search (positive value = counterexample)")
for p, nu in ((4, 0.3), (4, 0.49), (20, 1.02), (6, 3.0)):
    e = make_exponent(p)
    v = elasticity_planar(nu, e)
    r = search_lame_counterexample(nu, e, restarts=3, iterations=12)
    print(f"  p={p:<3} nu={nu:<5} {v.status.value:22s} search max {r.value: .3f}")
