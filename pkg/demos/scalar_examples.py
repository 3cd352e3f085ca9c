"""Three small scalar operators and what each criterion says about them.

Run with ``python3 demos/scalar_examples.py``.
"""

import numpy as np

from lpdissip import harness
from lpdissip.harness import RunOptions, run_spec
from lpdissip.model import GridFunction, box_grid, make_exponent
from lpdissip.probe import bump, sigma_lambda_threshold, sigma_minimizing_t, sigma_modal_probe

# A matrix with a skew imaginary part acts like the Laplacian, so it is
# dissipative for every p even though the polynomial test cannot show it.
gamma = run_spec(harness.load_corpus_entry("example-gamma"), 4, RunOptions(probe=True))
print("gamma matrix, p = 4")
for v in gamma.verdicts:
    print(f"  {v.criterion:12s} {v.status.value:22s} margin {v.margin}")
print(f"  search minimum {gamma.probes['search'].value:.3f} (no counterexample)")

# Constant coefficients with a drift: the exact test is borderline (margin 0)
# and still decides in favour of dissipativity.
ex1 = run_spec(harness.load_corpus_entry("example-ex1"), 4)
print("\nconstant coefficients with drift, p = 4")
for v in ex1.verdicts:
    print(f"  {v.criterion:12s} {v.status.value:22s} margin {v.margin}")

# Variable coefficients: the pointwise sector condition holds, yet a modal
# test function makes the L^2 form negative once lambda passes lambda*.
o, h, X = box_grid(-1, 1, 33, 2)
sigma = GridFunction(bump(X, radius=0.8), o, h)
lstar = sigma_lambda_threshold(sigma)
print(f"\nsigma example: lambda* = {lstar:.4f}")
for factor in (0.5, 1.0, 2.0):
    lam = factor * lstar
    t = sigma_minimizing_t(sigma, lam)
    print(f"  lambda = {factor:.1f} lambda*:  min_t q(t) = {sigma_modal_probe(sigma, lam, t): .4f}")
