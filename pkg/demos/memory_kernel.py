"""
Memory kernel and quadrature weights
====================================

The variable exponent enters the solver only through the function ``g`` and
the product-integration weights.  This script tabulates both.
"""

import numpy as np

from stgwave import (ConvolutionWeights, ExponentSchedule, averaged_pi_energy,
                     build_kernel_table, compute_g)

###############################################################################
# g(0) = 1 for every schedule; it drifts away from one as alpha(t) moves
# away from alpha0.  A constant exponent keeps it at one.

ts = np.linspace(0.0, 1.0, 6)
for alpha0 in (1.2, 1.5, 1.8):
    g = compute_g(ExponentSchedule(alpha0), ts)
    print(f"alpha0={alpha0}: " + " ".join(f"{v:.6f}" for v in g))
print("constant:", compute_g(ExponentSchedule.constant(1.5), ts))

###############################################################################
# Per-run table: nodal g, slab means and the history weights.

table = build_kernel_table(ExponentSchedule(1.5), 1.0, 16)
print("c0 =", table.c0)
print("first w~:", table.w_tilde[:4])

###############################################################################
# Weights of one level; they are positive and decay with distance.

cw = ConvolutionWeights(abar=0.5, tau=1 / 16, N=16)
print("lambda_{16,j}:", np.round(cw.row(16), 6))

###############################################################################
# The quadratic form built from the weights is non-negative for any data.

rng = np.random.default_rng(0)
forms = [averaged_pi_energy(rng.uniform(-1, 1, 32), 0.5, 1 / 32) for _ in range(20)]
print("smallest form over 20 random sequences:", min(forms))
