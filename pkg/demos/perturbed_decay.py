"""Decay of the perturbed flow on the continuous spectrum.

A barrier has no threshold resonance, and weighted norms then decay like
t^(-3/2).  The free case is resonant and decays only like t^(-1/2).
"""
import numpy as np

from kgdecay import (KGState, PcOperator, PotentialSpec, SpectralPropagator,
                     StepperConfig, WeightedNormKind, chi_band, decay_fit, leapfrog_evolve,
                     make_grid, weighted_norm)

m = 1.0
band = chi_band(0.0, m * m + 16, 0.5, 4.0)

# First a sanity check against plain time stepping.
grid = make_grid(64, 512)
x = grid.x
V = PotentialSpec.sech_squared(-0.4)
data = KGState.from_arrays(grid, np.exp(-x ** 2 / 4) * np.cos(x), 0.3 * x * np.exp(-x ** 2 / 4))
out = SpectralPropagator(V, m, band, grid, 20.0).evolve_array(data.as_array(), [0.0, 20.0])
phi0 = KGState.from_stacked(grid, out[0])
lf = leapfrog_evolve(phi0, StepperConfig(0.005, "spectral", 20.0), V, m)
print("spectral vs leapfrog at t=20:", f"{(lf - KGState.from_stacked(grid, out[1])).l2():.2e}")

# Then the decay rates.
grid = make_grid(128, 512)
x = grid.x
ts = np.geomspace(20, 200, 8)
kind = WeightedNormKind("F_sigma", -1.6)
for name, V in (("barrier", PotentialSpec.sech_squared(-0.4)), ("free", PotentialSpec.zero())):
    s0 = PcOperator.build(V, m, grid)(KGState.from_arrays(grid, np.exp(-x ** 2 / 4), 0 * x))
    out = SpectralPropagator(V, m, band, grid, ts.max()).evolve_array(s0.as_array(), ts)
    vals = [weighted_norm(KGState.from_stacked(grid, o), kind, "fd2") for o in out]
    print(f"{name:8s} F_-1.6 exponent: {decay_fit(ts, vals).exponent:.3f}")
