"""Jost solutions, scattering coefficients and the threshold resonance test."""
import numpy as np

from kgdecay import (PotentialSpec, a1_norm, bound_states, make_grid, resonance_check,
                     scattering_coeffs)

pots = {
    "zero": PotentialSpec.zero(),
    "2 sech^2 (reflectionless well)": PotentialSpec.sech_squared(2.0),
    "-0.4 sech^2 (barrier)": PotentialSpec.sech_squared(-0.4),
}
k = np.array([0.1, 0.5, 1.0, 2.0, 5.0])

for name, V in pots.items():
    tab = scattering_coeffs(V, k)
    print(f"\n{name}")
    print("  k     |T|        |R+|       |T|^2+|R|^2-1")
    for ki, T, R, d in zip(k, tab.T, tab.R_plus, tab.unitarity_defect):
        print(f"  {ki:4.1f}  {abs(T):.6f}  {abs(R):.2e}  {d:.1e}")
    rep = resonance_check(V, 1.0)
    print(f"  |W(0)| = {rep.w0_abs:.3e}  resonant: {rep.is_resonant}")

# The well carries one bound state at E = -1 with eigenfunction ~ sech x.
b = bound_states(pots["2 sech^2 (reflectionless well)"], 2.0, make_grid(20, 2048))[0]
print("\nbound state energy:", round(b.E, 6), " lambda = +-", round(b.lam, 6))

# The Wiener-algebra norm of psi(x, y, .) stays bounded over a box of (x, y).
vals = a1_norm(pots["2 sech^2 (reflectionless well)"], *np.meshgrid([-10, 0, 10], [-10, 0, 10]))
print("A1 norms over a 3x3 sample:", np.round(vals.ravel(), 3))
