"""The free Klein-Gordon flow: Bessel kernel, light cone, weighted decay."""
import numpy as np

from kgdecay import (OperatorSample, bj_operator_matrix, decay_fit, f_space_op_norm,
                     free_evolution_matrix, free_kernel, green_u, make_grid,
                     op_norm_weighted, spectral_diff_matrix)

m = 1.0

# The (1,2) entry of the propagator kernel is (1/2) J0(m sqrt(t^2 - r^2))
# inside the cone and zero outside.  Compare the k-quadrature with it.
grid = make_grid(20, 16, k_max=100, n_k=8192)
t = 10.0
r = np.array([0.0, 3.0, 7.5, 9.0, 12.0, 15.0])
print("r        quadrature     (1/2) J0")
for ri, q, e in zip(r, free_kernel(t, 0.0, r, m, grid).real, green_u(t, r, m)):
    print(f"{ri:5.1f}  {q: .8f}  {e: .8f}")

# Just inside the cone the kernel does not decay: at fixed t - r the value
# is (1/2) J0(sqrt(2t(t - r) - (t - r)^2)), which only tends to 1/2 as t - r -> 0.
for t in (10.0, 30.0, 100.0):
    print(f"t={t:5.0f}  K12(r=t-0.01)={green_u(t, t - 0.01, m):.3f}  "
          f"K12(r=t-1)={green_u(t, t - 1.0, m):.3f}")

# Weighted norms do decay.  F_{1.1} -> F_{-1.1} behaves like t^(-1/2).
grid = make_grid(128, 256)
D = spectral_diff_matrix(grid)
ts = np.geomspace(10, 100, 8)
norms = [f_space_op_norm(free_evolution_matrix(grid, t, m), grid, 1.1, 1.1, D) for t in ts]
print("free F_1.1 -> F_-1.1 exponent:", round(decay_fit(ts, norms).exponent, 3))

# The high-energy piece B0 decays faster, like t^(-l) between L2_l and L2_-l.
grid = make_grid(128, 512)
for ell in (1.0, 2.0):
    vals = [op_norm_weighted(OperatorSample(bj_operator_matrix(0, t, m, grid), grid.x, ell, ell))
            for t in ts]
    print(f"B0 exponent for l={ell:.0f}:", round(decay_fit(ts, vals).exponent, 3))
