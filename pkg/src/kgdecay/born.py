"""Born expansion of the high-energy propagator.

With ``U_0(t) = exp(-itK_0) zeta(K_0^2)`` and ``V_mat = [[0, 0], [iV, 0]]``
the terms are

    Psi_1(t) = U_0(t) Psi_0,
    Psi_{j+1}(t) = -i int_0^t U_0(t - s) V_mat Psi_j(s) ds,

and the remainder is whatever the full zeta-band evolution leaves over.
Since ``-i V_mat (psi, psidot) = (0, V psi)``, each iterate is the Duhamel
integral of the free equation forced by ``V psi_j``.  On the Fourier side
``U_0(t - s) = M_t Z M_{-s}``, so the s-integral becomes a cumulative sum.
The s-quadrature is composite Simpson (trapezoid plus one Richardson step)
on a uniform grid of step ``min(0.1, t/64)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .core import GridFn, GridSpec, KGState, WeightedNormKind, fft_forward, fft_inverse, weighted_norm, zeta_high
from .free_kg import evolve_free_array, mt_matrix, rolloff
from .perturbed import SpectralPropagator

__all__ = [
    "v_matrix_apply",
    "born_term",
    "born_terms",
    "born_remainder",
    "BornSeries",
    "born_series",
    "default_k_top",
    "zeta_multiplier",
]


def _potential_values(V, grid: GridSpec) -> np.ndarray:
    if isinstance(V, GridFn):
        return V.values
    return np.asarray(V(grid.x), dtype=float)


def _is_zero(V) -> bool:
    if isinstance(V, GridFn):
        return not np.any(V.values)
    return getattr(V, "is_zero", False)


def v_matrix_apply(state: KGState, V) -> KGState:
    """``V_mat (psi, psidot) = (0, i V psi)``."""
    v = _potential_values(V, state.grid)
    return KGState.from_arrays(state.grid, np.zeros(state.grid.N), 1j * v * state.psi.values)


def default_k_top(grid: GridSpec) -> float:
    """Where the high-energy cutoff is tapered to zero: 0.9 of Nyquist."""
    return 0.9 * np.pi / grid.dx


def zeta_multiplier(grid: GridSpec, m: float, k_top: float = None) -> np.ndarray:
    k_top = default_k_top(grid) if k_top is None else k_top
    k = grid.fft_k
    return zeta_high(m)(k * k + m * m) * rolloff(k, k_top)


def _apply_m(k, t, m, hat):
    # hat: (2, N); t scalar
    M = mt_matrix(k, t, m)
    return np.stack([M[:, 0, 0] * hat[0] + M[:, 0, 1] * hat[1],
                     M[:, 1, 0] * hat[0] + M[:, 1, 1] * hat[1]])


def _tau_grid(t: float, dt_conv: float = None):
    if dt_conv is None:
        dt_conv = min(0.1, t / 64)
    n = max(1, int(np.ceil(t / dt_conv - 1e-9)))
    return np.linspace(0.0, t, n + 1)


def _cumulative(f, h, rule):
    out = np.zeros_like(f)
    if f.shape[0] < 2:
        return out
    if rule == "simpson" and f.shape[0] >= 3:
        # scipy's cumulative Simpson is real-valued only
        out[1:] = (cumulative_simpson(f.real, dx=h, axis=0)
                   + 1j * cumulative_simpson(f.imag, dx=h, axis=0))
    else:
        out[1:] = np.cumsum(0.5 * h * (f[1:] + f[:-1]), axis=0)
    return out


def _born_trajectories(t: float, state: KGState, V, m: float, order: int,
                       k_top: float = None, dt_conv: float = None, rule="simpson"):
    """Fourier coefficients of Psi_1..Psi_order on the tau-grid ending at t."""
    grid = state.grid
    k = grid.fft_k
    Z = zeta_multiplier(grid, m, k_top)
    v = _potential_values(V, grid)
    taus = _tau_grid(t, dt_conv)
    h = taus[1] - taus[0] if taus.size > 1 else 0.0
    hat0 = fft_forward(state.as_array(), grid)
    cur = np.stack([_apply_m(k, s, m, Z * hat0) for s in taus])
    out = [cur]
    for _ in range(order - 1):
        # forcing (0, V psi_j(s)), pulled back to s = 0
        psi_x = fft_inverse(cur[:, 0], grid)
        g = fft_forward(v * psi_x, grid)
        back = np.stack([_apply_m(k, -s, m, np.stack([np.zeros_like(gi), gi]))
                         for s, gi in zip(taus, g)])
        cum = _cumulative(back, h, rule)
        cur = np.stack([_apply_m(k, s, m, Z * c) for s, c in zip(taus, cum)])
        out.append(cur)
    return out


def born_terms(t: float, state: KGState, V, m: float, k_top: float = None,
               dt_conv: float = None):
    """``(Psi_1, Psi_2, Psi_3)`` at time ``t``."""
    grid = state.grid
    if t == 0:
        z = KGState.zeros(grid)
        p1 = KGState.from_stacked(grid, fft_inverse(zeta_multiplier(grid, m, k_top)
                                                    * fft_forward(state.as_array(), grid), grid))
        return p1, z, z
    if _is_zero(V):
        p1 = KGState.from_stacked(grid, fft_inverse(
            _born_trajectories(t, state, V, m, 1, k_top, dt_conv)[0][-1], grid))
        z = KGState.zeros(grid)
        return p1, z, z
    traj = _born_trajectories(t, state, V, m, 3, k_top, dt_conv)
    return tuple(KGState.from_stacked(grid, fft_inverse(tr[-1], grid)) for tr in traj)


def born_term(j: int, t: float, state: KGState, V, m: float, k_top: float = None,
              dt_conv: float = None) -> KGState:
    """``Psi_{j+1}(t)``: the term of order ``j`` in V (j = 1 or 2)."""
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    return born_terms(t, state, V, m, k_top, dt_conv)[j]


def _full_arrays(times, state, V, m, k_top):
    grid = state.grid
    k_top = default_k_top(grid) if k_top is None else k_top
    if _is_zero(V):
        # psi = 1 reduces the spectral representation to the free flow
        Z = zeta_multiplier(grid, m, k_top)
        filtered = fft_inverse(Z * fft_forward(state.as_array(), grid), grid)
        return np.stack([evolve_free_array(filtered, float(t), grid, m)
                         for t in np.atleast_1d(times)])
    prop = SpectralPropagator(V, m, zeta_high(m), grid, float(np.max(np.abs(times))), k_top)
    return prop.evolve_array(state.as_array(), times)


def born_remainder(t: float, state: KGState, V, m: float, k_top: float = None,
                   dt_conv: float = None) -> KGState:
    """Full zeta-band evolution minus the first three Born terms."""
    if _is_zero(V):
        return KGState.zeros(state.grid)
    full = KGState.from_stacked(state.grid, _full_arrays([t], state, V, m, k_top)[0])
    p1, p2, p3 = born_terms(t, state, V, m, k_top, dt_conv)
    return full - p1 - p2 - p3


@dataclass(frozen=True, eq=False)
class BornSeries:
    times: np.ndarray
    psi1: list
    psi2: list
    psi3: list
    remainder: list
    full: list

    def gap(self, i: int) -> float:
        """L2 + L2 distance between the three-term sum and the full evolution."""
        return (self.psi1[i] + self.psi2[i] + self.psi3[i] - self.full[i]).l2()

    def norms(self, kind: WeightedNormKind, derivative_method: str = "fd2"):
        cols = []
        for series in (self.psi1, self.psi2, self.psi3, self.remainder):
            cols.append([weighted_norm(s, kind, derivative_method) for s in series])
        return np.array(cols).T

    def to_csv(self, path, kind: WeightedNormKind, derivative_method: str = "fd2"):
        table = self.norms(kind, derivative_method)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "norm_U0", "norm_U1", "norm_U2", "norm_W"])
            for t, row in zip(self.times, table):
                w.writerow([f"{t:.12e}"] + [f"{v:.12e}" for v in row])


def born_series(times, state: KGState, V, m: float, k_top: float = None,
                dt_conv: float = None) -> BornSeries:
    times = np.asarray(times, dtype=float)
    grid = state.grid
    full = _full_arrays(times, state, V, m, k_top)
    p1, p2, p3, rem, fl = [], [], [], [], []
    for t, f in zip(times, full):
        a, b, c = born_terms(t, state, V, m, k_top, dt_conv)
        F = KGState.from_stacked(grid, f)
        p1.append(a)
        p2.append(b)
        p3.append(c)
        fl.append(F)
        rem.append(KGState.zeros(grid) if _is_zero(V) else F - a - b - c)
    return BornSeries(times, p1, p2, p3, rem, fl)
