"""Discrete spectrum, the projection P_c and the spectral representation of
the perturbed Klein-Gordon flow.

On the continuous spectrum the kernel of ``exp(-itK) P_c chi(K^2)`` is

    (1/2pi) int M_t(k) exp(i|y-x|k) psi(x, y, k) chi(k^2 + m^2) dk,

and ``exp(ik|y-x|) psi(x, y, k) = T(k) f_+(max(x,y), k) f_-(min(x,y), k)``.
The integrand at ``-k`` is the complex conjugate of that at ``k``, so the
kernel is ``(1/pi) int_0^inf M_t chi Re[T f_+ f_-] dk``.  The factorisation
lets the y-sum be done with cumulative sums, O(N) per wavenumber.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .core import Cutoff, GridFn, GridSpec, KGState, PotentialSpec
from .free_kg import rolloff
from .scattering import (PHASE_PER_STEP, JostTable, _kernel_from_table,
                         _potential_callable, psi_kernel)
from .special import ResolutionError

__all__ = [
    "SpectrumError",
    "BoundState",
    "PcOperator",
    "bound_states",
    "pc_project",
    "perturbed_resolvent_kernel",
    "SpectralPropagator",
    "evolve_spectral",
    "kernel_matrix",
    "kernel_sup",
    "state_to_csv",
]


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoundState:
    E: float
    u: GridFn
    m: float

    @property
    def lam(self) -> float:
        return float(np.sqrt(self.m * self.m + self.E))

    @property
    def lambda_pair(self):
        return (self.lam, -self.lam)


def _width(V) -> float:
    if isinstance(V, PotentialSpec) and V.kind == "gaussian":
        return V.w
    return 1.0


def bound_states(V: PotentialSpec, m: float, grid: GridSpec, h_max: float = None):
    """Eigenpairs ``E < 0`` of the Dirichlet finite-difference H = -d^2 - V.

    The eigenproblem is solved on a uniform refinement of ``grid`` (spacing
    at most ``h_max``, default 0.02 potential widths) and the eigenfunctions
    are sampled back on ``grid`` and normalised there.
    """
    if not m > 0:
        raise ValueError("mass must be positive")
    if V.is_zero:
        return []
    if h_max is None:
        h_max = 0.02 * _width(V)
    r = max(1, int(np.ceil(grid.dx / h_max)))
    h = grid.dx / r
    xf = -grid.L + h * np.arange(grid.N * r)
    v = V(xf)
    d = 2.0 / h ** 2 - v
    e = -np.ones(xf.size - 1) / h ** 2
    lo = float(np.min(-v)) - 1.0
    if lo >= -1e-8:
        return []
    E, U = eigh_tridiagonal(d, e, select="v", select_range=(lo, -1e-8))
    states = []
    for j in np.argsort(E):
        if E[j] <= -m * m + 1e-8:
            raise SpectrumError(
                "eigenvalue reaches spectral gap edge; lambda degenerate or "
                f"non-real (E={E[j]:.6g}, -m^2={-m * m:g})")
        u = U[::r, j]
        u = u / np.sqrt(np.sum(u * u) * grid.dx)
        if u[np.argmax(np.abs(u))] < 0:
            u = -u
        states.append(BoundState(float(E[j]), GridFn(grid, u), float(m)))
    return states


@dataclass(frozen=True, eq=False)
class PcOperator:
    states: list
    m: float

    @classmethod
    def build(cls, V: PotentialSpec, m: float, grid: GridSpec) -> "PcOperator":
        return cls(bound_states(V, m, grid), float(m))

    def __call__(self, state: KGState) -> KGState:
        return pc_project(state, self)


def pc_project(state: KGState, pc: PcOperator) -> KGState:
    """Remove the K-eigenmodes ``(u, -+ i lam u)`` of each bound state."""
    psi = state.psi.values.copy()
    psid = state.psidot.values.copy()
    dx = state.grid.dx
    for b in pc.states:
        if b.u.grid != state.grid:
            raise ValueError("projection built on a different grid")
        lam = b.lam
        if lam == 0.0:
            raise SpectrumError("bound state at the gap edge (lambda = 0) "
                                "has no eigenvector pair")
        u = b.u.values.real
        p = np.sum(psi * u) * dx
        q = np.sum(psid * u) * dx
        a_plus = 0.5 * (p - q / (1j * lam))
        a_minus = 0.5 * (p + q / (1j * lam))
        psi = psi - (a_plus + a_minus) * u
        psid = psid - (-1j * lam * a_plus + 1j * lam * a_minus) * u
    return KGState.from_arrays(state.grid, psi, psid)


def perturbed_resolvent_kernel(V, m: float, k: float, sign: int, x, y,
                               branch: int = 1, L: float = 40.0):
    """Boundary value of the kernel of ``(K - omega -+ i0)^{-1}`` at
    ``omega = branch * sqrt(k^2 + m^2)``.

    ``sign = +1`` is the limit from above in omega.  For ``omega > 0`` this is
    ``R(k^2 + i0) = -exp(ik|y-x|) psi(x, y, k) / (2ik)``; for ``omega < 0`` the
    two boundary values of R swap.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    if sign not in (1, -1) or branch not in (1, -1):
        raise ValueError("sign and branch must be +1 or -1")
    s = sign * branch
    xb, yb = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    r = np.abs(yb - xb)
    psi = psi_kernel(V, xb, yb, s * k, L)
    R = -s * np.exp(1j * s * k * r) * psi / (2j * k)
    w = branch * np.sqrt(k * k + m * m)
    out = np.empty(r.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = w * R
    out[..., 0, 1] = 1j * R
    out[..., 1, 0] = -1j - 1j * w * w * R
    out[..., 1, 1] = w * R
    return out


def _k_nodes(band: Cutoff, m: float, L: float, t_max: float, k_top: float = None):
    if k_top is None:
        k_top = band.k_support(m)
        if not np.isfinite(k_top):
            raise ValueError("non-compact band: pass k_top explicitly")
    # the k-sum is periodic in |x - y| + t with period 2pi/dk; keep every
    # image well outside the box and the light cone; also ten nodes per
    # period of exp(i t omega)
    dk = min(np.pi / (2 * L + abs(t_max) + 10.0), 4 * np.pi / (10.0 * max(abs(t_max), 1e-12)))
    n = int(np.ceil(k_top / dk))
    k = dk * (np.arange(n) + 0.5)
    return k, dk, k_top


class SpectralPropagator:
    """``exp(-itK) P_c band(K^2)`` on a grid for many times.

    The t-independent spectral coefficients ``A_k psi0`` and ``A_k psidot0``
    are formed once per state; each time is then a small matrix product.
    ``k_top`` is required for the non-compact ``zeta_high`` band, which is
    then tapered to zero at ``k_top``.
    """

    def __init__(self, V, m: float, band: Cutoff, grid: GridSpec, t_max: float,
                 k_top: float = None, chunk: int = 256):
        if not m > 0:
            raise ValueError("mass must be positive")
        self.grid, self.m, self.band = grid, float(m), band
        self.t_max = float(t_max)
        k, dk, k_top = _k_nodes(band, m, grid.L, t_max, k_top)
        self.k, self.dk = k, dk
        self.omega = np.sqrt(k * k + m * m)
        w = band(self.omega ** 2)
        if not band.compact:
            w = w * rolloff(k, k_top)
        keep = w != 0.0
        self.k, self.omega, self.weight = k[keep], self.omega[keep], w[keep] * dk / np.pi
        self.chunk = chunk
        self.V = V
        # one ODE step for every chunk, fixed by the grid resolution rather
        # than by the band, so that bands split or summed use identical nodes
        vmax = float(np.max(np.abs(_potential_callable(V)(grid.x))))
        k_ref = max(np.pi / grid.dx, k_top)
        self.step = PHASE_PER_STEP / max(np.sqrt(k_ref ** 2 + vmax), 1.0)
        self._tables = None

    def _jost(self):
        if self._tables is None:
            tabs = []
            for s in range(0, self.k.size, self.chunk):
                tab = JostTable(self.V, self.k[s:s + self.chunk], self.grid.x, self.grid.L,
                                 self.step)
                T = 2j * tab.k / tab.wronskian()
                tabs.append((T, tab.fp, tab.fm))
            self._tables = tabs
        return self._tables

    def _s_apply(self, g):
        # S[g](x) = T [f_-(x) sum_{y>=x} f_+(y) g(y) + f_+(x) sum_{y<x} f_-(y) g(y)] dx
        dx = self.grid.dx
        out = []
        for T, fp, fm in self._jost():
            a = np.cumsum((fp * g)[:, ::-1], axis=1)[:, ::-1]
            b = np.cumsum(fm * g, axis=1) - fm * g
            out.append(T[:, None] * (fm * a + fp * b) * dx)
        return np.concatenate(out)

    def coefficients(self, g):
        """``A_k g``: the real-kernel part, ``(S[g] + conj S[conj g]) / 2``."""
        g = np.asarray(g)
        if np.isrealobj(g) or not np.any(g.imag):
            return self._s_apply(g.real).real
        return 0.5 * (self._s_apply(g) + np.conj(self._s_apply(np.conj(g))))

    def evolve_array(self, arr, times):
        """Stacked ``(2, N)`` data to ``(n_t, 2, N)`` at the given times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.max(np.abs(times)) > self.t_max + 1e-12:
            raise ResolutionError("time exceeds the t_max this propagator was built for")
        a0 = self.coefficients(arr[0])
        a1 = self.coefficients(arr[1])
        tw = np.outer(times, self.omega)
        c, s = np.cos(tw) * self.weight, np.sin(tw) * self.weight
        psi = c @ a0 + (s / self.omega) @ a1
        psid = -(s * self.omega) @ a0 + c @ a1
        return np.stack([psi, psid], axis=1)

    def evolve(self, state: KGState, t: float) -> KGState:
        return KGState.from_stacked(self.grid, self.evolve_array(state.as_array(), t)[0])

    def kernel_matrix(self, t: float, nodes):
        """Kernel at ``(x_i, y_j)``, shape ``(n, n, 2, 2)`` (real)."""
        nodes = np.asarray(nodes, float)
        tab = JostTable(self.V, self.k, nodes, max(self.grid.L, np.abs(nodes).max()))
        n = nodes.size
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        ep = _kernel_from_table(tab, ii.ravel(), jj.ravel())
        ep = ep * np.exp(1j * np.outer(self.k, np.abs(nodes[jj.ravel()] - nodes[ii.ravel()])))
        ep = ep.real
        c, s = np.cos(t * self.omega), np.sin(t * self.omega)
        w = self.weight
        out = np.empty((n * n, 2, 2))
        out[:, 0, 0] = (w * c) @ ep
        out[:, 0, 1] = (w * s / self.omega) @ ep
        out[:, 1, 0] = -(w * s * self.omega) @ ep
        out[:, 1, 1] = out[:, 0, 0]
        return out.reshape(n, n, 2, 2)


def evolve_spectral(state: KGState, t: float, V, m: float, band: Cutoff,
                    k_top: float = None) -> KGState:
    """Continuous-spectrum evolution with a band cutoff, via the spectral
    representation (no time stepping)."""
    prop = SpectralPropagator(V, m, band, state.grid, abs(t), k_top)
    return prop.evolve(state, t)


def kernel_matrix(t: float, V, m: float, band: Cutoff, nodes, grid: GridSpec = None):
    nodes = np.asarray(nodes, float)
    if grid is None:
        L = float(np.abs(nodes).max()) + 1.0
        grid = GridSpec(max(L, 20.0), 16)
    prop = SpectralPropagator(V, m, band, grid, abs(t))
    return prop.kernel_matrix(t, nodes)


def kernel_sup(t: float, V, m: float, band: Cutoff, sample_box=(-50.0, 50.0, 1.0),
               weighted: bool = False) -> float:
    """Largest max-entry modulus of the band-limited kernel over the sampled
    box ``(lo, hi, spacing)``; ``weighted`` divides by (1+|x|)(1+|y|)."""
    if not band.compact:
        raise ValueError("kernel_sup needs a compactly supported band")
    lo, hi, h = sample_box
    nodes = np.arange(lo, hi + 0.5 * h, h)
    K = np.abs(kernel_matrix(t, V, m, band, nodes)).max(axis=(2, 3))
    if weighted:
        w = 1.0 + np.abs(nodes)
        K = K / np.outer(w, w)
    return float(K.max())


def state_to_csv(state: KGState, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "Re_psi", "Im_psi", "Re_psidot", "Im_psidot"])
        for x, p, q in zip(state.grid.x, state.psi.values, state.psidot.values):
            w.writerow([f"{v:.12e}" for v in (x, p.real, p.imag, q.real, q.imag)])
