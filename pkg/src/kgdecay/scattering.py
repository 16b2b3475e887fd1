"""Jost solutions and scattering data for H = -(d^2/dx^2 + V).

Jost solutions are obtained by RK4 integration of ``f'' = -(k^2 + V) f``
across the region where V is numerically nonzero; outside it V is treated as
zero and the solution is continued in closed form.  All routines are
vectorised over the wavenumber.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import GridFn, GridSpec, PotentialSpec, xi_high

__all__ = [
    "JostError",
    "WronskianError",
    "JostTable",
    "JostPair",
    "jost_solve",
    "jost_pair",
    "wronskians",
    "ScatteringTable",
    "scattering_coeffs",
    "psi_kernel",
    "a1_norm",
    "dpsi_dk_weighted_bound",
    "ResonanceReport",
    "resonance_check",
]

# |V| below this fraction of max|V| is treated as exactly zero
CORE_THRESHOLD = 1e-16
TAIL_TOLERANCE = 1e-8
# default RK4 step keeps k_eff * h below this
PHASE_PER_STEP = 0.02


class JostError(ValueError):
    pass


class WronskianError(RuntimeError):
    pass


def _potential_callable(V, grid: GridSpec = None):
    if isinstance(V, GridFn):
        spline = CubicSpline(V.grid.x, V.values.real)
        return lambda x: spline(np.asarray(x, dtype=float))
    if callable(V):
        return V
    raise TypeError("V must be a PotentialSpec, a callable or a GridFn")


def _core_interval(Vf, L: float):
    xs = np.linspace(-L, L, 40001)
    v = np.abs(Vf(xs))
    vmax = v.max()
    if vmax == 0.0:
        return 0.0, 0.0, 0.0
    if max(abs(Vf(-L)), abs(Vf(L))) >= TAIL_TOLERANCE * vmax:
        raise JostError(
            f"potential tails are not negligible at +-L={L}: |V(+-L)| must be "
            f"below {TAIL_TOLERANCE:g} max|V|; enlarge the domain")
    idx = np.nonzero(v > CORE_THRESHOLD * vmax)[0]
    h = xs[1] - xs[0]
    a = max(xs[idx[0]] - h, -L)
    b = min(xs[idx[-1]] + h, L)
    return a, b, vmax


def _free_continue(f0, d0, k, dist):
    # V = 0 solution with data (f0, d0) at x0, evaluated at x0 + dist
    kd = k[:, None] * dist[None, :]
    c = np.cos(kd)
    s_over_k = dist[None, :] * np.sinc(kd / np.pi)
    f = f0[:, None] * c + d0[:, None] * s_over_k
    d = -f0[:, None] * k[:, None] * np.sin(kd) + d0[:, None] * c
    return f, d


def _rk4_sweep(Vf, k, start, stop, f0, d0, checkpoints, h_max):
    """Integrate from ``start`` to ``stop`` (either direction), returning the
    solution at the sorted-by-travel ``checkpoints`` (all between the ends)."""
    k2 = k * k
    stations = np.concatenate([[start], checkpoints, [stop]])
    out_f = np.empty((k.size, checkpoints.size), dtype=complex)
    out_d = np.empty_like(out_f)
    f, d = f0.astype(complex), d0.astype(complex)
    for i in range(stations.size - 1):
        x0, x1 = stations[i], stations[i + 1]
        n = max(1, int(np.ceil(abs(x1 - x0) / h_max)))
        h = (x1 - x0) / n
        xs = x0 + h * np.arange(n + 1)
        v_nodes = Vf(xs)
        v_mid = Vf(xs[:-1] + 0.5 * h)
        for j in range(n):
            q0 = -(k2 + v_nodes[j])
            qm = -(k2 + v_mid[j])
            q1 = -(k2 + v_nodes[j + 1])
            a1f, a1d = d, q0 * f
            a2f, a2d = d + 0.5 * h * a1d, qm * (f + 0.5 * h * a1f)
            a3f, a3d = d + 0.5 * h * a2d, qm * (f + 0.5 * h * a2f)
            a4f, a4d = d + h * a3d, q1 * (f + h * a3f)
            f = f + h / 6.0 * (a1f + 2 * a2f + 2 * a3f + a4f)
            d = d + h / 6.0 * (a1d + 2 * a2d + 2 * a3d + a4d)
        if i < checkpoints.size:
            out_f[:, i] = f
            out_d[:, i] = d
    return f, d, out_f, out_d


class JostTable:
    """Jost solutions ``f_+`` and ``f_-`` and their x-derivatives for an
    array of real wavenumbers ``k`` at sorted nodes ``x``.

    Arrays ``fp, fpd, fm, fmd`` have shape ``(len(k), len(x))``.
    """

    def __init__(self, V, k, x, L: float, step: float = None):
        self.k = np.atleast_1d(np.asarray(k, dtype=float))
        self.x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(np.diff(self.x) < 0):
            raise ValueError("nodes must be sorted")
        Vf = _potential_callable(V)
        self.L = float(L)
        a, b, vmax = _core_interval(Vf, self.L)
        k_eff = np.sqrt(np.max(np.abs(self.k)) ** 2 + vmax)
        if step is None:
            step = PHASE_PER_STEP / max(k_eff, 1.0)
        self.step = float(step)
        k = self.k
        x = self.x
        nk = k.size

        fp = np.empty((nk, x.size), dtype=complex)
        fpd = np.empty_like(fp)
        fm = np.empty_like(fp)
        fmd = np.empty_like(fp)

        right = x >= b
        left = x <= a
        inner = ~(left | right)
        ex = np.exp(1j * np.outer(k, x))
        # f_+ is a pure outgoing wave to the right of the core
        fp[:, right] = ex[:, right]
        fpd[:, right] = 1j * k[:, None] * ex[:, right]
        fm[:, left] = 1.0 / ex[:, left]
        fmd[:, left] = -1j * k[:, None] / ex[:, left]

        if b > a:
            eb = np.exp(1j * k * b)
            ea = np.exp(-1j * k * a)
            xin = x[inner]
            fa, da, pf, pd = _rk4_sweep(Vf, k, b, a, eb, 1j * k * eb, xin[::-1], self.step)
            fp[:, inner] = pf[:, ::-1]
            fpd[:, inner] = pd[:, ::-1]
            fb, db, mf, md = _rk4_sweep(Vf, k, a, b, ea, -1j * k * ea, xin, self.step)
            fm[:, inner] = mf
            fmd[:, inner] = md
        else:
            # zero potential: both are plane waves everywhere
            fa, da = np.exp(1j * k * a), 1j * k * np.exp(1j * k * a)
            fb, db = np.exp(-1j * k * b), -1j * k * np.exp(-1j * k * b)
        f, d = _free_continue(fa, da, k, x[left] - a)
        fp[:, left], fpd[:, left] = f, d
        f, d = _free_continue(fb, db, k, x[right] - b)
        fm[:, right], fmd[:, right] = f, d
        self.fp, self.fpd, self.fm, self.fmd = fp, fpd, fm, fmd
        self.core = (a, b)

    def wronskian(self, i: int = None) -> np.ndarray:
        """``W(f_-, f_+)`` at node index ``i`` (default: the node nearest 0)."""
        if i is None:
            i = int(np.argmin(np.abs(self.x)))
        return self.fm[:, i] * self.fpd[:, i] - self.fmd[:, i] * self.fp[:, i]

    def h_plus(self):
        return self.fp * np.exp(-1j * np.outer(self.k, self.x))

    def h_minus(self):
        return self.fm * np.exp(1j * np.outer(self.k, self.x))


@dataclass(frozen=True, eq=False)
class JostPair:
    k: float
    f_plus: GridFn
    f_minus: GridFn
    f_plus_deriv: GridFn
    f_minus_deriv: GridFn


def jost_solve(V, k: float, side: str, grid: GridSpec, step: float = None):
    """``(f, f')`` of ``f_+`` (side ``'+'``) or ``f_-`` (side ``'-'``) on the grid."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if not np.isreal(k):
        raise JostError("only real wavenumbers are supported")
    tab = JostTable(V, [float(k)], grid.x, grid.L, step)
    if side == "+":
        return GridFn(grid, tab.fp[0]), GridFn(grid, tab.fpd[0])
    return GridFn(grid, tab.fm[0]), GridFn(grid, tab.fmd[0])


def jost_pair(V, k: float, grid: GridSpec, step: float = None) -> JostPair:
    tab = JostTable(V, [float(k)], grid.x, grid.L, step)
    return JostPair(float(k), GridFn(grid, tab.fp[0]), GridFn(grid, tab.fm[0]),
                    GridFn(grid, tab.fpd[0]), GridFn(grid, tab.fmd[0]))


def _wr(f, fd, g, gd):
    return f * gd - fd * g


def wronskians(V, k, L: float = 40.0, step: float = None, check: bool = True):
    """``(W, W_plus, W_minus)`` for real ``k > 0`` (scalar or array).

    ``W = W(f_-, f_+)`` and ``W_pm = W(f_mp(k), f_pm(-k))`` with
    ``f(-k) = conj f(k)``.  Each is evaluated at ``x = -L/2, 0, L/2`` and
    the three values must agree to ``1e-6 (1 + |W|)``.
    """
    kk = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(kk <= 0):
        raise ValueError("wronskians need k > 0")
    tab = JostTable(V, kk, np.array([-L / 2, 0.0, L / 2]), L, step)
    fm, fmd, fp, fpd = tab.fm, tab.fmd, tab.fp, tab.fpd
    W = _wr(fm, fmd, fp, fpd)
    Wp = _wr(fm, fmd, np.conj(fp), np.conj(fpd))
    Wm = _wr(fp, fpd, np.conj(fm), np.conj(fmd))
    if check:
        for name, arr in (("W", W), ("W_plus", Wp), ("W_minus", Wm)):
            spread = np.max(np.abs(arr - arr[:, 1:2]), axis=1)
            tol = 1e-6 * (1 + np.abs(W[:, 1]))
            if np.any(spread > tol):
                bad = int(np.argmax(spread - tol))
                raise WronskianError(
                    f"{name} is not x-independent at k={kk[bad]:g} "
                    f"(spread {spread[bad]:.2e}); reduce the ODE step")
    out = W[:, 1], Wp[:, 1], Wm[:, 1]
    if np.ndim(k) == 0:
        return tuple(complex(v[0]) for v in out)
    return out


@dataclass(frozen=True, eq=False)
class ScatteringTable:
    k: np.ndarray
    W: np.ndarray
    W_plus: np.ndarray
    W_minus: np.ndarray
    T: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray

    @property
    def unitarity_defect(self) -> np.ndarray:
        t2 = np.abs(self.T) ** 2
        return np.maximum(np.abs(t2 + np.abs(self.R_plus) ** 2 - 1),
                          np.abs(t2 + np.abs(self.R_minus) ** 2 - 1))

    def rows(self):
        for i in range(self.k.size):
            yield [self.k[i], self.W[i].real, self.W[i].imag, self.T[i].real,
                   self.T[i].imag, self.R_plus[i].real, self.R_plus[i].imag,
                   self.R_minus[i].real, self.R_minus[i].imag,
                   self.unitarity_defect[i]]

    def to_csv(self, path):
        header = ["k", "ReW", "ImW", "ReT", "ImT", "ReRp", "ImRp", "ReRm",
                  "ImRm", "unitarity_defect"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in self.rows():
                w.writerow([f"{v:.12e}" for v in row])


def scattering_coeffs(V, k_grid, L: float = 40.0, step: float = None) -> ScatteringTable:
    """``T = 2ik/W`` and ``R_pm = -+ W_pm / W`` on a positive k-grid."""
    k = np.asarray(k_grid, dtype=float)
    if k.ndim != 1 or np.any(k <= 0):
        raise ValueError("k_grid must be a 1-d array of positive wavenumbers")
    W, Wp, Wm = wronskians(V, k, L, step)
    if np.any(np.abs(W) < 1e-12):
        raise JostError("W(k) vanishes at a positive k: embedded eigenvalue "
                        "or failed integration")
    return ScatteringTable(k, W, Wp, Wm, 2j * k / W, -Wp / W, Wm / W)


def _kernel_from_table(tab: JostTable, xi, yi):
    W = tab.wronskian()
    T = 2j * tab.k / W
    hp, hm = tab.h_plus(), tab.h_minus()
    lo = np.minimum(xi, yi)
    hi = np.maximum(xi, yi)
    return hp[:, hi] * hm[:, lo] * T[:, None]


def psi_kernel(V, x, y, k, L: float = 40.0, step: float = None):
    """``psi(x, y, k) = h_+(max, k) h_-(min, k) T(k)``.

    ``x`` and ``y`` broadcast together; ``k`` may be an array of nonzero
    reals (negative values by conjugation).  The result has shape
    ``k.shape + broadcast(x, y).shape``.
    """
    xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    k = np.asarray(k, dtype=float)
    if np.any(k == 0):
        raise ValueError("psi_kernel needs k != 0")
    nodes, inv = np.unique(np.concatenate([xb.ravel(), yb.ravel()]), return_inverse=True)
    n = xb.size
    ka = np.abs(np.atleast_1d(k)).ravel()
    tab = JostTable(V, ka, nodes, L, step)
    vals = _kernel_from_table(tab, inv[:n], inv[n:])
    vals = np.where((np.atleast_1d(k).ravel() < 0)[:, None], np.conj(vals), vals)
    return vals.reshape(k.shape + xb.shape)


def _window_nodes(K, n):
    dk = 2 * K / n
    return -K + dk * (np.arange(n) + 0.5), dk


def _a_norm(g):
    # sum |g_hat(p)| dp with g_hat(p) = (1/2pi) sum g(k) exp(-ikp) dk on the
    # reciprocal grid dp = 2pi / (n dk)
    out = np.sum(np.abs(np.fft.fft(g, axis=-1)), axis=-1) / g.shape[-1]
    return float(out) if np.ndim(out) == 0 else out


def _psi_window(V, x, y, k_window, n_k, L):
    # psi on the symmetric window, last axis k; negative k by conjugation
    k, dk = _window_nodes(k_window, n_k)
    pos = psi_kernel(V, x, y, k[k > 0], L)
    pos = np.moveaxis(pos, 0, -1)
    return k, dk, np.concatenate([np.conj(pos[..., ::-1]), pos], axis=-1)


def a1_norm(V, x, y, k_window: float = 20.0, n_k: int = 2048, L: float = 40.0):
    """Windowed surrogate of the Wiener-algebra norm of ``k -> psi(x, y, k)``:
    ``|c| + ||psi - c||_A`` with ``c`` the mean of psi over the outer tenth of
    the window.  ``x`` and ``y`` broadcast; one Jost table serves all points."""
    k, _, psi = _psi_window(V, x, y, k_window, n_k, L)
    outer = np.abs(k) >= 0.9 * k_window
    c = psi[..., outer].mean(axis=-1)
    edge = np.maximum(np.abs(psi[..., 0] - c), np.abs(psi[..., -1] - c))
    if np.any(edge > 0.1):
        raise ValueError(f"increase k_window: |psi - c| = {np.max(edge):.3f} at the edge")
    out = np.abs(c) + _a_norm(psi - c[..., None])
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class DpsiReport:
    points: tuple
    norms: tuple
    ratios: tuple

    @property
    def constant(self) -> float:
        return max(self.ratios)


def dpsi_dk_weighted_bound(V, points, k_window: float = 20.0, n_k: int = 2048,
                           L: float = 40.0) -> DpsiReport:
    """Estimate C in ``||xi(k) d/dk psi(x, y, k)||_A <= C (1+|x|)(1+|y|)``
    over the sampled ``(x, y)`` points."""
    if isinstance(V, PotentialSpec) and not V.is_zero and V.beta_claim <= 2:
        raise ValueError("the derivative bound needs beta_claim > 2")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    k, dk, psi = _psi_window(V, pts[:, 0], pts[:, 1], k_window, n_k, L)
    d = np.gradient(psi, dk, axis=-1)
    norms = np.atleast_1d(_a_norm(xi_high()(k) * d))
    ratios = norms / ((1 + np.abs(pts[:, 0])) * (1 + np.abs(pts[:, 1])))
    return DpsiReport(tuple(map(tuple, pts.tolist())), tuple(norms.tolist()),
                      tuple(ratios.tolist()))


@dataclass(frozen=True)
class ResonanceReport:
    w0_abs: float
    threshold: float
    is_resonant: bool


RESONANCE_KS = (1e-2, 5e-3, 2.5e-3)


def resonance_check(V, m: float = 1.0, L: float = 40.0) -> ResonanceReport:
    """Classify the spectral edges via ``W(0+)``, extrapolated quadratically
    from ``k = 1e-2, 5e-3, 2.5e-3``."""
    if not m > 0:
        raise ValueError("mass must be positive")
    W, _, _ = wronskians(V, np.array(RESONANCE_KS), L)
    w0 = W[0] / 3.0 - 2.0 * W[1] + 8.0 * W[2] / 3.0
    if isinstance(V, PotentialSpec):
        l1 = V.l1_norm()
    else:
        xs = np.linspace(-L, L, 20001)
        l1 = float(np.trapezoid(np.abs(_potential_callable(V)(xs)), xs))
    thr = 1e-3 * max(1.0, l1)
    return ResonanceReport(float(abs(w0)), float(thr), bool(abs(w0) < thr))
