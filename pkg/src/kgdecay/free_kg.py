"""Free Klein-Gordon propagator.

The free group acts on the Fourier side as multiplication by

    M_t(k) = [[cos(t w),      sin(t w) / w],
              [-w sin(t w),   cos(t w)    ]],   w = sqrt(k^2 + m^2),

so on the periodic grid it is diagonalised exactly by the FFT.
"""
from __future__ import annotations

import numpy as np

from .core import Cutoff, GridSpec, KGState, fft_forward, fft_inverse, smoothstep, zeta_high
from .special import bessel_j0, oscillatory_integral

__all__ = [
    "DistributionalKernelError",
    "AliasingError",
    "mt_matrix",
    "evolve_free",
    "evolve_free_array",
    "free_evolution_matrix",
    "free_kernel",
    "green_u",
    "free_resolvent_kernel",
    "bj_operator_matrix",
    "rolloff",
    "check_light_cone",
]


class DistributionalKernelError(ValueError):
    pass


class AliasingError(ValueError):
    pass


def omega(k, m):
    return np.sqrt(np.square(k) + m * m)


def mt_matrix(k, t: float, m: float) -> np.ndarray:
    """Multiplier matrix, shape ``k.shape + (2, 2)``."""
    if not m > 0:
        raise ValueError("mass must be positive")
    w = omega(np.asarray(k, dtype=float), m)
    c, s = np.cos(t * w), np.sin(t * w)
    out = np.empty(w.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = s / w
    out[..., 1, 0] = -w * s
    out[..., 1, 1] = c
    return out


def rolloff(k, k_top: float):
    """Smooth high-frequency taper: 1 for |k| <= k_top/2, 0 for |k| >= k_top."""
    return 1.0 - smoothstep((np.abs(k) - 0.5 * k_top) / (0.5 * k_top))


def check_light_cone(grid: GridSpec, t: float, support: float = 0.0, margin: float = 5.0):
    """Periodic evolution is alias-free only while the light cone fits in the box."""
    if grid.L < abs(t) + support + margin:
        raise AliasingError(
            f"half-width L={grid.L} too small for t={t}: need L >= "
            f"{abs(t) + support + margin:g} (finite propagation speed 1)")


def _band_multiplier(grid, m, band):
    if band is None:
        return 1.0
    return band(grid.fft_k ** 2 + m * m)


def evolve_free_array(arr, t: float, grid: GridSpec, m: float, band: Cutoff = None):
    """Evolve stacked ``(..., 2, N)`` data; ``t`` may be an array of times,
    in which case a leading time axis is added."""
    arr = np.asarray(arr)
    hat = fft_forward(arr, grid)
    k = grid.fft_k
    mult = _band_multiplier(grid, m, band)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    M = mt_matrix(k[None, :], ts[:, None], m)  # (nt, N, 2, 2)
    M = np.moveaxis(M, 1, -1)  # (nt, 2, 2, N)
    shape = (ts.size,) + (1,) * (arr.ndim - 2)
    M = M.reshape(shape + (2, 2, grid.N))
    out_hat = np.einsum("...ijn,...jn->...in", M, hat[None] * mult)
    out = fft_inverse(out_hat, grid)
    return out if np.ndim(t) else out[0]


def evolve_free(state: KGState, t: float, m: float, band: Cutoff = None) -> KGState:
    """Exact discrete free evolution ``exp(-itK_0) band(K_0^2)`` on the grid."""
    grid = state.grid
    return KGState.from_stacked(grid, evolve_free_array(state.as_array(), t, grid, m, band))


def free_evolution_matrix(grid: GridSpec, t: float, m: float, band: Cutoff = None) -> np.ndarray:
    """Dense ``2N x 2N`` real matrix of the discrete free flow acting on
    ``(psi, psidot)``."""
    N = grid.N
    k = grid.fft_k
    w = omega(k, m)
    mult = _band_multiplier(grid, m, band) * np.ones(N)
    blocks = []
    for sym in (np.cos(t * w), np.sin(t * w) / w, -w * np.sin(t * w)):
        col = np.fft.ifft(sym * mult).real
        blocks.append(col[(np.arange(N)[:, None] - np.arange(N)[None, :]) % N])
    C, S, W = blocks
    return np.block([[C, S], [W, C]])


_ENTRY = {"11": (0, 0), "12": (0, 1), "21": (1, 0), "22": (1, 1)}


def free_kernel(t: float, x, y, m: float, grid: GridSpec, band: Cutoff = None,
                entries=None, rule="trapezoid"):
    """Pointwise kernel ``(1/2pi) int M_t(k) exp(i (y - x) k) band(k^2+m^2) dk``
    on the quadrature grid ``grid.k``.

    Without a band only the (1,2) entry exists as a function; it is computed
    with a smooth taper over ``[k_max/2, k_max]``, which mollifies the kernel
    on a scale ~1/k_max and leaves it unchanged to high accuracy away from
    the light cone.  A non-compact band (``zeta_high``) is tapered the same
    way.  Returns the scalar (1,2) entry when ``entries == "12"`` (the default
    without a band), otherwise a ``(..., 2, 2)`` array.
    """
    if entries is None:
        entries = "12" if band is None else "all"
    if band is None and entries != "12":
        raise DistributionalKernelError(
            "kernel entry is distributional without a cutoff")
    k = grid.k
    amp_band = np.ones_like(k) if band is None else band(k * k + m * m)
    if band is None or not band.compact:
        amp_band = amp_band * rolloff(k, grid.k_max)
    p = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    M = mt_matrix(k, t, m)
    wanted = ["12"] if entries == "12" else list(_ENTRY)
    vals = {}
    for e in wanted:
        i, j = _ENTRY[e]
        vals[e] = oscillatory_integral(k, M[:, i, j] * amp_band, 0.0, p, m, rule) / (2 * np.pi)
    if entries == "12":
        return vals["12"]
    out = np.empty(np.shape(p) + (2, 2), dtype=complex)
    for e, (i, j) in _ENTRY.items():
        out[..., i, j] = vals[e]
    return out


def green_u(t: float, r, m: float):
    """Closed-form (1,2) kernel ``(1/2) theta(t - r) J0(m sqrt(t^2 - r^2))``;
    the light-cone value is the jump midpoint 1/4."""
    if not t > 0:
        raise ValueError("green_u needs t > 0")
    r = np.abs(np.asarray(r, dtype=float))
    inside = r < t
    arg = m * np.sqrt(np.where(inside, t * t - r * r, 0.0))
    out = np.where(inside, 0.5 * bessel_j0(arg), 0.0)
    out = np.where(r == t, 0.25, out)
    return out if out.ndim else float(out)


def _sqrt_upper(z):
    s = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def free_resolvent_kernel(omega_: complex, x, y, m: float) -> np.ndarray:
    """Kernel of ``(K_0 - omega)^{-1}``.

    Returns ``[[0, 0], [-i, 0]] + [[w, i], [-i w^2, w]] R_0(w^2 - m^2, x, y)``
    with ``R_0(z) = -exp(i sqrt(z)|x-y|) / (2 i sqrt(z))``, ``Im sqrt(z) >= 0``.
    The constant matrix stands for the coefficient of ``delta(x - y)``.
    Boundary values on the continuous spectrum are requested as
    ``omega +- i eta`` with small ``eta > 0``.
    """
    w = complex(omega_)
    if w.imag == 0.0 and abs(w.real) >= m:
        raise ValueError(
            "omega lies on the continuous spectrum; add +-i*eta with eta > 0")
    z = w * w - m * m
    sq = _sqrt_upper(z)
    r = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    R0 = -np.exp(1j * sq * r) / (2j * sq)
    out = np.empty(np.shape(r) + (2, 2), dtype=complex)
    out[..., 0, 0] = w * R0
    out[..., 0, 1] = 1j * R0
    out[..., 1, 0] = -1j + -1j * w * w * R0
    out[..., 1, 1] = w * R0
    return out


def bj_operator_matrix(j: int, t: float, m: float, grid: GridSpec, k_top: float = None) -> np.ndarray:
    """Dense sample (kernel values times dx) of the high-energy operator

        B_j(x - y, t) = int exp(i w t) exp(i k (x - y)) zeta(k^2 + m^2) w^j dk.

    The multiplier is tapered to zero below the Nyquist wavenumber (default
    ``k_top = 0.9 pi / dx``); without the taper the band edge of the periodic
    grid adds a slowly decaying artefact that the continuum operator lacks.
    """
    if j not in (-1, 0, 1):
        raise ValueError("j must be -1, 0 or 1")
    check_light_cone(grid, t)
    N = grid.N
    k = grid.fft_k
    if k_top is None:
        k_top = 0.9 * np.pi / grid.dx
    w = omega(k, m)
    mult = (2 * np.pi * np.exp(1j * w * t) * zeta_high(m)(k * k + m * m)
            * w ** j * rolloff(k, k_top))
    col = np.fft.ifft(mult)
    return col[(np.arange(N)[:, None] - np.arange(N)[None, :]) % N]
