"""Operator norms between weighted spaces, power-law fits, the interpolation
inequality and sup bounds for oscillatory integrals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular, svdvals

from .core import GridSpec, chi_band, japanese
from .special import oscillatory_integral

__all__ = [
    "ConvergenceError",
    "OperatorSample",
    "op_norm_weighted",
    "f_space_gram",
    "f_space_op_norm",
    "spectral_diff_matrix",
    "DecayFit",
    "decay_fit",
    "InterpReport",
    "interp_check",
    "SupReport",
    "oscillatory_sup_check",
    "p_grid",
    "bump_amplitude",
    "power_amplitude",
    "report_record",
]


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OperatorSample:
    """Kernel values times dx at nodes ``x``, mapping weight ``sigma_in`` to
    ``-sigma_out``."""

    matrix: np.ndarray
    x: np.ndarray
    sigma_in: float
    sigma_out: float

    def __post_init__(self):
        K = np.asarray(self.matrix)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != np.size(self.x):
            raise ValueError("operator sample must be square and match the nodes")
        if not np.all(np.isfinite(K)):
            raise ValueError("operator sample has non-finite entries")

    def weighted(self) -> np.ndarray:
        w = japanese(np.asarray(self.x))
        return (w ** -self.sigma_out)[:, None] * self.matrix * (w ** -self.sigma_in)[None, :]


def op_norm_weighted(sample: OperatorSample, rtol: float = 1e-8,
                     max_iter: int = 10_000, block: int = 4) -> float:
    """Largest singular value of ``D_{-sigma_out} K D_{-sigma_in}`` by block
    power iteration on the normal matrix with a Rayleigh-Ritz step.

    The start block is the monomials ``1, s, s^2, ...`` in ``s = x / max|x|``:
    deterministic, and containing odd vectors (an all-ones start alone is
    orthogonal to odd singular vectors of symmetric kernels).  The block makes
    near-degenerate top singular values converge at the rate of the gap to
    the next singular value outside the block.
    """
    A = sample.weighted()
    x = np.asarray(sample.x, dtype=float)
    p = min(block, x.size)
    s = x / max(np.abs(x).max(), 1.0)
    Q, _ = np.linalg.qr(s[:, None] ** np.arange(p)[None, :])
    lam_old = 0.0
    for _ in range(max_iter):
        W = A.conj().T @ (A @ Q)
        H = Q.conj().T @ W
        theta, Y = eigh(0.5 * (H + H.conj().T))
        lam = float(theta[-1])
        if lam <= 0.0:
            return 0.0
        y = Y[:, -1]
        resid = np.linalg.norm(W @ y - lam * (Q @ y))
        if resid <= rtol * lam or abs(lam - lam_old) <= 1e-3 * rtol * lam:
            return float(np.sqrt(lam))
        lam_old = lam
        Q, _ = np.linalg.qr(W)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def spectral_diff_matrix(grid: GridSpec) -> np.ndarray:
    """Dense periodic spectral derivative (Nyquist mode dropped)."""
    ik = 1j * grid.fft_k
    ik[grid.N // 2] = 0.0
    col = np.fft.ifft(ik).real
    N = grid.N
    return col[(np.arange(N)[:, None] - np.arange(N)[None, :]) % N]


def f_space_gram(grid: GridSpec, sigma: float, D: np.ndarray = None) -> np.ndarray:
    """Gram matrix of the Hilbert form of the F_sigma norm,
    ``|w psi|^2 + |w psi'|^2 + |w psidot|^2`` with ``w = <x>^sigma``."""
    if D is None:
        D = spectral_diff_matrix(grid)
    w2 = japanese(grid.x) ** (2 * sigma)
    G1 = np.diag(w2) + D.T @ (w2[:, None] * D)
    N = grid.N
    G = np.zeros((2 * N, 2 * N))
    G[:N, :N] = G1
    G[N:, N:] = np.diag(w2)
    return G * grid.dx


def f_space_op_norm(A: np.ndarray, grid: GridSpec, sigma_in: float,
                    sigma_out: float, D: np.ndarray = None) -> float:
    """Norm of the ``2N x 2N`` matrix ``A`` (acting on stacked (psi, psidot))
    from F_{sigma_in} to F_{-sigma_out}."""
    if D is None:
        D = spectral_diff_matrix(grid)
    Lin = cholesky(f_space_gram(grid, sigma_in, D), lower=True)
    Lout = cholesky(f_space_gram(grid, -sigma_out, D), lower=True)
    B = Lout.T @ A
    # B Lin^{-T}: solve Lin X^T = B^T
    C = solve_triangular(Lin, B.T, lower=True).T
    return float(svdvals(C)[0])


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    log_prefactor: float
    rms_residual: float
    t_window: tuple
    n_samples: int


def decay_fit(times, values, min_samples: int = 6) -> DecayFit:
    """Least-squares line through ``(log t, log value)``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-d arrays of equal length")
    if t.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {t.size}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("decay_fit needs positive finite values")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be increasing")
    if t[0] < 1:
        raise ValueError("fits start at t >= 1")
    X = np.column_stack([np.log(t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(X, np.log(v), rcond=None)
    resid = np.log(v) - X @ coef
    return DecayFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2))),
                    (float(t[0]), float(t[-1])), int(t.size))


@dataclass(frozen=True)
class InterpReport:
    sigma0: float
    sigma1: float
    M0: float
    M1: float
    thetas: tuple
    values: tuple
    bounds: tuple

    @property
    def ok(self) -> bool:
        return all(v <= b * (1 + 1e-6) for v, b in zip(self.values, self.bounds))


def interp_check(op_builder, sigma0: float, sigma1: float, thetas) -> InterpReport:
    """Check ``M(sigma_theta) <= M0^(1-theta) M1^theta``; ``op_builder(sigma)``
    returns the OperatorSample with weights ``sigma`` on both sides."""
    if sigma0 == sigma1:
        raise ValueError("sigma0 and sigma1 must differ")
    M0 = op_norm_weighted(op_builder(sigma0))
    M1 = op_norm_weighted(op_builder(sigma1))
    vals, bounds = [], []
    for th in thetas:
        s = (1 - th) * sigma0 + th * sigma1
        vals.append(op_norm_weighted(op_builder(s)))
        bounds.append(M0 ** (1 - th) * M1 ** th)
    return InterpReport(sigma0, sigma1, M0, M1, tuple(float(t) for t in thetas),
                        tuple(vals), tuple(bounds))


def p_grid(t: float, k_max: float, factor: float = 2.0) -> np.ndarray:
    """Uniform grid on ``[-factor t, factor t]`` with spacing at most pi/(2 k_max)."""
    half = max(factor * abs(t), 1.0)
    n = int(np.ceil(2 * half / (np.pi / (2 * k_max)))) + 1
    return np.linspace(-half, half, n)


@dataclass(frozen=True)
class SupReport:
    times: tuple
    sups: tuple
    fit: DecayFit
    l1_amplitude: float


def oscillatory_sup_check(k, amplitude, t_list, m: float = 1.0, sign: int = 1,
                          p_factor: float = 2.0, chunk: int = 512) -> SupReport:
    """For each t, ``sup_p |int amplitude(k) exp(i(sign t omega + k p)) dk|``
    over ``p_grid(t)``, then a power-law fit of the sups."""
    k = np.asarray(k, dtype=float)
    amp = np.asarray(amplitude)
    k_max = np.abs(k).max()
    sups = []
    for t in t_list:
        ps = p_grid(t, k_max, p_factor)
        best = 0.0
        for s in range(0, ps.size, chunk):
            vals = oscillatory_integral(k, amp, sign * t, ps[s:s + chunk], m)
            best = max(best, float(np.abs(vals).max()))
        sups.append(best)
    h = k[1] - k[0]
    l1 = float(np.sum(np.abs(amp)) * h)
    return SupReport(tuple(float(t) for t in t_list), tuple(sups),
                     decay_fit(t_list, sups), l1)


def bump_amplitude(m: float = 1.0, n: int = 2001):
    """Smooth low-energy bump: a chi band on ``omega^2 in [0, m^2 + 3]``
    whose upper ramp spans the whole band above threshold."""
    band = chi_band(0.0, m * m + 3.0, m * m, 3.0)
    ks = band.k_support(m)
    k = np.linspace(-ks, ks, n)
    return k, band(k * k + m * m)


def power_amplitude(alpha: float = 3.0, k_hi: float = 40.0, n: int = 8001,
                    eta=None, g=None):
    """``eta(k) g(k) k^-alpha`` on ``[1, k_hi]``; ``eta`` and ``g`` default to 1."""
    if not alpha > 1.5:
        raise ValueError("alpha must exceed 3/2")
    k = np.linspace(1.0, k_hi, n)
    amp = k ** -alpha
    if eta is not None:
        amp = amp * eta(k)
    if g is not None:
        amp = amp * g(k)
    return k, amp


def report_record(experiment: str, params: dict, fit: DecayFit, passed: bool) -> dict:
    """JSON-ready record ``{experiment, params, exponent, residual, pass}``."""
    return {"experiment": experiment, "params": params,
            "exponent": fit.exponent, "residual": fit.rms_residual, "pass": bool(passed)}
