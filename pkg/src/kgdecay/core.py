"""Grids, sampled functions, Klein-Gordon states, potentials, weighted norms
and the smooth cutoffs used by every other module.

Conventions
-----------
* The spatial grid is uniform on ``[-L, L)`` with ``N`` points (``N`` even), so
  ``x = 0`` is always a node.
* The Fourier transform is ``f_hat(k) = int exp(-i k y) f(y) dy`` with inverse
  ``f(x) = (1/2pi) int exp(i k x) f_hat(k) dk``; on the grid both are realised
  by the FFT with the rectangle rule in ``x`` (weight ``dx``) and in ``k``
  (weight ``dk = pi / L``).
* Potentials follow ``H = -(d^2/dx^2 + V)``: a positive ``V`` is attractive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "GridSpec",
    "GridFn",
    "KGState",
    "PotentialSpec",
    "WeightedNormKind",
    "Cutoff",
    "make_grid",
    "sample_potential",
    "decay_constant",
    "weighted_norm",
    "japanese",
    "smoothstep",
    "chi_band",
    "zeta_high",
    "xi_high",
    "cutoff",
    "fourier_transform",
    "fft_forward",
    "fft_inverse",
    "derivative",
]


class GridError(ValueError):
    pass


class PotentialError(ValueError):
    pass


# --------------------------------------------------------------------------
# grids and sampled functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform spatial grid on ``[-L, L)`` plus a symmetric quadrature k-grid.

    The quadrature k-grid has ``2 * (n_k // 2) + 1`` nodes on
    ``[-k_max, k_max]`` so that ``k = 0`` is a node.  It is independent of the
    FFT wavenumbers ``fft_k`` that belong to the spatial grid.
    """

    L: float
    N: int
    k_max: float = 20.0
    n_k: int = 1024

    def __post_init__(self):
        if int(self.N) != self.N or self.N % 2:
            raise GridError(f"N must be an even integer, got {self.N}")
        if self.N < 16:
            raise GridError(f"N must be >= 16, got {self.N}")
        if not self.L > 0:
            raise GridError(f"L must be positive, got {self.L}")
        if not self.k_max > 0:
            raise GridError(f"k_max must be positive, got {self.k_max}")
        if self.n_k < 2:
            raise GridError(f"n_k must be >= 2, got {self.n_k}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dk_fft(self) -> float:
        return np.pi / self.L

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def fft_k(self) -> np.ndarray:
        """FFT wavenumbers in numpy ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.N, self.dx)

    @cached_property
    def k(self) -> np.ndarray:
        """Symmetric quadrature nodes on ``[-k_max, k_max]`` containing 0."""
        return np.linspace(-self.k_max, self.k_max, 2 * (self.n_k // 2) + 1)

    @property
    def weight(self) -> np.ndarray:
        return japanese(self.x)

    def index_of(self, x0: float) -> int:
        """Index of the node nearest to ``x0``."""
        return int(np.argmin(np.abs(self.x - x0)))


def make_grid(L: float, N: int, k_max: float = 20.0, n_k: int = 1024) -> GridSpec:
    return GridSpec(float(L), int(N) if int(N) == N else N, float(k_max), int(n_k))


def japanese(x):
    """The weight <x> = (1 + x^2)^(1/2)."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True, eq=False)
class GridFn:
    """Complex samples of a function on a grid.

    ``space`` is ``"x"`` for physical samples and ``"k"`` for samples at the
    FFT wavenumbers ``grid.fft_k`` (numpy ordering).
    """

    grid: GridSpec
    values: np.ndarray
    space: str = "x"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise ValueError(
                f"values have shape {v.shape}, grid expects ({self.grid.N},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFn values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: GridSpec, f) -> "GridFn":
        return cls(grid, f(grid.x))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "GridFn":
        return cls(grid, np.zeros(grid.N))

    def _check(self, other: "GridFn"):
        if other.grid != self.grid or other.space != self.space:
            raise ValueError("grid functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return GridFn(self.grid, self.values + other.values, self.space)

    def __sub__(self, other):
        self._check(other)
        return GridFn(self.grid, self.values - other.values, self.space)

    def __mul__(self, c):
        return GridFn(self.grid, c * self.values, self.space)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFn(self.grid, -self.values, self.space)


@dataclass(frozen=True, eq=False)
class KGState:
    """The pair (psi, psi_dot) evolved by the first-order system."""

    psi: GridFn
    psidot: GridFn

    def __post_init__(self):
        if self.psi.grid != self.psidot.grid:
            raise ValueError("psi and psidot must share a grid")

    @classmethod
    def from_arrays(cls, grid: GridSpec, psi, psidot=None) -> "KGState":
        if psidot is None:
            psidot = np.zeros(grid.N)
        return cls(GridFn(grid, psi), GridFn(grid, psidot))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "KGState":
        return cls.from_arrays(grid, np.zeros(grid.N), np.zeros(grid.N))

    @property
    def grid(self) -> GridSpec:
        return self.psi.grid

    def as_array(self) -> np.ndarray:
        """Shape ``(2, N)`` complex array."""
        return np.stack([self.psi.values, self.psidot.values])

    @classmethod
    def from_stacked(cls, grid: GridSpec, arr) -> "KGState":
        return cls.from_arrays(grid, arr[0], arr[1])

    def l2(self) -> float:
        """Plain L2 + L2 norm (Hilbert sum), used for cross-checks."""
        dx = self.grid.dx
        return float(np.sqrt(dx * (np.sum(np.abs(self.psi.values) ** 2)
                                   + np.sum(np.abs(self.psidot.values) ** 2))))

    def __add__(self, other):
        return KGState(self.psi + other.psi, self.psidot + other.psidot)

    def __sub__(self, other):
        return KGState(self.psi - other.psi, self.psidot - other.psidot)

    def __mul__(self, c):
        return KGState(self.psi * c, self.psidot * c)

    __rmul__ = __mul__

    def __neg__(self):
        return KGState(-self.psi, -self.psidot)


# --------------------------------------------------------------------------
# potentials
# --------------------------------------------------------------------------

_KINDS = ("zero", "sech_squared", "gaussian", "power")


@dataclass(frozen=True)
class PotentialSpec:
    """Symbolic potential with its claimed decay exponent.

    ``sech_squared``: ``c sech(x)^2``; ``gaussian``: ``c exp(-(x/w)^2)``;
    ``power``: ``c <x>^(-beta)``.  Exponentially decaying kinds default to
    ``beta_claim = 10``; ``power`` defaults to its own ``beta``.
    """

    kind: str = "zero"
    c: float = 0.0
    w: float = 1.0
    beta: float = 0.0
    beta_claim: float = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise PotentialError(f"unknown potential kind {self.kind!r}")
        if self.kind == "gaussian" and not self.w > 0:
            raise PotentialError("gaussian width must be positive")
        if self.kind == "power" and not self.beta > 0:
            raise PotentialError("power potential needs beta > 0")
        if self.beta_claim is None:
            claim = self.beta if self.kind == "power" else 10.0
            object.__setattr__(self, "beta_claim", float(claim))

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def sech_squared(cls, c: float, beta_claim: float = None) -> "PotentialSpec":
        return cls("sech_squared", c=float(c), beta_claim=beta_claim)

    @classmethod
    def gaussian(cls, c: float, w: float = 1.0, beta_claim: float = None):
        return cls("gaussian", c=float(c), w=float(w), beta_claim=beta_claim)

    @classmethod
    def power(cls, c: float, beta: float, beta_claim: float = None):
        return cls("power", c=float(c), beta=float(beta), beta_claim=beta_claim)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.c == 0.0

    def scaled(self, factor: float) -> "PotentialSpec":
        return PotentialSpec(self.kind, self.c * factor, self.w, self.beta,
                             self.beta_claim)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "sech_squared":
            return self.c / np.cosh(np.clip(x, -350, 350)) ** 2
        if self.kind == "gaussian":
            return self.c * np.exp(-(x / self.w) ** 2)
        return self.c * japanese(x) ** (-self.beta)

    def l1_norm(self) -> float:
        """Exact integral of |V| over the real line."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "sech_squared":
            return 2.0 * abs(self.c)
        if self.kind == "gaussian":
            return abs(self.c) * self.w * np.sqrt(np.pi)
        if self.beta <= 1:
            return np.inf
        from scipy.special import beta as beta_fn
        return abs(self.c) * beta_fn(0.5, (self.beta - 1) / 2)


def decay_constant(spec: PotentialSpec, grid: GridSpec) -> float:
    """Smallest C with |V(x)| <= C <x>^(-beta_claim) on the grid.

    Raises when the weighted profile ``|V| <x>^beta_claim`` still grows in the
    outer half of the domain, i.e. the claimed exponent is too large.
    """
    x = grid.x
    profile = np.abs(spec(x)) * japanese(x) ** spec.beta_claim
    C = float(profile.max())
    if C == 0.0:
        return 0.0
    half = profile[np.abs(x) >= grid.L / 2]
    inner = profile[np.abs(x) <= grid.L / 2].max()
    if half.max() > inner * (1 + 1e-9):
        raise PotentialError(
            f"|V(x)| <x>^{spec.beta_claim} keeps growing towards the domain "
            f"edge; beta_claim is too large for a {spec.kind} potential")
    return C


def sample_potential(spec: PotentialSpec, grid: GridSpec,
                     return_constant: bool = False):
    C = decay_constant(spec, grid)
    fn = GridFn(grid, spec(grid.x))
    if return_constant:
        return fn, C
    return fn


# --------------------------------------------------------------------------
# Fourier transform and derivatives
# --------------------------------------------------------------------------

def _phase(grid: GridSpec) -> np.ndarray:
    # the grid starts at -L, not 0
    return np.exp(1j * grid.fft_k * grid.L)


def fft_forward(values, grid: GridSpec, axis: int = -1) -> np.ndarray:
    """``sum_n exp(-i k x_n) f(x_n) dx`` at ``grid.fft_k``."""
    ph = _phase(grid)
    shape = [1] * np.ndim(values)
    shape[axis] = grid.N
    return np.fft.fft(values, axis=axis) * grid.dx * ph.reshape(shape)


def fft_inverse(values, grid: GridSpec, axis: int = -1) -> np.ndarray:
    """``(1/2pi) sum_j exp(i k_j x) f_hat(k_j) dk``."""
    ph = _phase(grid)
    shape = [1] * np.ndim(values)
    shape[axis] = grid.N
    return np.fft.ifft(values / ph.reshape(shape), axis=axis) / grid.dx


def fourier_transform(fn: GridFn, direction: str = "forward") -> GridFn:
    if direction == "forward":
        if fn.space != "x":
            raise ValueError("forward transform expects physical samples")
        return GridFn(fn.grid, fft_forward(fn.values, fn.grid), "k")
    if direction == "inverse":
        if fn.space != "k":
            raise ValueError("inverse transform expects spectral samples")
        return GridFn(fn.grid, fft_inverse(fn.values, fn.grid), "x")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def derivative(values, grid: GridSpec, method: str = "spectral", axis: int = -1):
    """First derivative along ``axis``; ``spectral`` drops the Nyquist mode,
    ``fd2`` is the periodic centred difference."""
    values = np.asarray(values)
    if method == "spectral":
        ik = 1j * grid.fft_k
        ik[grid.N // 2] = 0.0
        shape = [1] * values.ndim
        shape[axis] = grid.N
        out = np.fft.ifft(np.fft.fft(values, axis=axis) * ik.reshape(shape), axis=axis)
        return out.real if np.isrealobj(values) else out
    if method == "fd2":
        return (np.roll(values, -1, axis) - np.roll(values, 1, axis)) / (2 * grid.dx)
    raise ValueError(f"unknown derivative method {method!r}")


# --------------------------------------------------------------------------
# weighted norms
# --------------------------------------------------------------------------

_SPACES = ("F_sigma", "L2_sigma", "H1_sigma", "L1_pair_sigma", "Linf_pair_sigma")


@dataclass(frozen=True)
class WeightedNormKind:
    space: str
    sigma: float = 0.0

    def __post_init__(self):
        if self.space not in _SPACES:
            raise ValueError(f"unknown norm space {self.space!r}")
        if not np.isfinite(self.sigma):
            raise ValueError("sigma must be finite")


def _lp(values, w, dx, p):
    a = np.abs(values) * w
    if p == 1:
        return float(np.sum(a) * dx)
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * dx))
    return float(np.max(a)) if a.size else 0.0


def _sobolev(values, grid, sigma, p, derivative_method):
    w = grid.weight ** sigma
    d = derivative(values, grid, derivative_method)
    return _lp(values, w, grid.dx, p) + _lp(d, w, grid.dx, p)


def weighted_norm(obj: Union[GridFn, KGState], kind: WeightedNormKind,
                  derivative_method: str = "spectral") -> float:
    """Rectangle-rule weighted Sobolev norms.

    ``L2_sigma`` and ``H1_sigma`` take a grid function; the pair spaces
    ``F_sigma = H1_sigma + L2_sigma``, ``L1_pair_sigma = W11_sigma + L1_sigma``
    and ``Linf_pair_sigma = W1inf_sigma + Linf_sigma`` take a state (a grid
    function is treated as the state ``(f, 0)``).  Sums of component norms
    are used, as in the definition of ``W^{l,p}_sigma``.
    """
    s = kind.sigma
    if kind.space in ("L2_sigma", "H1_sigma"):
        fn = obj.psi if isinstance(obj, KGState) else obj
        if kind.space == "L2_sigma":
            return _lp(fn.values, fn.grid.weight ** s, fn.grid.dx, 2)
        return _sobolev(fn.values, fn.grid, s, 2, derivative_method)
    if isinstance(obj, GridFn):
        obj = KGState(obj, GridFn.zeros(obj.grid))
    grid = obj.grid
    p = {"F_sigma": 2, "L1_pair_sigma": 1, "Linf_pair_sigma": np.inf}[kind.space]
    return (_sobolev(obj.psi.values, grid, s, p, derivative_method)
            + _lp(obj.psidot.values, grid.weight ** s, grid.dx, p))


# --------------------------------------------------------------------------
# cutoffs
# --------------------------------------------------------------------------

def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1,
    ``exp(-1/u) / (exp(-1/u) + exp(-1/(1-u)))`` in between."""
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    if np.any(mid):
        um = u[mid]
        with np.errstate(over="ignore"):
            a = np.exp(-1.0 / um)
            b = np.exp(-1.0 / (1.0 - um))
        out = out.astype(float)
        out[mid] = a / (a + b)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Cutoff:
    """A smooth spectral cutoff.

    * ``chi_band``: argument is ``omega^2 = k^2 + m^2``; rises over
      ``[lo, lo + ramp_lo]``, equals 1 up to ``hi - ramp_hi`` and vanishes from
      ``hi`` on.
    * ``zeta_high``: argument ``omega^2``; 0 below ``m^2 + 1``, 1 above ``m^2 + 2``.
    * ``xi_high``: argument ``k``; 0 for ``|k| <= 1``, 1 for ``|k| >= 2``.
    """

    kind: str
    lo: float = 0.0
    hi: float = np.inf
    ramp_lo: float = 1.0
    ramp_hi: float = 1.0

    def __post_init__(self):
        if self.kind not in ("chi_band", "zeta_high", "xi_high"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if self.kind == "chi_band":
            if not self.lo < self.hi:
                raise ValueError("chi_band needs lo < hi")
            if self.ramp_lo <= 0 or self.ramp_hi <= 0:
                raise ValueError("ramps must be positive")
            if self.ramp_lo + self.ramp_hi > self.hi - self.lo + 1e-12:
                raise ValueError("ramps overlap: band too narrow")

    def __call__(self, arg):
        arg = np.asarray(arg, dtype=float)
        if self.kind == "xi_high":
            return smoothstep(np.abs(arg) - 1.0)
        if self.kind == "zeta_high":
            return smoothstep(arg - self.lo)
        rise = smoothstep((arg - self.lo) / self.ramp_lo)
        fall = smoothstep((self.hi - arg) / self.ramp_hi)
        return rise * fall

    @property
    def compact(self) -> bool:
        return self.kind == "chi_band"

    def k_support(self, m: float) -> float:
        """Largest |k| where the band (as a function of k^2 + m^2) is nonzero."""
        if not self.compact:
            return np.inf
        return float(np.sqrt(max(self.hi - m * m, 0.0)))


def chi_band(lo: float, hi: float, ramp_lo: float = None, ramp_hi: float = None) -> Cutoff:
    width = hi - lo
    ramp_lo = width / 4 if ramp_lo is None else ramp_lo
    ramp_hi = width / 4 if ramp_hi is None else ramp_hi
    return Cutoff("chi_band", float(lo), float(hi), float(ramp_lo), float(ramp_hi))


def zeta_high(m: float) -> Cutoff:
    return Cutoff("zeta_high", lo=m * m + 1.0)


def xi_high() -> Cutoff:
    return Cutoff("xi_high")


def cutoff(kind: Cutoff, argument):
    return kind(argument)
