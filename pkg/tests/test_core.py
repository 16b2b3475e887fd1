import numpy as np
import pytest
from hypothesis import given, strategies as st

from kgdecay.core import (Cutoff, GridFn, GridSpec, KGState, PotentialSpec, WeightedNormKind,
                          chi_band, cutoff, decay_constant, derivative, fourier_transform,
                          make_grid, sample_potential, smoothstep, weighted_norm, xi_high,
                          zeta_high)
from kgdecay.core import GridError, PotentialError


def test_grid_basics():
    g = make_grid(10, 64)
    assert g.dx == pytest.approx(20 / 64)
    assert g.x[0] == -10 and 0.0 in g.x
    assert g.k.size % 2 == 1 and g.k[g.k.size // 2] == 0.0


@pytest.mark.parametrize("N", [15, 8, 17])
def test_grid_rejects_bad_N(N):
    with pytest.raises(GridError):
        GridSpec(10.0, N)


def test_gridfn_shape_and_finiteness():
    g = make_grid(5, 16)
    with pytest.raises(ValueError):
        GridFn(g, np.zeros(8))
    with pytest.raises(ValueError):
        GridFn(g, np.full(16, np.nan))


def test_state_arithmetic():
    g = make_grid(5, 16)
    a = KGState.from_arrays(g, np.ones(16), np.arange(16.0))
    b = 2 * a - a
    assert np.allclose(b.as_array(), a.as_array())
    assert (a - a).l2() == 0.0


def test_potential_kinds():
    x = np.array([0.0, 1.0])
    assert np.allclose(PotentialSpec.sech_squared(2.0)(x), 2 / np.cosh(x) ** 2)
    assert PotentialSpec.zero().is_zero
    assert PotentialSpec.sech_squared(1.0).l1_norm() == pytest.approx(2.0)
    with pytest.raises(PotentialError):
        PotentialSpec("cubic")
    with pytest.raises(PotentialError):
        PotentialSpec.power(1.0, -1.0)


def test_power_l1_matches_quadrature():
    V = PotentialSpec.power(1.0, 3.0)
    x = np.linspace(-2000, 2000, 800001)
    assert V.l1_norm() == pytest.approx(np.trapezoid(np.abs(V(x)), x), rel=1e-5)


def test_decay_constant():
    g = make_grid(40, 512)
    assert decay_constant(PotentialSpec.power(2.0, 3.0), g) == pytest.approx(2.0)
    with pytest.raises(PotentialError):
        decay_constant(PotentialSpec.power(1.0, 2.0, beta_claim=3.0), g)
    fn, C = sample_potential(PotentialSpec.sech_squared(1.0), g, return_constant=True)
    assert C > 0 and np.allclose(fn.values.real, 1 / np.cosh(g.x) ** 2)


def test_fourier_transform_of_gaussian():
    g = make_grid(20, 256)
    f = GridFn(g, np.exp(-g.x ** 2 / 2))
    fh = fourier_transform(f)
    exact = np.sqrt(2 * np.pi) * np.exp(-g.fft_k ** 2 / 2)
    assert np.max(np.abs(fh.values - exact)) < 1e-10
    back = fourier_transform(fh, "inverse")
    assert np.max(np.abs(back.values - f.values)) < 1e-12


@given(st.integers(0, 2 ** 31 - 1))
def test_parseval(seed):
    g = make_grid(7.5, 64)
    r = np.random.default_rng(seed)
    v = r.normal(size=64) + 1j * r.normal(size=64)
    fh = fourier_transform(GridFn(g, v)).values
    lhs = np.sum(np.abs(v) ** 2) * g.dx
    rhs = np.sum(np.abs(fh) ** 2) * g.dk_fft / (2 * np.pi)
    assert abs(lhs - rhs) <= 1e-10 * lhs


def test_derivatives_agree_on_smooth_data():
    g = make_grid(20, 512)
    f = np.exp(-g.x ** 2)
    exact = -2 * g.x * f
    assert np.max(np.abs(derivative(f, g) - exact)) < 1e-10
    assert np.max(np.abs(derivative(f, g, "fd2") - exact)) < 1e-2


def test_weighted_norms_simple_cases():
    g = make_grid(20, 512)
    one = KGState.from_arrays(g, np.exp(-g.x ** 2))
    l2 = weighted_norm(one, WeightedNormKind("L2_sigma", 0.0))
    assert l2 == pytest.approx(np.sqrt(np.sqrt(np.pi / 2)), rel=1e-10)
    sup = weighted_norm(one, WeightedNormKind("Linf_pair_sigma", 0.0))
    assert sup == pytest.approx(1 + np.max(np.abs(2 * g.x * np.exp(-g.x ** 2))), rel=1e-6)
    with pytest.raises(ValueError):
        WeightedNormKind("L3_sigma")


@given(st.floats(-3, 3), st.floats(0, 3), st.integers(0, 1000))
def test_F_norm_monotone_in_sigma(s1, gap, seed):
    g = make_grid(10, 64)
    rng = np.random.default_rng(seed)
    st_ = KGState.from_arrays(g, rng.normal(size=64), rng.normal(size=64))
    a = weighted_norm(st_, WeightedNormKind("F_sigma", s1))
    b = weighted_norm(st_, WeightedNormKind("F_sigma", s1 + gap))
    assert a <= b * (1 + 1e-12)


@given(st.floats(-5, 10))
def test_cutoffs_in_unit_interval(u):
    for c, arg in ((chi_band(0, 5, 1, 1), u), (zeta_high(1.0), u), (xi_high(), u)):
        v = cutoff(c, arg)
        assert 0.0 <= v <= 1.0


def test_zeta_transition_band():
    z = zeta_high(1.0)
    w = np.linspace(0, 6, 601)
    prod = z(w) * (1 - z(w))
    assert np.all(prod[(w <= 2.0) | (w >= 3.0)] == 0.0)
    assert np.all(prod[(w > 2.05) & (w < 2.95)] > 0)


def test_smoothstep_and_chi():
    assert smoothstep(0.5) == pytest.approx(0.5)
    c = chi_band(1.0, 5.0, 1.0, 1.0)
    assert c(3.0) == 1.0 and c(0.5) == 0.0 and c(5.0) == 0.0
    assert c.k_support(1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        Cutoff("chi_band", 0.0, 1.0, 0.8, 0.8)
    assert not zeta_high(1.0).compact
