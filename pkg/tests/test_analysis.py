import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgdecay.analysis import (ConvergenceError, OperatorSample, bump_amplitude, decay_fit,
                              f_space_op_norm, interp_check, power_amplitude,
                              op_norm_weighted, oscillatory_sup_check, p_grid,
                              report_record)
from kgdecay.core import PotentialSpec, chi_band, japanese, make_grid
from kgdecay.free_kg import bj_operator_matrix, free_evolution_matrix, free_kernel
from kgdecay.perturbed import kernel_matrix

THETAS = (0.25, 0.5, 0.75)


def test_identity_norm():
    x = np.linspace(-10, 10, 41)
    for s in (0.5, 1.0, 2.0):
        assert op_norm_weighted(OperatorSample(np.eye(41), x, s, s)) == pytest.approx(1.0, rel=1e-8)


def test_rank_one_norm(rng):
    x = np.linspace(-8, 8, 50)
    u, v = rng.normal(size=50), rng.normal(size=50)
    s = 0.7
    w = japanese(x) ** -s
    exact = np.linalg.norm(w * u) * np.linalg.norm(w * v)
    assert op_norm_weighted(OperatorSample(np.outer(u, v), x, s, s)) == pytest.approx(exact, rel=1e-8)


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.0, 2.0))
def test_power_iteration_matches_svd(seed, s):
    r = np.random.default_rng(seed)
    x = np.linspace(-10, 10, 64)
    K = r.normal(size=(64, 64)) + 1j * r.normal(size=(64, 64))
    sample = OperatorSample(K, x, s, s)
    exact = np.linalg.svd(sample.weighted(), compute_uv=False)[0]
    assert op_norm_weighted(sample) == pytest.approx(exact, rel=1e-6)


def test_power_iteration_odd_singular_vector():
    # antisymmetric top singular vector: an all-ones start would miss it
    x = np.linspace(-5, 5, 21)
    u = x / np.linalg.norm(x)
    K = 3 * np.outer(u, u) + 0.5 * np.eye(21) / 21
    assert op_norm_weighted(OperatorSample(K, x, 0, 0)) == pytest.approx(3 + 0.5 / 21, rel=1e-8)


def test_power_iteration_budget():
    x = np.linspace(-1, 1, 3)
    K = np.diag([1.0, 1.0 - 1e-12, 0.5])
    K[1] = [0.3, 0.9, 0.0]
    with pytest.raises(ConvergenceError):
        op_norm_weighted(OperatorSample(K, x, 0, 0), rtol=1e-300, max_iter=3)


def test_operator_sample_validation():
    with pytest.raises(ValueError):
        OperatorSample(np.ones((3, 4)), np.arange(3.0), 1, 1)
    with pytest.raises(ValueError):
        OperatorSample(np.full((2, 2), np.nan), np.arange(2.0), 1, 1)


def test_high_energy_norm_decays():
    g = make_grid(32, 128)
    n10, n20 = (op_norm_weighted(OperatorSample(bj_operator_matrix(0, t, 1.0, g), g.x, 1, 1))
                for t in (10.0, 20.0))
    assert n10 / n20 >= 1.7


def test_f_space_norm_of_free_flow_is_bounded():
    g = make_grid(20, 64)
    A = free_evolution_matrix(g, 3.0, 1.0)
    n0 = f_space_op_norm(np.eye(2 * g.N), g, 0.0, 0.0)
    assert n0 == pytest.approx(1.0, rel=1e-10)
    assert f_space_op_norm(A, g, 1.0, 1.0) < f_space_op_norm(A, g, 0.0, 0.0) * 1.0001


# ---- decay_fit --------------------------------------------------------------

def test_decay_fit_exact_power():
    t = np.geomspace(1, 100, 8)
    fit = decay_fit(t, t ** -0.5)
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert fit.rms_residual < 1e-12
    assert fit.t_window == (1.0, 100.0) and fit.n_samples == 8


@settings(max_examples=30)
@given(st.floats(1e-6, 1e6), st.floats(-3, 1))
def test_decay_fit_scale_invariant(c, p):
    t = np.geomspace(2, 50, 7)
    v = t ** p * (1 + 0.1 * np.sin(t))
    assert decay_fit(t, c * v).exponent == pytest.approx(decay_fit(t, v).exponent, abs=1e-12)


@pytest.mark.parametrize("t,v,msg", [
    (np.arange(1.0, 7.0), np.array([1, 1, 1, 0, 1, 1.0]), "positive"),
    (np.arange(1.0, 4.0), np.ones(3), "at least"),
    (np.array([1, 3, 2, 4, 5, 6.0]), np.ones(6), "increasing"),
    (np.arange(0.5, 6.5), np.ones(6), "t >= 1"),
])
def test_decay_fit_rejects(t, v, msg):
    with pytest.raises(ValueError, match=msg):
        decay_fit(t, v)


# ---- interpolation -----------------------------------------------------------

def test_interp_theta_zero_is_endpoint():
    g = make_grid(32, 128)
    K = bj_operator_matrix(0, 15.0, 1.0, g)
    rep = interp_check(lambda s: OperatorSample(K, g.x, s, s), 1.0, 2.0, (0.0, 1.0))
    assert rep.values[0] == rep.M0 and rep.values[1] == rep.M1
    assert rep.ok


def test_interp_high_energy_families():
    g = make_grid(32, 128)
    for j in (0, 1):
        K = bj_operator_matrix(j, 15.0, 1.0, g)
        rep = interp_check(lambda s: OperatorSample(K, g.x, s, s), 1.0, 2.0, THETAS)
        assert rep.ok
        assert rep.values[1] <= np.sqrt(rep.M0 * rep.M1) * (1 + 1e-6)


def test_interp_free_and_perturbed_cutoff_kernels():
    band = chi_band(0.0, 4.0, 1.0, 3.0)
    nodes = np.arange(-20, 20.5, 1.0)
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    free = free_kernel(10.0, X, Y, 1.0, make_grid(30, 16, k_max=2.0, n_k=4001), band)[..., 0, 1]
    pert = kernel_matrix(10.0, PotentialSpec.sech_squared(-0.4), 1.0, band, nodes)[..., 0, 1]
    for K in (free, pert):
        rep = interp_check(lambda s: OperatorSample(K, nodes, s, s), 1.0, 2.0, THETAS)
        assert rep.ok


def test_interp_random_diagonal_kernels(rng):
    x = np.linspace(-15, 15, 61)
    for _ in range(100):
        K = np.diag(rng.normal(size=61) * rng.uniform(0.1, 10))
        s0, s1 = rng.uniform(0, 3, size=2)
        if abs(s0 - s1) < 1e-3:
            continue
        assert interp_check(lambda s: OperatorSample(K, x, s, s), s0, s1, THETAS).ok


def test_interp_needs_distinct_sigmas():
    with pytest.raises(ValueError):
        interp_check(lambda s: None, 1.0, 1.0, THETAS)


# ---- oscillatory sups --------------------------------------------------------

def test_p_grid_spacing():
    ps = p_grid(10.0, 4.0)
    assert ps[0] == -20.0 and ps[-1] == 20.0
    assert np.max(np.diff(ps)) <= np.pi / 8 + 1e-12


def test_sup_at_t_one_below_l1():
    for k, amp in (bump_amplitude(), power_amplitude()):
        rep = oscillatory_sup_check(k, amp, np.arange(1.0, 7.0))
        assert np.isfinite(rep.sups[0])
        assert rep.sups[0] <= rep.l1_amplitude * (1 + 1e-9)


def test_bump_sup_decays():
    k, amp = bump_amplitude()
    rep = oscillatory_sup_check(k, amp, np.geomspace(1, 100, 8))
    assert rep.fit.exponent <= -0.4


@pytest.mark.xfail(strict=True, reason="the p-sup of k^-3 on [1, 40] sits on the stationary "
                   "point near k = 1 at this t range; measured slope about -0.11")
def test_power_sup_decays():
    k, amp = power_amplitude(alpha=3.0)
    rep = oscillatory_sup_check(k, amp, np.geomspace(1, 100, 8))
    assert rep.fit.exponent <= -0.4


def test_power_amplitude_validation():
    with pytest.raises(ValueError):
        power_amplitude(alpha=1.5)
    k, amp = power_amplitude(alpha=2.0, g=lambda k: 0 * k + 2.0)
    assert amp[0] == 2.0 and k[0] == 1.0


def test_report_record_is_json():
    fit = decay_fit(np.geomspace(1, 10, 6), np.geomspace(1, 10, 6) ** -1.0)
    rec = report_record("x", {"sigma": 1.0}, fit, True)
    back = json.loads(json.dumps(rec))
    assert set(back) == {"experiment", "params", "exponent", "residual", "pass"}
    assert back["pass"] is True
