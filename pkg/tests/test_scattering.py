import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgdecay.core import PotentialSpec, make_grid
from kgdecay.scattering import (JostError, JostTable, a1_norm, dpsi_dk_weighted_bound,
                                jost_pair, jost_solve, psi_kernel, resonance_check,
                                scattering_coeffs, wronskians)

ZERO = PotentialSpec.zero()
PT = PotentialSpec.sech_squared(2.0)       # reflectionless, one bound state
SECH = PotentialSpec.sech_squared(1.0)
REPULSIVE = PotentialSpec.sech_squared(-0.4)

# DOP853 value of |T(20) - 1| for V = sech^2 (tests/oracles/derive_frozen.py)
T20_DEFECT = 0.04997397539920481
# outgoing-boundary finite-difference solve of (H - 1 - 1e-4 i) u = delta_2 at x = -1,
# V = sech^2, h = 0.005 (tests/oracles/derive_frozen.py)
RESOLVENT_REF = 0.27851577793318294 - 0.3724552088766779j


def _pt_exact(x, k):
    return np.exp(1j * k * x) * (np.tanh(x) - 1j * k) / (1 - 1j * k)


def test_zero_potential_plane_waves():
    g = make_grid(20, 128)
    f, d = jost_solve(ZERO, 1.7, "+", g)
    assert np.max(np.abs(f.values - np.exp(1.7j * g.x))) < 1e-10
    f, d = jost_solve(ZERO, 1.7, "-", g)
    assert np.max(np.abs(d.values + 1.7j * np.exp(-1.7j * g.x))) < 1e-10


def test_conjugation_symmetry_in_k():
    x = np.linspace(-10, 10, 81)
    t = JostTable(SECH, [-1.3, 1.3], x, 20.0)
    assert np.max(np.abs(t.fp[0] - np.conj(t.fp[1]))) < 1e-12
    assert np.max(np.abs(t.fm[0] - np.conj(t.fm[1]))) < 1e-12


def test_poschl_teller_far_field_and_profile():
    g = make_grid(20, 256)
    pair = jost_pair(PT, 1.0, g)
    assert np.max(np.abs(pair.f_plus.values - _pt_exact(g.x, 1.0))) < 1e-6
    h = pair.f_plus.values * np.exp(-1j * g.x)
    far = g.x >= 12
    assert np.max(np.abs(h[far] - 1)) < 1e-6
    # halving the step agrees with the default
    fine, _ = jost_solve(PT, 1.0, "+", g, step=0.5 * 0.02 / np.sqrt(1 + 2.0))
    assert np.max(np.abs(fine.values - pair.f_plus.values)) < 1e-6


def test_rk4_fourth_order():
    g = make_grid(20, 64)
    errs = []
    for h in (0.125, 0.0625, 0.03125):
        f, _ = jost_solve(PT, 1.0, "+", g, step=h)
        errs.append(np.max(np.abs(f.values - _pt_exact(g.x, 1.0))))
    for a, b in zip(errs, errs[1:]):
        assert 10 <= a / b <= 24


def test_tail_condition_enforced():
    with pytest.raises(JostError, match="tails"):
        jost_solve(PotentialSpec.power(1.0, 2.0), 1.0, "+", make_grid(20, 64))
    with pytest.raises(JostError):
        jost_solve(SECH, 1.0 + 1j, "+", make_grid(20, 64))


def test_free_wronskians():
    W, Wp, Wm = wronskians(ZERO, 0.8)
    assert W == pytest.approx(1.6j, abs=1e-12)
    assert abs(Wp) < 1e-12 and abs(Wm) < 1e-12


def test_poschl_teller_transmission():
    W, _, _ = wronskians(PT, 1.0)
    assert abs(2j / W - 1j) < 1e-4


def test_wronskian_x_independence_holds_on_a_table():
    # wronskians raises if the three evaluation points disagree
    wronskians(REPULSIVE, np.linspace(0.1, 10, 50))
    wronskians(PT, np.linspace(0.1, 10, 50))


def test_free_scattering_table():
    tab = scattering_coeffs(ZERO, np.linspace(0.1, 10, 25))
    assert np.max(np.abs(tab.T - 1)) < 1e-10
    assert np.max(np.abs(tab.R_plus)) < 1e-10 and np.max(np.abs(tab.R_minus)) < 1e-10


@pytest.mark.parametrize("V", [PT, REPULSIVE, SECH], ids=["2sech2", "-0.4sech2", "sech2"])
def test_unitarity(V):
    tab = scattering_coeffs(V, np.linspace(0.1, 10, 60))
    assert tab.unitarity_defect.max() < 1e-6


@settings(max_examples=10)
@given(st.floats(0.1, 10))
def test_unitarity_property(k):
    tab = scattering_coeffs(REPULSIVE, [k])
    assert tab.unitarity_defect[0] < 1e-6


def test_transmission_tends_to_one():
    T = scattering_coeffs(SECH, [20.0]).T[0]
    assert abs(T - 1) < 0.05
    assert abs(T - 1) == pytest.approx(T20_DEFECT, abs=5e-6)


def test_reflection_signs_nonzero_for_nonreflectionless():
    tab = scattering_coeffs(REPULSIVE, [0.5])
    # V even, so both reflection coefficients have the same modulus
    assert abs(tab.R_plus[0]) == pytest.approx(abs(tab.R_minus[0]), rel=1e-8)
    assert abs(tab.R_plus[0]) > 0.1


def test_scattering_csv(tmp_path):
    tab = scattering_coeffs(ZERO, [1.0, 2.0])
    p = tmp_path / "s.csv"
    tab.to_csv(p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "k,ReW,ImW,ReT,ImT,ReRp,ImRp,ReRm,ImRm,unitarity_defect"
    assert lines[1].startswith("1.000000000000e+00,")


def test_psi_kernel_free_and_symmetric():
    assert np.allclose(psi_kernel(ZERO, -1.0, 3.0, np.array([0.5, 2.0])), 1.0, atol=1e-12)
    a = psi_kernel(SECH, -1.0, 2.5, 1.3)
    b = psi_kernel(SECH, 2.5, -1.0, 1.3)
    assert a == b


@settings(max_examples=15)
@given(st.floats(-8, 8), st.floats(-8, 8), st.floats(0.2, 5))
def test_psi_conjugation(x, y, k):
    a = psi_kernel(SECH, x, y, np.array([k, -k]))
    assert abs(a[1] - np.conj(a[0])) < 1e-10


def test_resolvent_consistency():
    x, y, k = -1.0, 2.0, 1.0
    val = -np.exp(1j * k * (y - x)) * psi_kernel(SECH, x, y, k) / (2j * k)
    assert abs(val - RESOLVENT_REF) / abs(RESOLVENT_REF) < 1e-2


def test_a1_free_is_one():
    assert a1_norm(ZERO, 0.5, -2.0) == pytest.approx(1.0, abs=1e-12)


def test_a1_bounded_over_sample():
    g = np.linspace(-10, 10, 5)
    X, Y = np.meshgrid(g, g)
    vals = a1_norm(PT, X, Y)
    assert vals.max() / vals.min() < 20
    assert vals.max() < 50


def test_a1_window_refinement():
    a = a1_norm(SECH, 1.0, -2.0, k_window=10.0, n_k=1024)
    b = a1_norm(SECH, 1.0, -2.0, k_window=20.0, n_k=2048)
    assert abs(a - b) / b < 0.1


def test_a1_window_too_small():
    # both points right of a reflecting barrier: psi oscillates with R(k) e^{2ikx}
    with pytest.raises(ValueError, match="increase k_window"):
        a1_norm(PotentialSpec.sech_squared(-2.0), 10.0, 10.0, k_window=1.0, n_k=256)


def test_dpsi_free_is_zero():
    rep = dpsi_dk_weighted_bound(ZERO, [(0.0, 1.0), (3.0, -2.0)])
    assert max(rep.ratios) < 1e-12


def test_dpsi_stable_under_refinement():
    pts = [(x, y) for x in (-10, 0, 10) for y in (-10, 0, 10)]
    a = dpsi_dk_weighted_bound(SECH, pts).constant
    b = dpsi_dk_weighted_bound(SECH, pts, n_k=4096).constant
    assert np.isfinite(a) and abs(a - b) <= 0.2 * b


def test_dpsi_linear_growth():
    rep = dpsi_dk_weighted_bound(SECH, [(10.0, 0.0), (20.0, 0.0)], L=60.0)
    assert rep.ratios[1] <= 2 * rep.ratios[0]


def test_dpsi_requires_fast_decay():
    with pytest.raises(ValueError):
        dpsi_dk_weighted_bound(PotentialSpec.power(1.0, 1.5), [(0.0, 0.0)])


@pytest.mark.parametrize("V,resonant", [(ZERO, True), (PT, True), (REPULSIVE, False)],
                         ids=["zero", "2sech2", "-0.4sech2"])
def test_resonance_classification(V, resonant):
    rep = resonance_check(V, 1.0)
    assert rep.is_resonant is resonant
    assert rep.is_resonant == (rep.w0_abs < rep.threshold)
