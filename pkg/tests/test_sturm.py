import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gordon_kit.errors import WindowError
from gordon_kit.mat2c import mat2_norm2
from gordon_kit.measures import LocalMeasure, PiecewiseConstant
from gordon_kit.sturm import (
    CState, EnvelopeError, SLCoeff, disk_radius_sl, envelope_constants, gordon_comb, periodize, sl_envelopes,
    sl_gordon_defect, sl_gordon_rate, sl_growth_scan, sl_perturbation_bound, sl_propagate, sl_three_block,
    sl_transfer,
)

from conftest import rand_c
from oracles import rk4_linear

W = (-40.0, 80.0)


def free(lo=-40.0, hi=80.0):
    return SLCoeff.constant(1.0, LocalMeasure(window=(lo, hi)), lo, hi)


def random_coeff(rng, n_pieces=3, n_atoms=2, span=(-2.0, 3.0), window=(-4.0, 5.0)):
    """Random (a, mu) plus a raw piece list for the RK4 oracle (atoms returned separately)."""
    br = np.concatenate([[window[0]], np.sort(rng.uniform(*span, size=n_pieces - 1)), [window[1]]])
    a_vals = rng.uniform(0.5, 2.0, size=n_pieces)
    rho = rng.normal(size=n_pieces)
    atoms = [(float(x), float(w)) for x, w in zip(rng.uniform(*span, size=n_atoms), rng.normal(size=n_atoms))]
    mu = LocalMeasure(atoms, br, rho, window=window)
    coeff = SLCoeff(PiecewiseConstant(br, a_vals), mu)
    pieces = [(br[i], br[i + 1], a_vals[i], rho[i]) for i in range(n_pieces)]
    return coeff, pieces, atoms


def oracle_solution(pieces, atoms, z, state, t0, t1):
    """RK4 between atoms plus the jump (u, v) -> (u, v + g u) at each atom in (t0, t1]."""
    v = np.asarray(state, dtype=np.complex128)
    cuts = sorted(x for x, _ in atoms if t0 < x <= t1)
    pos = t0
    for x in cuts + [t1]:
        v = rk4_linear(pieces, z, v, pos, x)
        pos = x
        for y, g in atoms:
            if y == x and x in cuts:
                v = v + np.array([0, g * v[0]])
    return v


# propagator -------------------------------------------------------------------------


def test_free_transfer_at_zero():
    T = sl_transfer(free(), 0.0, 3.5, 1.0)
    np.testing.assert_allclose(T, [[1, 2.5], [0, 1]], atol=1e-14)


def test_free_transfer_negative_z():
    t = 1.7
    T = sl_transfer(free(), -1.0, t, 0.0)
    np.testing.assert_allclose(T, [[math.cosh(t), math.sinh(t)], [math.sinh(t), math.cosh(t)]], rtol=1e-13)


def test_lebesgue_potential_gives_exponential():
    c = SLCoeff.constant(1.0, LocalMeasure.lebesgue(*W, 1.0), *W)
    ts = [-2.0, 0.5, 3.0]
    for s in sl_propagate(c, 0.0, CState(1.0, 1.0), ts):
        assert s.u == pytest.approx(math.exp(s.t), rel=1e-12)
        assert s.au_prime == pytest.approx(math.exp(s.t), rel=1e-12)


def test_atom_jump():
    mu = LocalMeasure([(1.0, 2.5)], window=(-5, 5))
    c = SLCoeff.constant(1.0, mu, -5, 5)
    before, after = sl_propagate(c, 0.0, CState(1.0, 0.0), [0.999999, 1.0])
    assert before.au_prime == pytest.approx(0, abs=1e-12)
    assert after.au_prime == pytest.approx(2.5)
    (later,) = sl_propagate(c, 0.0, CState(1.0, 0.0), [2.0])
    assert later.u == pytest.approx(1 + 2.5)


def test_state_is_finite():
    with pytest.raises(ValueError):
        CState(float("nan"), 0.0)


def test_outside_window():
    with pytest.raises(WindowError):
        sl_transfer(free(-1, 1), 0.0, 2.0, 0.0)


@given(st.integers(0, 10**6))
def test_determinant_and_cocycle(seed):
    rng = np.random.default_rng(seed)
    c, _, _ = random_coeff(rng)
    z = complex(rand_c(rng, 0, 2))
    r, s, t = sorted(rng.uniform(-3.5, 4.5, size=3))
    Tts, Tsr, Ttr = sl_transfer(c, z, t, s), sl_transfer(c, z, s, r), sl_transfer(c, z, t, r)
    assert abs(np.linalg.det(Ttr) - 1) < 1e-10 * max(1, mat2_norm2(Ttr)) ** 2
    scale = mat2_norm2(Tts) * mat2_norm2(Tsr)
    assert np.max(np.abs(Tts @ Tsr - Ttr)) < 1e-12 * scale
    back = sl_transfer(c, z, r, t)
    np.testing.assert_allclose(back @ Ttr, np.eye(2), atol=1e-11 * mat2_norm2(Ttr) ** 2)


@pytest.mark.parametrize("seed", range(5))
def test_against_rk4(seed):
    rng = np.random.default_rng(seed)
    c, pieces, atoms = random_coeff(rng)
    z = complex(rand_c(rng, 0, 2))
    init = (complex(rand_c(rng, 0.5, 1)), complex(rand_c(rng, 0, 1)))
    (s,) = sl_propagate(c, z, CState(*init, t=-3.0), [4.0])
    ref = oracle_solution(pieces, atoms, z, init, -3.0, 4.0)
    np.testing.assert_allclose([s.u, s.au_prime], ref, rtol=1e-7, atol=1e-8 * np.abs(ref).max())


def test_propagate_backwards_matches_transfer(rng):
    c, _, _ = random_coeff(rng)
    init = CState(0.3, -1.2, 1.0)
    targets = [-3.0, -1.0, 1.0, 2.5]
    for s in sl_propagate(c, 0.4j, init, targets):
        v = sl_transfer(c, 0.4j, s.t, 1.0) @ init.vector
        np.testing.assert_allclose([s.u, s.au_prime], v, rtol=1e-11, atol=1e-12)
    with pytest.raises(ValueError):
        sl_propagate(c, 0.0, init, [1.0, 0.0])


# envelopes ---------------------------------------------------------------------------


def test_envelope_free_case():
    chk = sl_envelopes(free(), -1.0, CState(1.0, 0.0), 3.0)
    assert chk.omega == pytest.approx(1.0)
    assert chk.actual == pytest.approx(math.sqrt(math.cosh(6.0)))
    assert chk.actual <= chk.energy_bound and chk.actual <= chk.gronwall_bound


@given(st.integers(0, 10**6))
def test_envelopes_dominate(seed):
    rng = np.random.default_rng(seed)
    c, _, _ = random_coeff(rng)
    z = complex(rand_c(rng, 0, 2))
    init = CState(complex(rand_c(rng, 0, 1)), complex(rand_c(rng, 0, 1)), float(rng.uniform(-3, 0)))
    if init.norm() == 0:
        return
    t = float(rng.uniform(0.5, 4.5))
    chk = sl_envelopes(c, z, init, t)
    assert chk.actual <= chk.energy_bound * (1 + 1e-10)
    assert chk.actual <= chk.gronwall_bound * (1 + 1e-10)


@given(st.integers(0, 10**6))
def test_envelope_constants_dominate_transfer(seed):
    rng = np.random.default_rng(seed)
    c, _, _ = random_coeff(rng)
    z = complex(rand_c(rng, 0, 2))
    gron, energy = envelope_constants(c, z, -4.0, 5.0)
    s, t = rng.uniform(-4, 5, size=2)
    n = mat2_norm2(sl_transfer(c, z, t, s))
    assert n <= gron.bound(t - s) * (1 + 1e-10)
    if energy is not None:
        assert n <= energy.bound(t - s) * (1 + 1e-10)


# perturbation estimate ------------------------------------------------------------------


def test_perturbation_identical_is_zero():
    c = SLCoeff.constant(1.0, LocalMeasure.lebesgue(-6, 6, 0.3), -6, 6)
    assert sl_perturbation_bound(c, c, (-3, 3), 2.0) == (0.0, 0.0)


@pytest.mark.parametrize("eps", [1e-2, 1e-4])
def test_perturbation_single_atom(eps):
    c = SLCoeff.constant(1.0, LocalMeasure.lebesgue(-6, 6, 0.3), -6, 6)
    mu_t = LocalMeasure([(0.5, eps)], [-6, 6], [0.3], window=(-6, 6))
    ct = SLCoeff.constant(1.0, mu_t, -6, 6)
    for t in (-3.0, -1.0, 1.5, 3.0):
        lhs, rhs = sl_perturbation_bound(c, ct, (-3, 3), t)
        assert lhs <= rhs
        assert rhs < 1e4 * eps


def test_perturbation_a_difference():
    mu = LocalMeasure.lebesgue(-6, 6, -0.2)
    c = SLCoeff.constant(1.0, mu, -6, 6)
    ct = SLCoeff(PiecewiseConstant([-6, 1, 1.5, 6], [1.0, 1.2, 1.0]), mu)
    for t in (-2.0, 2.0, 3.0):
        lhs, rhs = sl_perturbation_bound(c, ct, (-3, 3), t)
        assert lhs <= rhs


@given(st.integers(0, 10**6))
def test_perturbation_random(seed):
    rng = np.random.default_rng(seed)
    c, _, _ = random_coeff(rng)
    ct, _, _ = random_coeff(rng)
    z = complex(rand_c(rng, 0, 1))
    t = float(rng.uniform(-3, 3))
    lhs, rhs = sl_perturbation_bound(c, ct, (-3, 3), t, z=z, init=(1.0, complex(rng.normal())))
    assert lhs <= rhs * (1 + 1e-9)


def test_perturbation_validation():
    c = free(-6, 6)
    with pytest.raises(ValueError):
        sl_perturbation_bound(c, c, (-1.5, 2), 0.0)
    with pytest.raises(ValueError):
        sl_perturbation_bound(c, c, (-2, 2), 3.0)
    with pytest.raises(EnvelopeError):
        sl_perturbation_bound(c, c, (-2, 2), 1.0, envelope=(1.0, 0.0), z=-1.0)


# periodic structure ------------------------------------------------------------------


def test_periodize_copies_base_cell():
    mu = LocalMeasure([(0.5, 1.0), (2.0, -0.5), (5.0, 9.0)], window=(-20, 20))
    c = SLCoeff(PiecewiseConstant([-20, 1, 20], [1.0, 2.0]), mu)
    per, diag = periodize(c, 3, 1)
    assert diag["agreement"] == (1.0, 2.0)
    assert [x for x, _ in per.mu.atoms_in(-3, 6)] == pytest.approx([-2.5, -1.0, 0.5, 2.0, 3.5, 5.0])
    assert per.mu.mass(4.9, 5.1) == pytest.approx(-0.5)
    assert per.a(-2.5) == 1.0 and per.a(-1.5) == 2.0 and per.a(4.5) == 2.0
    assert diag["unif_norm"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        periodize(c, 3, 2)


def test_disk_radius_examples():
    assert disk_radius_sl(1.0, 0.0, 1.0) == 1.0
    assert disk_radius_sl(1.0, 1.0, math.sqrt(2)) == pytest.approx(1.0)
    assert disk_radius_sl(1.0, 2.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        disk_radius_sl(0.0, 1.0, 1.0)


@pytest.mark.parametrize("p", [1, 2, 5])
def test_three_block_free(p):
    ratio = sl_three_block(free(), -1.0, p, CState(1.0, 0.0))
    assert ratio == pytest.approx(math.sqrt(math.cosh(4 * p)), rel=1e-12)
    (s,) = sl_propagate(free(), -1.0, CState(1.0, 0.0), [2 * p])
    assert abs(s.u) == pytest.approx(math.cosh(2 * p))


@given(st.integers(0, 10**6))
def test_three_block_periodic_random(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 5))
    base, _, _ = random_coeff(rng, span=(0.05, p - 0.05), window=(0.0, float(p)))
    mu = base.mu.tiled(p, -p - 1, 2 * p + 1)
    a = PiecewiseConstant([-p - 1, 2 * p + 1], [1.0])
    c = SLCoeff(a, mu)
    z = complex(rand_c(rng, 0, 3))
    init = CState(complex(rand_c(rng, 0.1, 1)), complex(rand_c(rng, 0, 1)))
    assert sl_three_block(c, z, p, init) >= 0.5 - 1e-12


def test_three_block_rejects():
    with pytest.raises(ValueError):
        sl_three_block(free(), 0.0, 2, CState(0.0, 0.0))
    with pytest.raises(ValueError):
        sl_three_block(free(), 0.0, 2, CState(1.0, 0.0, 1.0))
    mu = LocalMeasure([(0.5, 1.0)], window=W)
    with pytest.raises(ValueError):
        sl_three_block(SLCoeff.constant(1.0, mu, *W), 0.0, 2, CState(1.0, 0.0))


# defect, rate and scan ----------------------------------------------------------------


def test_defect_examples():
    lam = SLCoeff.constant(1.0, LocalMeasure.lebesgue(*W, 0.7), *W)
    assert sl_gordon_defect(lam, 4) == 0.0
    assert sl_gordon_rate(lam, [4, 8]) == [math.inf, math.inf]
    c = SLCoeff.constant(1.0, gordon_comb(0.01, periods=(4, 8)), *W)
    d = sl_gordon_defect(c, 4)
    assert 0.5 * 0.01 * math.exp(-8) < d < 2 * 0.01 * math.exp(-8)
    assert sl_gordon_defect(c, 8) == 0.0
    step = SLCoeff(PiecewiseConstant([-40, 1, 80], [1.0, 2.0]), LocalMeasure(window=W))
    assert sl_gordon_defect(step, 4) == pytest.approx(4.0)


def test_comb_rates_approach_comb_rate():
    c = SLCoeff.constant(1.0, gordon_comb(0.01), *W)
    rates = sl_gordon_rate(c, [4, 8, 16])
    # defect at p_j is about weight * exp(-2 p_j), so the rates fall toward 2 from above
    assert all(r > 2.0 for r in rates)
    assert rates[0] > rates[1] > rates[2]


def test_scan_periodic_certified():
    c = SLCoeff.constant(1.0, LocalMeasure.lebesgue(*W, 0.5), *W)
    rows = sl_growth_scan(c, [0.1, 0.2 + 0.1j], [4, 8])
    assert len(rows) == 4
    for r in rows:
        assert r.certified and r.consistent and r.error_bound == 0.0
        assert r.true_checkpoint >= 0.5


def test_scan_comb_certified_near_origin():
    c = SLCoeff.constant(1.0, gordon_comb(0.01), *W)
    rows = sl_growth_scan(c, [0.0, 0.3j], [4, 8, 16])
    assert all(r.certified and r.consistent for r in rows)
    assert all(r.max_deviation <= r.error_bound for r in rows)


def test_scan_violating_input_declines(rng):
    atoms = [(float(x), 3.0 * float(w)) for x, w in zip(rng.uniform(-30, 70, 40), rng.normal(size=40))]
    c = SLCoeff.constant(1.0, LocalMeasure(atoms, window=W), *W)
    rows = sl_growth_scan(c, [0.2], [4, 8])
    assert not any(r.certified for r in rows)
    assert all(r.consistent for r in rows)


def test_scan_validation():
    c = free()
    with pytest.raises(ValueError):
        sl_growth_scan(c, [0.0], [8, 4])
    with pytest.raises(ValueError):
        sl_growth_scan(c, [0.0], [3])
    with pytest.raises(ValueError):
        sl_growth_scan(c, [0.0], [4], alpha=2)
