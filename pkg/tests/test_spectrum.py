import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from gordon_kit.jacobi import CoeffSeq
from gordon_kit.spectrum import hessenberg_qr_eigenvalues, truncated_spectrum, truncated_spectrum_report, truncation_matrix


def const(n, a=1.0, b=0.0, n_lo=0):
    return CoeffSeq(n_lo, np.full(n, a), np.full(n, b))


def test_single_site():
    c = CoeffSeq(0, np.ones(4), np.array([2.5 - 1j, 0, 0, 0]))
    assert truncated_spectrum(c, 1) == [2.5 - 1j]


def test_two_sites():
    vals = truncated_spectrum(const(5), 2)
    assert abs(vals[0] + 1) < 1e-12 and abs(vals[1] - 1) < 1e-12


def test_free_ten():
    vals = np.array(truncated_spectrum(const(12), 10))
    ref = np.sort(2 * np.cos(np.arange(1, 11) * np.pi / 11))
    np.testing.assert_allclose(vals.real, ref, atol=1e-12)
    np.testing.assert_allclose(vals.imag, 0, atol=1e-12)


def test_truncation_matrix_layout():
    c = CoeffSeq(-2, np.arange(1, 7), 10 * np.arange(1, 7))
    H = truncation_matrix(c, 3, start=-1)
    np.testing.assert_array_equal(H, [[20, 3, 0], [3, 30, 4], [0, 4, 40]])
    with pytest.raises(ValueError):
        truncation_matrix(c, 0)


def test_report_fields():
    rep = truncated_spectrum_report(const(40), 30)
    assert len(rep) == 30
    for p in rep:
        assert p.residual < 1e-10
        assert 0 <= p.edge_mass <= 1
    # the extreme eigenvectors of the free chain are spread out, not edge states
    assert rep[0].edge_mass < 0.5


def _match_error(a, b):
    cost = np.abs(np.subtract.outer(a, b))
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


@given(st.integers(0, 10**6), st.integers(1, 64))
def test_random_tridiagonal(seed, N):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.3, 2, N + 1) * np.exp(1j * rng.uniform(0, 2 * np.pi, N + 1))
    b = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
    c = CoeffSeq(0, a, b)
    H = truncation_matrix(c, N)
    norm_h = max(np.linalg.norm(H, 2), 1e-300)
    rep = truncated_spectrum_report(c, N)
    for p in rep:
        assert p.residual < 1e-8 * norm_h
    vals = np.array([p.value for p in rep])
    # the matrix is complex symmetric, not normal, so compare loosely with LAPACK
    assert _match_error(vals, np.linalg.eigvals(H)) < 1e-6 * norm_h


def test_qr_on_general_hessenberg(rng):
    H = np.triu(rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12)), -1)
    vals = hessenberg_qr_eigenvalues(H)
    assert _match_error(np.array(vals), np.linalg.eigvals(H)) < 1e-9
    assert math.isclose(np.sum(vals).real, np.trace(H).real, abs_tol=1e-9)
