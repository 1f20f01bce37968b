import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lptvcap.errors import DegeneracyError
from lptvcap.numerics import inv_sqrt_psd, sym_eigvals, sym_evd, waterfill, waterfill_spectral


# -- Symmetric EVD ------------------------------------------------------------

def test_evd_diagonal():
    w, v = sym_evd(np.diag([1.0, 3.0]))
    np.testing.assert_array_equal(w, [3.0, 1.0])
    np.testing.assert_array_equal(np.abs(v), [[0, 1], [1, 0]])


def test_evd_classic_pair():
    w, v = sym_evd([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(w, [3.0, 1.0], atol=1e-15)
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(v, [[s, s], [s, -s]], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_evd_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n))
    a = b + b.T
    w, v = sym_evd(a)
    norm = np.abs(a).max()
    assert np.all(np.diff(w) <= 0)
    assert np.abs(v @ np.diag(w) @ v.T - a).max() < 1e-9 * max(norm, 1)
    assert np.abs(v.T @ v - np.eye(n)).max() < 1e-9
    assert np.abs(a @ v - v * w).max() < 1e-9 * max(norm, 1)
    # sign convention: first non-negligible entry of each vector is positive
    for col in v.T:
        assert col[np.flatnonzero(np.abs(col) > 1e-12)[0]] > 0
    np.testing.assert_allclose(sym_eigvals(a), w, atol=1e-12 * max(norm, 1))


def test_evd_rejects_bad_input():
    with pytest.raises(ValueError):
        sym_evd(np.ones((2, 3)))
    with pytest.raises(ValueError):
        sym_evd([[1.0, 2.0], [0.0, 1.0]])


def test_evd_tolerates_roundoff_asymmetry():
    a = np.array([[2.0, 1.0], [1.0 + 1e-14, 2.0]])
    w, _ = sym_evd(a)
    np.testing.assert_allclose(w, [3.0, 1.0], atol=1e-13)


# -- Inverse square root ------------------------------------------------------

def test_inv_sqrt_scalar_and_diagonal():
    np.testing.assert_allclose(inv_sqrt_psd(4 * np.eye(3)), 0.5 * np.eye(3), atol=1e-15)
    np.testing.assert_allclose(inv_sqrt_psd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)


def test_inv_sqrt_tridiagonal():
    a = np.array([[2.0, 1, 0], [1, 2, 1], [0, 1, 2]])
    b = inv_sqrt_psd(a)
    assert np.array_equal(b, b.T)
    assert np.abs(b @ a @ b - np.eye(3)).max() < 1e-8


def test_inv_sqrt_rejects_near_singular():
    with pytest.raises(DegeneracyError):
        inv_sqrt_psd(np.diag([1.0, 1e-12]))
    with pytest.raises(DegeneracyError):
        inv_sqrt_psd([[1.0, 1.0], [1.0, 1.0]])


# -- Discrete waterfilling ----------------------------------------------------

def test_waterfill_symmetric():
    a = waterfill([1.0, 1.0], 2.0)
    assert a.waterlevel == pytest.approx(2.0, rel=1e-12)
    np.testing.assert_allclose(a.powers, [1.0, 1.0], rtol=1e-12)


def test_waterfill_dominated_channel():
    a = waterfill([1.0, 1e-6], 1.0)
    assert a.waterlevel == pytest.approx(2.0, rel=1e-12)
    np.testing.assert_allclose(a.powers, [1.0, 0.0], atol=1e-12)
    assert a.active_set.tolist() == [0]


def test_waterfill_kkt_example():
    # hand KKT solve, confirmed by a 1e-5 grid search over p_1 in [0, 1]
    a = waterfill([4.0, 1.0], 1.0)
    assert a.waterlevel == pytest.approx(1.125, rel=1e-12)
    np.testing.assert_allclose(a.powers, [0.875, 0.125], rtol=1e-12)


def test_waterfill_zero_eigenvalues():
    a = waterfill([2.0, 0.0, 0.0], 1.0)
    np.testing.assert_allclose(a.powers, [1.0, 0.0, 0.0], rtol=1e-12)
    with pytest.raises(DegeneracyError):
        waterfill([0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        waterfill([1.0], 0.0)


eigs = st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=12)


@settings(max_examples=100, deadline=None)
@given(eigs, st.floats(1e-3, 1e3))
def test_waterfill_budget_and_kkt(lam, budget):
    a = waterfill(lam, budget)
    lam = np.array(lam)
    assert np.all(a.powers >= 0)
    assert a.powers.sum() == pytest.approx(budget, rel=1e-9)
    np.testing.assert_allclose(a.powers, np.maximum(a.waterlevel - 1 / lam, 0), rtol=1e-9,
                               atol=1e-12 * budget)
    assert np.all(a.waterlevel - 1 / lam[a.active_set] > 0)


@settings(max_examples=60, deadline=None)
@given(eigs, st.floats(1e-2, 1e2), st.floats(1.0, 10.0))
def test_waterfill_monotone_in_budget(lam, budget, factor):
    lo, hi = waterfill(lam, budget), waterfill(lam, budget * factor)
    lam = np.array(lam)
    rate = lambda a: np.maximum(0.5 * np.log2(a.waterlevel * lam), 0).sum()
    assert hi.waterlevel >= lo.waterlevel
    assert rate(hi) >= rate(lo) - 1e-12


def simplex_grid(k, step=0.01):
    n = int(round(1 / step))
    for combo in itertools.combinations(range(n + k - 1), k - 1):
        parts = np.diff((-1,) + combo + (n + k - 1,)) - 1
        yield parts * step


@settings(max_examples=12, deadline=None)
@given(st.lists(st.floats(0.05, 20), min_size=1, max_size=4), st.floats(0.1, 5))
def test_waterfill_beats_simplex_grid(lam, budget):
    lam = np.array(lam)
    a = waterfill(lam, budget)
    best = np.log1p(a.powers * lam).sum()
    grid = np.array(list(simplex_grid(lam.size))) * budget
    assert best >= np.log1p(grid * lam).sum(axis=1).max() - 1e-9


# -- Spectral waterfilling ----------------------------------------------------

def test_spectral_flat_closed_form():
    lam = np.full((64, 1), 2.5)
    assert waterfill_spectral(lam, 3.0) == pytest.approx(3.0 + 1 / 2.5, rel=1e-12)


def test_spectral_two_equal_bands():
    one = waterfill_spectral(np.full((32, 1), 0.7), 2.0)
    two = waterfill_spectral(np.full((32, 2), 0.7), 4.0)
    assert two == pytest.approx(one, rel=1e-12)


def test_spectral_cosine_band():
    # every frequency is active, so D = rho + mean(1/lambda) = 1 + 2/sqrt(3);
    # a 10^6-point grid bisection gives 2.154700538379252
    j = 1024
    w = -np.pi + 2 * np.pi * np.arange(j) / j
    d = waterfill_spectral((1 + 0.5 * np.cos(w))[:, None], 1.0)
    assert d == pytest.approx(2.154700538379252, abs=1e-6)
    assert d == pytest.approx(1 + 2 / math.sqrt(3), abs=1e-9)


def test_spectral_validation():
    with pytest.raises(ValueError):
        waterfill_spectral(np.ones((1, 2)), 1.0)
    with pytest.raises(ValueError):
        waterfill_spectral(-np.ones((4, 1)), 1.0)
    with pytest.raises(DegeneracyError):
        waterfill_spectral(np.zeros((4, 2)), 1.0)
