import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lptvcap.errors import DegeneracyError
from lptvcap.noise import (CyclicAutocorrelation, KatayamaParams, NassarParams,
                           build_noise_covariance, estimate_autocorrelation,
                           katayama_autocorrelation, katayama_support, nassar_autocorrelation,
                           nassar_sample_path, truncate_support, white_noise)

from _instances import random_nassar

KATA1 = [(0.23, 0, 0), (1.38, 1.91, -6), (7.17, 1.57e5, -35)]


def kata1(n_noise=64):
    return KatayamaParams.from_degrees(KATA1, 1.2e-5, 1 / 300000, n_noise)


# -- Katayama --------------------------------------------------------------

def test_katayama_single_flat_class():
    p = KatayamaParams([(1.0, 0.0, 0.0)], 1.2e-5, 1 / 300000, 8)
    c = katayama_autocorrelation(p, 4)
    np.testing.assert_array_equal(c.table[:, 0], np.ones(8))


def test_katayama_decays_in_lag():
    p = kata1()
    env = p.lag_envelope(np.array([0, 10, 100, 10_000]))
    assert np.all(np.diff(env) < 0)
    assert env[-1] < 1e-6


def test_kata1_lag0_value():
    # independent scalar evaluation with the math module: 0.24847638940405964
    c = katayama_autocorrelation(kata1(), 1)
    assert c(0, 0) == pytest.approx(0.24847638940405964, rel=1e-12)
    assert c(0, 0) == pytest.approx(0.2485, abs=5e-5)


@pytest.mark.parametrize("thr, expected", [(1e-2, 6), (1e-3, 19), (1e-4, 58)])
def test_kata1_support(thr, expected):
    # expected values from a brute-force scan of the lag envelope
    p = kata1()
    assert katayama_support(p, thr) == expected
    wide = katayama_autocorrelation(p, 200)
    assert truncate_support(wide, thr) == expected


def test_katayama_zero_magnitudes_rejected():
    with pytest.raises(DegeneracyError):
        KatayamaParams([(0.0, 1.0, 0.0)], 1e-5, 1e-6, 4)


def test_katayama_invalid_fields():
    with pytest.raises(ValueError):
        KatayamaParams([(1.0, -1.0, 0.0)], 1e-5, 1e-6, 4)
    with pytest.raises(ValueError):
        KatayamaParams([(1.0, 1.0, 0.0)], 0.0, 1e-6, 4)
    with pytest.raises(ValueError):
        katayama_autocorrelation(kata1(), 0)


# -- Nassar ----------------------------------------------------------------

def test_nassar_unit_impulse():
    c = nassar_autocorrelation(NassarParams([[1.0]], [0, 3]))
    np.testing.assert_array_equal(c.table, np.ones((3, 1)))
    assert c(1, 1) == 0.0


def test_nassar_two_tap():
    c = nassar_autocorrelation(NassarParams([[1.0, 1.0]], [0, 2]))
    np.testing.assert_array_equal(c.table, [[2, 1], [2, 1]])
    assert c(0, 2) == 0.0


def test_nassar_two_filters():
    c = nassar_autocorrelation(NassarParams([[1.0], [2.0]], [0, 1, 2]))
    assert c(0, 0) == 1.0
    assert c(1, 0) == 4.0


def brute_nassar(p, n, l):
    """Direct evaluation of sum_m h_{I[n+l]}[m] h_{I[n]}[m-l]."""
    lead = p.filters[int(p.interval_index(n + l))]
    late = p.filters[int(p.interval_index(n))]
    total = 0.0
    for m in range(len(lead)):
        if 0 <= m - l < len(late):
            total += lead[m] * late[m - l]
    return total


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nassar_matches_defining_sum(seed):
    p = random_nassar(np.random.default_rng(seed))
    c = nassar_autocorrelation(p)
    for n in range(p.n_noise):
        for l in range(c.support):
            assert c(n, l) == pytest.approx(brute_nassar(p, n, l), abs=1e-12)


def test_nassar_invalid():
    with pytest.raises(ValueError):
        NassarParams([], [0])
    with pytest.raises(ValueError):
        NassarParams([[1.0]], [0, 2, 3])
    with pytest.raises(ValueError):
        NassarParams([[1.0], [2.0]], [0, 2, 2])
    with pytest.raises(ValueError):
        NassarParams([[]], [0, 1])


def test_sample_path_deterministic():
    p = NassarParams([[1.0, 0.5], [0.3]], [0, 2, 5])
    a = nassar_sample_path(p, 1000, seed=7)
    b = nassar_sample_path(p, 1000, seed=7)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, nassar_sample_path(p, 1000, seed=8))


def test_sample_path_unit_power():
    w = nassar_sample_path(NassarParams([[1.0]], [0, 1]), 10**6, seed=1)
    assert np.mean(w ** 2) == pytest.approx(1.0, rel=0.01)


def test_sample_path_lag_one():
    p = NassarParams([[1.0, 1.0]], [0, 1])
    w = nassar_sample_path(p, 10**6, seed=2)
    mean, err = estimate_autocorrelation(w, 1, 2)
    assert abs(mean[0, 1] - 1.0) < 3 * err[0, 1]


def test_estimate_requires_two_cycles():
    with pytest.raises(ValueError):
        estimate_autocorrelation(np.ones(5), 4, 2)


# -- Table behaviour ---------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-30, 30), st.integers(-5, 5))
def test_lookup_periodic_and_negative_lags(seed, n, l):
    c = nassar_autocorrelation(random_nassar(np.random.default_rng(seed)))
    assert c(n + c.period, l) == c(n, l)
    assert c(n, -l) == c(n - l, l)


def test_lookup_vectorized():
    c = nassar_autocorrelation(NassarParams([[1.0, 1.0]], [0, 2]))
    np.testing.assert_array_equal(c([0, 1, 0], [0, 1, 5]), [2.0, 1.0, 0.0])


def test_table_validation():
    with pytest.raises(ValueError):
        CyclicAutocorrelation(np.zeros((0, 1)))
    with pytest.raises(ValueError):
        CyclicAutocorrelation([[np.nan]])
    with pytest.raises(ValueError):
        white_noise(0.0)


def test_tiled_and_truncated():
    c = nassar_autocorrelation(NassarParams([[1.0, 0.5], [2.0]], [0, 1, 3]))
    t = c.tiled(6)
    for n in range(12):
        for l in range(-2, 3):
            assert t(n, l) == c(n, l)
    assert c.truncated(1).support == 1
    with pytest.raises(ValueError):
        c.tiled(4)


def test_csv_export(tmp_path):
    c = nassar_autocorrelation(NassarParams([[1.0, 1.0]], [0, 2]))
    path = tmp_path / "c.csv"
    c.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "l", "c"]
    assert [tuple(map(float, r)) for r in rows[1:]] == [(0, 0, 2), (0, 1, 1), (1, 0, 2), (1, 1, 1)]


# -- Support truncation ------------------------------------------------------

def test_truncate_impulse():
    c = CyclicAutocorrelation(np.array([[1.0, 0.0, 0.0]] * 3))
    for thr in (1e-1, 1e-3, 1e-9):
        assert truncate_support(c, thr) == 1


def test_truncate_geometric():
    c = CyclicAutocorrelation(2.0 ** -np.arange(30)[None, :])
    assert truncate_support(c, 1e-3) == 10


# -- Covariance assembly -----------------------------------------------------

def test_covariance_white():
    np.testing.assert_array_equal(build_noise_covariance(white_noise(2.0), 3), 2 * np.eye(3))


def test_covariance_two_tap():
    c = nassar_autocorrelation(NassarParams([[1.0, 1.0]], [0, 1]))
    np.testing.assert_array_equal(build_noise_covariance(c, 3),
                                  [[2, 1, 0], [1, 2, 1], [0, 1, 2]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.integers(0, 15))
def test_covariance_structure(seed, m_dim, offset):
    c = nassar_autocorrelation(random_nassar(np.random.default_rng(seed)))
    cov = build_noise_covariance(c, m_dim, offset)
    assert np.array_equal(cov, cov.T)
    u, v = np.indices(cov.shape)
    assert np.all(cov[np.abs(u - v) >= c.support] == 0.0)
    # entry (u, v) = c(v + offset, u - v)
    np.testing.assert_array_equal(cov, c(v + offset, u - v))
    eig = np.linalg.eigvalsh(cov)
    assert eig[0] > 1e-10 * eig[-1]


def test_covariance_not_pd_rejected():
    # c(l) = [1, 1] is no valid autocorrelation: the tridiagonal block has
    # eigenvalue 1 - sqrt(2) < 0
    c = CyclicAutocorrelation([[1.0, 1.0]])
    with pytest.raises(DegeneracyError):
        build_noise_covariance(c, 3)
    build_noise_covariance(c, 3, check_pd=False)


def test_sample_path_error_bars_are_calibrated():
    # across independent paths the standardized deviations are close to N(0, 1),
    # so a 3-sigma check at every (n, l) is a fair test rather than a lucky one
    p = NassarParams([[1.0, 0.5], [2.0, -0.4, 0.1]], [0, 3, 8])
    c = nassar_autocorrelation(p)
    z = []
    for seed in range(40):
        mean, err = estimate_autocorrelation(nassar_sample_path(p, 20_000, seed), 8, c.support)
        z.append(((mean - c.table) / err).ravel())
    z = np.concatenate(z)
    assert abs(z.mean()) < 0.1
    assert 0.9 < z.std() < 1.1
