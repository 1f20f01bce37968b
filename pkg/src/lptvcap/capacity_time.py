"""Finite-block MIMO capacity of the LPTV channel with cyclostationary noise.

A block of ``N = K * N_lcm`` inputs is mapped to ``M = N - L + 1`` outputs
that do not depend on the previous block.  Whitening the noise and
waterfilling the eigenvalues of ``G_w^T G_w`` gives the rate ``R_K``, and
the capacity is the limit of ``R_K`` as ``K`` grows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelInstance, LptvFilter, build_channel_matrix
from .errors import DegeneracyError
from .noise import (KatayamaParams, build_noise_covariance, katayama_autocorrelation,
                    katayama_support)
from .numerics import (clamp_eigenvalues, inv_sqrt_psd, rate_from_spectrum, sym_eigvals,
                       sym_evd, waterfill)

#: Default ceiling on the block length ``N`` explored by the doubling schedule.
DEFAULT_MAX_BLOCK = 2048
#: Highest order of the Richardson table used by the convergence loop.
RICHARDSON_ORDER = 2


@dataclass(frozen=True)
class CapacityResult:
    """Rate in bits per real channel use with the data that produced it.

    For ``method == "thm1"`` the eigenvalues are the spectrum of
    ``G_w^T G_w`` (length ``N``); for ``"thm2"`` they are sampled per
    frequency with shape ``(J, N0)``.  ``extrapolated`` marks a rate obtained
    by Richardson extrapolation over the doubling sequence, in which case
    :meth:`block_rate` gives the raw rate of the final block instead.
    """

    rate: float
    waterlevel: float
    eigenvalues: np.ndarray
    method: str
    block: int
    converged: bool = True
    history: tuple = ()
    extrapolated: bool = False

    def block_rate(self) -> float:
        """Recompute the rate from ``waterlevel`` and ``eigenvalues``."""
        lam = np.asarray(self.eigenvalues)
        dims = lam.size if lam.ndim == 1 else lam.shape[0] * lam.shape[1]
        return rate_from_spectrum(lam, self.waterlevel) / (2 * dims)


def whitened_channel(ch: ChannelInstance, k: int) -> np.ndarray:
    """``G_w = C^{-1/2} G`` for a block of ``K`` periods.

    The noise covariance covers the ``M`` retained outputs, which start at
    sample ``L - 1`` of the block.
    """
    g = build_channel_matrix(ch, k)
    cov = build_noise_covariance(ch.noise, g.shape[0], offset=ch.memory - 1, check_pd=False)
    return inv_sqrt_psd(cov) @ g


def _gram_spectrum(gw: np.ndarray) -> np.ndarray:
    # nonzero eigenvalues of G_w^T G_w (N x N) equal those of G_w G_w^T (M x M)
    lam = np.zeros(gw.shape[1])
    lam[:gw.shape[0]] = sym_eigvals(gw @ gw.T)
    return clamp_eigenvalues(lam)


def capacity_thm1(ch: ChannelInstance, rho: float, k: int) -> CapacityResult:
    """Rate ``R_K`` of the length-``K`` block model at average power ``rho``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    gw = whitened_channel(ch, k)
    n = gw.shape[1]
    lam = _gram_spectrum(gw)
    alloc = waterfill(lam, n * rho)
    rate = rate_from_spectrum(lam, alloc.waterlevel) / (2 * n)
    return CapacityResult(rate, alloc.waterlevel, lam, "thm1", k)


def default_k_max(ch: ChannelInstance) -> int:
    k0 = ch.k_min + 1
    return max(2 * k0, DEFAULT_MAX_BLOCK // ch.n_lcm)


def capacity_thm1_converged(ch: ChannelInstance, rho: float, tol: float = 1e-4,
                            k_max: Optional[int] = None,
                            extrapolate: bool = True) -> CapacityResult:
    """Evaluate ``R_K`` for ``K = K0, 2 K0, 4 K0, ...`` with ``K0 = K_min + 1``.

    The edge loss of the block model is a series in ``1/N``, so with
    ``extrapolate`` a Richardson table (first and second order) is built on
    the doubling sequence.  The run stops as soon as any column of the table
    changes by less than ``tol`` between successive blocks, and reports the
    highest-order estimate of the latest block.  With ``extrapolate=False``
    only the raw difference ``|R_2K - R_K|`` is used and ``R_K`` is reported.
    Running past ``k_max`` returns the last estimate with ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = ch.k_min + 1
    k_max = default_k_max(ch) if k_max is None else k_max
    if k_max < 2 * k:
        raise ValueError(f"k_max={k_max} leaves fewer than two blocks (first K is {k})")
    order = RICHARDSON_ORDER if extrapolate else 0
    history, table = [], []
    res = None
    while k <= k_max:
        res = capacity_thm1(ch, rho, k)
        history.append((k, res.rate))
        row = [res.rate]
        for j in range(1, min(len(table), order) + 1):
            row.append(row[j - 1] + (row[j - 1] - table[-1][j - 1]) / (2 ** j - 1))
        table.append(row)
        if len(table) >= 2:
            prev = table[-2]
            if any(abs(row[j] - prev[j]) < tol for j in range(min(len(prev), len(row)))):
                return _finish(res, row[-1], True, history, len(row) > 1)
        k *= 2
    return _finish(res, table[-1][-1], False, history, len(table[-1]) > 1)


def _finish(res, rate, converged, history, extrapolated):
    return CapacityResult(max(rate, 0.0), res.waterlevel, res.eigenvalues, "thm1", res.block,
                          converged, tuple(history), extrapolated)


@dataclass(frozen=True)
class TruncationSweep:
    """Rates of the truncated Katayama noise for a schedule of thresholds.

    ``entries`` holds ``(threshold, L_corr, result)`` for every threshold
    whose covariance was usable; ``skipped`` holds ``(threshold, reason)``.
    """

    entries: tuple
    skipped: tuple
    stable: bool

    @property
    def final(self) -> CapacityResult:
        if not self.entries:
            raise DegeneracyError("every truncation threshold was skipped")
        return self.entries[-1][2]


def katayama_capacity(p: KatayamaParams, filt: LptvFilter, rho: float,
                      thresholds: Sequence[float] = (1e-2, 1e-3, 1e-4),
                      tol: float = 1e-4, k_max: Optional[int] = None,
                      stability: float = 1e-3) -> TruncationSweep:
    """Capacity under Katayama noise truncated at decreasing lag thresholds.

    The sweep is stable when the last two usable thresholds give rates that
    differ by less than ``stability`` bits per use.
    """
    if any(b >= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly decreasing")
    entries, skipped = [], []
    for thr in thresholds:
        l_corr = katayama_support(p, thr)
        ch = ChannelInstance(filt, katayama_autocorrelation(p, l_corr))
        try:
            res = capacity_thm1_converged(ch, rho, tol, k_max)
        except DegeneracyError as exc:
            warnings.warn(f"threshold {thr:g} skipped: {exc}", RuntimeWarning, stacklevel=2)
            skipped.append((thr, str(exc)))
            continue
        entries.append((thr, l_corr, res))
    stable = len(entries) >= 2 and abs(entries[-1][2].rate - entries[-2][2].rate) < stability
    return TruncationSweep(tuple(entries), tuple(skipped), stable)


def optimal_input_covariance(ch: ChannelInstance, rho: float, k: int) -> np.ndarray:
    """Capacity-achieving input covariance ``V D V^T`` for block length ``K``.

    ``V`` diagonalizes ``G_w^T G_w`` and ``D`` holds the waterfilled powers.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    gw = whitened_channel(ch, k)
    lam, vec = sym_evd(gw.T @ gw)
    lam = clamp_eigenvalues(lam)
    alloc = waterfill(lam, gw.shape[1] * rho)
    cov = (vec * alloc.powers) @ vec.T
    return 0.5 * (cov + cov.T)


def log_det_rate(gw: np.ndarray, c_xx) -> float:
    """``(1/2N) log2 |I + G_w C_xx G_w^T|`` in bits per real channel use."""
    c_xx = np.asarray(c_xx, dtype=float)
    n = gw.shape[1]
    if c_xx.shape != (n, n):
        raise ValueError(f"input covariance must be {n}x{n}, got {c_xx.shape}")
    m = np.eye(gw.shape[0]) + gw @ c_xx @ gw.T
    sign, logdet = np.linalg.slogdet(0.5 * (m + m.T))
    if sign <= 0:
        raise DegeneracyError("I + G_w C_xx G_w^T is not positive definite")
    return logdet / (2 * n * math.log(2))
