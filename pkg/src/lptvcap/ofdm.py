"""Time-frequency OFDM baseline.

The period is cut into ``N_p`` time cells of ``N_sym`` samples.  Each cell
carries one real OFDM symbol with a cyclic prefix of ``N_cp`` samples and
``N_sc`` subcarriers on a ``2 N_sc``-point DFT, and power is waterfilled
over the per-cell SNR table ``gamma[m, k]``.

Two cell models are available:

``"achievable"`` (default)
    The exact cyclic channel of each post-prefix window is transformed by a
    unitary DFT.  ``gamma`` holds the leakage-free SNR ``|A_kk|^2 / S_kk``
    used for the allocation, and the rate is evaluated with the inter-carrier
    leakage ``sum_{k' != k} |A_kk'|^2 P_k'`` counted as extra noise.  With
    Gaussian inputs this is a true achievable rate, so it never exceeds the
    capacity.  Slot 0 stands for the DC and Nyquist bins, which are real and
    carry one dimension each.

``"static"``
    The channel and noise are treated as static within a cell: the gain is
    the cell average of ``|sum_l g[n,l] e^{-j w_k l}|`` and the noise power a
    Bartlett-weighted transform of the cell-averaged autocorrelation.  The
    rate is ``(1/period) sum (log2(D gamma))^+``.  This is optimistic when
    the channel varies inside a cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelInstance
from .errors import DegeneracyError
from .numerics import rate_from_spectrum, waterfill

DEFAULT_CELLS = 14
MODELS = ("achievable", "static")


@dataclass(frozen=True)
class TfOfdmGrid:
    """Per-cell SNR table ``gamma[m, k]`` with its geometry.

    ``period`` is the analysis period (a multiple of ``N_lcm``) that the
    ``N_p`` cells tile.  For the achievable model ``coupling[m]`` holds
    ``|A_bb'|^2`` over the ``2 N_sc`` DFT bins of cell ``m`` and
    ``bin_noise[m]`` the noise variance of each bin; both are ``None`` for
    a plain SNR table.
    """

    n_p: int
    n_sc: int
    n_cp: int
    n_sym: int
    period: int
    gamma: np.ndarray
    coupling: Optional[np.ndarray] = None
    bin_noise: Optional[np.ndarray] = None

    def to_csv(self, path) -> None:
        """Write columns ``m, k, gamma``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "k", "gamma"])
            for m in range(self.n_p):
                for k in range(self.n_sc):
                    writer.writerow([m, k, repr(float(self.gamma[m, k]))])


def _analysis_period(ch: ChannelInstance, n_p: int, n_cp: int) -> int:
    # smallest multiple of N_lcm whose cells fit the prefix and one subcarrier
    need = n_p * (n_cp + 2)
    reps = -(-need // ch.n_lcm)
    return reps * ch.n_lcm


def _static_cell(ch, n, n_sc, steer, omega, lags, taper):
    gain = np.abs(ch.filter.taps[n % ch.filter.period] @ steer.T).mean(axis=0)
    # symmetric cell average of c(n, l) and c(n, -l)
    cbar = 0.5 * (ch.noise(n[:, None], lags) + ch.noise(n[:, None], -lags)).mean(axis=0)
    weights = taper * cbar
    power = weights[0] + 2 * (np.cos(np.outer(omega, lags[1:])) @ weights[1:])
    return gain, power


def _window_response(ch: ChannelInstance, start: int, size: int, dft: np.ndarray):
    """``(A, noise)`` for the cyclic channel on ``size`` samples from ``start``."""
    n = start + np.arange(size)
    h = np.zeros((size, size))
    rows = ch.filter.taps[n % ch.filter.period]
    for l in range(ch.filter.memory):
        # the prefix turns x[n - l] into the cyclic shift within the window
        np.add.at(h, (np.arange(size), (np.arange(size) - l) % size), rows[:, l])
    cov = ch.noise(n[None, :], n[:, None] - n[None, :])
    a = dft @ h @ dft.conj().T
    noise = np.real(np.einsum("ki,ij,kj->k", dft, cov, dft.conj()))
    return a, noise


def build_tf_grid(ch: ChannelInstance, n_p: int = DEFAULT_CELLS, n_cp: Optional[int] = None,
                  period: Optional[int] = None, model: str = "achievable") -> TfOfdmGrid:
    """Partition the period into cells and compute the SNR of every cell.

    ``N_sym = period // N_p`` and ``N_sc = (N_sym - N_cp) // 2``, so the
    symbol, prefix and subcarriers always fit.  ``n_cp`` defaults to
    ``L_isi - 1`` and ``period`` to the smallest multiple of ``N_lcm`` that
    leaves at least one subcarrier per cell.  See the module docstring for
    the two cell models.
    """
    if model not in MODELS:
        raise ValueError(f"unknown OFDM model {model!r}; expected one of {MODELS}")
    if n_p < 1:
        raise ValueError("n_p must be at least 1")
    l_isi = ch.filter.memory
    n_cp = l_isi - 1 if n_cp is None else n_cp
    if n_cp < l_isi - 1:
        raise ValueError(f"cyclic prefix {n_cp} is shorter than the channel memory L_isi-1={l_isi - 1}")
    period = _analysis_period(ch, n_p, n_cp) if period is None else period
    if period % ch.n_lcm:
        raise ValueError(f"period {period} is not a multiple of N_lcm={ch.n_lcm}")
    n_sym = period // n_p
    n_sc = (n_sym - n_cp) // 2
    if n_sc < 1:
        raise ValueError(f"cells of {n_sym} samples are too short for a {n_cp}-sample prefix")
    gamma = np.zeros((n_p, n_sc))

    if model == "static":
        omega = np.pi * np.arange(n_sc) / n_sc
        steer = np.exp(-1j * np.outer(omega, np.arange(l_isi)))
        lags = np.arange(min(ch.noise.support, 2 * n_sc))
        taper = 1.0 - lags / (2 * n_sc)
        for m in range(n_p):
            n = np.arange(m * n_sym, (m + 1) * n_sym)
            gain, power = _static_cell(ch, n, n_sc, steer, omega, lags, taper)
            if np.any(power <= 0):
                raise DegeneracyError(f"nonpositive noise power in cell {m}")
            gamma[m] = gain ** 2 / power
        return TfOfdmGrid(n_p, n_sc, n_cp, n_sym, period, gamma)

    size = 2 * n_sc
    idx = np.arange(size)
    dft = np.exp(-2j * np.pi * np.outer(idx, idx) / size) / np.sqrt(size)
    coupling = np.zeros((n_p, size, size))
    bin_noise = np.zeros((n_p, size))
    for m in range(n_p):
        a, noise = _window_response(ch, m * n_sym + n_cp, size, dft)
        if np.any(noise <= 0):
            raise DegeneracyError(f"nonpositive noise power in cell {m}")
        coupling[m] = np.abs(a) ** 2
        bin_noise[m] = noise
        snr = np.diag(coupling[m]) / noise
        gamma[m] = snr[:n_sc]
        gamma[m, 0] = min(snr[0], snr[n_sc])
    return TfOfdmGrid(n_p, n_sc, n_cp, n_sym, period, gamma, coupling, bin_noise)


def tf_ofdm_allocation(grid: TfOfdmGrid, rho: float):
    """Waterlevel ``D`` with ``(1/(N_p N_sc)) sum (D - 1/gamma)^+ = rho``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not np.any(grid.gamma > 0):
        raise DegeneracyError("every cell has zero SNR")
    return waterfill(grid.gamma.ravel(), rho * grid.gamma.size)


def _leakage_rate(grid: TfOfdmGrid, powers: np.ndarray) -> float:
    n_sc = grid.n_sc
    size = 2 * n_sc
    # slot k feeds bins k and 2 N_sc - k; slot 0 feeds DC and Nyquist
    slot = np.minimum(np.arange(size), size - np.arange(size))
    slot[n_sc] = 0
    total = 0.0
    for m in range(grid.n_p):
        p = powers[m][slot]
        c = grid.coupling[m]
        signal = np.diag(c) * p
        sinr = signal / (grid.bin_noise[m] + c @ p - signal)
        bits = np.log2(1.0 + sinr)
        total += bits[1:n_sc].sum() + 0.5 * (bits[0] + bits[n_sc])
    return float(total)


def tf_ofdm_rate(grid: TfOfdmGrid, rho: float, period: Optional[int] = None) -> float:
    """Achievable rate in bits per use, summed over the cells and divided by
    ``period``.

    A plain SNR table gives ``(1/period) sum (log2(D gamma))^+``; a grid with
    coupling data evaluates the waterfilled powers with leakage as noise.
    """
    period = grid.period if period is None else period
    alloc = tf_ofdm_allocation(grid, rho)
    if grid.coupling is None:
        return rate_from_spectrum(grid.gamma, alloc.waterlevel) / period
    return _leakage_rate(grid, alloc.powers.reshape(grid.gamma.shape)) / period
