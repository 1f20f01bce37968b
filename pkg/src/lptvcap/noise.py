"""Cyclostationary noise models for narrowband power-line channels.

Two periodic autocorrelation models are provided:

* the Katayama model, a sum of powered-sine classes shaped by a
  Lorentzian-like decay in lag;
* the Nassar model, where the noise is the output of one of ``M`` FIR
  shaping filters driven by a common white Gaussian input, the active filter
  switching periodically.

Both are reduced to a :class:`CyclicAutocorrelation` table ``c(n, l)`` for
``n`` in one period and ``0 <= l < L_corr``.  Negative lags are never stored;
they follow from ``c(n, -l) = c(n - l, l)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegeneracyError
from .numerics import PD_TOLERANCE


@dataclass(frozen=True)
class CyclicAutocorrelation:
    """Periodic autocorrelation table ``c(n, l) = E{w[n+l] w[n]}``.

    ``table`` has shape ``(N_noise, L_corr)``; lags at or beyond ``L_corr``
    are zero.
    """

    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] < 1 or table.shape[1] < 1:
            raise ValueError(f"autocorrelation table must be 2-D and nonempty, got {table.shape}")
        if not np.all(np.isfinite(table)):
            raise ValueError("autocorrelation table contains non-finite values")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def period(self) -> int:
        return self.table.shape[0]

    @property
    def support(self) -> int:
        """``L_corr``: the first lag known to be zero."""
        return self.table.shape[1]

    def __call__(self, n, l):
        """Look up ``c(n, l)`` for integer (array) arguments of any sign."""
        n = np.asarray(n, dtype=np.int64)
        l = np.asarray(l, dtype=np.int64)
        n, l = np.broadcast_arrays(n, l)
        neg = l < 0
        base = np.where(neg, n + l, n)
        lag = np.abs(l)
        inside = lag < self.support
        out = np.zeros(base.shape)
        out[inside] = self.table[base[inside] % self.period, lag[inside]]
        return out if out.ndim else float(out)

    def lag0_mean(self) -> float:
        """Time-averaged noise power over one period."""
        return float(self.table[:, 0].mean())

    def truncated(self, support: int) -> "CyclicAutocorrelation":
        """Zero every lag at or beyond ``support``."""
        if support < 1:
            raise ValueError("support must be at least 1")
        if support >= self.support:
            return self
        return CyclicAutocorrelation(self.table[:, :support])

    def scaled(self, factor: float) -> "CyclicAutocorrelation":
        return CyclicAutocorrelation(self.table * factor)

    def tiled(self, period: int) -> "CyclicAutocorrelation":
        """The same process described with a longer (multiple) period."""
        if period % self.period:
            raise ValueError(f"{period} is not a multiple of {self.period}")
        return CyclicAutocorrelation(np.tile(self.table, (period // self.period, 1)))

    def to_csv(self, path) -> None:
        """Write columns ``n, l, c``, one row per table entry."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "l", "c"])
            for n in range(self.period):
                for l in range(self.support):
                    writer.writerow([n, l, repr(float(self.table[n, l]))])


def white_noise(variance: float = 1.0, period: int = 1) -> CyclicAutocorrelation:
    """Stationary white noise of the given variance."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    return CyclicAutocorrelation(np.full((period, 1), float(variance)))


# -- Katayama model ---------------------------------------------------------

@dataclass(frozen=True)
class KatayamaParams:
    """Katayama noise classes ``(A_i, kappa_i, theta_i)``; phases in radians.

    ``n_noise`` is the number of samples per noise cycle (``T_AC / T_samp``).
    """

    classes: tuple
    alpha1: float
    t_samp: float
    n_noise: int

    def __post_init__(self):
        classes = tuple(tuple(float(v) for v in cls) for cls in self.classes)
        if not classes:
            raise ValueError("at least one noise class is required")
        for a, kappa, _ in classes:
            if a < 0 or kappa < 0:
                raise ValueError("class magnitudes and exponents must be nonnegative")
        if all(a == 0 for a, _, _ in classes):
            raise DegeneracyError("all class magnitudes are zero")
        if self.alpha1 <= 0 or self.t_samp <= 0:
            raise ValueError("alpha1 and t_samp must be positive")
        if int(self.n_noise) != self.n_noise or self.n_noise < 1:
            raise ValueError("n_noise must be a positive integer")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "n_noise", int(self.n_noise))

    @classmethod
    def from_degrees(cls, classes, alpha1, t_samp, n_noise):
        """Build from ``(A, kappa, theta_degrees)`` triplets."""
        return cls(tuple((a, k, math.radians(th)) for a, k, th in classes),
                   alpha1, t_samp, n_noise)

    def time_profile(self) -> np.ndarray:
        """Numerator of the model: per-sample lag-0 power over one cycle."""
        n = np.arange(self.n_noise)
        total = np.zeros(self.n_noise)
        with np.errstate(under="ignore"):
            for a, kappa, theta in self.classes:
                # 0**0 == 1 in numpy, giving the constant floor for kappa = 0
                total += a * np.abs(np.sin(np.pi * n / self.n_noise + theta)) ** kappa
        return total

    def lag_envelope(self, lags) -> np.ndarray:
        lags = np.asarray(lags, dtype=float)
        return 1.0 / (1.0 + (2 * np.pi * lags * self.t_samp / self.alpha1) ** 2)


def katayama_autocorrelation(p: KatayamaParams, l_corr: int) -> CyclicAutocorrelation:
    """Katayama table truncated at ``l_corr`` lags."""
    if l_corr < 1:
        raise ValueError("l_corr must be at least 1")
    profile = p.time_profile()
    if not np.any(profile > 0):
        raise DegeneracyError("Katayama profile vanishes over the whole cycle")
    return CyclicAutocorrelation(np.outer(profile, p.lag_envelope(np.arange(l_corr))))


def katayama_support(p: KatayamaParams, rel_threshold: float) -> int:
    """Smallest ``L_corr`` for which every dropped lag is below
    ``rel_threshold`` times the table peak.

    The lag envelope is monotone, so the scan is closed form.
    """
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    scale = 2 * np.pi * p.t_samp / p.alpha1
    # envelope(l) < thr  <=>  l > sqrt(1/thr - 1) / scale
    bound = math.sqrt(1.0 / rel_threshold - 1.0) / scale
    l = max(int(math.floor(bound)) + 1, 1)
    while l > 1 and p.lag_envelope(l - 1) < rel_threshold:
        l -= 1
    while p.lag_envelope(l) >= rel_threshold:
        l += 1
    return l


# -- Nassar model -----------------------------------------------------------

@dataclass(frozen=True)
class NassarParams:
    """``M`` FIR shaping filters and the interval boundaries
    ``0 = n_0 < n_1 < ... < n_M = N_noise`` selecting them."""

    filters: tuple
    boundaries: tuple

    def __post_init__(self):
        filters = tuple(np.array(h, dtype=float).ravel() for h in self.filters)
        if not filters:
            raise ValueError("at least one shaping filter is required")
        for h in filters:
            if h.size == 0 or not np.all(np.isfinite(h)):
                raise ValueError("shaping filters must be nonempty and finite")
            h.setflags(write=False)
        bounds = tuple(int(b) for b in self.boundaries)
        if len(bounds) != len(filters) + 1:
            raise ValueError(f"{len(filters)} filters need {len(filters) + 1} boundaries")
        if bounds[0] != 0 or any(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:])):
            raise ValueError("boundaries must start at 0 and increase strictly")
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "boundaries", bounds)

    @property
    def n_noise(self) -> int:
        return self.boundaries[-1]

    @property
    def max_length(self) -> int:
        return max(h.size for h in self.filters)

    def interval_index(self, n) -> np.ndarray:
        """0-based filter index active at time ``n``."""
        n = np.asarray(n) % self.n_noise
        return np.searchsorted(self.boundaries, n, side="right") - 1


def nassar_autocorrelation(p: NassarParams) -> CyclicAutocorrelation:
    """Analytic table ``c(n,l) = sum_m h_{I[n+l]}[m] h_{I[n]}[m-l]``."""
    l_corr = p.max_length
    padded = np.zeros((len(p.filters), l_corr))
    for i, h in enumerate(p.filters):
        padded[i, :h.size] = h
    table = np.zeros((p.n_noise, l_corr))
    idx = p.interval_index(np.arange(p.n_noise + l_corr))
    for n in range(p.n_noise):
        late = padded[idx[n]]
        for l in range(l_corr):
            lead = padded[idx[n + l]]
            table[n, l] = lead[l:] @ late[:l_corr - l]
    return CyclicAutocorrelation(table)


def nassar_sample_path(p: NassarParams, length: int, seed: int) -> np.ndarray:
    """Draw ``w[0..length)`` with ``w[n] = (h_{I[n]} * v)[n]``, ``v`` unit white.

    Deterministic for a fixed seed.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    rng = np.random.default_rng(seed)
    pad = p.max_length - 1
    v = rng.standard_normal(length + pad)
    idx = p.interval_index(np.arange(length))
    w = np.empty(length)
    for i, h in enumerate(p.filters):
        sel = idx == i
        if np.any(sel):
            w[sel] = np.convolve(v, h)[pad:pad + length][sel]
    return w


def estimate_autocorrelation(w, period: int, support: int):
    """Empirical cyclic autocorrelation and its standard error.

    Averages ``w[p*period + n + l] * w[p*period + n]`` over whole periods
    ``p``.  Returns ``(mean, stderr)``, both of shape ``(period, support)``.
    """
    w = np.asarray(w, dtype=float)
    cycles = (w.size - (support - 1)) // period
    if cycles < 2:
        raise ValueError("sample path too short for the requested estimate")
    mean = np.empty((period, support))
    err = np.empty((period, support))
    base = np.arange(cycles) * period
    for n in range(period):
        for l in range(support):
            prod = w[base + n + l] * w[base + n]
            mean[n, l] = prod.mean()
            err[n, l] = prod.std(ddof=1) / math.sqrt(cycles)
    return mean, err


# -- Support truncation and covariance assembly -----------------------------

def truncate_support(c: CyclicAutocorrelation, rel_threshold: float) -> int:
    """Smallest ``L`` with ``max_n |c(n,l)| < rel_threshold * peak`` for all
    ``l >= L``.

    Lags beyond the stored table are treated as zero.
    """
    if rel_threshold <= 0:
        raise ValueError("rel_threshold must be positive")
    envelope = np.abs(c.table).max(axis=0)
    peak = envelope.max()
    above = np.nonzero(envelope >= rel_threshold * peak)[0]
    return int(above[-1]) + 1 if above.size else 1


def build_noise_covariance(c: CyclicAutocorrelation, m_dim: int, offset: int = 0,
                           check_pd: bool = True) -> np.ndarray:
    """Covariance of ``[w[offset], ..., w[offset + m_dim - 1]]``.

    Entry ``(u, v)`` is ``c(min(u, v) + offset, |u - v|)``; the result is
    exactly symmetric and zero outside the band ``|u - v| < L_corr``.

    Raises
    ------
    DegeneracyError
        If ``check_pd`` and the smallest eigenvalue is not above
        ``PD_TOLERANCE`` times the largest.
    """
    if m_dim < 1 or offset < 0:
        raise ValueError("m_dim must be positive and offset nonnegative")
    u = np.arange(m_dim)
    lo = np.minimum.outer(u, u)
    lag = np.abs(np.subtract.outer(u, u))
    cov = c(lo + offset, lag)
    if check_pd:
        ensure_positive_definite(cov)
    return cov


def ensure_positive_definite(cov: np.ndarray, what: str = "noise covariance") -> np.ndarray:
    """Return the ascending eigenvalues of ``cov`` or raise DegeneracyError."""
    eig = np.linalg.eigvalsh(cov)
    top = eig[-1]
    if top <= 0 or eig[0] <= PD_TOLERANCE * top:
        raise DegeneracyError(
            f"{what} is not positive definite "
            f"(eigenvalue range [{eig[0]:.3e}, {top:.3e}])")
    return eig
