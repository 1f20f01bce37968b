"""Capacity via the block-stationary frequency-domain representation.

After decimating into frames of ``N0`` samples the channel is a two-tap
block filter ``H[0] + H[1] z^-1`` and the noise a stationary vector process
whose correlation vanishes beyond one frame.  The capacity then follows from
waterfilling the eigenvalues of ``H(w)^H S(w)^-1 H(w)`` over frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacity_time import CapacityResult
from .channel import ChannelInstance, build_block_taps
from .errors import DegeneracyError
from .numerics import PD_TOLERANCE, clamp_eigenvalues, rate_from_spectrum, waterfill_spectral

DEFAULT_GRID = 1024


def block_noise_correlation(ch: ChannelInstance, lag: int) -> np.ndarray:
    """``C(l)`` with entries ``E{w[l N0 + u] w[v]} = c(v, u - v + l N0)``."""
    n0 = ch.n0
    u = np.arange(n0)[:, None]
    v = np.arange(n0)[None, :]
    return ch.noise(v + 0 * u, u - v + lag * n0)


@dataclass(frozen=True)
class SpectralGrid:
    """Block taps, noise correlations and per-frequency eigenvalues.

    ``eigenvalues`` has shape ``(J, N0)``, ascending within each row, for
    ``omega`` uniform over ``[-pi, pi)``.
    """

    omega: np.ndarray
    h0: np.ndarray
    h1: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    eigenvalues: np.ndarray

    @property
    def size(self) -> int:
        return self.omega.size

    @property
    def n0(self) -> int:
        return self.h0.shape[0]

    def transfer(self, omega) -> np.ndarray:
        """``H(w) = H[0] + H[1] e^{-jw}``, stacked over ``omega``."""
        z = np.exp(-1j * np.atleast_1d(omega))[:, None, None]
        return self.h0[None] + self.h1[None] * z

    def noise_spectrum(self, omega) -> np.ndarray:
        """``S(w) = C(0) + C(1) e^{-jw} + C(-1) e^{jw}``, exactly Hermitian."""
        p = self.c1[None] * np.exp(-1j * np.atleast_1d(omega))[:, None, None]
        return self.c0[None] + p + np.conj(np.swapaxes(p, 1, 2))


def build_spectral_grid(ch: ChannelInstance, j: int = DEFAULT_GRID) -> SpectralGrid:
    """Sample the per-frequency eigenvalues on ``J`` points.

    Raises DegeneracyError when ``S(w)`` is not positive definite at some
    grid frequency.
    """
    if j < 16 or j % 2:
        raise ValueError(f"grid size must be even and at least 16, got {j}")
    h0, h1 = build_block_taps(ch)
    c0 = block_noise_correlation(ch, 0)
    c1 = block_noise_correlation(ch, 1)
    omega = -np.pi + 2 * np.pi * np.arange(j) / j
    grid = SpectralGrid(omega, h0, h1, c0, c1, np.empty((0, 0)))
    s = grid.noise_spectrum(omega)
    s_eig = np.linalg.eigvalsh(s)
    bad = (s_eig[:, -1] <= 0) | (s_eig[:, 0] <= PD_TOLERANCE * s_eig[:, -1])
    if bad.any():
        w = omega[np.argmax(bad)]
        raise DegeneracyError(f"noise spectrum is not positive definite at omega={w:.6f}")
    chol = np.linalg.cholesky(s)
    x = np.linalg.solve(chol, grid.transfer(omega))
    sigma = np.conj(np.swapaxes(x, 1, 2)) @ x
    lam = np.linalg.eigvalsh(sigma)
    # roundoff can push a zero eigenvalue slightly negative
    lam[(lam < 0) & (lam > -1e-10 * np.abs(lam).max(initial=0.0))] = 0.0
    if np.any(lam < 0):
        raise DegeneracyError("negative spectral eigenvalue beyond roundoff")
    return SpectralGrid(omega, h0, h1, c0, c1, lam)


def capacity_thm2(ch: ChannelInstance, rho: float, j: int = DEFAULT_GRID) -> CapacityResult:
    """Capacity from spectral waterfilling with budget ``rho * N0``.

    The frequency integrals use the trapezoid rule, which on the periodic
    uniform grid is the sample mean.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    grid = build_spectral_grid(ch, j)
    lam = clamp_eigenvalues(grid.eigenvalues.ravel()).reshape(grid.eigenvalues.shape)
    level = waterfill_spectral(lam, rho * grid.n0)
    rate = rate_from_spectrum(lam, level) / (2 * grid.n0 * grid.size)
    return CapacityResult(rate, level, lam, "thm2", grid.size)
