"""Dense symmetric kernels and waterfilling solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError

#: Eigenvalues below this fraction of the largest are treated as zero.
EIG_CLAMP = 1e-12
#: Admissible asymmetry before a matrix is rejected as non-symmetric.
SYM_TOLERANCE = 1e-12
#: Smallest admissible eigenvalue of a covariance, relative to the largest.
PD_TOLERANCE = 1e-10


def _symmetrize(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.abs(a).max(initial=0.0)
    if np.abs(a - a.T).max(initial=0.0) > SYM_TOLERANCE * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def sym_evd(a):
    """Eigen-decomposition of a real symmetric matrix.

    Returns ``(eigenvalues, vectors)`` with eigenvalues in descending order
    and each eigenvector's first non-negligible entry made positive, so the
    output is reproducible.
    """
    a = _symmetrize(a)
    w, v = np.linalg.eigh(a)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            v[:, k] = -col
    return w, v


def sym_eigvals(a) -> np.ndarray:
    """Eigenvalues only, descending."""
    return np.linalg.eigvalsh(_symmetrize(a))[::-1].copy()


def inv_sqrt_psd(a) -> np.ndarray:
    """Symmetric inverse square root ``A^{-1/2}`` of a positive definite matrix.

    No regularization is applied: if the smallest eigenvalue is not above
    ``PD_TOLERANCE`` times the largest a :class:`DegeneracyError` is raised.
    """
    a = _symmetrize(a)
    w, v = np.linalg.eigh(a)
    if w[-1] <= 0 or w[0] <= PD_TOLERANCE * w[-1]:
        raise DegeneracyError(
            f"matrix is not positive definite (eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])")
    b = (v / np.sqrt(w)) @ v.T
    return 0.5 * (b + b.T)


@dataclass(frozen=True)
class WaterfillAllocation:
    waterlevel: float
    powers: np.ndarray

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.powers > 0)


def clamp_eigenvalues(lambdas) -> np.ndarray:
    """Zero out eigenvalues below ``EIG_CLAMP`` times the largest (and negatives)."""
    lam = np.array(lambdas, dtype=float)
    top = lam.max(initial=0.0)
    if top <= 0:
        raise DegeneracyError("all eigenvalues are zero")
    lam[lam < EIG_CLAMP * top] = 0.0
    return lam


def _solve_level(inv: np.ndarray, weight: float, budget: float) -> float:
    """Find ``D`` with ``weight * sum((D - inv)^+) == budget``.

    The left side is continuous and nondecreasing in ``D``; the bracket
    ``[min(inv), min(inv) + budget/weight]`` contains the root because the
    smallest term alone reaches the budget at the upper end.  Bisection
    identifies the active set, which then fixes ``D`` in closed form.
    """
    target = budget / weight
    lo = float(inv.min())
    hi = lo + target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.maximum(mid - inv, 0.0).sum() < target:
            lo = mid
        else:
            hi = mid
    level = 0.5 * (lo + hi)
    for _ in range(4):
        active = inv < level
        refined = (target + inv[active].sum()) / active.sum()
        if refined == level:
            break
        level = refined
    return float(level)


def waterfill(lambdas, budget: float) -> WaterfillAllocation:
    """Maximize ``sum log(1 + p_k lambda_k)`` subject to ``sum p_k = budget``.

    Zero (or clamped) eigenvalues receive no power.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    lam = clamp_eigenvalues(lambdas)
    pos = lam > 0
    inv = 1.0 / lam[pos]
    level = _solve_level(inv, 1.0, budget)
    powers = np.zeros_like(lam)
    powers[pos] = np.maximum(level - inv, 0.0)
    return WaterfillAllocation(level, powers)


def waterfill_spectral(lambda_grid, budget: float) -> float:
    """Waterlevel for eigenvalue spectra sampled on a uniform periodic grid.

    ``lambda_grid`` has shape ``(J, N0)`` (rows are frequencies).  The
    frequency integral ``(1/2pi) int (D - 1/lambda)^+ d omega`` is realized by
    the trapezoid rule, which on a periodic uniform grid is the sample mean.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.ndim == 1:
        lam = lam[:, None]
    if lam.shape[0] < 2:
        raise ValueError("spectral grid needs at least two points")
    if np.any(lam < -EIG_CLAMP * np.abs(lam).max(initial=0.0)):
        raise ValueError("spectral eigenvalues must be nonnegative")
    if budget <= 0:
        raise ValueError("budget must be positive")
    flat = clamp_eigenvalues(lam.ravel())
    inv = 1.0 / flat[flat > 0]
    return _solve_level(inv, 1.0 / lam.shape[0], budget)


def rate_from_spectrum(lambdas, waterlevel: float) -> float:
    """``sum_k (log2(waterlevel * lambda_k))^+`` over all entries."""
    lam = np.asarray(lambdas, dtype=float)
    pos = lam > 0
    with np.errstate(divide="ignore"):
        terms = np.log2(waterlevel * lam[pos])
    return float(np.maximum(terms, 0.0).sum())
