"""Decimated-components (polyphase) decomposition of scalar sequences.

A scalar sequence ``x[m]`` with period ``N0`` is split into ``N0`` component
sequences ``x_i[n] = x[n*N0 + i]``.  The inverse interleaves them back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError


@dataclass(frozen=True)
class PolyphaseFrame:
    """``N0`` equal-length components; row ``i`` holds ``x[n*N0 + i]``."""

    components: np.ndarray

    def __post_init__(self):
        comps = self.components
        if not isinstance(comps, np.ndarray):
            rows = [np.asarray(c) for c in comps]
            if len({r.shape for r in rows}) > 1:
                raise LengthMismatchError("ragged polyphase components")
            comps = np.array(rows)
        if comps.ndim != 2 or comps.shape[0] < 1:
            raise LengthMismatchError(
                f"components must be a 2-D (N0, B) array, got shape {comps.shape}")
        object.__setattr__(self, "components", comps)

    @property
    def period(self) -> int:
        return self.components.shape[0]

    @property
    def length(self) -> int:
        """Samples per component (B)."""
        return self.components.shape[1]

    def __eq__(self, other):
        if not isinstance(other, PolyphaseFrame):
            return NotImplemented
        return (self.components.shape == other.components.shape
                and bool(np.array_equal(self.components, other.components)))

    __hash__ = None


def dcd_decompose(x, n0: int) -> PolyphaseFrame:
    """Split ``x`` into its ``n0`` decimated components.

    Raises
    ------
    LengthMismatchError
        If ``len(x)`` is not a multiple of ``n0``.  Callers pad explicitly.
    """
    if int(n0) != n0 or n0 < 1:
        raise ValueError(f"period must be a positive integer, got {n0!r}")
    n0 = int(n0)
    x = np.asarray(x)
    if x.ndim != 1:
        raise LengthMismatchError("expected a 1-D sequence")
    if x.size % n0:
        raise LengthMismatchError(
            f"length {x.size} is not a multiple of the period {n0}")
    return PolyphaseFrame(x.reshape(-1, n0).T.copy())


def dcd_reconstruct(frame) -> np.ndarray:
    """Interleave the components back into the scalar sequence."""
    if not isinstance(frame, PolyphaseFrame):
        frame = PolyphaseFrame(frame)
    return frame.components.T.reshape(-1).copy()
