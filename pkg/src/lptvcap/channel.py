"""Linear periodically time-varying (LPTV) channels.

Holds the tap table ``g[n, l]``, the equivalent MIMO matrices used by the
two capacity pipelines, a synthetic power-line channel generator and the
channel CSV format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ChannelFileError
from .noise import CyclicAutocorrelation


@dataclass(frozen=True)
class LptvFilter:
    """Tap table of shape ``(N_ch, L_isi)``; ``g[n + N_ch, l] = g[n, l]``."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float)
        if taps.ndim == 1:
            taps = taps[None, :]
        if taps.ndim != 2 or taps.shape[0] < 1 or taps.shape[1] < 1:
            raise ValueError(f"tap table must be 2-D and nonempty, got {taps.shape}")
        if not np.all(np.isfinite(taps)):
            raise ValueError("tap table contains non-finite values")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def period(self) -> int:
        return self.taps.shape[0]

    @property
    def memory(self) -> int:
        return self.taps.shape[1]

    def tap(self, n, l):
        """``g[n, l]`` with periodic ``n`` and zero for ``l`` outside ``[0, L_isi)``."""
        n = np.asarray(n, dtype=np.int64)
        l = np.asarray(l, dtype=np.int64)
        n, l = np.broadcast_arrays(n, l)
        ok = (l >= 0) & (l < self.memory)
        out = np.zeros(n.shape)
        out[ok] = self.taps[n[ok] % self.period, l[ok]]
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> "LptvFilter":
        return LptvFilter(self.taps * factor)

    def __eq__(self, other):
        if not isinstance(other, LptvFilter):
            return NotImplemented
        return self.taps.shape == other.taps.shape and bool(np.array_equal(self.taps, other.taps))

    __hash__ = None


def flat_channel(gain: float = 1.0) -> LptvFilter:
    return LptvFilter(np.array([[float(gain)]]))


def apply_lptv(f: LptvFilter, x) -> np.ndarray:
    """Noise-free scalar channel ``r[n] = sum_l g[n, l] x[n - l]`` with
    ``x[n] = 0`` for ``n < 0``."""
    x = np.asarray(x, dtype=float)
    r = np.zeros(x.size)
    n = np.arange(x.size)
    for l in range(f.memory):
        g = f.taps[n[l:] % f.period, l]
        r[l:] += g * x[:x.size - l]
    return r


@dataclass(frozen=True)
class ChannelInstance:
    """A channel paired with its noise and the derived block geometry."""

    filter: LptvFilter
    noise: CyclicAutocorrelation

    @property
    def n_lcm(self) -> int:
        return math.lcm(self.filter.period, self.noise.period)

    @property
    def memory(self) -> int:
        """``L = max(L_corr, L_isi)``."""
        return max(self.noise.support, self.filter.memory)

    @property
    def k_min(self) -> int:
        return -(-self.memory // self.n_lcm)

    @property
    def n0(self) -> int:
        """Block size of the two-tap block model."""
        return self.k_min * self.n_lcm


def build_channel_matrix(ch: ChannelInstance, k: int) -> np.ndarray:
    """Equivalent ``M x N`` MIMO matrix over a block of ``N = k * N_lcm`` inputs.

    Row ``u`` produces output ``r[u + L - 1]`` of the block; entry ``(u, v)``
    is ``g_{u+L-1}[L - 1 - v + u]`` for ``0 <= v - u < L``.
    """
    if k <= ch.k_min:
        raise ValueError(f"block count K={k} must exceed K_min={ch.k_min}")
    big_l = ch.memory
    n = k * ch.n_lcm
    m = n - big_l + 1
    u = np.arange(m)[:, None]
    d = np.arange(big_l)[None, :]
    vals = ch.filter.tap(u + big_l - 1, big_l - 1 - d)
    g = np.zeros((m, n))
    g[u, u + d] = vals
    return g


def build_block_taps(ch: ChannelInstance):
    """Block taps ``(H0, H1)`` of size ``N0 x N0``.

    On decimated frames of length ``N0`` the scalar channel becomes
    ``r~[n] = H0 x~[n] + H1 x~[n-1]``.
    """
    n0 = ch.n0
    big_l = ch.memory
    u = np.arange(n0)[:, None]
    v = np.arange(n0)[None, :]
    diff = u - v
    h0 = np.where((diff >= 0) & (diff < big_l), ch.filter.tap(u, diff), 0.0)
    lag1 = n0 + diff
    h1 = np.where((diff >= 1 - n0) & (diff < big_l - n0), ch.filter.tap(u, lag1), 0.0)
    return h0, h1


def apply_block_taps(h0, h1, x) -> np.ndarray:
    """Run ``x`` through the block convolution on its decimated frames."""
    n0 = h0.shape[0]
    frames = np.asarray(x, dtype=float).reshape(-1, n0)
    out = frames @ h0.T
    out[1:] += frames[:-1] @ h1.T
    return out.reshape(-1)


# -- Truncation -------------------------------------------------------------

def truncate_channel_memory(taps, rel_threshold: float = 0.01) -> int:
    """Smallest ``L`` such that no tap at lag ``l >= L`` exceeds
    ``rel_threshold`` times the largest tap magnitude.

    A tap is kept only when it strictly exceeds the threshold.
    """
    if not 0 < rel_threshold <= 1:
        raise ValueError("rel_threshold must lie in (0, 1]")
    taps = np.atleast_2d(np.asarray(taps, dtype=float))
    envelope = np.abs(taps).max(axis=0)
    kept = np.nonzero(envelope > rel_threshold * envelope.max())[0]
    return int(kept[-1]) + 1 if kept.size else 1


# -- Synthetic generator ----------------------------------------------------

@dataclass(frozen=True)
class Modulation:
    """Periodic impedance variation of one branch.

    ``harmonic``: impedance scaled by ``1 + depth * sin(2 pi n / N_ch + phase)``.
    ``commuted``: impedance doubled for the first ``duty`` fraction of the
    period, nominal otherwise.
    """

    kind: str
    phase: float = 0.0
    duty: float = 0.125
    depth: float = 0.5

    def __post_init__(self):
        if self.kind not in ("harmonic", "commuted"):
            raise ValueError(f"unknown modulation kind {self.kind!r}")
        if self.kind == "commuted" and not 0 < self.duty < 1:
            raise ValueError("duty must lie in (0, 1)")
        if self.kind == "harmonic" and not 0 <= self.depth < 1:
            raise ValueError("harmonic depth must lie in [0, 1)")

    def factor(self, n_ch: int) -> np.ndarray:
        t = np.arange(n_ch) / n_ch
        if self.kind == "harmonic":
            return 1.0 + self.depth * np.sin(2 * np.pi * t + self.phase)
        return np.where(t < self.duty, 2.0, 1.0)


@dataclass(frozen=True)
class Branch:
    """Series RLC resonator (ohms, henries, farads)."""

    resistance: float
    inductance: float
    capacitance: float
    modulation: Optional[Modulation] = None

    def __post_init__(self):
        if min(self.resistance, self.inductance, self.capacitance) <= 0:
            raise ValueError("R, L and C must be positive")

    def admittance(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        # jwC / (1 - w^2 LC + jwRC): finite at DC, where the capacitor blocks
        return 1j * w * self.capacitance / (
            1.0 - w * w * self.inductance * self.capacitance
            + 1j * w * self.resistance * self.capacitance)


DEFAULT_BRANCHES = (
    Branch(17e3, 11e-3, 0.6e-9, Modulation("harmonic", phase=math.pi / 2)),
    Branch(8e3, 2.3e-3, 1e-9, Modulation("commuted", duty=1 / 8)),
    Branch(26e3, 6e-3, 3.7e-9, Modulation("harmonic", phase=math.pi / 4)),
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the synthetic LPTV power-line channel.

    The network is a ladder: source impedance, then each branch as a shunt
    resonator separated from the next by a short line section (series
    ``line_resistance`` + ``line_inductance``), terminated in a resistive
    load.  The response is rolled off above ``taper_start`` of the Nyquist
    band and delayed by ``delay`` samples to capture the leading ringing.  ``l_isi=None`` keeps every tap above ``rel_threshold`` of the peak.
    ``jitter`` and ``phase_jitter`` randomize R, L, C (log-uniform, relative)
    and harmonic phases (uniform, radians) per seed.
    """

    branches: tuple = DEFAULT_BRANCHES
    n_ch: int = 64
    l_isi: Optional[int] = None
    sampling_rate: float = 300e3
    source_impedance: float = 1e3
    load_impedance: float = 10e3
    line_resistance: float = 20.0
    line_inductance: float = 50e-6
    n_fft: int = 1024
    delay: int = 1
    taper_start: float = 0.6
    rel_threshold: float = 0.01
    jitter: float = 0.0
    phase_jitter: float = 0.0

    def __post_init__(self):
        if self.n_ch < 1 or self.n_fft < 16 or self.n_fft % 2:
            raise ValueError("n_ch must be positive and n_fft an even number >= 16")
        if self.l_isi is not None and not 1 <= self.l_isi <= self.n_fft // 2:
            raise ValueError("l_isi must lie in [1, n_fft/2]")
        if min(self.sampling_rate, self.source_impedance, self.load_impedance) <= 0:
            raise ValueError("sampling rate and terminations must be positive")
        if self.line_resistance < 0 or self.line_inductance < 0:
            raise ValueError("line section values must be nonnegative")
        if self.jitter < 0 or self.phase_jitter < 0 or self.delay < 0:
            raise ValueError("jitter, phase_jitter and delay must be nonnegative")
        if not 0 <= self.taper_start < 1:
            raise ValueError("taper_start must lie in [0, 1)")

    def static(self) -> "GeneratorSpec":
        """Same network with every modulation disabled."""
        return replace(self, branches=tuple(replace(b, modulation=None) for b in self.branches))


def _realize_branches(spec: GeneratorSpec, seed):
    if spec.jitter == 0 and spec.phase_jitter == 0:
        return spec.branches
    rng = np.random.default_rng(seed)
    span = math.log1p(spec.jitter)
    out = []
    for b in spec.branches:
        r, l, c = np.exp(rng.uniform(-span, span, size=3))
        shift = rng.uniform(-spec.phase_jitter, spec.phase_jitter)
        mod = b.modulation
        if mod is not None and mod.kind == "harmonic":
            mod = replace(mod, phase=mod.phase + shift)
        out.append(Branch(b.resistance * r, b.inductance * l, b.capacitance * c, mod))
    return tuple(out)


def _band_taper(n_bins: int, start: float) -> np.ndarray:
    # raised-cosine roll-off from `start` (fraction of Nyquist) to the band edge
    x = np.linspace(0.0, 1.0, n_bins)
    w = np.ones(n_bins)
    edge = x > start
    w[edge] = 0.5 * (1 + np.cos(np.pi * (x[edge] - start) / (1 - start)))
    return w


def frequency_response(spec: GeneratorSpec, branches, scale, omega) -> np.ndarray:
    """Voltage transfer of the ladder with branch impedances multiplied by
    ``scale`` (one factor per branch)."""
    one = np.ones_like(omega, dtype=complex)
    zero = np.zeros_like(omega, dtype=complex)
    a, b, c, d = one, spec.source_impedance * one, zero, one
    z_line = spec.line_resistance + 1j * omega * spec.line_inductance
    for i, (br, s) in enumerate(zip(branches, scale)):
        if i:
            # series line section
            a, b, c, d = a, a * z_line + b, c, c * z_line + d
        y = br.admittance(omega) / s
        a, b, c, d = a + b * y, b, c + d * y, d
    a, b = a, a * z_line + b
    zl = spec.load_impedance
    return zl / (a * zl + b)


def synth_lptv_channel(spec: GeneratorSpec = GeneratorSpec(), seed: int = 0) -> LptvFilter:
    """Generate a periodically varying FIR tap table from the RLC ladder.

    For every time index the branch impedances are evaluated under their
    modulation, the ladder's frequency response is sampled on ``n_fft``
    points, tapered at the band edge, delayed by ``delay`` samples and
    inverse transformed.  Deterministic per seed.
    """
    branches = _realize_branches(spec, seed)
    nf = spec.n_fft
    omega = 2 * np.pi * np.arange(nf // 2 + 1) * spec.sampling_rate / nf
    taper = _band_taper(omega.size, spec.taper_start) * np.exp(-1j * np.pi * np.arange(omega.size) * 2 * spec.delay / nf)
    factors = np.array([b.modulation.factor(spec.n_ch) if b.modulation else np.ones(spec.n_ch)
                        for b in branches])
    rows = []
    cache = {}
    for n in range(spec.n_ch):
        key = tuple(factors[:, n])
        if key not in cache:
            resp = frequency_response(spec, branches, key, omega) * taper
            cache[key] = np.fft.irfft(resp, nf)[:nf // 2]
        rows.append(cache[key])
    taps = np.array(rows)
    l_isi = spec.l_isi or truncate_channel_memory(taps, spec.rel_threshold)
    return LptvFilter(taps[:, :l_isi])


# -- CSV I/O ----------------------------------------------------------------

def format_channel(f: LptvFilter) -> str:
    """Channel CSV text: header ``n_ch,l_isi``, a line with the two integers,
    then one row of ``L_isi`` taps (17 significant digits) per time index."""
    lines = ["n_ch,l_isi", f"{f.period},{f.memory}"]
    lines += [",".join(f"{v:.17g}" for v in row) for row in f.taps]
    return "\n".join(lines) + "\n"


def save_channel(f: LptvFilter, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_channel(f))


def load_channel(path) -> LptvFilter:
    with open(path) as fh:
        lines = [(i + 1, ln.strip()) for i, ln in enumerate(fh)]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise ChannelFileError("no tap rows")
    lineno, header = lines[0]
    if header.replace(" ", "") != "n_ch,l_isi":
        raise ChannelFileError(f"expected header 'n_ch,l_isi', got {header!r}", lineno)
    if len(lines) < 2:
        raise ChannelFileError("no tap rows")
    lineno, dims = lines[1]
    try:
        n_ch, l_isi = (int(v) for v in dims.split(","))
    except ValueError:
        raise ChannelFileError(f"expected two integers 'n_ch,l_isi', got {dims!r}", lineno) from None
    body = lines[2:]
    if not body:
        raise ChannelFileError("no tap rows")
    rows = []
    for lineno, text in body:
        fields = text.split(",")
        if len(fields) != l_isi:
            raise ChannelFileError(f"expected {l_isi} taps, found {len(fields)}", lineno)
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            raise ChannelFileError(f"non-numeric tap in {text!r}", lineno) from None
    if len(rows) != n_ch:
        raise ChannelFileError(f"expected {n_ch} tap rows, found {len(rows)}", body[-1][0])
    return LptvFilter(np.array(rows))
