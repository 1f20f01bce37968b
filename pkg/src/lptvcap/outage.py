"""Slow-fading outage analysis.

A realization of the channel is drawn once and held for the whole
transmission.  For a fixed input covariance the realized rate is
``(1/2N) log2 |I + G_w C_xx G_w^T|`` and the outage probability is the
chance that it falls at or below a target rate.  Using ``C_xx = rho I``
gives the upper bound on the outage probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .capacity_time import log_det_rate, whitened_channel
from .channel import ChannelInstance, GeneratorSpec, LptvFilter, synth_lptv_channel
from .noise import CyclicAutocorrelation


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage probability with a 95% normal-approximation
    half-width ``1.96 sqrt(p (1 - p) / trials)``."""

    probability: float
    trials: int
    half_width: float
    target_rate: float
    count: int

    @classmethod
    def from_count(cls, count: int, trials: int, target_rate: float) -> "OutageEstimate":
        p = count / trials
        return cls(p, trials, 1.96 * math.sqrt(p * (1 - p) / trials), float(target_rate), int(count))


def fading_rate(c_xx, g: LptvFilter, noise: CyclicAutocorrelation, k: int) -> float:
    """Rate of one realization with a fixed input covariance, bits per use."""
    return log_det_rate(whitened_channel(ChannelInstance(g, noise), k), c_xx)


@dataclass(frozen=True)
class OutageEnsemble:
    """Random channels from the synthetic generator.

    Realization ``i`` uses a seed derived from ``(seed, i)``, so the sequence
    does not depend on how trials are scheduled.  The generator spec should fix
    ``l_isi`` so every realization has the same block size.
    """

    spec: GeneratorSpec
    noise: CyclicAutocorrelation
    seed: int = 0

    def realization_seed(self, i: int) -> int:
        return int(np.random.SeedSequence(self.seed, spawn_key=(i,)).generate_state(1)[0])

    def realization(self, i: int) -> LptvFilter:
        return synth_lptv_channel(self.spec, self.realization_seed(i))

    def block_size(self, k: int) -> int:
        """``N = K * N_lcm`` for the ensemble's (fixed) periods."""
        return k * math.lcm(self.spec.n_ch, self.noise.period)

    def default_k(self) -> int:
        g = self.realization(0)
        return ChannelInstance(g, self.noise).k_min + 1


def ensemble_rates(ens: OutageEnsemble, c_xx, trials: int, k: Optional[int] = None,
                   jobs: int = 1) -> np.ndarray:
    """Realized rates of trials ``0 .. trials-1`` in trial order."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    k = ens.default_k() if k is None else k

    def one(i):
        return fading_rate(c_xx, ens.realization(i), ens.noise, k)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return np.array(list(pool.map(one, range(trials))))
    return np.array([one(i) for i in range(trials)])


def outage_probability_mc(ens: OutageEnsemble, c_xx, target_rate: float, trials: int,
                          k: Optional[int] = None, jobs: int = 1) -> OutageEstimate:
    """Fraction of realizations whose rate is at or below ``target_rate``."""
    rates = ensemble_rates(ens, c_xx, trials, k, jobs)
    return OutageEstimate.from_count(int(np.count_nonzero(rates <= target_rate)), trials, target_rate)


def outage_upper_bound_mc(ens: OutageEnsemble, rho: float, target_rate: float, trials: int,
                          k: Optional[int] = None, jobs: int = 1) -> OutageEstimate:
    """Outage probability with the isotropic input ``rho I``."""
    k = ens.default_k() if k is None else k
    return outage_probability_mc(ens, rho * np.eye(ens.block_size(k)), target_rate, trials, k, jobs)


def outage_curve(ens: OutageEnsemble, c_xx, targets: Sequence[float], trials: int,
                 k: Optional[int] = None, jobs: int = 1) -> list:
    """Estimates for several target rates from one shared set of trials."""
    rates = ensemble_rates(ens, c_xx, trials, k, jobs)
    return [OutageEstimate.from_count(int(np.count_nonzero(rates <= t)), trials, t)
            for t in targets]


def format_outage_csv(estimates) -> str:
    """Columns ``R_T, probability, half_width``."""
    lines = ["R_T,probability,half_width"]
    lines += [f"{e.target_rate!r},{e.probability!r},{e.half_width!r}" for e in estimates]
    return "\n".join(lines) + "\n"


def write_outage_csv(estimates, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_outage_csv(estimates))
