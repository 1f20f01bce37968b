import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lptvcap.capacity_time import capacity_thm1, optimal_input_covariance, whitened_channel
from lptvcap.channel import ChannelInstance, GeneratorSpec, LptvFilter, flat_channel
from lptvcap.noise import white_noise
from lptvcap.outage import (OutageEnsemble, OutageEstimate, ensemble_rates, fading_rate,
                            format_outage_csv, outage_curve, outage_probability_mc,
                            outage_upper_bound_mc, write_outage_csv)

SMALL = replace(GeneratorSpec(), n_ch=8, l_isi=3, n_fft=256)


def jittered(seed=0):
    return OutageEnsemble(replace(SMALL, jitter=0.3, phase_jitter=0.5), white_noise(1.0), seed)


def test_fading_rate_flat_isotropic():
    for rho in (0.5, 1.0, 10.0):
        r = fading_rate(rho * np.eye(6), flat_channel(), white_noise(1.0), 6)
        assert r == pytest.approx(0.5 * math.log2(1 + rho), abs=1e-12)


def test_fading_rate_with_optimal_input_is_capacity():
    ch = ChannelInstance(LptvFilter([[1.0, 0.4], [0.5, -0.3]]), white_noise(1.0))
    cov = optimal_input_covariance(ch, 2.0, 3)
    assert fading_rate(cov, ch.filter, ch.noise, 3) == pytest.approx(
        capacity_thm1(ch, 2.0, 3).rate, abs=1e-10)


def test_step_curve_for_degenerate_ensemble():
    ens = OutageEnsemble(SMALL, white_noise(1.0), seed=4)
    k = ens.default_k()
    rates = ensemble_rates(ens, np.eye(ens.block_size(k)), 5)
    assert np.all(rates == rates[0])
    r0 = rates[0]
    targets = [0.5 * r0, np.nextafter(r0, 0), r0, 1.5 * r0]
    curve = outage_curve(ens, np.eye(ens.block_size(k)), targets, 5)
    assert [e.probability for e in curve] == [0.0, 0.0, 1.0, 1.0]
    assert all(e.half_width == 0.0 for e in curve)


def test_bound_equals_mc_with_isotropic_input():
    ens = jittered(7)
    k = ens.default_k()
    rho = 3.0
    rates = ensemble_rates(ens, rho * np.eye(ens.block_size(k)), 40)
    target = float(np.median(rates))
    a = outage_upper_bound_mc(ens, rho, target, 40)
    b = outage_probability_mc(ens, rho * np.eye(ens.block_size(k)), target, 40)
    assert a == b
    assert a.count == np.count_nonzero(rates <= target)
    assert 0 < a.probability < 1


def test_curve_is_monotone():
    ens = jittered(1)
    k = ens.default_k()
    targets = np.linspace(0.0, 3.0, 31)
    curve = outage_curve(ens, np.eye(ens.block_size(k)), targets, 30)
    probs = [e.probability for e in curve]
    assert probs == sorted(probs)
    assert probs[0] == 0.0 and probs[-1] == 1.0


def test_jobs_do_not_change_results():
    ens = jittered(3)
    cov = np.eye(ens.block_size(ens.default_k()))
    one = ensemble_rates(ens, cov, 12, jobs=1)
    four = ensemble_rates(ens, cov, 12, jobs=4)
    assert one.tobytes() == four.tobytes()


def test_realizations_depend_only_on_seed_and_index():
    a, b = jittered(5), jittered(5)
    assert a.realization(3) == b.realization(3)
    assert a.realization(3) != a.realization(4)
    assert a.realization(3) != jittered(6).realization(3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 1000))
def test_estimate_half_width(count, extra):
    trials = count + extra
    e = OutageEstimate.from_count(count, trials, 1.0)
    p = count / trials
    assert e.probability == p
    assert e.half_width == pytest.approx(1.96 * math.sqrt(p * (1 - p) / trials))


def test_block_size_and_validation():
    ens = OutageEnsemble(SMALL, white_noise(1.0, 3))
    assert ens.block_size(2) == 48
    with pytest.raises(ValueError):
        ensemble_rates(ens, np.eye(48), 0)
    gw = whitened_channel(ChannelInstance(ens.realization(0), ens.noise), 2)
    assert gw.shape[1] == 48


def test_csv(tmp_path):
    est = [OutageEstimate.from_count(1, 4, 0.5), OutageEstimate.from_count(4, 4, 1.0)]
    text = format_outage_csv(est)
    lines = text.splitlines()
    assert lines[0] == "R_T,probability,half_width"
    assert lines[2] == "1.0,1.0,0.0"
    path = tmp_path / "o.csv"
    write_outage_csv(est, path)
    assert path.read_text() == text
