"""Command line entry point: SNR sweeps, channel generation and outage curves."""

from __future__ import annotations

import argparse
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .capacity_freq import capacity_thm2
from .capacity_time import capacity_thm1_converged, optimal_input_covariance
from .channel import ChannelInstance, GeneratorSpec, format_channel, synth_lptv_channel
from .config import METHODS, SweepConfig, load_config, override
from .errors import ConfigError, DegeneracyError
from .ofdm import MODELS as OFDM_MODELS, build_tf_grid, tf_ofdm_allocation, tf_ofdm_rate
from .outage import OutageEnsemble, format_outage_csv, outage_curve

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE = 0, 1, 2

SWEEP_HEADER = ("snr_db", "method", "rate_bits_per_use", "waterlevel", "block_or_grid", "converged")


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    method: str
    rate: float
    waterlevel: float
    block: int
    status: str

    @property
    def failed(self) -> bool:
        return self.status == "error"


def snr_to_rho(snr_db: float, noise) -> float:
    """Transmit power for an input SNR relative to the mean noise power."""
    return 10 ** (snr_db / 10) * noise.lag0_mean()


def _evaluate(ch: ChannelInstance, cfg: SweepConfig, snr_db: float, method: str) -> SweepRow:
    rho = snr_to_rho(snr_db, ch.noise)
    s = cfg.solver
    try:
        if method == "thm1":
            res = capacity_thm1_converged(ch, rho, s.tol, s.k_max, s.extrapolate)
            return SweepRow(snr_db, method, res.rate, res.waterlevel, res.block,
                            "true" if res.converged else "false")
        if method == "thm2":
            res = capacity_thm2(ch, rho, s.grid)
            return SweepRow(snr_db, method, res.rate, res.waterlevel, res.block, "true")
        grid = build_tf_grid(ch, s.n_p, s.n_cp, s.ofdm_period, s.ofdm_model)
        level = tf_ofdm_allocation(grid, rho).waterlevel
        return SweepRow(snr_db, method, tf_ofdm_rate(grid, rho), level, grid.n_p, "true")
    except DegeneracyError:
        return SweepRow(snr_db, method, math.nan, math.nan, 0, "error")


def run_sweep(cfg: SweepConfig, ch: ChannelInstance = None) -> list:
    """All ``(snr_db, method)`` rows, sorted; degenerate points become error rows."""
    if ch is None:
        ch = ChannelInstance(cfg.channel.build(cfg.seed), cfg.noise.build())
    tasks = [(snr, m) for snr in cfg.snr_grid() for m in cfg.methods]
    if cfg.solver.jobs > 1:
        with ThreadPoolExecutor(cfg.solver.jobs) as pool:
            rows = list(pool.map(lambda t: _evaluate(ch, cfg, *t), tasks))
    else:
        rows = [_evaluate(ch, cfg, *t) for t in tasks]
    return sorted(rows, key=lambda r: (r.snr_db, r.method))


def format_sweep(rows, sampling_rate=None) -> str:
    buf = io.StringIO()
    header = SWEEP_HEADER + (("rate_bits_per_s",) if sampling_rate else ())
    buf.write(",".join(header) + "\n")
    for r in rows:
        fields = [repr(r.snr_db), r.method, repr(r.rate), repr(r.waterlevel), str(r.block), r.status]
        if sampling_rate:
            fields.append(repr(r.rate * sampling_rate))
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> SweepConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        raise ConfigError("noise", "no config given, so no noise model is defined")
    methods = None
    if getattr(args, "method", None):
        methods = tuple(m for group in args.method for m in group.split(",") if m)
    return override(cfg, snr_start=args.snr_start, snr_stop=args.snr_stop,
                    snr_step=args.snr_step, methods=methods, out=args.out, seed=args.seed,
                    k_max=args.k_max, tol=args.tol, grid=args.grid, jobs=args.jobs)


def cmd_capacity(args) -> int:
    cfg = _load(args)
    rows = run_sweep(cfg)
    _emit(format_sweep(rows, cfg.sampling_rate), cfg.out)
    return EXIT_DEGENERATE if any(r.failed for r in rows) else EXIT_OK


def cmd_ofdm(args) -> int:
    args.method = ["ofdm"]
    cfg = _load(args)
    knobs = {k: v for k, v in (("n_p", args.n_p), ("n_cp", args.n_cp),
                               ("ofdm_model", args.model)) if v is not None}
    if knobs:
        cfg = replace(cfg, solver=replace(cfg.solver, **knobs)).validate()
    ch = ChannelInstance(cfg.channel.build(cfg.seed), cfg.noise.build())
    if args.cells_out:
        s = cfg.solver
        grid = build_tf_grid(ch, s.n_p, s.n_cp, s.ofdm_period, s.ofdm_model)
        grid.to_csv(args.cells_out)
    rows = run_sweep(cfg, ch)
    _emit(format_sweep(rows, cfg.sampling_rate), cfg.out)
    return EXIT_DEGENERATE if any(r.failed for r in rows) else EXIT_OK


def cmd_gen_channel(args) -> int:
    if args.config:
        spec = load_config(args.config).channel.generator
    else:
        spec = GeneratorSpec()
    changes = {k: v for k, v in (("n_ch", args.n_ch), ("l_isi", args.l_isi),
                                 ("jitter", args.jitter)) if v is not None}
    try:
        spec = replace(spec, **changes)
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from None
    if args.static:
        spec = spec.static()
    _emit(format_channel(synth_lptv_channel(spec, args.seed)), args.out)
    return EXIT_OK


def cmd_outage(args) -> int:
    cfg = _load(args)
    o = cfg.outage
    if args.trials is not None:
        o = replace(o, trials=args.trials)
    if args.targets:
        o = replace(o, targets=tuple(float(t) for t in args.targets.split(",")))
    if cfg.channel.source != "generator":
        raise ConfigError("channel.source", "outage needs the generator channel source")
    spec = cfg.channel.generator
    noise = cfg.noise.build()
    if spec.l_isi is None:
        # freeze the memory of the nominal channel so every draw has the same block size
        spec = replace(spec, l_isi=synth_lptv_channel(replace(spec, jitter=0.0, phase_jitter=0.0)).memory)
    ens = OutageEnsemble(spec, noise, cfg.seed)
    k = o.k if o.k is not None else ens.default_k()
    rho = snr_to_rho(o.snr_db, noise)
    if o.input == "nominal":
        nominal = synth_lptv_channel(replace(spec, jitter=0.0, phase_jitter=0.0))
        c_xx = optimal_input_covariance(ChannelInstance(nominal, noise), rho, k)
    else:
        c_xx = rho * np.eye(ens.block_size(k))
    targets = o.targets or (0.5, 1.0, 1.5, 2.0)
    if any(b < a for a, b in zip(targets, targets[1:])):
        raise ConfigError("outage.targets", "must be nondecreasing")
    estimates = outage_curve(ens, c_xx, targets, o.trials, k, cfg.solver.jobs)
    _emit(format_outage_csv(estimates), cfg.out)
    return EXIT_OK


def _sweep_flags(p) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML sweep configuration")
    p.add_argument("--snr-start", type=float, help="first SNR in dB")
    p.add_argument("--snr-stop", type=float, help="last SNR in dB")
    p.add_argument("--snr-step", type=float, help="SNR step in dB")
    p.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
    p.add_argument("--seed", type=int, help="generator / Monte Carlo seed")
    p.add_argument("--k-max", type=int, help="largest block count for thm1")
    p.add_argument("--tol", type=float, help="thm1 convergence tolerance (bits/use)")
    p.add_argument("--grid", type=int, help="frequency grid size J for thm2")
    p.add_argument("--jobs", type=int, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lptvcap", description="Capacity of LPTV channels with cyclostationary noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="SNR sweep over capacity methods")
    _sweep_flags(p)
    p.add_argument("--method", action="append", metavar="NAME",
                   help=f"method(s) to run, repeatable or comma separated: {', '.join(METHODS)}")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("ofdm", help="SNR sweep of the TF-OFDM baseline")
    _sweep_flags(p)
    p.add_argument("--n-p", type=int, help="time cells per period")
    p.add_argument("--n-cp", type=int, help="cyclic prefix length")
    p.add_argument("--model", choices=OFDM_MODELS, help="cell model (default: achievable)")
    p.add_argument("--cells-out", metavar="PATH", help="write per-cell SNRs (m,k,gamma)")
    p.set_defaults(func=cmd_ofdm)

    p = sub.add_parser("gen-channel", help="write a synthetic channel CSV")
    p.add_argument("--config", metavar="PATH", help="TOML file with a generator [channel] table")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--n-ch", type=int, help="samples per channel period")
    p.add_argument("--l-isi", type=int, help="fixed number of taps (default: 1%% truncation)")
    p.add_argument("--jitter", type=float, help="relative component jitter")
    p.add_argument("--static", action="store_true", help="disable all modulations")
    p.set_defaults(func=cmd_gen_channel)

    p = sub.add_parser("outage", help="Monte Carlo outage curve")
    _sweep_flags(p)
    p.add_argument("--trials", type=int, help="number of channel draws")
    p.add_argument("--targets", help="comma separated target rates (bits/use)")
    p.set_defaults(func=cmd_outage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DegeneracyError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
