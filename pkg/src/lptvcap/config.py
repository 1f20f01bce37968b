"""Sweep configuration files.

Configs are TOML.  Top-level keys ``methods``, ``seed``, ``out`` and
``sampling_rate`` are optional; the tables are::

    [snr]      start, stop, step           (dB)
    [channel]  source = "flat" | "file" | "generator"
               flat:      gain
               file:      path
               generator: n_ch, l_isi, jitter, phase_jitter, delay, n_fft,
                          taper_start, sampling_rate, rel_threshold, static
    [noise]    model = "white" | "katayama" | "nassar"
               white:     variance, period
               katayama:  classes = [[A, kappa, theta_deg], ...], alpha1,
                          t_samp, n_noise, rel_threshold
               nassar:    filters = [[h0...], ...], boundaries = [0, ..., N]
    [solver]   k_max, tol, grid, n_p, n_cp, ofdm_period, ofdm_model, extrapolate, jobs
    [outage]   trials, snr_db, targets, k, input = "isotropic" | "nominal"

``[noise]`` is required; everything else has a default.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import GeneratorSpec, LptvFilter, flat_channel, load_channel, synth_lptv_channel
from .errors import ConfigError
from .ofdm import MODELS as OFDM_MODELS
from .noise import (CyclicAutocorrelation, KatayamaParams, NassarParams, katayama_autocorrelation,
                    katayama_support, nassar_autocorrelation, white_noise)

METHODS = ("thm1", "thm2", "ofdm")


def _take(table: dict, name: str, key: str, kind, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"{name}.{key}", "missing")
        return default
    value = table[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key}", f"invalid value {value!r}") from None


def _reject_unknown(table: dict, name: str, allowed) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"{name}.{extra[0]}", "unknown key")


@dataclass(frozen=True)
class ChannelSpec:
    source: str = "flat"
    gain: float = 1.0
    path: Optional[str] = None
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)

    def build(self, seed: int) -> LptvFilter:
        if self.source == "flat":
            return flat_channel(self.gain)
        if self.source == "file":
            return load_channel(self.path)
        return synth_lptv_channel(self.generator, seed)


@dataclass(frozen=True)
class NoiseSpec:
    model: str
    variance: float = 1.0
    period: int = 1
    katayama: Optional[KatayamaParams] = None
    rel_threshold: float = 1e-3
    nassar: Optional[NassarParams] = None

    def build(self) -> CyclicAutocorrelation:
        if self.model == "white":
            return white_noise(self.variance, self.period)
        if self.model == "katayama":
            support = katayama_support(self.katayama, self.rel_threshold)
            return katayama_autocorrelation(self.katayama, support)
        return nassar_autocorrelation(self.nassar)


@dataclass(frozen=True)
class SolverSpec:
    k_max: Optional[int] = None
    tol: float = 1e-4
    grid: int = 1024
    n_p: int = 14
    n_cp: Optional[int] = None
    ofdm_period: Optional[int] = None
    ofdm_model: str = "achievable"
    extrapolate: bool = True
    jobs: int = 1


@dataclass(frozen=True)
class OutageSpec:
    trials: int = 200
    snr_db: float = 10.0
    targets: tuple = ()
    k: Optional[int] = None
    input: str = "isotropic"


@dataclass(frozen=True)
class SweepConfig:
    noise: NoiseSpec
    channel: ChannelSpec = ChannelSpec()
    snr_start: float = 0.0
    snr_stop: float = 10.0
    snr_step: float = 5.0
    methods: tuple = ("thm1", "thm2")
    solver: SolverSpec = SolverSpec()
    outage: OutageSpec = OutageSpec()
    out: Optional[str] = None
    seed: int = 0
    sampling_rate: Optional[float] = None

    def validate(self) -> "SweepConfig":
        if not self.snr_step > 0:
            raise ConfigError("snr.step", "must be positive")
        if self.snr_stop < self.snr_start:
            raise ConfigError("snr.stop", "must not be below snr.start")
        if not self.methods:
            raise ConfigError("methods", "select at least one method")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError("methods", f"unknown method {m!r}")
        s = self.solver
        if s.tol <= 0:
            raise ConfigError("solver.tol", "must be positive")
        if s.grid < 16 or s.grid % 2:
            raise ConfigError("solver.grid", "must be even and at least 16")
        if s.n_p < 1:
            raise ConfigError("solver.n_p", "must be at least 1")
        if s.ofdm_model not in OFDM_MODELS:
            raise ConfigError("solver.ofdm_model", f"expected one of {OFDM_MODELS}")
        if s.jobs < 1:
            raise ConfigError("solver.jobs", "must be at least 1")
        if s.k_max is not None and s.k_max < 2:
            raise ConfigError("solver.k_max", "must be at least 2")
        if self.outage.trials < 1:
            raise ConfigError("outage.trials", "must be at least 1")
        if self.outage.input not in ("isotropic", "nominal"):
            raise ConfigError("outage.input", "must be 'isotropic' or 'nominal'")
        if self.sampling_rate is not None and self.sampling_rate <= 0:
            raise ConfigError("sampling_rate", "must be positive")
        return self

    def snr_grid(self) -> list:
        count = int((self.snr_stop - self.snr_start) / self.snr_step + 1e-9) + 1
        return [round(self.snr_start + i * self.snr_step, 12) for i in range(count)]


def _parse_channel(table: dict) -> ChannelSpec:
    source = _take(table, "channel", "source", str, "flat")
    if source == "flat":
        _reject_unknown(table, "channel", ("source", "gain"))
        return ChannelSpec("flat", gain=_take(table, "channel", "gain", float, 1.0))
    if source == "file":
        _reject_unknown(table, "channel", ("source", "path"))
        return ChannelSpec("file", path=_take(table, "channel", "path", str, required=True))
    if source != "generator":
        raise ConfigError("channel.source", f"unknown source {source!r}")
    keys = {"n_ch": int, "l_isi": int, "jitter": float, "phase_jitter": float, "delay": int,
            "n_fft": int, "sampling_rate": float, "rel_threshold": float, "taper_start": float}
    _reject_unknown(table, "channel", ("source", "static", *keys))
    kwargs = {k: _take(table, "channel", k, t) for k, t in keys.items() if k in table}
    try:
        spec = GeneratorSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from None
    if _take(table, "channel", "static", bool, False):
        spec = spec.static()
    return ChannelSpec("generator", generator=spec)


def _parse_noise(table: Optional[dict]) -> NoiseSpec:
    if table is None:
        raise ConfigError("noise", "missing noise section")
    model = _take(table, "noise", "model", str, required=True)
    try:
        if model == "white":
            _reject_unknown(table, "noise", ("model", "variance", "period"))
            spec = NoiseSpec("white", variance=_take(table, "noise", "variance", float, 1.0),
                             period=_take(table, "noise", "period", int, 1))
            spec.build()
            return spec
        if model == "katayama":
            _reject_unknown(table, "noise", ("model", "classes", "alpha1", "t_samp",
                                             "n_noise", "rel_threshold"))
            classes = table.get("classes")
            if not classes or any(len(c) != 3 for c in classes):
                raise ConfigError("noise.classes", "expected a list of [A, kappa, theta_deg]")
            params = KatayamaParams.from_degrees(
                classes, _take(table, "noise", "alpha1", float, required=True),
                _take(table, "noise", "t_samp", float, required=True),
                _take(table, "noise", "n_noise", int, required=True))
            return NoiseSpec("katayama", katayama=params,
                             rel_threshold=_take(table, "noise", "rel_threshold", float, 1e-3))
        if model == "nassar":
            _reject_unknown(table, "noise", ("model", "filters", "boundaries"))
            if "filters" not in table or "boundaries" not in table:
                raise ConfigError("noise.filters", "nassar noise needs filters and boundaries")
            return NoiseSpec("nassar", nassar=NassarParams(table["filters"], table["boundaries"]))
    except (TypeError, ValueError, ArithmeticError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("noise", str(exc)) from None
    raise ConfigError("noise.model", f"unknown model {model!r}")


def parse_config(data: dict) -> SweepConfig:
    """Build a validated :class:`SweepConfig` from a parsed TOML mapping."""
    _reject_unknown(data, "config", ("snr", "channel", "noise", "solver", "outage", "methods",
                                     "seed", "out", "sampling_rate"))
    snr = data.get("snr", {})
    _reject_unknown(snr, "snr", ("start", "stop", "step"))
    solver = data.get("solver", {})
    _reject_unknown(solver, "solver", SolverSpec.__dataclass_fields__)
    outage = data.get("outage", {})
    _reject_unknown(outage, "outage", OutageSpec.__dataclass_fields__)
    methods = data.get("methods", ["thm1", "thm2"])
    if isinstance(methods, str) or not isinstance(methods, list):
        raise ConfigError("methods", "expected a list of method names")
    cfg = SweepConfig(
        noise=_parse_noise(data.get("noise")),
        channel=_parse_channel(data.get("channel", {})),
        snr_start=_take(snr, "snr", "start", float, 0.0),
        snr_stop=_take(snr, "snr", "stop", float, 10.0),
        snr_step=_take(snr, "snr", "step", float, 5.0),
        methods=tuple(methods),
        solver=SolverSpec(
            k_max=_take(solver, "solver", "k_max", int),
            tol=_take(solver, "solver", "tol", float, 1e-4),
            grid=_take(solver, "solver", "grid", int, 1024),
            n_p=_take(solver, "solver", "n_p", int, 14),
            n_cp=_take(solver, "solver", "n_cp", int),
            ofdm_period=_take(solver, "solver", "ofdm_period", int),
            ofdm_model=_take(solver, "solver", "ofdm_model", str, "achievable"),
            extrapolate=_take(solver, "solver", "extrapolate", bool, True),
            jobs=_take(solver, "solver", "jobs", int, 1)),
        outage=OutageSpec(
            trials=_take(outage, "outage", "trials", int, 200),
            snr_db=_take(outage, "outage", "snr_db", float, 10.0),
            targets=tuple(float(t) for t in outage.get("targets", ())),
            k=_take(outage, "outage", "k", int),
            input=_take(outage, "outage", "input", str, "isotropic")),
        out=_take(data, "config", "out", str),
        seed=_take(data, "config", "seed", int, 0),
        sampling_rate=_take(data, "config", "sampling_rate", float))
    return cfg.validate()


def load_config(path) -> SweepConfig:
    try:
        with open(Path(path), "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    return parse_config(data)


def override(cfg: SweepConfig, **changes) -> SweepConfig:
    """Apply CLI overrides (``None`` values are ignored) and revalidate."""
    top = {k: v for k, v in changes.items() if v is not None and k in SweepConfig.__dataclass_fields__}
    solver = {k: v for k, v in changes.items() if v is not None and k in SolverSpec.__dataclass_fields__}
    return replace(cfg, solver=replace(cfg.solver, **solver), **top).validate()
