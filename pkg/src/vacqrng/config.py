"""Pipeline configuration: defaults, file loading, validation, seeds.

The config file is a flat, human-readable `key = value` format; `#` starts
a comment and blank lines are ignored.  Every omitted key takes the
default operating point of the reference device (device losses and gains,
12-bit/1 Vpp ADC at 80 MHz, 14-bit/2.480 Vpp DAC, N=1000 blocks against
[2043000, 2053000] with step 5, 1920x2400 extraction at epsilon = 2^-48).

A single master seed derives all stream seeds through numpy's
SeedSequence: generate_state(4) yields, in order, the LO-on chain seed,
the LO-off chain seed, the extractor test-seed, and a spare.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .controller import ControllerConfig
from .errors import ConfigError
from .optics import DeviceParams
from .signal_chain import (SIGMA_E_CALIBRATED, SIGMA_VAC_CALIBRATED,
                           AdcSpec, DacSpec, SignalChainState)
from .toeplitz import ExtractorParams


@dataclass
class PipelineConfig:
    """Every knob of an end-to-end run, with reference-device defaults."""

    # optics
    eta_ab1_db: float = 3.80
    eta_ab2_db: float = 3.56
    eta_pm_db: float = 3.24
    eta_c1d1_db: float = 3.68
    eta_c1d2_db: float = 3.82
    eta_c2d1_db: float = 3.76
    eta_c2d2_db: float = 3.60
    g_pd1: float = 5.55e4
    g_pd2: float = 5.42e4
    v_pi: float = 1.240
    p_lo: float = 5.0

    # signal chain
    delta_phi_ambient: float = 0.0
    drift_rate_std: float = 0.05
    sigma_vac: float = SIGMA_VAC_CALIBRATED
    sigma_e: float = SIGMA_E_CALIBRATED
    p_ref: float = 5.0

    # converters
    adc_bits: int = 12
    adc_v_range: float = 1.0
    sample_rate: float = 80e6
    dac_bits: int = 14
    dac_v_range: float = 2.480

    # controller
    block_size_n: int = 1000
    interval_a: int = 2043000
    interval_b: int = 2053000
    step_c: int = 5
    dac_init: int = 8092
    invert_loop: bool = False
    discard_unlocked: bool = False

    # extractor
    extractor_m: int = 1920
    extractor_n: int = 2400
    epsilon_log2: int = 48
    seed_file: str = ""

    # statistical suite
    beta: float = 0.01
    sequence_length: int = 1_000_000
    n_sequences: int = 20

    # run control
    master_seed: int = 7
    samples: int = 10_000_000
    noise_samples: int = 2_000_000
    write_raw: bool = False
    discretized_entropy: bool = False

    def device_params(self) -> DeviceParams:
        return DeviceParams(
            eta_ab1_db=self.eta_ab1_db, eta_ab2_db=self.eta_ab2_db,
            eta_pm_db=self.eta_pm_db, eta_c1d1_db=self.eta_c1d1_db,
            eta_c1d2_db=self.eta_c1d2_db, eta_c2d1_db=self.eta_c2d1_db,
            eta_c2d2_db=self.eta_c2d2_db, g_pd1=self.g_pd1, g_pd2=self.g_pd2,
            v_pi=self.v_pi, p_lo=self.p_lo)

    def adc_spec(self) -> AdcSpec:
        return AdcSpec(bits=self.adc_bits, v_range=self.adc_v_range,
                       sample_rate=self.sample_rate)

    def dac_spec(self) -> DacSpec:
        return DacSpec(bits=self.dac_bits, v_range=self.dac_v_range)

    def controller_config(self) -> ControllerConfig:
        return ControllerConfig(
            block_size_n=self.block_size_n, interval_a=self.interval_a,
            interval_b=self.interval_b, step_c=self.step_c,
            dac_bits_n=self.dac_bits, dac_init=self.dac_init,
            invert_loop=self.invert_loop,
            discard_unlocked=self.discard_unlocked)

    def extractor_params(self) -> ExtractorParams:
        return ExtractorParams(m=self.extractor_m, n=self.extractor_n,
                               epsilon_log2=self.epsilon_log2)

    def chain_state(self, rng_seed: int) -> SignalChainState:
        return SignalChainState(
            delta_phi_ambient=self.delta_phi_ambient,
            drift_rate_std=self.drift_rate_std,
            sigma_vac=self.sigma_vac, sigma_e=self.sigma_e,
            rng_seed=rng_seed, p_ref=self.p_ref)

    def stream_seeds(self) -> dict[str, int]:
        """Named per-stream seeds derived from the master seed."""
        state = np.random.SeedSequence(self.master_seed).generate_state(
            4, np.uint64)
        return {"lo_on": int(state[0]), "lo_off": int(state[1]),
                "extractor_seed": int(state[2]), "spare": int(state[3])}

    def expected_h_min(self) -> float:
        """Min-entropy implied by the configured noise levels.

        Converts the analog sigmas to ADC counts and adds the quantizer's
        1/12 LSB^2 to both variances, mirroring what a measured run
        reports.
        """
        lsb = self.adc_v_range / 2 ** self.adc_bits
        sigma_m_sq = (self.sigma_vac ** 2 + self.sigma_e ** 2) / lsb ** 2 + 1 / 12
        sigma_e_sq = self.sigma_e ** 2 / lsb ** 2 + 1 / 12
        diff = sigma_m_sq - sigma_e_sq
        if diff <= 0:
            raise ConfigError("configured noise leaves no quantum variance")
        return 0.5 * math.log2(2 * math.pi * diff)

    def validate(self) -> None:
        """Cross-field consistency; raises ConfigError on hard violations."""
        # Constructing the typed views runs each component's own checks.
        self.device_params()
        adc = self.adc_spec()
        dac = self.dac_spec()
        self.controller_config()
        self.extractor_params()

        if abs(dac.v_range - 2 * self.v_pi) > 1e-9:
            warnings.warn(
                f"DAC range {dac.v_range} V != 2*v_pi = {2 * self.v_pi} V: "
                "code wraparound will not be an exact phase wrap",
                stacklevel=2)
        if self.interval_a > self.interval_b:
            raise ConfigError("interval_a must be <= interval_b")
        if self.block_size_n * adc.max_code < self.interval_b:
            warnings.warn("decision interval lies above the largest possible "
                          "block sum", stacklevel=2)
        if self.samples < self.block_size_n:
            raise ConfigError("samples must cover at least one block")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must be in (0, 1)")
        if self.sequence_length < 100 or self.n_sequences < 1:
            raise ConfigError("suite needs sequence_length >= 100 and "
                              "n_sequences >= 1")
        if self.master_seed < 0 or self.master_seed > 2 ** 64 - 1:
            raise ConfigError("master_seed must fit in 64 bits")

        # Leftover-hash budget: the configured geometry must be coverable
        # by the entropy the configured noise implies.  h is rounded to the
        # 0.01-bit reporting precision the extractor was sized with.
        if self.p_lo > 0 and self.sigma_vac > 0:
            h = round(self.expected_h_min(), 2)
            budget = (self.extractor_n / self.adc_bits) * h \
                - 2.0 * self.epsilon_log2
            if self.extractor_m > budget + 1e-9:
                raise ConfigError(
                    f"extractor_m={self.extractor_m} exceeds the leftover-hash "
                    f"budget {budget:.1f} bits (h_min={h:.2f} bits/sample, "
                    f"epsilon=2^-{self.epsilon_log2})")

    def to_text(self) -> str:
        """Canonical key=value dump (the format load_config reads)."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int":
            return int(raw, 0)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"field {key!r}: {exc}") from exc


def parse_config_text(text: str) -> PipelineConfig:
    """Parse `key = value` lines into a validated PipelineConfig."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown field {key!r}")
        values[key] = _parse_value(key, raw)
    try:
        config = PipelineConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def load_config(path) -> PipelineConfig:
    """Load and validate a config file; an empty file yields the defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
