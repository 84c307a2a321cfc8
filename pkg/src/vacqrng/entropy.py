"""Conditional min-entropy estimation and extractor sizing.

The measurement outcome is modeled as quantum noise plus independent
classical noise, both Gaussian.  Comparing the output variance with the LO
on (sigma_m_sq) and off (sigma_e_sq) isolates the quantum part, and the
worst-case extractable randomness per sample is

    h_min = (1/2) * log2(2*pi*(sigma_m_sq - sigma_e_sq))

Variances are in squared ADC counts (LSB^2).  The leftover-hash budget
m <= k - 2*log2(1/eps) then sizes the extractor output per input block.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NoExtractableEntropyError, ParameterError


def sample_variance(values) -> float:
    """Unbiased sample variance (two-pass, divide by n-1)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise ParameterError("variance needs at least 2 values")
    return float(np.var(values, ddof=1))


def min_entropy(sigma_m_sq: float, sigma_e_sq: float) -> float:
    """Min-entropy (bits/sample) of the measurement given classical noise."""
    if sigma_e_sq < 0:
        raise ParameterError("sigma_e_sq must be >= 0")
    sigma_q_sq = sigma_m_sq - sigma_e_sq
    if sigma_q_sq <= 0:
        raise NoExtractableEntropyError(
            f"measured variance {sigma_m_sq} does not exceed classical "
            f"noise variance {sigma_e_sq}")
    return 0.5 * math.log2(2.0 * math.pi * sigma_q_sq)


def min_entropy_discretized(sigma_q_sq: float, lsb_units: float = 1.0) -> float:
    """Min-entropy of the quantum part after quantization to the LSB grid.

    -log2 of the most probable code's mass for a centered Gaussian; a
    comparison variant to the continuous formula, not the default path.
    """
    if sigma_q_sq <= 0:
        raise NoExtractableEntropyError("nonpositive quantum variance")
    sigma = math.sqrt(sigma_q_sq)
    p_max = math.erf(0.5 * lsb_units / (sigma * math.sqrt(2.0)))
    return -math.log2(p_max)


def extractor_budget(h_min_per_sample: float, samples_per_block: int,
                     epsilon: float) -> int:
    """Largest extractor output (bits/block) meeting security parameter eps.

    floor(samples_per_block * h_min_per_sample - 2*log2(1/epsilon)).
    """
    if not 0 < epsilon <= 1:
        raise ParameterError(f"epsilon must be in (0, 1], got {epsilon}")
    if h_min_per_sample <= 0:
        raise ParameterError("h_min_per_sample must be positive")
    if samples_per_block < 1:
        raise ParameterError("samples_per_block must be >= 1")
    budget = math.floor(samples_per_block * h_min_per_sample
                        - 2.0 * math.log2(1.0 / epsilon))
    if budget <= 0:
        raise NoExtractableEntropyError(
            f"security deduction exhausts the {samples_per_block}-sample "
            f"entropy budget at epsilon={epsilon}")
    return budget


@dataclass(frozen=True)
class EntropyReport:
    """Variance and min-entropy summary of a measurement/noise run pair."""

    sigma_m_sq: float
    sigma_e_sq: float
    sigma_q_sq: float
    h_min_per_sample: float
    bits_per_raw_bit: float
    sample_count: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def build_report(measured_centered_half_lsb, noise_centered_half_lsb,
                 adc_bits: int = 12) -> EntropyReport:
    """Estimate variances from centered half-LSB samples and report entropy.

    Inputs are the centered streams of the LO-on and LO-off runs; half-LSB
    variance is divided by 4 to report in LSB^2 counts.
    """
    measured = np.asarray(measured_centered_half_lsb, dtype=np.float64)
    noise = np.asarray(noise_centered_half_lsb, dtype=np.float64)
    sigma_m_sq = sample_variance(measured) / 4.0
    sigma_e_sq = sample_variance(noise) / 4.0
    h = min_entropy(sigma_m_sq, sigma_e_sq)
    return EntropyReport(
        sigma_m_sq=sigma_m_sq,
        sigma_e_sq=sigma_e_sq,
        sigma_q_sq=sigma_m_sq - sigma_e_sq,
        h_min_per_sample=h,
        bits_per_raw_bit=h / adc_bits,
        sample_count=int(measured.size),
    )
