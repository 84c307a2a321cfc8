"""Noise processes, DAC phase actuation, and ADC quantization."""

import math

import numpy as np
import pytest

from vacqrng.errors import ParameterError
from vacqrng.optics import DeviceParams
from vacqrng.signal_chain import (AdcSpec, DacSpec, SignalChainState,
                                  adc_quantize, adc_saturation_count,
                                  advance_drift, dac_to_phase, detector_block,
                                  detector_sample)
from tests.test_optics import symmetric_params


class TestDacToPhase:
    def test_zero_code(self):
        assert dac_to_phase(0, DacSpec(), 1.240) == 0.0

    def test_half_scale_is_pi(self):
        # 8192/16384 * 2.480 V = 1.240 V = v_pi
        assert dac_to_phase(8192, DacSpec(), 1.240) == pytest.approx(math.pi)

    def test_three_quarter_scale(self):
        assert dac_to_phase(12288, DacSpec(), 1.240) == pytest.approx(
            3 * math.pi / 2)

    def test_out_of_range_code(self):
        with pytest.raises(ParameterError):
            dac_to_phase(16384, DacSpec(), 1.240)
        with pytest.raises(ParameterError):
            dac_to_phase(-1, DacSpec(), 1.240)


class TestAdcQuantize:
    def test_zero_maps_to_mid_code(self):
        assert adc_quantize(0.0, AdcSpec()) == 2048

    def test_clip_high(self):
        assert adc_quantize(1.0, AdcSpec()) == 4095

    def test_clip_low(self):
        assert adc_quantize(-1.0, AdcSpec()) == 0

    def test_formula_at_interior_point(self):
        adc = AdcSpec()
        v = -0.5 + adc.lsb * 3.4
        # round(-2048 + 3.4) + 2048 = 3
        assert adc_quantize(v, adc) == 3

    def test_monotone_nondecreasing(self):
        adc = AdcSpec()
        vs = np.linspace(-0.6, 0.6, 4001)
        codes = adc_quantize(vs, adc)
        assert np.all(np.diff(codes) >= 0)

    def test_quantization_error_bounded(self):
        adc = AdcSpec()
        rng = np.random.default_rng(3)
        vs = rng.uniform(-0.49, 0.49, 10000)
        codes = adc_quantize(vs, adc)
        recon = (codes - adc.mid_code) * adc.lsb
        assert np.max(np.abs(recon - vs)) <= adc.lsb / 2 + 1e-12

    def test_saturation_count(self):
        adc = AdcSpec()
        vs = np.array([0.0, 0.6, -0.7, 0.2])
        assert adc_saturation_count(vs, adc) == 2

    def test_spec_validation(self):
        with pytest.raises(ParameterError):
            AdcSpec(bits=2)
        with pytest.raises(ParameterError):
            DacSpec(v_range=0.0)


class TestDetectorSamples:
    def test_noiseless_symmetric_chain_is_zero(self):
        state = SignalChainState(sigma_vac=0.0, sigma_e=0.0, rng_seed=1)
        p = symmetric_params()
        for phase in (0.0, 1.0, 2.5):
            assert detector_sample(p, state, phase) == 0.0
        block = detector_block(p, state, 0.7, 256)
        assert np.all(block == 0.0)
        assert np.all(adc_quantize(block, AdcSpec()) == 2048)

    def test_variance_matches_configuration(self):
        # quantum-only noise at reference power: var -> sigma_vac^2
        state = SignalChainState(sigma_vac=0.01, sigma_e=0.0, rng_seed=5)
        p = symmetric_params(p_lo=state.p_ref)
        samples = detector_block(p, state, 0.0, 1_000_000)
        assert np.var(samples) == pytest.approx(1e-4, rel=0.03)

    def test_variance_adds_and_scales_with_power(self):
        state = SignalChainState(sigma_vac=0.02, sigma_e=0.01, rng_seed=6,
                                 p_ref=5.0)
        p = symmetric_params(p_lo=1.25)  # quarter reference power
        samples = detector_block(p, state, 0.0, 500_000)
        expected = 0.02 ** 2 * (1.25 / 5.0) + 0.01 ** 2
        assert np.var(samples) == pytest.approx(expected, rel=0.05)

    def test_fixed_seed_reproducible(self):
        p = DeviceParams()
        a = detector_block(p, SignalChainState(rng_seed=99), 0.3, 10_000)
        b = detector_block(p, SignalChainState(rng_seed=99), 0.3, 10_000)
        assert np.array_equal(a, b)
        c = detector_block(p, SignalChainState(rng_seed=100), 0.3, 10_000)
        assert not np.array_equal(a, c)

    def test_scalar_matches_stream_head(self):
        p = DeviceParams()
        single = detector_sample(p, SignalChainState(rng_seed=4), 0.1)
        block = detector_block(p, SignalChainState(rng_seed=4), 0.1, 1)
        assert single == block[0]


class TestDrift:
    def test_zero_intensity_leaves_phase(self):
        state = SignalChainState(delta_phi_ambient=1.0, drift_rate_std=0.0,
                                 rng_seed=8)
        advance_drift(state, 1e-3)
        assert state.delta_phi_ambient == 1.0

    def test_increment_scale(self):
        # std of one-step increments ~ drift_rate_std * sqrt(dt)
        state = SignalChainState(delta_phi_ambient=math.pi,
                                 drift_rate_std=1.0, rng_seed=9)
        steps = []
        prev = state.delta_phi_ambient
        for _ in range(100_000):
            advance_drift(state, 1e-3)
            d = (state.delta_phi_ambient - prev + math.pi) % (2 * math.pi) \
                - math.pi
            steps.append(d)
            prev = state.delta_phi_ambient
        assert np.std(steps) == pytest.approx(math.sqrt(1e-3), rel=0.03)

    def test_wraps_into_unit_circle(self):
        state = SignalChainState(delta_phi_ambient=2 * math.pi - 1e-9,
                                 drift_rate_std=3.0, rng_seed=10)
        for _ in range(1000):
            advance_drift(state, 1e-2)
            assert 0.0 <= state.delta_phi_ambient < 2 * math.pi

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ParameterError):
            advance_drift(SignalChainState(), 0.0)


class TestStateValidation:
    def test_negative_noise_rejected(self):
        with pytest.raises(ParameterError):
            SignalChainState(sigma_vac=-0.1)

    def test_quantum_std_scaling(self):
        state = SignalChainState(sigma_vac=0.2, p_ref=5.0)
        assert state.quantum_std(5.0) == pytest.approx(0.2)
        assert state.quantum_std(1.25) == pytest.approx(0.1)
        assert state.quantum_std(0.0) == 0.0
