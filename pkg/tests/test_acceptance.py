"""Acceptance suite: every criterion at its stated tolerance and budget.

The heavyweight fixtures run the default-configuration closed loop once
(11,300 blocks / 1.13e7 samples) and share it across the criteria that
consume simulated data.  Criterion 4 asserts the lock-in behavior exactly
as specified at the default operating point; the measured physics of that
operating point (per-block sum noise of ~1.36e4 counts against an
interval half-width of 5e3, and a per-step sum jump of ~1.06e4 against an
interval width of 1e4) makes the 99% in-interval requirement unattainable
there, so that test documents the shortfall rather than hiding it.
"""

import time

import numpy as np
import pytest

from vacqrng.config import PipelineConfig
from vacqrng.controller import ControllerState, decide
from vacqrng.entropy import extractor_budget, min_entropy
from vacqrng.optics import (DeviceParams, balance_phase,
                            homodyne_difference, is_unreachable, pd1_current)
from vacqrng.pipeline import (benchmark_extractor, obtain_seed,
                              select_centered, simulate_run)
from vacqrng.stattests import (approximate_entropy_test, block_frequency_test,
                               cumulative_sums_test, monobit_test,
                               pass_proportion_interval, run_suite, runs_test)
from vacqrng.toeplitz import (ExtractorParams, extract_blocks,
                              extract_stream, generate_test_seed,
                              toeplitz_matrix)
from tests.conftest import record_criterion
from tests.test_controller import oracle_decide
from tests.test_stattests import PI_100, bits

N_LOOP_BLOCKS = 11_300


@pytest.fixture(scope="module")
def default_run():
    """Closed-loop run at the default (reference-device) configuration."""
    config = PipelineConfig(samples=N_LOOP_BLOCKS * 1000)
    blocks, trace = simulate_run(config)
    return config, blocks, trace


@pytest.fixture(scope="module")
def extracted_hundred_meg(default_run):
    """At least 1e8 extracted bits from the shared run."""
    config, blocks, trace = default_run
    centered = select_centered(blocks, trace, exclude_saturated=True,
                               discard_unlocked=False)
    seed = obtain_seed(config)
    out = extract_stream(centered, seed, config.extractor_params())
    assert out.size >= 100_000_000
    return out


def test_criterion_1_min_entropy_reproduction():
    value = min_entropy(1.86e5, 166.09)
    ok = abs(value - 10.08) <= 0.005
    start = time.perf_counter()
    for _ in range(100):
        min_entropy(1.86e5, 166.09)
    per_call = (time.perf_counter() - start) / 100
    ok = ok and per_call < 1e-3
    record_criterion(1, "min-entropy reproduction", ok,
                     f"h_min={value:.4f} bits (target 10.08 +/- 0.005), "
                     f"{per_call * 1e6:.1f} us/call")
    assert abs(value - 10.08) <= 0.005
    assert per_call < 1e-3


def test_criterion_2_extractor_budget_consistency():
    m = extractor_budget(10.08, 200, 2.0 ** -48)
    record_criterion(2, "extractor-budget consistency", m == 1920,
                     f"budget={m} (target 1920 = 2016 - 96)")
    assert m == 1920


def test_criterion_3_balance_correctness():
    start = time.perf_counter()
    params = DeviceParams()
    phi = balance_phase(params)
    scale = abs(pd1_current(params, 0.0))
    assert abs(homodyne_difference(params, phi)) <= 1e-9 * scale

    rng = np.random.default_rng(314159)
    checked = 0
    worst = 0.0
    while checked < 1000:
        p = DeviceParams(
            eta_ab1_db=rng.uniform(0.5, 6), eta_ab2_db=rng.uniform(0.5, 6),
            eta_pm_db=rng.uniform(0.5, 6), eta_c1d1_db=rng.uniform(0.5, 6),
            eta_c1d2_db=rng.uniform(0.5, 6), eta_c2d1_db=rng.uniform(0.5, 6),
            eta_c2d2_db=rng.uniform(0.5, 6),
            g_pd1=rng.uniform(1e4, 1e5), g_pd2=rng.uniform(1e4, 1e5),
            p_lo=rng.uniform(0.5, 10))
        phi = balance_phase(p)
        if is_unreachable(phi):
            continue
        checked += 1
        rel = abs(homodyne_difference(p, phi)) / abs(pd1_current(p, 0.0))
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 1.0
    record_criterion(3, "balance correctness", ok,
                     f"worst residual {worst:.2e} over 1000 devices, "
                     f"{elapsed:.2f} s")
    assert worst <= 1e-9
    assert elapsed < 1.0


def test_criterion_4_controller_lock_in(default_run):
    config, blocks, trace = default_run
    start = time.perf_counter()
    window = trace[:10_000]
    locked_first = next((r.index for r in window if r.locked), None)
    tail = window[500:]
    in_interval = np.mean([config.interval_a <= r.sum <= config.interval_b
                           for r in tail])
    saturation_events = sum(r.saturated for r in tail)
    elapsed = time.perf_counter() - start
    ok = (locked_first is not None and locked_first <= 500
          and in_interval >= 0.99 and saturation_events == 0
          and elapsed <= 120)
    settled = window[locked_first:] if locked_first is not None else tail
    sum_std = float(np.std([r.sum for r in settled]))
    record_criterion(
        4, "controller lock-in at default operating point", ok,
        f"first lock at block {locked_first}, in-interval fraction "
        f"{in_interval:.4f} (need >= 0.99), {saturation_events} saturated "
        f"blocks (need 0); settled sum std {sum_std:.0f} counts vs "
        f"interval half-width 5000 caps the attainable fraction at ~0.29")
    assert locked_first is not None and locked_first <= 500, (
        "acquisition from dac_init=8092 to the balance code takes "
        f"{locked_first} blocks at step 5")
    assert in_interval >= 0.99, (
        f"in-interval fraction {in_interval:.4f}: with the calibrated "
        "per-sample noise of sqrt(1.86e5) counts, the block-sum noise is "
        f"{sum_std:.0f} counts, so no controller can hold a +/-5000-count "
        "interval 99% of the time")
    assert saturation_events == 0
    assert elapsed <= 120


def test_criterion_5_controller_oracle_equivalence():
    cfg = PipelineConfig().controller_config()
    start = time.perf_counter()
    c, n = cfg.step_c, cfg.dac_bits_n
    lattice = list(range(0, 2 * c + 1)) + list(range(2 ** n - 2 * c, 2 ** n))
    sums = [cfg.interval_a - 1, cfg.interval_a, cfg.interval_b,
            cfg.interval_b + 1]
    mismatches = 0
    for dac in lattice:
        for s in sums:
            got = decide(s, cfg, ControllerState(dac_data=dac)).dac_data
            if got != oracle_decide(s, cfg, dac) or not 0 <= got < 2 ** n:
                mismatches += 1
    rng = np.random.default_rng(2718)
    dacs = rng.integers(0, 2 ** n, size=100_000)
    sums_rand = rng.integers(0, 4095 * 1000, size=100_000)
    for dac, s in zip(dacs, sums_rand):
        got = decide(int(s), cfg, ControllerState(dac_data=int(dac))).dac_data
        if got != oracle_decide(int(s), cfg, int(dac)):
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    record_criterion(5, "controller oracle equivalence", ok,
                     f"0 mismatches in 100k random + boundary lattice, "
                     f"{elapsed:.1f} s" if ok else
                     f"{mismatches} mismatches, {elapsed:.1f} s")
    assert mismatches == 0
    assert elapsed < 10


def test_criterion_6_centering(default_run):
    config, blocks, trace = default_run
    n = config.block_size_n
    worst_residual = max(abs(int(b.centered.sum())) for b in blocks)
    stream = select_centered(blocks, trace, exclude_saturated=True,
                             discard_unlocked=False)
    assert stream.size >= 10_000_000
    grand_mean_lsb = float(np.mean(stream[:10_000_000])) / 2.0
    ok = worst_residual <= n // 2 and abs(grand_mean_lsb) <= 0.05
    record_criterion(6, "bias-free centering", ok,
                     f"worst per-block residual {worst_residual} half-LSB "
                     f"(bound {n // 2}), grand mean {grand_mean_lsb:+.5f} "
                     f"LSB over 1e7 samples (bound 0.05)")
    assert worst_residual <= n // 2
    assert abs(grand_mean_lsb) <= 0.05


def test_criterion_7_extractor_correctness():
    start = time.perf_counter()
    params = ExtractorParams()
    rng = np.random.default_rng(1618)
    agree = True
    for seed_value in (10, 20, 30, 40):
        seed = generate_test_seed(params, seed_value)
        x = rng.integers(0, 2, size=(25, params.n), dtype=np.uint8)
        fast = extract_blocks(x, seed, params)
        dense = (toeplitz_matrix(seed, params).astype(np.int64)
                 @ x.T.astype(np.int64) % 2).T.astype(np.uint8)
        agree = agree and np.array_equal(fast, dense)

    small_agree = True
    for m in range(1, 9):
        for n in range(m, 13):
            p = ExtractorParams(m=m, n=n)
            s = generate_test_seed(p, 100 * m + n)
            xs = rng.integers(0, 2, size=(8, n), dtype=np.uint8)
            fast = extract_blocks(xs, s, p)
            dense = (toeplitz_matrix(s, p).astype(np.int64)
                     @ xs.T.astype(np.int64) % 2).T.astype(np.uint8)
            small_agree = small_agree and np.array_equal(fast, dense)

    seed = generate_test_seed(params, 50)
    x = rng.integers(0, 2, size=(10_000, params.n), dtype=np.uint8)
    y = rng.integers(0, 2, size=(10_000, params.n), dtype=np.uint8)
    linear = np.array_equal(
        extract_blocks(x ^ y, seed, params),
        extract_blocks(x, seed, params) ^ extract_blocks(y, seed, params))
    elapsed = time.perf_counter() - start
    ok = agree and small_agree and linear and elapsed < 60
    record_criterion(7, "extractor correctness", ok,
                     f"dense oracle agreement (100 full-size + small sizes), "
                     f"GF(2) linearity on 1e4 pairs, {elapsed:.1f} s")
    assert agree and small_agree and linear
    assert elapsed < 60


def test_criterion_8_statistical_quality(extracted_hundred_meg):
    start = time.perf_counter()
    lo_exact, _ = pass_proportion_interval(0.01, 1000)
    # the quoted critical boundary rounds the exact value's last digit up
    boundary_ok = (abs(lo_exact - 0.9805608) < 1.5e-7
                   and abs(lo_exact - 0.9805607203664686) < 1e-12)

    lo_100 = pass_proportion_interval(0.01, 100)[0]
    verdict = run_suite(extracted_hundred_meg, 1_000_000, 100, beta=0.01)
    failing = {name: prop for name, prop in verdict.proportions.items()
               if prop < lo_100}
    elapsed = time.perf_counter() - start
    ok = boundary_ok and not failing and elapsed <= 600
    detail = ", ".join(f"{k}={v:.2f}" for k, v in verdict.proportions.items())
    record_criterion(8, "statistical quality at desk scale", ok,
                     f"proportions [{detail}] vs bound {lo_100:.7f}; "
                     f"N=1000 boundary {lo_exact:.7f}; {elapsed:.0f} s")
    assert boundary_ok
    assert not failing, f"below proportion bound: {failing}"
    assert elapsed <= 600


def test_criterion_9_throughput_report():
    report = benchmark_extractor(n_blocks=1024)
    ok = report["output_mbps"] > 0
    record_criterion(
        9, "extraction throughput report (informational)", ok,
        f"fast path {report['output_mbps']:.1f} Mbit/s out "
        f"({report['input_mbps']:.1f} Mbit/s in); dense reference "
        f"{report['dense_output_mbps']:.2f} Mbit/s")
    assert ok


def test_criterion_10_reference_vector_conformance():
    checks = [
        ("monobit", monobit_test(bits(PI_100)).p_value, 0.109599),
        ("block_frequency",
         block_frequency_test(bits("0110011010"), block_size=3).p_value,
         0.801252),
        ("runs", runs_test(bits("1001101011")).p_value, 0.147232),
        ("cumulative_sums",
         cumulative_sums_test(bits("1011010111")).p_value, 0.4116588),
        ("approximate_entropy",
         approximate_entropy_test(bits("0100110101"),
                                  pattern_length=3).p_value, 0.261961),
    ]
    deviations = {name: abs(got - want) for name, got, want in checks}
    ok = all(d <= 1e-4 for d in deviations.values())
    worst = max(deviations, key=deviations.get)
    record_criterion(10, "reference-vector conformance", ok,
                     f"worst deviation {deviations[worst]:.2e} ({worst})")
    for name, got, want in checks:
        assert abs(got - want) <= 1e-4, name
