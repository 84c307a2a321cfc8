"""Command-line interface.

Subcommands:
  simulate     closed-loop run; writes trace and centered-sample stream
  estimate     LO-on + LO-off runs; writes the entropy report
  extract      simulate and Toeplitz-extract; writes packed output bits
  test         statistical suite on extracted output (or --bits FILE)
  all          full pipeline with every artifact and a summary
  paper-repro  reference-device configuration; prints a comparison table
  benchmark    software throughput of the extraction core

Exit codes: 0 success, 2 configuration/parameter errors, 3 data errors
(e.g. no extractable entropy).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .entropy import build_report, extractor_budget, min_entropy_discretized
from .errors import (ConfigError, DataError, NoExtractableEntropyError,
                     ParameterError)
from .pipeline import (LoopSummary, benchmark_extractor, obtain_seed,
                       paper_repro_table, run_pipeline, select_centered,
                       simulate_run)
from .stattests import run_suite
from .toeplitz import extract_stream, pack_bits, save_seed


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacqrng",
        description="Simulator and toolkit for a bias-free "
                    "vacuum-fluctuation quantum random number generator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None,
                       help="key=value config file (defaults when omitted)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--samples", type=int, default=None,
                       help="override the LO-on sample count")
        p.add_argument("--blocks", type=int, default=None,
                       help="override the LO-on run length in blocks")
        p.add_argument("--out", type=Path, default=Path("vacqrng-out"),
                       help="artifact directory (default: ./vacqrng-out)")
        return p

    add("simulate", "run the closed loop and write trace/centered streams")
    add("estimate", "estimate conditional min-entropy from LO-on/off runs")
    add("extract", "simulate and extract; write packed output bits")
    t = add("test", "run the statistical suite on extracted output")
    t.add_argument("--bits", type=Path, default=None,
                   help="test an existing packed bitstream instead")
    add("all", "run every stage and write all artifacts")
    add("paper-repro", "reproduce the reference experiment's headline "
                       "figures and print a comparison table")
    b = add("benchmark", "measure extraction-core software throughput")
    b.add_argument("--bench-blocks", type=int, default=4096,
                   help="number of full-size blocks to hash")
    return parser


def _load(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config.master_seed = args.seed
    if args.samples is not None:
        config.samples = args.samples
    if args.blocks is not None:
        config.samples = args.blocks * config.block_size_n
    config.validate()
    return config


def _cmd_simulate(args) -> int:
    config = _load(args)
    from .pipeline import _write_trace  # same artifact format as `all`

    blocks, trace = simulate_run(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_trace(out / "trace.jsonl", trace, config)
    centered = np.concatenate([b.centered for b in blocks])
    (out / "centered.i16").write_bytes(centered.astype("<i2").tobytes())
    if config.write_raw:
        raw = np.concatenate([b.codes for b in blocks]).astype("<u2")
        (out / "raw_codes.u16").write_bytes(raw.tobytes())
    loop = LoopSummary.from_trace(trace)
    print(f"{loop.n_blocks} blocks simulated; locked fraction "
          f"{loop.locked_fraction:.4f}; {loop.saturated_blocks} saturated")
    print(f"artifacts in {out}")
    return 0


def _cmd_estimate(args) -> int:
    config = _load(args)
    blocks_on, trace_on = simulate_run(config)
    blocks_off, trace_off = simulate_run(config, lo_off=True)
    measured = select_centered(blocks_on, trace_on, exclude_saturated=True,
                               discard_unlocked=config.discard_unlocked)
    noise = select_centered(blocks_off, trace_off, exclude_saturated=True,
                            discard_unlocked=False)
    report = build_report(measured, noise, adc_bits=config.adc_bits)
    budget = extractor_budget(round(report.h_min_per_sample, 2),
                              config.extractor_n // config.adc_bits,
                              config.extractor_params().epsilon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "entropy.json").write_text(report.to_json() + "\n")
    print(report.to_json())
    print(f"leftover-hash budget: {budget} bits per "
          f"{config.extractor_n}-bit block (m = {config.extractor_m})")
    if config.extractor_m > budget:
        print("warning: configured m exceeds the measured budget; "
              "extraction at this geometry is not covered by the "
              "security parameter")
    if config.discretized_entropy:
        print(f"discretized-Gaussian variant: "
              f"{min_entropy_discretized(report.sigma_q_sq):.4f} bits/sample")
    return 0


def _cmd_extract(args) -> int:
    config = _load(args)
    blocks, trace = simulate_run(config)
    samples = select_centered(blocks, trace, exclude_saturated=True,
                              discard_unlocked=config.discard_unlocked)
    seed = obtain_seed(config)
    bits = extract_stream(samples, seed, config.extractor_params(),
                          bits_per_sample=config.adc_bits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "extracted.bin").write_bytes(pack_bits(bits))
    save_seed(out / "extractor_seed.bin", seed)
    print(f"extracted {bits.size} bits from {samples.size} samples "
          f"-> {out / 'extracted.bin'}")
    return 0


def _cmd_test(args) -> int:
    config = _load(args)
    if args.bits is not None:
        try:
            raw = np.frombuffer(Path(args.bits).read_bytes(), dtype=np.uint8)
        except OSError as exc:
            raise DataError(f"cannot read bitstream {args.bits}: {exc}")
        bits = np.unpackbits(raw, bitorder="little")
    else:
        blocks, trace = simulate_run(config)
        samples = select_centered(blocks, trace, exclude_saturated=True,
                                  discard_unlocked=config.discard_unlocked)
        bits = extract_stream(samples, seed=obtain_seed(config),
                              params=config.extractor_params(),
                              bits_per_sample=config.adc_bits)
    n_seq = min(config.n_sequences, bits.size // config.sequence_length)
    if n_seq < 1:
        raise DataError(
            f"only {bits.size} bits available; need at least one "
            f"{config.sequence_length}-bit sequence")
    verdict = run_suite(bits, config.sequence_length, n_seq, beta=config.beta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verdict.json").write_text(verdict.to_json() + "\n")
    print(verdict.table())
    return 0


def _cmd_all(args) -> int:
    config = _load(args)
    result = run_pipeline(config, args.out)
    print(result.summary_text())
    return 0


def _cmd_paper_repro(args) -> int:
    config = _load(args)
    result = run_pipeline(config, args.out)
    print(paper_repro_table(result))
    return 0


def _cmd_benchmark(args) -> int:
    config = _load(args)
    report = benchmark_extractor(config.extractor_params(),
                                 n_blocks=args.bench_blocks)
    print(f"extraction core, {int(report['blocks'])} blocks of "
          f"{config.extractor_n} -> {config.extractor_m} bits:")
    print(f"  fast path : {report['output_mbps']:.1f} Mbit/s out "
          f"({report['input_mbps']:.1f} Mbit/s in, "
          f"{report['fast_seconds']:.3f} s)")
    print(f"  dense ref : {report['dense_output_mbps']:.2f} Mbit/s out "
          f"({report['dense_seconds_per_block'] * 1e3:.1f} ms/block)")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "extract": _cmd_extract,
    "test": _cmd_test,
    "all": _cmd_all,
    "paper-repro": _cmd_paper_repro,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NoExtractableEntropyError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
