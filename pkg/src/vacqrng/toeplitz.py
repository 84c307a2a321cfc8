"""Seeded Toeplitz-hashing extractor over GF(2).

An m x n binary Toeplitz matrix is defined by m+n-1 seed bits with the
indexing convention

    entry(i, j) = seed[i - j + n - 1],   0 <= i < m,  0 <= j < n

(constant along diagonals; row i is seed[i : i+n] reversed).  Output bit i
is the GF(2) dot product of row i with the input block.

Two multiplication strategies are provided: a dense matrix-vector oracle
(reference), and a fast path that evaluates all rows at once as a linear
convolution via real FFTs, exact because the integer convolution values
are far below the float64 roundoff threshold.  The two are bit-identical.

Bit conventions, fixed for all stream and file formats:
  * samples enter the input block least-significant-bit first, samples in
    temporal order (low `bits_per_sample` bits of the two's-complement
    centered value);
  * packed bytes place the first-produced bit in the least significant bit
    of the first byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import ParameterError

_BIT_CHUNK = 1 << 18


@dataclass(frozen=True)
class ExtractorParams:
    """Extractor geometry: m output bits from n input bits per block."""

    m: int = 1920
    n: int = 2400
    epsilon_log2: int = 48

    def __post_init__(self) -> None:
        if not 0 < self.m <= self.n:
            raise ParameterError("need 0 < m <= n")
        if self.epsilon_log2 <= 0:
            raise ParameterError("epsilon_log2 must be positive")

    @property
    def seed_length(self) -> int:
        return self.m + self.n - 1

    @property
    def epsilon(self) -> float:
        return 2.0 ** -self.epsilon_log2


@dataclass(frozen=True)
class ToeplitzSeed:
    """Seed bits (length m+n-1) plus a descriptor of where they came from.

    The seed is fixed across all blocks of a run: the construction is a
    strong extractor, so seed reuse on independent inputs is sound.
    """

    bits: np.ndarray
    origin: str = "unspecified"

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ParameterError("seed bits must be a flat bit array")
        if np.any(bits > 1):
            raise ParameterError("seed bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    def check_length(self, params: ExtractorParams) -> None:
        if len(self.bits) != params.seed_length:
            raise ParameterError(
                f"seed length {len(self.bits)} != m+n-1 = {params.seed_length}")


def generate_test_seed(params: ExtractorParams, seed_value: int) -> ToeplitzSeed:
    """Deterministic test seed: PCG64(seed_value) bits.

    For production use, load externally generated seed material from a
    file instead; this generator exists for reproducible simulation runs.
    """
    rng = np.random.default_rng(seed_value)
    bits = rng.integers(0, 2, size=params.seed_length, dtype=np.uint8)
    return ToeplitzSeed(bits=bits, origin=f"test-generator(pcg64:{seed_value})")


def toeplitz_row(seed: ToeplitzSeed, i: int, params: ExtractorParams) -> np.ndarray:
    """Row i of the Toeplitz matrix: seed[i : i+n] reversed."""
    seed.check_length(params)
    if not 0 <= i < params.m:
        raise ParameterError(f"row index {i} out of range [0, {params.m})")
    return seed.bits[i:i + params.n][::-1].copy()


def toeplitz_matrix(seed: ToeplitzSeed, params: ExtractorParams) -> np.ndarray:
    """Dense m x n matrix, entry(i, j) = seed[i - j + n - 1]."""
    seed.check_length(params)
    idx = np.arange(params.m)[:, None] - np.arange(params.n)[None, :] + params.n - 1
    return seed.bits[idx]


def extract_block_dense(block_bits: np.ndarray, seed: ToeplitzSeed,
                        params: ExtractorParams) -> np.ndarray:
    """Reference path: materialize the matrix and multiply mod 2."""
    x = _check_block(block_bits, params)
    matrix = toeplitz_matrix(seed, params)
    return (matrix.astype(np.int64) @ x.astype(np.int64) % 2).astype(np.uint8)


def extract_block(block_bits: np.ndarray, seed: ToeplitzSeed,
                  params: ExtractorParams) -> np.ndarray:
    """Fast path: one n-bit block in, m-bit block out."""
    x = _check_block(block_bits, params)
    return extract_blocks(x[None, :], seed, params)[0]


def extract_blocks(blocks: np.ndarray, seed: ToeplitzSeed,
                   params: ExtractorParams) -> np.ndarray:
    """Extract many blocks at once: (k, n) bits in, (k, m) bits out.

    output[:, i] = conv(seed, x)[n-1+i] mod 2, evaluated as a circular
    convolution of size m+n-1 with batched real FFTs: the wrapped-around
    tail of the linear convolution only lands on indices below n-1,
    outside the output window.  Convolution values are bounded by 2n, so
    float64 rounding is orders of magnitude away from flipping a parity.
    """
    seed.check_length(params)
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.ndim != 2 or blocks.shape[1] != params.n:
        raise ParameterError(f"blocks must have shape (k, {params.n})")
    m, n = params.m, params.n
    fft_size = fft.next_fast_len(params.seed_length, real=True)
    seed_fft = fft.rfft(seed.bits.astype(np.float64), fft_size)

    out = np.empty((blocks.shape[0], m), dtype=np.uint8)
    batch = max(1, (1 << 25) // fft_size)  # ~256 MB of complex scratch max
    for start in range(0, blocks.shape[0], batch):
        chunk = blocks[start:start + batch]
        conv = fft.irfft(fft.rfft(chunk, fft_size, axis=1, workers=-1)
                         * seed_fft, fft_size, axis=1, workers=-1)
        out[start:start + batch] = (
            np.rint(conv[:, n - 1:n - 1 + m]).astype(np.int64) & 1)
    return out


def _check_block(block_bits, params: ExtractorParams) -> np.ndarray:
    x = np.asarray(block_bits, dtype=np.uint8)
    if x.ndim != 1 or len(x) != params.n:
        raise ParameterError(f"input block must be {params.n} bits, got {x.shape}")
    if np.any(x > 1):
        raise ParameterError("input bits must be 0/1")
    return x


def samples_to_bits(samples, bits_per_sample: int = 12) -> np.ndarray:
    """Low bits of each two's-complement sample, LSB first, temporal order."""
    if not 1 <= bits_per_sample <= 16:
        raise ParameterError("bits_per_sample must be in [1, 16]")
    samples = np.asarray(samples)
    shifts = np.arange(bits_per_sample, dtype=np.uint16)
    out = np.empty(samples.size * bits_per_sample, dtype=np.uint8)
    for start in range(0, samples.size, _BIT_CHUNK):
        chunk = samples[start:start + _BIT_CHUNK].astype(np.int64)
        masked = (chunk & ((1 << bits_per_sample) - 1)).astype(np.uint16)
        bits = (masked[:, None] >> shifts) & 1
        out[start * bits_per_sample:
            (start + chunk.size) * bits_per_sample] = bits.reshape(-1)
    return out


def extract_stream(centered_samples, seed: ToeplitzSeed,
                   params: ExtractorParams,
                   bits_per_sample: int = 12) -> np.ndarray:
    """Hash a centered-sample stream into extracted bits.

    Samples are unpacked to bits, grouped into n-bit blocks (trailing
    partial block dropped, never padded), and each block is extracted with
    the same seed.  Returns the concatenated m-bit outputs.
    """
    bits = samples_to_bits(centered_samples, bits_per_sample)
    n_blocks = len(bits) // params.n
    if n_blocks == 0:
        return np.zeros(0, dtype=np.uint8)
    blocks = bits[:n_blocks * params.n].reshape(n_blocks, params.n)
    return extract_blocks(blocks, seed, params).reshape(-1)


def pack_bits(bits) -> bytes:
    """Pack bits into bytes, first bit in the LSB of the first byte."""
    return np.packbits(np.asarray(bits, dtype=np.uint8),
                       bitorder="little").tobytes()


def unpack_bits(data: bytes, n_bits: int) -> np.ndarray:
    """Inverse of pack_bits; checks length and zero padding."""
    raw = np.frombuffer(data, dtype=np.uint8)
    if len(raw) != (n_bits + 7) // 8:
        raise ParameterError(
            f"expected {(n_bits + 7) // 8} bytes for {n_bits} bits, "
            f"got {len(raw)}")
    bits = np.unpackbits(raw, bitorder="little")
    if np.any(bits[n_bits:]):
        raise ParameterError("nonzero padding bits in final byte")
    return bits[:n_bits]


def save_seed(path, seed: ToeplitzSeed) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_bits(seed.bits))


def load_seed(path, params: ExtractorParams) -> ToeplitzSeed:
    """Read a packed seed file, enforcing the exact m+n-1 bit length."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ParameterError(f"cannot read seed file {path}: {exc}") from exc
    bits = unpack_bits(data, params.seed_length)
    return ToeplitzSeed(bits=bits, origin=f"file:{path}")
