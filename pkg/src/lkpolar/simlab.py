"""Monte-Carlo code construction and frame-error-rate measurement.

Random numbers come from numpy's Philox-4x64 counter-based generator.  Every
batch of frames owns its own key, ``seed + (stream << 64)`` where the stream
id packs a purpose tag and the batch index, so a batch is reproducible in
isolation and results do not depend on how batches are spread over workers.
Uniforms are the top 53 bits of each raw 64-bit word; Gaussians use the
Box-Muller transform on consecutive uniform pairs.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .kernelalg import Kernel
from .windec import PolarCodeSpec, decode, encode, genie_leaf_llrs

CSV_SCHEMA = "# schema: lkpolar-fer v1"
CSV_FIELDS = ("eb_no_db", "trials", "errors", "fer", "mean_ops", "seconds")

_TAG_FER = 0
_TAG_CONSTRUCT = 1
_TAG_CHANNEL = 2


def noise_variance(eb_no_db: float, rate: float) -> float:
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return 1.0 / (2.0 * rate * 10.0 ** (eb_no_db / 10.0))


@dataclass(frozen=True)
class ChannelConfig:
    eb_no_db: float
    rate: float
    seed: int = 0
    modulation: str = "bpsk"

    def __post_init__(self):
        if self.modulation != "bpsk":
            raise ValueError("only BPSK is supported")
        noise_variance(self.eb_no_db, self.rate)

    @property
    def sigma2(self) -> float:
        return noise_variance(self.eb_no_db, self.rate)


class RandomStream:
    """Raw 64-bit words from Philox keyed by (seed, stream)."""

    def __init__(self, seed: int, stream: int):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be non-negative")
        key = (int(seed) & ((1 << 64) - 1)) | (int(stream) << 64)
        self._bg = np.random.Philox(key=key)

    def raw(self, count: int) -> np.ndarray:
        return self._bg.random_raw(count)

    def uniform(self, count: int) -> np.ndarray:
        """Uniforms in [0, 1) with 53-bit resolution."""
        return (self.raw(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def bits(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        return (self.raw(count) >> np.uint64(63)).astype(np.uint8).reshape(shape)

    def normal(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1).ravel()
        return z[:count].reshape(shape)


def _stream_id(tag: int, index: int) -> int:
    return (tag << 56) | index


def awgn_bpsk_llrs(codeword, config: ChannelConfig, stream: RandomStream | None = None) -> np.ndarray:
    """BPSK over AWGN: x = 1 - 2c, y = x + noise, llr = 2 y / sigma^2."""
    c = np.asarray(codeword, dtype=np.uint8)
    if stream is None:
        stream = RandomStream(config.seed, _stream_id(_TAG_CHANNEL, 0))
    s2 = config.sigma2
    y = (1.0 - 2.0 * c) + np.sqrt(s2) * stream.normal(c.shape)
    return 2.0 * y / s2


# ------------------------------------------------------------------ construction

def monte_carlo_reliability(kernel: Kernel, n: int, design_eb_no: float, trials: int, seed: int = 0,
                            rate: float = 0.5, batch_size: int = 2000) -> np.ndarray:
    """Genie-aided SC error counts per bit channel (all-zero transmission).

    Entry i counts the trials whose bit-channel LLR for u_i came out negative
    while every earlier bit was known.  Ties (LLR 0) decode to 0 and are not
    errors.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    spec = PolarCodeSpec(kernel, n, frozenset())
    cfg = ChannelConfig(design_eb_no, rate, seed)
    counts = np.zeros(spec.N, dtype=np.int64)
    done = 0
    b = 0
    while done < trials:
        m = min(batch_size, trials - done)
        rs = RandomStream(seed, _stream_id(_TAG_CONSTRUCT, b))
        llrs = awgn_bpsk_llrs(np.zeros((m, spec.N), dtype=np.uint8), cfg, rs)
        counts += (genie_leaf_llrs(spec, llrs) < 0).sum(axis=0)
        done += m
        b += 1
    return counts


def select_frozen(error_counts: Sequence[int], k: int) -> frozenset:
    """The N - k least reliable indices; among equal counts the larger index goes first."""
    counts = [int(c) for c in error_counts]
    N = len(counts)
    if not 0 <= k <= N:
        raise ValueError(f"k must lie in [0, {N}], got {k}")
    order = sorted(range(N), key=lambda i: (-counts[i], -i))
    return frozenset(order[: N - k])


# ------------------------------------------------------------------ FER

@dataclass(frozen=True)
class DecoderConfig:
    kind: str = "sc"
    list_size: int = 1

    def __post_init__(self):
        if self.kind not in ("sc", "scl"):
            raise ValueError(f"decoder must be 'sc' or 'scl', got {self.kind!r}")
        if self.list_size < 1:
            raise ValueError("list size must be >= 1")

    @property
    def list_arg(self) -> int | None:
        return None if self.kind == "sc" else self.list_size


@dataclass(frozen=True)
class StopRule:
    """Stop after ``max_trials`` frames or ``target_errors`` frame errors (0 = no bound)."""
    max_trials: int = 10**5
    target_errors: int = 100

    def __post_init__(self):
        if self.max_trials < 0 or self.target_errors < 0:
            raise ValueError("stop bounds must be non-negative")
        if self.max_trials == 0 and self.target_errors == 0:
            raise ValueError("at least one stop bound must be positive")


@dataclass(frozen=True)
class FerReport:
    eb_no_db: float
    trials: int
    errors: int
    mean_ops: float
    seconds: float

    @property
    def fer(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    def row(self) -> list:
        return [f"{self.eb_no_db:g}", self.trials, self.errors, f"{self.fer:.6e}",
                f"{self.mean_ops:.1f}", f"{self.seconds:.3f}"]


def _run_batch(spec: PolarCodeSpec, list_size: int | None, channel: ChannelConfig,
               index: int, size: int, batch_size: int) -> tuple[np.ndarray, int]:
    # randomness is always drawn for a full batch, so a shortened final batch
    # sees exactly the frames it would have seen in a longer run
    rs = RandomStream(channel.seed, _stream_id(_TAG_FER, index))
    bits = rs.bits((batch_size, spec.k))[:size]
    noise = rs.normal((batch_size, spec.N))[:size]
    u = np.zeros((size, spec.N), dtype=np.uint8)
    u[:, spec.info_indices] = bits
    s2 = channel.sigma2
    llrs = 2.0 * ((1.0 - 2.0 * encode(spec, u)) + np.sqrt(s2) * noise) / s2
    u_hat, ops = decode(spec, llrs, list_size)
    info = spec.info_indices
    return np.any(u_hat[:, info] != u[:, info], axis=1), ops


def run_fer(spec: PolarCodeSpec, decoder: DecoderConfig, channel: ChannelConfig,
            stop: StopRule = StopRule(), batch_size: int = 1000, workers: int = 1) -> FerReport:
    """Simulate until the stop rule fires; counts are truncated at the exact stopping frame."""
    if batch_size < 1 or workers < 1:
        raise ValueError("batch size and worker count must be positive")
    start = time.perf_counter()
    limit = stop.max_trials or None
    trials = errors = 0
    ops_total = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        index = 0
        finished = False
        while not finished:
            wave = []
            for _ in range(workers):
                size = batch_size
                if limit is not None:
                    planned = (index + len(wave)) * batch_size
                    size = min(batch_size, limit - planned)
                if size <= 0:
                    break
                args = (spec, decoder.list_arg, channel, index + len(wave), size, batch_size)
                wave.append(pool.submit(_run_batch, *args) if pool else _run_batch(*args))
            if not wave:
                break
            index += len(wave)
            for item in wave:
                flags, ops = item.result() if pool else item
                if stop.target_errors:
                    cum = np.cumsum(flags)
                    hit = np.flatnonzero(cum + errors >= stop.target_errors)
                    if hit.size:
                        flags = flags[: hit[0] + 1]
                        finished = True
                trials += len(flags)
                errors += int(flags.sum())
                ops_total += ops * len(flags)
                if finished or (limit is not None and trials >= limit):
                    finished = True
                    break
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    mean_ops = ops_total / trials if trials else 0.0
    return FerReport(channel.eb_no_db, trials, errors, mean_ops, time.perf_counter() - start)


def write_csv(reports: Iterable[FerReport], fh: IO[str]) -> None:
    fh.write(CSV_SCHEMA + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        w.writerow(r.row())


def read_csv(fh: IO[str]) -> list[dict]:
    lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
