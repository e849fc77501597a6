"""Monte Carlo BER measurement over a grid of (SNR, max iterations)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .channel import ChannelConfig, transmit
from .ldpc import MinSumDecoder, ParityCheckMatrix, SystematicEncoder, encode
from .scheduler import CalibrationEntry, CalibrationTable

Z95 = 1.959963984540054
DEFAULT_SNRS = (1.5, 2.5)
DEFAULT_QS = (2, 4, 6, 8, 12, 16, 20, 24, 32, 52)


@dataclass(frozen=True)
class CalibrationJob:
    snr_points: tuple[float, ...] = DEFAULT_SNRS
    q_points: tuple[int, ...] = DEFAULT_QS
    min_error_bits: int = 100
    min_frames: int = 1000
    max_frames: int = 50_000
    seed: int = 0
    batch_frames: int = 200
    convention: str = "ebn0"
    normalized: bool = True

    def __post_init__(self):
        if list(self.q_points) != sorted(self.q_points) or not self.q_points:
            raise ValueError("q_points must be non-empty and ascending")
        if min(self.q_points) < 1:
            raise ValueError("q_points must be >= 1")
        if self.min_error_bits < 50:
            raise ValueError("min_error_bits must be >= 50")
        if self.max_frames < 100:
            raise ValueError("max_frames must be >= 100")
        if not 0 <= self.min_frames <= self.max_frames:
            raise ValueError("min_frames must lie in [0, max_frames]")
        if self.batch_frames < 1:
            raise ValueError("batch_frames must be >= 1")


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval ``(low, high)`` for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    low = 0.0 if errors == 0 else max(0.0, centre - half)
    high = 1.0 if errors == trials else min(1.0, centre + half)
    return low, high


def measure_round_ber(decoded: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of positions where two bitstreams differ."""
    a = np.asarray(decoded)
    b = np.asarray(truth)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.count_nonzero(a != b)) / a.size


def _frame_batch(job: CalibrationJob, enc: SystematicEncoder, snr_index: int,
                 batch_index: int, cfg: ChannelConfig) -> tuple[np.ndarray, np.ndarray]:
    gen = rngmod.stream(job.seed, rngmod.INFO_WORDS, snr_index, batch_index)
    msgs = gen.integers(0, 2, (job.batch_frames, enc.k), dtype=np.uint8)
    llr = transmit(cfg, encode(enc, msgs), snr_index, batch_index)
    return msgs, llr


def _run_cell(job: CalibrationJob, enc: SystematicEncoder, decoder: MinSumDecoder,
              snr_index: int, snr: float, q: int) -> CalibrationEntry:
    cfg = ChannelConfig(snr, seed=job.seed, code_rate=enc.k / enc.n, convention=job.convention)
    frames = errors = iters = 0
    batch = 0
    while True:
        msgs, llr = _frame_batch(job, enc, snr_index, batch, cfg)
        hard, used, _ = decoder.decode_batch(llr, q)
        errors += int(np.count_nonzero(hard[:, enc.info_cols] != msgs))
        iters += int(used.sum())
        frames += msgs.shape[0]
        batch += 1
        resolved = errors >= job.min_error_bits and frames >= job.min_frames
        if cfg.noiseless or resolved or frames >= job.max_frames:
            break
    bits = frames * enc.k
    low, high = wilson_interval(errors, bits)
    mean_iters = iters / frames
    if cfg.noiseless and errors == 0:
        return CalibrationEntry(snr, q, 0.0, 0.0, frames, mean_iters, 0, "exact")
    if errors < job.min_error_bits:
        return CalibrationEntry(snr, q, high, high - errors / bits, frames, mean_iters, errors,
                                "under_resolved")
    return CalibrationEntry(snr, q, errors / bits, (high - low) / 2, frames, mean_iters, errors, "")


def run_calibration(job: CalibrationJob, h: ParityCheckMatrix, enc: SystematicEncoder,
                    threads: int = 1) -> CalibrationTable:
    """Measure information-bit BER and mean iterations for every grid cell.

    Frames for a given SNR come from the same keyed streams whatever ``q`` is,
    so every budget sees the same prefix of noise realizations, and cells can
    run on any number of threads without changing the table.
    """
    decoder = MinSumDecoder(h, enc.info_cols, normalized=job.normalized)
    cells = [(i, float(snr), int(q)) for i, snr in enumerate(job.snr_points) for q in job.q_points]
    if threads <= 1:
        entries = [_run_cell(job, enc, decoder, *c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(lambda c: _run_cell(job, enc, decoder, *c), cells))
    return CalibrationTable(tuple(entries), n=h.cols, code_seed=h.seed)


def summarize(table: CalibrationTable) -> str:
    lines = [f"calibration table: n={table.n} code_seed={table.code_seed}",
             f"{'snr_db':>8} {'q':>4} {'ber':>12} {'+/-95%':>11} {'frames':>8} {'errors':>7} "
             f"{'mean_it':>8} flag"]
    for snr in table.snrs:
        for e in table.row(snr):
            lines.append(f"{e.snr_db:8.2f} {e.q:4d} {e.ber:12.4e} {e.ci_halfwidth:11.3e} "
                         f"{e.frames:8d} {e.errors:7d} {e.mean_iters:8.3f} {e.flag}")
    return "\n".join(lines) + "\n"


def monotonicity_violations(table: CalibrationTable, factor: float = 2.0) -> list[str]:
    """Adjacent pairs where BER rises with Q (fixed SNR) or with SNR (fixed Q)
    by more than ``factor`` times the combined CI half-widths."""
    bad = []
    for snr in table.snrs:
        row = table.row(snr)
        for a, b in zip(row, row[1:]):
            if b.ber - a.ber > factor * (a.ci_halfwidth + b.ci_halfwidth):
                bad.append(f"snr={snr} q {a.q}->{b.q}: {a.ber:.3e} -> {b.ber:.3e}")
    snrs = table.snrs
    for lo, hi in zip(snrs, snrs[1:]):
        for a in table.row(lo):
            try:
                b = table.entry(hi, a.q)
            except KeyError:
                continue
            if b.ber - a.ber > factor * (a.ci_halfwidth + b.ci_halfwidth):
                bad.append(f"q={a.q} snr {lo}->{hi}: {a.ber:.3e} -> {b.ber:.3e}")
    return bad
