"""BPSK over AWGN, producing decoder LLRs.

SNR convention
--------------
``snr_db`` is Eb/N0 per *information* bit by default.  With code rate R the
per-symbol ratio is Es/N0 = R * Eb/N0, and the per-dimension noise variance is
``sigma^2 = 1 / (2 * R * 10**(snr_db / 10))``.  Set ``convention="esn0"`` to
interpret ``snr_db`` directly as Es/N0 (``sigma^2 = 1 / (2 * 10**(snr_db/10))``);
the two differ by ``10*log10(1/R)`` (3.01 dB at rate 1/2).  Whatever the
convention, the calibration table and the simulation share it, because both
go through :class:`ChannelConfig`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import rng as rngmod

NOISELESS_LLR = 1e3
CONVENTIONS = ("ebn0", "esn0")


def parse_snr(value: float | str) -> float:
    """Accept a number or the strings ``"inf"``/``"noiseless"``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "+inf", "noiseless"):
            return math.inf
        return float(value)
    return float(value)


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    seed: int = 0
    code_rate: float = 0.5
    convention: str = "ebn0"

    def __post_init__(self):
        object.__setattr__(self, "snr_db", parse_snr(self.snr_db))
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if not 0 < self.code_rate <= 1:
            raise ValueError("code_rate must be in (0, 1]")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"invalid snr_db {self.snr_db}")

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db)

    @property
    def esn0_linear(self) -> float:
        lin = 10.0 ** (self.snr_db / 10.0)
        return lin * self.code_rate if self.convention == "ebn0" else lin

    @property
    def noise_variance(self) -> float:
        if self.noiseless:
            return 0.0
        return 1.0 / (2.0 * self.esn0_linear)


def bpsk(bits: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def transmit(cfg: ChannelConfig, codeword: np.ndarray, *stream_id: int) -> np.ndarray:
    """Send ``codeword`` (shape ``(n,)`` or ``(B, n)``) and return LLRs.

    Noise comes from the stream keyed by ``(cfg.seed, stream_id...)``.
    """
    bits = np.asarray(codeword)
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("codeword must be binary")
    x = bpsk(bits)
    if cfg.noiseless:
        return NOISELESS_LLR * x
    sigma2 = cfg.noise_variance
    noise = rngmod.stream(cfg.seed, rngmod.CHANNEL, *stream_id).standard_normal(x.shape)
    y = x + math.sqrt(sigma2) * noise
    return 2.0 * y / sigma2


def q_function(x: float) -> float:
    return 0.5 * float(erfc(x / math.sqrt(2.0)))


def theoretical_uncoded_ber(snr_db: float) -> float:
    """Q(sqrt(2 * Eb/N0)) for uncoded BPSK (Eb = Es when nothing is coded)."""
    if math.isinf(snr_db):
        return 0.0
    return q_function(math.sqrt(2.0 * 10.0 ** (snr_db / 10.0)))


def uncoded_ber(cfg: ChannelConfig, num_bits: int, chunk: int = 1 << 18) -> float:
    """Monte Carlo hard-decision BER of uncoded BPSK at ``cfg.snr_db``.

    Uncoded transmission has rate 1, so both conventions coincide here.
    """
    if num_bits < 10_000:
        raise ValueError("num_bits must be >= 1e4")
    if cfg.noiseless:
        return 0.0
    sigma = math.sqrt(1.0 / (2.0 * 10.0 ** (cfg.snr_db / 10.0)))
    gen = rngmod.stream(cfg.seed, rngmod.UNCODED)
    errors = 0
    left = num_bits
    while left:
        size = min(chunk, left)
        bits = gen.integers(0, 2, size)
        y = bpsk(bits) + sigma * gen.standard_normal(size)
        errors += int(np.count_nonzero((y < 0) != (bits == 1)))
        left -= size
    return errors / num_bits
