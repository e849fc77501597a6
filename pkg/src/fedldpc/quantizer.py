"""Uniform N-bit digitalization of a parameter vector.

The range ``[w_min, w_max]`` is split into ``2**N - 1`` equal intervals and
every parameter is replaced by the nearest of the ``2**N`` boundaries.  Each
boundary index is written in natural binary, least significant bit first, so
bit ``i`` of a parameter carries weight ``step * 2**i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_BITS = 16


@dataclass(frozen=True)
class QuantizedPayload:
    bits: np.ndarray  # uint8 0/1, length dim * n_bits, parameter-major
    n_bits: int
    dim: int
    w_min: float
    w_max: float

    def __post_init__(self):
        if self.bits.shape != (self.dim * self.n_bits,):
            raise ValueError("bitstream length must equal dim * n_bits")
        if self.w_min > self.w_max:
            raise ValueError("w_min > w_max")

    @property
    def levels(self) -> int:
        return (1 << self.n_bits) - 1

    @property
    def step(self) -> float:
        """Interval width; zero for a constant vector."""
        return (self.w_max - self.w_min) / self.levels

    def indices(self) -> np.ndarray:
        return unpack_indices(self.bits, self.n_bits)

    def with_bits(self, bits: np.ndarray) -> QuantizedPayload:
        return QuantizedPayload(np.asarray(bits, dtype=np.uint8), self.n_bits, self.dim,
                                self.w_min, self.w_max)


def pack_indices(indices: np.ndarray, n_bits: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n_bits, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def unpack_indices(bits: np.ndarray, n_bits: int) -> np.ndarray:
    groups = np.asarray(bits, dtype=np.int64).reshape(-1, n_bits)
    return groups @ (np.int64(1) << np.arange(n_bits, dtype=np.int64))


def quantize(w: np.ndarray, n_bits: int, w_min: float | None = None,
             w_max: float | None = None) -> QuantizedPayload:
    """Digitalize ``w`` with ``n_bits`` per parameter.

    The range defaults to ``(min(w), max(w))``; an explicit range must
    contain every element.
    """
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("cannot quantize an empty vector")
    if not np.isfinite(w).all():
        raise ValueError("parameters must be finite")
    if not 1 <= n_bits <= MAX_BITS:
        raise ValueError(f"n_bits must be in [1, {MAX_BITS}]")
    lo = float(w.min()) if w_min is None else float(w_min)
    hi = float(w.max()) if w_max is None else float(w_max)
    if lo > w.min() or hi < w.max():
        raise ValueError("explicit range does not cover the vector")
    levels = (1 << n_bits) - 1
    if hi == lo:
        idx = np.zeros(w.size, dtype=np.int64)
    else:
        scaled = (w - lo) / ((hi - lo) / levels)
        # indices are non-negative, so floor(x + 0.5) rounds half away from zero
        idx = np.clip(np.floor(scaled + 0.5), 0, levels).astype(np.int64)
    return QuantizedPayload(pack_indices(idx, n_bits), n_bits, w.size, lo, hi)


def dequantize(p: QuantizedPayload) -> np.ndarray:
    idx = p.indices()
    if p.w_max == p.w_min:
        return np.full(p.dim, p.w_min)
    out = p.w_min + idx * p.step
    return np.where(idx == p.levels, p.w_max, out)
