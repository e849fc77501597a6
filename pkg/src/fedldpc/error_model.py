"""Bit-error injection and the closed-form distortion it causes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .quantizer import QuantizedPayload, quantize


@dataclass(frozen=True)
class BitErrorSpec:
    ber: float
    n_bits: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ber <= 0.5:
            raise ValueError(f"ber must lie in [0, 0.5], got {self.ber}")


def inject_bit_errors(p: QuantizedPayload, spec: BitErrorSpec, *stream_id: int,
                      truncated: bool = False) -> QuantizedPayload:
    """Flip each payload bit independently with probability ``spec.ber``.

    With ``truncated=True`` each parameter suffers at most one flip: bit ``i``
    alone flips with probability ``b(1-b)**(N-1)`` and otherwise nothing
    happens.  That mode exists to check the single-flip analysis, not to
    model a channel.
    """
    if spec.n_bits != p.n_bits:
        raise ValueError("spec and payload disagree on bits per parameter")
    if spec.ber == 0.0:
        return p
    gen = rngmod.stream(spec.seed, rngmod.BIT_FLIP, *stream_id)
    if not truncated:
        flips = gen.random(p.bits.size) < spec.ber
        return p.with_bits(p.bits ^ flips.astype(np.uint8))
    n = p.n_bits
    single = spec.ber * (1.0 - spec.ber) ** (n - 1)
    u = gen.random(p.dim)
    pos = np.floor(u / single).astype(np.int64)  # >= n means no flip
    hit = pos < n
    flips = np.zeros((p.dim, n), dtype=np.uint8)
    flips[np.flatnonzero(hit), pos[hit]] = 1
    return p.with_bits(p.bits ^ flips.ravel())


def _single_flip_weight(n_bits: int, ber: float) -> float:
    return ber * (1.0 - ber) ** (n_bits - 1)


def expected_param_bias(w_d: float, w_min: float, w_max: float, n_bits: int, ber: float) -> float:
    """Mean distortion of one parameter when at most one of its bits flips.

    Bit ``i`` set to 0 flips up by ``step * 2**i``, set to 1 flips down.
    """
    idx = int(quantize(np.array([w_d]), n_bits, w_min, w_max).indices()[0])
    step = (w_max - w_min) / ((1 << n_bits) - 1)
    signed = sum((1 - 2 * ((idx >> i) & 1)) * (1 << i) for i in range(n_bits))
    return _single_flip_weight(n_bits, ber) * step * signed


def expected_model_mse(dim: int, n_bits: int, ber: float, range_width: float) -> float:
    """Closed-form E||w~ - w||^2 under the single-flip model."""
    levels = (1 << n_bits) - 1
    shape = (4 ** n_bits - 1) / (3 * levels ** 2)
    return dim * shape * _single_flip_weight(n_bits, ber) * range_width ** 2


def measure_model_error(w: np.ndarray, w_tilde: np.ndarray) -> float:
    w = np.asarray(w, dtype=np.float64)
    w_tilde = np.asarray(w_tilde, dtype=np.float64)
    if w.shape != w_tilde.shape:
        raise ValueError(f"shape mismatch {w.shape} vs {w_tilde.shape}")
    diff = w_tilde - w
    return float(diff @ diff)

