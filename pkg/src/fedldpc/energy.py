"""Client energy ledger and the convergence-bound calculator."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

PICO = 1e-12
MILLI = 1e-3


@dataclass(frozen=True)
class EnergyModel:
    decode_pj_per_bit_iter: float = 20.1
    tx_rx_pj_per_bit: float = 81.2
    train_mj_per_epoch: float = 13.7
    code_rate: float = 0.5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be non-negative")


def decoding_energy(bits: float, mean_iterations: float, model: EnergyModel = EnergyModel()) -> float:
    """Joules spent decoding ``bits`` payload bits at ``mean_iterations`` each.

    Payload (model) bits are charged, not coded bits.
    """
    if bits < 0 or mean_iterations < 0:
        raise ValueError("bits and iterations must be non-negative")
    return bits * mean_iterations * model.decode_pj_per_bit_iter * PICO


def transceiver_energy(payload_bits: float, model: EnergyModel = EnergyModel()) -> float:
    """Joules to move ``payload_bits`` after channel coding at ``model.code_rate``."""
    if payload_bits < 0:
        raise ValueError("payload_bits must be non-negative")
    if payload_bits == 0:
        return 0.0
    return payload_bits / model.code_rate * model.tx_rx_pj_per_bit * PICO


def uncoded_transceiver_energy(payload_bits: float, model: EnergyModel = EnergyModel()) -> float:
    return payload_bits * model.tx_rx_pj_per_bit * PICO


def training_energy(epochs: float, model: EnergyModel = EnergyModel()) -> float:
    return epochs * model.train_mj_per_epoch * MILLI


@dataclass(frozen=True)
class BoundConstants:
    L: float
    sigma_L2: float
    sigma_G2: float
    f0_minus_fstar: float
    M: float
    K: int
    E: int
    R: int
    N: int
    D: int
    eta: float

    def __post_init__(self):
        for name in ("L", "sigma_L2", "sigma_G2", "f0_minus_fstar", "M"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if min(self.K, self.E, self.R, self.N, self.D) < 1:
            raise ValueError("K, E, R, N, D must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")


def lr_condition_holds(c: BoundConstants) -> bool:
    """Step-size condition under which the gradient-norm bound applies."""
    eta, L = c.eta, c.L
    return 1 - (c.K + L) / c.K * L * eta - 2 * L * L * eta * eta * c.E * (c.E - 1) >= 0


def _bit_error_shape(n_bits: int) -> float:
    return (4 ** n_bits - 1) / (3 * ((1 << n_bits) - 1) ** 2)


def _ber_sum(bers: Sequence[float], n_bits: int) -> float:
    return math.fsum(b * (1 - b) ** (n_bits - 1) for b in bers)


def convergence_bound_rhs(c: BoundConstants, bers: Sequence[float]) -> dict:
    """Four-term bound on the averaged squared gradient norm.

    Returns a JSON-ready dict with each term, their total, whether the
    step-size condition holds, and the constants C0..C3 of the simplified
    form (meaningful when ``eta == 1/(L*sqrt(R*E))``).
    """
    if len(bers) != c.R:
        raise ValueError(f"need {c.R} per-round BERs, got {len(bers)}")
    if c.eta <= 0:
        raise ValueError("eta must be positive to evaluate the bound")
    T = c.R * c.E
    L, eta, K = c.L, c.eta, c.K
    shape = _bit_error_shape(c.N)
    s = _ber_sum(bers, c.N)
    terms = {
        "initial_gap": 2 * c.f0_minus_fstar / (eta * T),
        "bit_errors": (L + 1) ** 2 * c.D * c.M ** 2 * shape / (eta * T) * s,
        "gradient_variance": L * (L + 1) * eta * (c.sigma_L2 + c.sigma_G2) / K,
        "local_drift": L * L * eta * eta * c.sigma_L2 * (K + 1) * (c.E - 1) / K,
    }
    C = {
        "C0": 2 * L * c.f0_minus_fstar,
        "C1": L * (L + 1) ** 2 * c.D * c.M ** 2 * shape,
        "C2": (L + 1) * (c.sigma_L2 + c.sigma_G2) / K,
        "C3": L * L * c.sigma_L2 * (K + 1) * (c.E - 1) / K,
    }
    simplified = (C["C0"] + C["C1"] * s + C["C2"]) / math.sqrt(T) + C["C3"] / T
    return {
        "terms": terms,
        "total": math.fsum(terms.values()),
        "lr_condition": lr_condition_holds(c),
        "constants": C,
        "simplified_total": simplified,
        "eta_matches_simplified": L > 0 and math.isclose(eta, 1 / (L * math.sqrt(T)), rel_tol=1e-12),
        "T": T,
    }
