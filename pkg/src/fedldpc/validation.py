"""Property suites behind ``fedldpc validate``.

Each suite returns a list of :class:`Check` results; a check records what
was observed, what was expected and the tolerance applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as rngmod
from .energy import EnergyModel, decoding_energy, transceiver_energy, uncoded_transceiver_energy
from .error_model import BitErrorSpec, expected_model_mse, inject_bit_errors, measure_model_error
from .models import ModelSpec, finite_difference_grad
from .quantizer import dequantize, pack_indices, quantize, unpack_indices
from .scheduler import schedule_sum_bound

SUITES = ("lemma1", "corollary1", "energy", "quantizer", "gradients")
VALIDATION_SEED = 20240601


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    observed: float | str
    expected: float | str
    tolerance: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: observed={_show(self.observed)} "
                f"expected={_show(self.expected)} tol={self.tolerance}")


def _show(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _rel_check(name: str, observed: float, expected: float, rel: float) -> Check:
    err = abs(observed - expected) / abs(expected)
    return Check(name, err <= rel, observed, expected, f"rel<={rel:g} (got {err:.3g})")


def empirical_model_mse(dim: int, n_bits: int, ber: float, reps: int, seed: int = 0,
                        range_width: float = 1.0) -> float:
    """Mean ``||w~ - w||^2`` over ``reps`` independent bit-flip draws.

    ``w`` is uniform on ``[0, range_width]`` with both endpoints present, so
    the quantizer range is exactly ``range_width``.
    """
    w = rngmod.stream(seed, rngmod.DATASET, 9).uniform(0.0, range_width, dim)
    w[0], w[1] = 0.0, range_width
    payload = quantize(w, n_bits)
    clean = dequantize(payload)
    spec = BitErrorSpec(ber, n_bits, seed)
    total = math.fsum(measure_model_error(clean, dequantize(inject_bit_errors(payload, spec, rep)))
                      for rep in range(reps))
    return total / reps


def suite_lemma1(dim: int = 100_000, reps: int = 100) -> list[Check]:
    out = []
    for ber in (1e-2, 1e-3):
        observed = empirical_model_mse(dim, 8, ber, reps, VALIDATION_SEED)
        expected = expected_model_mse(dim, 8, ber, 1.0)
        out.append(_rel_check(f"lemma1 mse N=8 D={dim} b={ber:g}", observed, expected, 0.10))
    return out


def suite_corollary1() -> list[Check]:
    out = []
    for theta in (0.01, 0.1, 0.5):
        prev = math.inf
        for rounds in (10, 100, 1000):
            lhs, rhs = schedule_sum_bound(theta, rounds, 5, 8)
            out.append(Check(f"corollary1 lhs<=rhs theta={theta} R={rounds}", lhs <= rhs,
                             lhs, rhs, "lhs<=rhs"))
            out.append(Check(f"corollary1 decreasing theta={theta} R={rounds}", lhs < prev,
                             lhs, f"<{prev:.6g}", "strict"))
            prev = lhs
    return out


def suite_energy() -> list[Check]:
    m = EnergyModel()
    bits = 60e6 * 8
    return [
        _rel_check("energy decoding 480 Mbit x 10 iter [mJ]",
                   decoding_energy(bits, 10, m) * 1e3, 96.5, 0.005),
        _rel_check("energy coded transceiver 480 Mbit [mJ]",
                   transceiver_energy(bits, m) * 1e3, 78.0, 0.005),
        _rel_check("energy uncoded transceiver 480 Mbit [mJ]",
                   uncoded_transceiver_energy(bits, m) * 1e3, 39.0, 0.01),
        Check("energy zero iterations", decoding_energy(bits, 0, m) == 0.0,
              decoding_energy(bits, 0, m), 0.0, "exact"),
    ]


def suite_quantizer(cases: int = 200) -> list[Check]:
    gen = rngmod.stream(VALIDATION_SEED, rngmod.DATASET, 10)
    worst_ratio = 0.0
    roundtrip_ok = True
    endpoints_ok = True
    for _ in range(cases):
        n_bits = int(gen.integers(1, 17))
        dim = int(gen.integers(2, 200))
        w = gen.normal(0.0, float(gen.uniform(0.01, 10.0)), dim)
        p = quantize(w, n_bits)
        back = dequantize(p)
        if p.step > 0:
            worst_ratio = max(worst_ratio, float(np.max(np.abs(back - w))) / (p.step / 2))
        idx = p.indices()
        roundtrip_ok &= bool(np.array_equal(unpack_indices(pack_indices(idx, n_bits), n_bits), idx))
        endpoints_ok &= bool(back[np.argmin(w)] == w.min() and back[np.argmax(w)] == w.max())
    return [
        Check("quantizer error <= step/2", worst_ratio <= 1.0 + 1e-9, worst_ratio, 1.0,
              "ratio<=1"),
        Check("quantizer pack/unpack round trip", roundtrip_ok, str(roundtrip_ok), "True", "exact"),
        Check("quantizer range endpoints exact", endpoints_ok, str(endpoints_ok), "True", "exact"),
    ]


def suite_gradients(instances: int = 100, rel: float = 1e-5) -> list[Check]:
    gen = rngmod.stream(VALIDATION_SEED, rngmod.DATASET, 11)
    out = []
    for kind, hidden in (("logistic_regression", 0), ("mlp_one_hidden", 6)):
        worst = 0.0
        for i in range(instances):
            d = int(gen.integers(1, 6))
            c = int(gen.integers(2, 5))
            model = ModelSpec(kind, d, c, hidden).build()
            w = gen.normal(0.0, 0.5, model.spec.num_params)
            X = gen.normal(0.0, 1.0, (8, d))
            y = gen.integers(0, c, 8)
            analytic = model.loss_and_grad(w, X, y)[1]
            numeric = finite_difference_grad(model, w, X, y)
            scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
            worst = max(worst, float(np.linalg.norm(analytic - numeric)) / scale)
        out.append(Check(f"gradients {kind} x{instances}", worst <= rel, worst, 0.0,
                         f"rel<={rel:g}"))
    return out


REGISTRY: dict[str, Callable[[], list[Check]]] = {
    "lemma1": suite_lemma1,
    "corollary1": suite_corollary1,
    "energy": suite_energy,
    "quantizer": suite_quantizer,
    "gradients": suite_gradients,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for s in SUITES for c in REGISTRY[s]()]
    if name not in REGISTRY:
        raise KeyError(name)
    return REGISTRY[name]()
