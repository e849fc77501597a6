import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedldpc.error_model import (
    BitErrorSpec, expected_model_mse, expected_param_bias, inject_bit_errors, measure_model_error,
)
from fedldpc.quantizer import dequantize, quantize


def direct_single_flip_mse(dim, n_bits, ber, width):
    """Sum over bit positions of P(only that bit flips) * (its weight)^2."""
    step = width / (2 ** n_bits - 1)
    single = ber * (1 - ber) ** (n_bits - 1)
    return dim * sum(single * (step * 2 ** i) ** 2 for i in range(n_bits))


def payload(dim=2000, n_bits=8, seed=0):
    w = np.random.default_rng(seed).uniform(-1, 1, dim)
    return w, quantize(w, n_bits)


def test_zero_ber_is_identity():
    _, p = payload()
    assert inject_bit_errors(p, BitErrorSpec(0.0, 8), 0) is p


def test_flip_rate_within_binomial_bound():
    _, p = payload(20_000)
    ber = 0.03
    flipped = np.count_nonzero(inject_bit_errors(p, BitErrorSpec(ber, 8, 1), 0).bits != p.bits)
    n = p.bits.size
    assert abs(flipped / n - ber) <= 5 * math.sqrt(ber * (1 - ber) / n)


def test_streams_are_keyed():
    _, p = payload()
    spec = BitErrorSpec(0.1, 8, 3)
    a = inject_bit_errors(p, spec, 1, 2)
    assert np.array_equal(a.bits, inject_bit_errors(p, spec, 1, 2).bits)
    assert not np.array_equal(a.bits, inject_bit_errors(p, spec, 1, 3).bits)


def test_truncated_mode_flips_at_most_one_bit_per_parameter():
    _, p = payload(5000)
    noisy = inject_bit_errors(p, BitErrorSpec(0.2, 8, 0), 0, truncated=True)
    per_param = (noisy.bits != p.bits).reshape(-1, 8).sum(axis=1)
    assert per_param.max() <= 1


@pytest.mark.parametrize("n_bits", [1, 4, 8, 12])
def test_closed_form_matches_direct_sum(n_bits):
    for ber in (1e-3, 0.05, 0.3):
        assert expected_model_mse(100, n_bits, ber, 2.0) == pytest.approx(
            direct_single_flip_mse(100, n_bits, ber, 2.0), rel=1e-12)


def test_truncated_monte_carlo_matches_closed_form():
    w, p = payload(20_000, 8)
    clean = dequantize(p)
    ber = 0.05
    spec = BitErrorSpec(ber, 8, 5)
    reps = 40
    mc = sum(measure_model_error(clean, dequantize(inject_bit_errors(p, spec, r, truncated=True)))
             for r in range(reps)) / reps
    expected = expected_model_mse(p.dim, 8, ber, p.w_max - p.w_min)
    assert mc == pytest.approx(expected, rel=0.05)


def test_param_bias_matches_monte_carlo():
    # one repeated parameter value; w_min/w_max pinned by two guard entries
    value, n_bits, ber = 0.3, 6, 0.04
    w = np.concatenate([[0.0, 1.0], np.full(200_000, value)])
    p = quantize(w, n_bits)
    noisy = dequantize(inject_bit_errors(p, BitErrorSpec(ber, n_bits, 2), 0, truncated=True))
    clean = dequantize(p)
    mc = float(np.mean(noisy[2:] - clean[2:]))
    expected = expected_param_bias(value, 0.0, 1.0, n_bits, ber)
    single = ber * (1 - ber) ** (n_bits - 1)
    sd = math.sqrt(single * sum((2 ** i / 63) ** 2 for i in range(n_bits)) / 200_000)
    assert abs(mc - expected) <= 5 * sd


@settings(max_examples=30)
@given(st.floats(0.0, 1.0), st.integers(1, 10))
def test_bias_extremes_point_inward(x, n_bits):
    ber = 0.01
    assert expected_param_bias(0.0, 0.0, 1.0, n_bits, ber) >= 0
    assert expected_param_bias(1.0, 0.0, 1.0, n_bits, ber) <= 0


def test_spec_validation():
    with pytest.raises(ValueError):
        BitErrorSpec(0.6, 8)
    with pytest.raises(ValueError):
        BitErrorSpec(-0.1, 8)
    _, p = payload()
    with pytest.raises(ValueError):
        inject_bit_errors(p, BitErrorSpec(0.1, 4), 0)


def test_measure_model_error():
    assert measure_model_error(np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 4.0
    with pytest.raises(ValueError):
        measure_model_error(np.zeros(2), np.zeros(3))
