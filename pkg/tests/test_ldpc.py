import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedldpc.ldpc import (
    MESSAGE_CLIP, MinSumDecoder, construct_code, count_four_cycles, encode, gf2_rref,
    min_sum_decode, read_alist, syndrome, write_alist,
)


def gf2_rank_bitmask(matrix):
    """Rank over GF(2) by elimination on Python integer bitmasks."""
    rows = [int("".join(map(str, r)), 2) for r in np.asarray(matrix, dtype=int)]
    rank = 0
    while rows:
        pivot = rows.pop()
        if not pivot:
            continue
        rank += 1
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows]
    return rank


def reference_min_sum(hd, llr, max_iters, scale=1.0, clip=MESSAGE_CLIP):
    """Dense flooding min-sum straight from the message-passing definition."""
    m, n = hd.shape
    checks = [np.flatnonzero(hd[j]) for j in range(m)]
    v2c = {(j, v): llr[v] for j in range(m) for v in checks[j]}
    for it in range(1, max_iters + 1):
        c2v = {}
        for j in range(m):
            for v in checks[j]:
                others = [v2c[(j, u)] for u in checks[j] if u != v]
                mag = min(scale * min(abs(x) for x in others), clip)
                sign = np.prod([-1.0 if x < 0 else 1.0 for x in others])
                c2v[(j, v)] = sign * mag
        total = llr.astype(float).copy()
        for (j, v), msg in c2v.items():
            total[v] += msg
        hard = (total < 0).astype(np.uint8)
        if not ((hd @ hard) % 2).any() or it == max_iters:
            return hard, it
        v2c = {(j, v): total[v] - c2v[(j, v)] for (j, v) in c2v}


def test_default_code_structure(code):
    h, enc = code
    assert (h.rows, h.cols) == (504, 1008)
    assert (h.col_degree == 3).all() and (h.row_degree == 6).all()
    assert count_four_cycles(h) == 0
    assert enc.k == 504
    assert gf2_rank_bitmask(h.dense()) == 504


def test_construction_is_deterministic():
    a, _ = construct_code(96, 11)
    b, _ = construct_code(96, 11)
    c, _ = construct_code(96, 12)
    assert a == b
    assert a != c


@pytest.mark.parametrize("n", [11, 10, 0])
def test_bad_lengths_rejected(n):
    with pytest.raises(ValueError):
        construct_code(n)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 14), st.integers(0, 2**31))
def test_rref_rank_matches_bitmask_oracle(rows, cols, seed):
    a = np.random.default_rng(seed).integers(0, 2, (rows, cols))
    reduced, pivots = gf2_rref(a)
    assert len(pivots) == gf2_rank_bitmask(a)
    for i, c in enumerate(pivots):
        assert reduced[:, c].sum() == 1 and reduced[i, c] == 1


def test_toy_codebook_equals_null_space(toy_code):
    h, enc = toy_code
    hd = h.dense()
    null_space = {bits for bits in itertools.product((0, 1), repeat=h.cols)
                  if not ((hd @ np.array(bits)) % 2).any()}
    codebook = {tuple(encode(enc, np.array(m))) for m in itertools.product((0, 1), repeat=enc.k)}
    assert codebook == null_space
    assert len(codebook) == 2 ** enc.k


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_encoding_is_systematic_and_valid(code, seed):
    h, enc = code
    msg = np.random.default_rng(seed).integers(0, 2, enc.k)
    cw = encode(enc, msg)
    assert syndrome(h, cw)
    assert np.array_equal(cw[enc.info_cols], msg)


def test_batch_encode_matches_single(code):
    _, enc = code
    msgs = np.random.default_rng(0).integers(0, 2, (5, enc.k))
    batch = encode(enc, msgs)
    for m, cw in zip(msgs, batch):
        assert np.array_equal(encode(enc, m), cw)


def test_encode_rejects_wrong_length(code):
    _, enc = code
    with pytest.raises(ValueError):
        encode(enc, np.zeros(enc.k + 1))


def test_noiseless_frame_decodes_in_one_iteration(code):
    h, enc = code
    msg = np.random.default_rng(1).integers(0, 2, enc.k)
    llr = 1e3 * (1.0 - 2.0 * encode(enc, msg))
    res = min_sum_decode(h, llr, 20, enc)
    assert res.iterations_used == 1 and res.parity_ok
    assert np.array_equal(res.bits, msg)


def test_zero_llr_decides_zero(code):
    h, _ = code
    res = min_sum_decode(h, np.zeros(h.cols), 5)
    assert not res.codeword.any()
    assert res.parity_ok and res.iterations_used == 1


def test_single_flip_is_corrected(code):
    h, enc = code
    msg = np.random.default_rng(2).integers(0, 2, enc.k)
    x = 1.0 - 2.0 * encode(enc, msg)
    llr = 4.0 * x
    llr[17] = -llr[17]
    assert not syndrome(h, (llr < 0).astype(np.uint8))
    res = min_sum_decode(h, llr, 20, enc)
    assert res.parity_ok and np.array_equal(res.bits, msg)


@pytest.mark.parametrize("normalized", [False, True])
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), q=st.integers(1, 12))
def test_kernel_matches_reference_min_sum(toy_code, normalized, seed, q):
    h, _ = toy_code
    llr = np.random.default_rng(seed).normal(0.5, 2.0, h.cols)
    dec = MinSumDecoder(h, normalized=normalized)
    hard, iters, _ = dec.decode_batch(llr, q)
    ref_hard, ref_iters = reference_min_sum(h.dense(), llr, q, 0.75 if normalized else 1.0)
    assert np.array_equal(hard[0], ref_hard)
    assert iters[0] == ref_iters


def test_frames_are_independent_of_batch_mates(code):
    h, enc = code
    gen = np.random.default_rng(3)
    llr = 2.0 * (1.0 - 2.0 * encode(enc, gen.integers(0, 2, (6, enc.k)))) + gen.normal(0, 1.2, (6, h.cols))
    dec = MinSumDecoder(h, enc.info_cols, normalized=True)
    hard, iters, ok = dec.decode_batch(llr, 15)
    for i in range(6):
        h1, it1, ok1 = dec.decode_batch(llr[i], 15)
        assert np.array_equal(h1[0], hard[i]) and it1[0] == iters[i] and ok1[0] == ok[i]
    assert (iters <= 15).all() and (iters >= 1).all()


def test_decoder_input_validation(code):
    h, _ = code
    dec = MinSumDecoder(h)
    with pytest.raises(ValueError):
        dec.decode_batch(np.zeros(h.cols - 1), 5)
    with pytest.raises(ValueError):
        dec.decode_batch(np.zeros(h.cols), 0)
    bad = np.zeros(h.cols)
    bad[0] = np.nan
    with pytest.raises(ValueError):
        dec.decode_batch(bad, 5)


def test_alist_round_trip(tmp_path, code):
    h, _ = code
    path = tmp_path / "h.alist"
    write_alist(h, path)
    assert read_alist(path) == h


def test_syndrome_flags_single_error(code):
    h, enc = code
    cw = encode(enc, np.zeros(enc.k, dtype=np.uint8))
    cw[5] ^= 1
    assert not syndrome(h, cw)
