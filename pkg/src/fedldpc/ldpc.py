"""Rate-1/2 (3,6)-regular LDPC code: construction, encoding and min-sum decoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

COL_DEGREE = 3
ROW_DEGREE = 6
MESSAGE_CLIP = 1e3
NORMALIZED_FACTOR = 0.75
MAX_RANK_RETRIES = 16
CYCLE_SWAP_ATTEMPTS = 1000


class CodeConstructionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """Sparse binary parity-check matrix of a regular LDPC code.

    ``col_rows[c]`` lists the three check rows that variable ``c`` touches and
    ``row_cols[r]`` the six variables of check ``r``, both sorted.
    """

    rows: int
    cols: int
    col_rows: np.ndarray
    row_cols: np.ndarray
    seed: int

    @property
    def entries(self) -> np.ndarray:
        """(row, col) pairs of every one in H, sorted row-major."""
        r = np.repeat(np.arange(self.rows), self.row_cols.shape[1])
        return np.stack([r, self.row_cols.ravel()], axis=1)

    @property
    def col_degree(self) -> np.ndarray:
        return np.bincount(self.entries[:, 1], minlength=self.cols)

    @property
    def row_degree(self) -> np.ndarray:
        return np.bincount(self.entries[:, 0], minlength=self.rows)

    def dense(self) -> np.ndarray:
        h = np.zeros((self.rows, self.cols), dtype=np.uint8)
        h[np.repeat(np.arange(self.rows), self.row_cols.shape[1]), self.row_cols.ravel()] = 1
        return h

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParityCheckMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.row_cols, other.row_cols)
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.row_cols.tobytes()))


def _count_shared(col_rows: list[set[int]], row_members: list[set[int]], c: int) -> dict[int, int]:
    """Number of rows column ``c`` shares with every other column it meets."""
    shared: dict[int, int] = {}
    for r in col_rows[c]:
        for other in row_members[r]:
            if other != c:
                shared[other] = shared.get(other, 0) + 1
    return shared


def _cycles_through(col_rows, row_members, c: int) -> int:
    return sum(s * (s - 1) // 2 for s in _count_shared(col_rows, row_members, c).values())


def _build_edges(n: int, seed: int) -> np.ndarray:
    """Random (3,6)-regular bipartite graph as an (n, 3) array of check rows."""
    m = n // 2
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    sockets = np.repeat(np.arange(m), ROW_DEGREE)
    rows = rng.permutation(sockets).reshape(n, COL_DEGREE)

    # Repair parallel edges by swapping with a random edge elsewhere.
    for _ in range(100 * n):
        bad = [c for c in range(n) if len(set(rows[c])) < COL_DEGREE]
        if not bad:
            break
        for c in bad:
            vals, counts = np.unique(rows[c], return_counts=True)
            dup = vals[counts > 1][0]
            slot = int(np.flatnonzero(rows[c] == dup)[0])
            c2 = int(rng.integers(n))
            slot2 = int(rng.integers(COL_DEGREE))
            r2 = rows[c2, slot2]
            if c2 == c or r2 in rows[c] or dup in rows[c2]:
                continue
            rows[c, slot], rows[c2, slot2] = r2, dup
    else:
        raise CodeConstructionError("could not remove parallel edges")

    # Best-effort removal of length-4 cycles with degree-preserving swaps.
    col_rows = [set(int(x) for x in rows[c]) for c in range(n)]
    row_members: list[set[int]] = [set() for _ in range(m)]
    for c in range(n):
        for r in col_rows[c]:
            row_members[r].add(c)
    cyc_cols = [c for c in range(n) if _cycles_through(col_rows, row_members, c)]
    for _ in range(CYCLE_SWAP_ATTEMPTS):
        if not cyc_cols:
            break
        c = cyc_cols[int(rng.integers(len(cyc_cols)))]
        shared = _count_shared(col_rows, row_members, c)
        partner = next((o for o, s in sorted(shared.items()) if s > 1), None)
        if partner is None:
            cyc_cols.remove(c)
            continue
        r = int(rng.choice(sorted(col_rows[c] & col_rows[partner])))
        c2 = int(rng.integers(n))
        r2 = int(rng.choice(sorted(col_rows[c2])))
        if c2 == c or r2 in col_rows[c] or r in col_rows[c2]:
            continue

        def local(a: int, b: int) -> int:
            pair = _count_shared(col_rows, row_members, a).get(b, 0)
            return (
                _cycles_through(col_rows, row_members, a)
                + _cycles_through(col_rows, row_members, b)
                - pair * (pair - 1) // 2
            )

        before = local(c, c2)
        _swap(col_rows, row_members, c, r, c2, r2)
        after = local(c, c2)
        if after >= before:
            _swap(col_rows, row_members, c, r2, c2, r)
            continue
        touched = set()
        for row in col_rows[c] | col_rows[c2] | {r, r2}:
            touched |= row_members[row]
        status = set(cyc_cols) - touched
        status |= {x for x in touched if _cycles_through(col_rows, row_members, x)}
        cyc_cols = sorted(status)

    return np.array([sorted(s) for s in col_rows], dtype=np.int64)


def _swap(col_rows, row_members, c, r, c2, r2) -> None:
    col_rows[c].remove(r)
    col_rows[c].add(r2)
    col_rows[c2].remove(r2)
    col_rows[c2].add(r)
    row_members[r].remove(c)
    row_members[r].add(c2)
    row_members[r2].remove(c2)
    row_members[r2].add(c)


def _from_col_rows(col_rows: np.ndarray, seed: int) -> ParityCheckMatrix:
    n = col_rows.shape[0]
    m = n // 2
    row_lists: list[list[int]] = [[] for _ in range(m)]
    for c in range(n):
        for r in col_rows[c]:
            row_lists[int(r)].append(c)
    row_cols = np.array([sorted(x) for x in row_lists], dtype=np.int64)
    return ParityCheckMatrix(rows=m, cols=n, col_rows=col_rows, row_cols=row_cols, seed=seed)


def count_four_cycles(h: ParityCheckMatrix) -> int:
    dense = h.dense().astype(np.int64)
    overlap = dense.T @ dense
    np.fill_diagonal(overlap, 0)
    return int((overlap * (overlap - 1) // 2).sum() // 2)


def gf2_rref(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2) and the pivot column of each row."""
    a = (np.asarray(matrix, dtype=np.uint8) & 1).astype(bool)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.flatnonzero(a[r:, c])
        if hit.size == 0:
            continue
        p = r + int(hit[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a.astype(np.uint8), pivots


@dataclass(frozen=True, eq=False)
class SystematicEncoder:
    """Encoder derived from the RREF of H.

    Information bits sit at ``info_cols`` of the codeword and parity bits at
    ``parity_cols``; ``permutation`` is their concatenation, so
    ``codeword[permutation] == [message | parity]``.  Codewords are returned in
    H's own column order.
    """

    h: ParityCheckMatrix
    info_cols: np.ndarray
    parity_cols: np.ndarray
    parity_map: np.ndarray = field(repr=False)  # (n-k, k) binary

    @property
    def n(self) -> int:
        return self.h.cols

    @property
    def k(self) -> int:
        return int(self.info_cols.size)

    @property
    def permutation(self) -> np.ndarray:
        return np.concatenate([self.info_cols, self.parity_cols])

    @classmethod
    def from_parity_check(cls, h: ParityCheckMatrix) -> SystematicEncoder:
        reduced, pivots = gf2_rref(h.dense())
        if len(pivots) < h.rows:
            raise CodeConstructionError(f"H has rank {len(pivots)} < {h.rows}")
        parity_cols = np.array(pivots, dtype=np.int64)
        info_cols = np.setdiff1d(np.arange(h.cols), parity_cols)
        parity_map = np.ascontiguousarray(reduced[:, info_cols])
        return cls(h=h, info_cols=info_cols, parity_cols=parity_cols, parity_map=parity_map)


def construct_code(n: int = 1008, seed: int = 7) -> tuple[ParityCheckMatrix, SystematicEncoder]:
    """Build a (3,6)-regular rate-1/2 code of length ``n`` and its encoder.

    Rank-deficient draws are retried with ``seed + 1``, ``seed + 2``, ...; the
    returned matrix records the seed that actually produced it.
    """
    if n % 2 or n < 12:
        raise ValueError(f"code length must be even and >= 12, got {n}")
    for attempt in range(MAX_RANK_RETRIES + 1):
        s = seed + attempt
        h = _from_col_rows(_build_edges(n, s), s)
        try:
            return h, SystematicEncoder.from_parity_check(h)
        except CodeConstructionError:
            continue
    raise CodeConstructionError(f"no full-rank code for n={n} within {MAX_RANK_RETRIES} retries")


def encode(enc: SystematicEncoder, msg: np.ndarray) -> np.ndarray:
    """Encode one message (shape ``(k,)``) or a batch (shape ``(B, k)``)."""
    msg = np.asarray(msg)
    if msg.shape[-1] != enc.k:
        raise ValueError(f"message length {msg.shape[-1]} != k={enc.k}")
    u = msg.astype(np.int64) & 1
    parity = (u @ enc.parity_map.T.astype(np.int64)) & 1
    out = np.zeros(msg.shape[:-1] + (enc.n,), dtype=np.uint8)
    out[..., enc.info_cols] = u
    out[..., enc.parity_cols] = parity
    return out


def syndrome(h: ParityCheckMatrix, hard_bits: np.ndarray) -> bool:
    """True iff ``hard_bits`` satisfies every parity check."""
    bits = np.asarray(hard_bits)
    if bits.shape != (h.cols,):
        raise ValueError(f"expected {h.cols} bits, got shape {bits.shape}")
    return not (bits.astype(np.int64)[h.row_cols].sum(axis=1) & 1).any()


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    iterations_used: int
    parity_ok: bool
    codeword: np.ndarray


class MinSumDecoder:
    """Flooding min-sum decoder bound to one code.

    Edge ``e`` connects check ``e // 6`` to variable ``var_of_edge[e]``.  The
    decoder holds only index tables, so a single instance can be shared by any
    number of threads.
    """

    def __init__(self, h: ParityCheckMatrix, info_cols: np.ndarray | None = None,
                 normalized: bool = False):
        self.h = h
        self.var_of_edge = h.row_cols.ravel()
        order = np.argsort(self.var_of_edge, kind="stable")
        self.edges_of_var = order.reshape(h.cols, COL_DEGREE)
        self.info_cols = np.arange(h.cols) if info_cols is None else np.asarray(info_cols)
        self.scale = NORMALIZED_FACTOR if normalized else 1.0

    def decode_batch(self, llr: np.ndarray, max_iters: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Decode ``B`` frames; returns ``(hard, iterations, parity_ok)``.

        ``hard`` holds the full n-bit decisions.  Frames are decoded one at a
        time, so a frame's result never depends on its batch-mates.
        """
        llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
        if llr.shape[1] != self.h.cols:
            raise ValueError(f"frame length {llr.shape[1]} != n={self.h.cols}")
        if max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not np.isfinite(llr).all():
            raise ValueError("LLR input contains non-finite values")
        return _decode_frames(
            np.ascontiguousarray(llr), self.var_of_edge, self.edges_of_var,
            self.h.rows, int(max_iters), self.scale, MESSAGE_CLIP,
        )

    def decode(self, llr: np.ndarray, max_iters: int) -> DecodeResult:
        hard, iters, ok = self.decode_batch(np.asarray(llr)[None, :], max_iters)
        return DecodeResult(
            bits=hard[0, self.info_cols].copy(),
            iterations_used=int(iters[0]),
            parity_ok=bool(ok[0]),
            codeword=hard[0],
        )


def min_sum_decode(h: ParityCheckMatrix, frame: np.ndarray, max_iters: int,
                   enc: SystematicEncoder | None = None, normalized: bool = False) -> DecodeResult:
    """Decode a single LLR frame; ``bits`` are the information bits when ``enc`` is given."""
    info = enc.info_cols if enc is not None else None
    return MinSumDecoder(h, info, normalized).decode(frame, max_iters)


def write_alist(h: ParityCheckMatrix, path: str | Path) -> None:
    """Write H in MacKay's alist format (1-based indices)."""
    lines = [
        f"{h.cols} {h.rows}",
        f"{COL_DEGREE} {ROW_DEGREE}",
        " ".join(str(int(d)) for d in h.col_degree),
        " ".join(str(int(d)) for d in h.row_degree),
    ]
    lines += [" ".join(str(int(r) + 1) for r in rows) for rows in h.col_rows]
    lines += [" ".join(str(int(c) + 1) for c in cols) for cols in h.row_cols]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_alist(path: str | Path, seed: int = -1) -> ParityCheckMatrix:
    tokens = Path(path).read_text(encoding="utf-8").split()
    vals = [int(t) for t in tokens]
    n, m = vals[0], vals[1]
    pos = 4
    col_deg = vals[pos:pos + n]
    pos += n
    row_deg = vals[pos:pos + m]
    pos += m
    col_rows = []
    for d in col_deg:
        col_rows.append([v - 1 for v in vals[pos:pos + d] if v > 0])
        pos += d
    row_cols = []
    for d in row_deg:
        row_cols.append([v - 1 for v in vals[pos:pos + d] if v > 0])
        pos += d
    if any(len(x) != COL_DEGREE for x in col_rows) or any(len(x) != ROW_DEGREE for x in row_cols):
        raise ValueError("only (3,6)-regular alist files are supported")
    return ParityCheckMatrix(
        rows=m, cols=n,
        col_rows=np.array([sorted(x) for x in col_rows], dtype=np.int64),
        row_cols=np.array([sorted(x) for x in row_cols], dtype=np.int64),
        seed=seed,
    )


@njit(cache=True, nogil=True)
def _decode_frames(llr, var_of_edge, edges_of_var, m, max_iters, scale, clip):
    batch, n = llr.shape
    dc = var_of_edge.size // m
    n_edges = var_of_edge.size
    hard = np.zeros((batch, n), dtype=np.uint8)
    iters = np.zeros(batch, dtype=np.int64)
    ok = np.zeros(batch, dtype=np.bool_)
    v2c = np.empty(n_edges)
    c2v = np.empty(n_edges)
    total = np.empty(n)
    for b in range(batch):
        for e in range(n_edges):
            v2c[e] = llr[b, var_of_edge[e]]
        for it in range(1, max_iters + 1):
            for j in range(m):
                base = j * dc
                min1 = np.inf
                min2 = np.inf
                pos = 0
                neg = 0
                for t in range(dc):
                    x = v2c[base + t]
                    if x < 0:
                        neg ^= 1
                        x = -x
                    if x < min1:
                        min2 = min1
                        min1 = x
                        pos = t
                    elif x < min2:
                        min2 = x
                for t in range(dc):
                    mag = min2 if t == pos else min1
                    mag *= scale
                    if mag > clip:
                        mag = clip
                    s = neg
                    if v2c[base + t] < 0:
                        s ^= 1
                    c2v[base + t] = -mag if s else mag
            for v in range(n):
                acc = llr[b, v]
                for t in range(edges_of_var.shape[1]):
                    acc += c2v[edges_of_var[v, t]]
                total[v] = acc
                hard[b, v] = 1 if acc < 0 else 0
            satisfied = True
            for j in range(m):
                par = 0
                for t in range(dc):
                    par ^= hard[b, var_of_edge[j * dc + t]]
                if par:
                    satisfied = False
                    break
            if satisfied or it == max_iters:
                iters[b] = it
                ok[b] = satisfied
                break
            for e in range(n_edges):
                v2c[e] = total[var_of_edge[e]] - c2v[e]
    return hard, iters, ok
