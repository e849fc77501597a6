"""Federated averaging with a noisy, LDPC-coded downlink.

Each round the server digitalizes the global model and broadcasts it; every
client recovers its own (possibly corrupted) copy, runs a few local SGD steps
from it and reports the weight change, which the server averages into the
clean global model.  The uplink is error-free.

Three link modes are supported:

``physical``
    quantize -> LDPC encode -> BPSK/AWGN -> min-sum decode with budget ``Q_r``.
``statistical``
    quantize -> independent bit flips at the round's BER; decoder work is
    imputed from the calibration table's mean iteration counts.
``error_free``
    quantize -> dequantize.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .channel import ChannelConfig, transmit
from .data import Dataset, partition
from .energy import EnergyModel, decoding_energy
from .error_model import BitErrorSpec, inject_bit_errors, measure_model_error
from .ldpc import MinSumDecoder, ParityCheckMatrix, SystematicEncoder, encode
from .models import Model, ModelSpec
from .quantizer import dequantize, quantize
from .scheduler import BerSchedule, CalibrationTable, q_for_target

MODES = ("physical", "statistical", "error_free")
POLICIES = ("adaptive", "fixed_q", "fixed_ber", "ber_sequence")
ROUND_CSV_HEADER = ("round", "target_ber", "q_r", "measured_ber", "mean_iters", "energy_j",
                    "train_loss", "test_acc")


class ExperimentError(RuntimeError):
    def __init__(self, module: str, round_index: int, client: int | None, cause: Exception):
        where = f"round {round_index}" + ("" if client is None else f", client {client}")
        super().__init__(f"{module}: {where}: {cause}")
        self.module = module
        self.round = round_index
        self.client = client


@dataclass(frozen=True)
class LinkPolicy:
    """How each round's BER target and decoding budget are chosen."""

    kind: str = "adaptive"
    b0: float = 1e-1
    b_last: float = 1e-4
    q: int = 0
    ber: float = 0.0
    bers: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"policy kind must be one of {POLICIES}")
        if self.kind == "fixed_q" and self.q < 1:
            raise ValueError("fixed_q policy needs q >= 1")
        if self.kind == "fixed_ber" and not 0 <= self.ber <= 0.5:
            raise ValueError("fixed_ber policy needs ber in [0, 0.5]")


@dataclass(frozen=True)
class FlConfig:
    clients: int = 10
    rounds: int = 30
    local_steps: int = 5
    eta: float = 0.01
    batch_size: int = 64
    n_bits: int = 8
    mode: str = "statistical"
    policy: LinkPolicy = LinkPolicy()
    snr_db: float = 2.5
    seed: int = 0
    iid: bool = True
    convention: str = "ebn0"
    energy: EnergyModel = EnergyModel()
    threads: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.clients < 1 or self.rounds < 1 or self.local_steps < 1:
            raise ValueError("clients, rounds and local_steps must be >= 1")
        if self.eta <= 0 or self.batch_size < 1:
            raise ValueError("eta must be > 0 and batch_size >= 1")
        if not 1 <= self.n_bits <= 16:
            raise ValueError("n_bits must be in [1, 16]")
        if self.policy.kind == "ber_sequence" and len(self.policy.bers) != self.rounds:
            raise ValueError("ber_sequence policy needs one BER per round")

    @property
    def schedule(self) -> BerSchedule | None:
        if self.policy.kind != "adaptive":
            return None
        return BerSchedule(self.policy.b0, self.policy.b_last, self.rounds)


@dataclass
class CodeAssets:
    h: ParityCheckMatrix
    enc: SystematicEncoder
    table: CalibrationTable | None = None
    normalized: bool = True
    decoder: MinSumDecoder = field(init=False)

    def __post_init__(self):
        self.decoder = MinSumDecoder(self.h, self.enc.info_cols, normalized=self.normalized)


@dataclass(frozen=True)
class GlobalModel:
    weights: np.ndarray
    round: int = 0


@dataclass
class ClientState:
    client_id: int
    weights: np.ndarray
    X: np.ndarray
    y: np.ndarray
    stream_id: int

    def __post_init__(self):
        if len(self.y) == 0:
            raise ValueError(f"client {self.client_id} has an empty shard")


@dataclass(frozen=True)
class LinkTelemetry:
    target_ber: float
    q_r: int
    measured_ber: float
    mean_iters: float
    energy_j: float
    saturated: bool = False
    frames: int = 0
    iterations: float = 0.0


@dataclass(frozen=True)
class RoundRecord:
    round: int
    target_ber: float
    q_r: int
    measured_ber: float
    mean_iters: float
    energy_j: float
    train_loss: float
    test_acc: float
    saturated: bool = False
    total_iterations: float = 0.0
    quantization_error: float = 0.0


@dataclass
class ExperimentResult:
    records: list[RoundRecord]
    final_weights: np.ndarray
    client_average_weights: np.ndarray
    client_average_acc: float

    @property
    def final_acc(self) -> float:
        return self.records[-1].test_acc

    @property
    def total_energy(self) -> float:
        return math.fsum(r.energy_j for r in self.records)

    @property
    def total_iterations(self) -> float:
        return math.fsum(r.total_iterations for r in self.records)

    @property
    def saturated_rounds(self) -> list[int]:
        return [r.round for r in self.records if r.saturated]


def local_sgd(model: Model, weights: np.ndarray, X: np.ndarray, y: np.ndarray, steps: int,
              eta: float, batch_size: int, gen: np.random.Generator | None = None,
              ) -> tuple[np.ndarray, np.ndarray]:
    """Run ``steps`` mini-batch SGD steps; returns ``(w_final, w_final - w_start)``.

    Batches are drawn with replacement from ``gen``.  Passing ``gen=None``
    uses the whole shard every step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    w = np.array(weights, dtype=np.float64, copy=True)
    for step in range(steps):
        if gen is None:
            xb, yb = X, y
        else:
            idx = gen.integers(0, len(y), batch_size)
            xb, yb = X[idx], y[idx]
        loss, grad = model.loss_and_grad(w, xb, yb)
        if not (math.isfinite(loss) and np.isfinite(grad).all()):
            raise FloatingPointError(f"non-finite loss/gradient at local step {step} (loss={loss})")
        w = w - eta * grad
    return w, w - np.asarray(weights, dtype=np.float64)


def aggregate(global_model: GlobalModel, deltas: Sequence[np.ndarray]) -> GlobalModel:
    """Add the mean client update to the global weights."""
    w = global_model.weights
    if not len(deltas):
        raise ValueError("no client updates to aggregate")
    for d in deltas:
        if np.shape(d) != w.shape:
            raise ValueError(f"update shape {np.shape(d)} != model shape {w.shape}")
    mean = np.sum(np.stack(deltas), axis=0) / len(deltas)
    return GlobalModel(w + mean, global_model.round + 1)


def _round_target(cfg: FlConfig, assets: CodeAssets | None, r: int) -> tuple[float, int, bool]:
    """(target BER, Q_r, saturated) for round ``r``."""
    pol = cfg.policy
    table = assets.table if assets is not None else None
    if cfg.mode == "error_free":
        return 0.0, 0, False
    if pol.kind == "fixed_q":
        if table is None:
            if cfg.mode == "statistical":
                raise ValueError("statistical fixed_q needs a calibration table for its BER")
            return math.nan, pol.q, False
        return table.entry(cfg.snr_db, pol.q).ber, pol.q, False
    if pol.kind == "adaptive":
        target = cfg.schedule.target(r)
    elif pol.kind == "fixed_ber":
        target = pol.ber
    else:
        target = pol.bers[r]
    if table is None:
        if cfg.mode == "physical":
            raise ValueError("physical mode needs a calibration table to pick Q_r")
        return target, 0, False
    choice = q_for_target(table, cfg.snr_db, target)
    return target, choice.q, choice.saturated


def _padded_bits(payload_bits: int, k: int) -> tuple[int, int]:
    frames = -(-payload_bits // k)
    return frames, frames * k


def broadcast_round(global_model: GlobalModel, cfg: FlConfig, assets: CodeAssets | None,
                    r: int) -> tuple[list[np.ndarray], LinkTelemetry]:
    """Deliver the round-``r`` global model to every client."""
    w = global_model.weights
    payload = quantize(w, cfg.n_bits)
    target, q_r, saturated = _round_target(cfg, assets, r)
    K = cfg.clients

    if cfg.mode == "error_free":
        clean = dequantize(payload)
        return [clean.copy() for _ in range(K)], LinkTelemetry(0.0, 0, 0.0, 0.0, 0.0)

    if cfg.mode == "statistical":
        spec = BitErrorSpec(min(max(target, 0.0), 0.5), cfg.n_bits, cfg.seed)
        received, flipped = [], 0
        for k in range(K):
            noisy = inject_bit_errors(payload, spec, r, k)
            flipped += int(np.count_nonzero(noisy.bits != payload.bits))
            received.append(dequantize(noisy))
        measured = flipped / (K * payload.bits.size)
        mean_iters, energy, frames, total_iters = math.nan, math.nan, 0, math.nan
        if assets is not None and assets.table is not None and q_r:
            mean_iters = assets.table.mean_iterations(cfg.snr_db, q_r)
            frames, padded = _padded_bits(payload.bits.size, assets.enc.k)
            frames *= K
            total_iters = mean_iters * frames
            energy = K * decoding_energy(padded, mean_iters, cfg.energy)
        return received, LinkTelemetry(target, q_r, measured, mean_iters, energy, saturated,
                                       frames, total_iters)

    # physical
    if assets is None:
        raise ValueError("physical mode needs code assets")
    enc = assets.enc
    n_frames, padded = _padded_bits(payload.bits.size, enc.k)
    info = np.zeros(padded, dtype=np.uint8)
    info[: payload.bits.size] = payload.bits
    info = info.reshape(n_frames, enc.k)
    codewords = encode(enc, info)
    chan = ChannelConfig(cfg.snr_db, seed=cfg.seed, code_rate=enc.k / enc.n,
                         convention=cfg.convention)

    def receive(k: int):
        llr = np.stack([transmit(chan, codewords[f], r, k, f) for f in range(n_frames)])
        hard, iters, _ = assets.decoder.decode_batch(llr, q_r)
        bits = hard[:, enc.info_cols].ravel()[: payload.bits.size]
        errors = int(np.count_nonzero(bits != payload.bits))
        return dequantize(payload.with_bits(bits)), errors, iters

    results = _map(receive, range(K), cfg.threads)
    received = [res[0] for res in results]
    errors = sum(res[1] for res in results)
    iters = np.concatenate([res[2] for res in results])
    energy = decoding_energy(enc.k, float(iters.sum()), cfg.energy)
    return received, LinkTelemetry(
        target, q_r, errors / (K * payload.bits.size), float(iters.mean()), energy, saturated,
        int(iters.size), float(iters.sum()),
    )


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def make_clients(dataset: Dataset, cfg: FlConfig, dim: int) -> list[ClientState]:
    shards = partition(dataset.y_train, cfg.clients, cfg.iid, cfg.seed)
    return [ClientState(k, np.zeros(dim), dataset.X_train[s], dataset.y_train[s], stream_id=k)
            for k, s in enumerate(shards)]


def run_experiment(cfg: FlConfig, spec: ModelSpec | Model, dataset: Dataset,
                   assets: CodeAssets | None = None, initial: np.ndarray | None = None,
                   ) -> ExperimentResult:
    """Run all rounds and return one :class:`RoundRecord` per round."""
    model = spec if isinstance(spec, Model) else spec.build()
    w0 = model.init(cfg.seed) if initial is None else np.asarray(initial, dtype=np.float64)
    global_model = GlobalModel(w0, 0)
    clients = make_clients(dataset, cfg, w0.size)
    records: list[RoundRecord] = []
    client_avg = w0

    for r in range(cfg.rounds):
        try:
            received, link = broadcast_round(global_model, cfg, assets, r)
        except Exception as exc:
            raise ExperimentError("broadcast", r, None, exc) from exc
        qerr = measure_model_error(global_model.weights, dequantize(quantize(global_model.weights, cfg.n_bits)))

        def train(k: int):
            c = clients[k]
            gen = rngmod.stream(cfg.seed, rngmod.MINIBATCH, r, c.stream_id)
            try:
                return local_sgd(model, received[k], c.X, c.y, cfg.local_steps, cfg.eta,
                                 cfg.batch_size, gen)
            except Exception as exc:
                raise ExperimentError("local_sgd", r, k, exc) from exc

        updates = _map(train, range(cfg.clients), cfg.threads)
        for c, (w_local, _) in zip(clients, updates):
            c.weights = w_local
        client_avg = np.sum(np.stack([u[0] for u in updates]), axis=0) / cfg.clients
        global_model = aggregate(global_model, [u[1] for u in updates])
        w = global_model.weights
        if not np.isfinite(w).all():
            raise ExperimentError("aggregate", r, None, FloatingPointError("non-finite global model"))
        records.append(RoundRecord(
            round=r,
            target_ber=link.target_ber,
            q_r=link.q_r,
            measured_ber=link.measured_ber,
            mean_iters=link.mean_iters,
            energy_j=link.energy_j,
            train_loss=model.loss(w, dataset.X_train, dataset.y_train),
            test_acc=model.accuracy(w, dataset.X_test, dataset.y_test),
            saturated=link.saturated,
            total_iterations=link.iterations,
            quantization_error=qerr,
        ))
    return ExperimentResult(
        records=records,
        final_weights=global_model.weights,
        client_average_weights=client_avg,
        client_average_acc=model.accuracy(client_avg, dataset.X_test, dataset.y_test),
    )


def records_to_csv(records: Sequence[RoundRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROUND_CSV_HEADER)
    for rec in records:
        w.writerow([rec.round, _num(rec.target_ber), rec.q_r, _num(rec.measured_ber),
                    _num(rec.mean_iters), _num(rec.energy_j), _num(rec.train_loss),
                    _num(rec.test_acc)])
    return buf.getvalue()


def _num(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else str(float(x))

