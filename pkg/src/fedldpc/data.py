"""Datasets and client partitions."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as rngmod

TRAIN_FRACTION = 0.8


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.X_train.shape[1]

    @property
    def classes(self) -> int:
        return int(max(self.y_train.max(), self.y_test.max())) + 1


def _split(X: np.ndarray, y: np.ndarray, seed: int) -> Dataset:
    order = rngmod.stream(seed, rngmod.DATASET, 1).permutation(len(y))
    cut = int(round(TRAIN_FRACTION * len(y)))
    tr, te = order[:cut], order[cut:]
    return Dataset(X[tr], y[tr], X[te], y[te])


def synthetic_blobs(classes: int = 2, dim: int = 2, per_class: int = 500,
                    spread: float = 1.0, separation: float = 4.0, offset: float = 0.0,
                    seed: int = 0) -> Dataset:
    """Isotropic Gaussian clusters.

    Class means are random directions scaled so that every pair of means is
    about ``separation`` apart (exactly so for two classes), then shifted by
    ``offset`` along every coordinate.
    """
    if classes < 2 or dim < 1 or per_class < 1 or spread <= 0:
        raise DatasetError("need classes >= 2, dim >= 1, per_class >= 1, spread > 0")
    gen = rngmod.stream(seed, rngmod.DATASET, 0)
    if classes == 2:
        u = gen.standard_normal(dim)
        u /= np.linalg.norm(u)
        centers = np.stack([-u, u]) * separation / 2
    else:
        centers = gen.standard_normal((classes, dim))
        centers *= separation / np.sqrt(2 * dim)
    centers = centers + offset
    X = np.concatenate([c + spread * gen.standard_normal((per_class, dim)) for c in centers])
    y = np.repeat(np.arange(classes), per_class)
    return _split(X, y, seed)


def load_csv(path: str | Path, label_column: str | int = -1, seed: int = 0) -> Dataset:
    """Numeric CSV with a header row and one integer label column."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise DatasetError(f"{path}: no data rows")
    if isinstance(label_column, str):
        if label_column not in header:
            raise DatasetError(f"{path}: no column {label_column!r}")
        li = header.index(label_column)
    else:
        li = label_column % len(header)
    feats, labels, problems = [], [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            problems.append(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            continue
        try:
            label = int(row[li])
            values = [float(v) for i, v in enumerate(row) if i != li]
        except ValueError as exc:
            problems.append(f"line {lineno}: {exc}")
            continue
        if label < 0:
            problems.append(f"line {lineno}: negative label {label}")
            continue
        feats.append(values)
        labels.append(label)
    if problems:
        raise DatasetError(f"{path}: malformed rows\n  " + "\n  ".join(problems))
    return _split(np.asarray(feats, dtype=np.float64), np.asarray(labels, dtype=np.int64), seed)


def make_dataset(kind: str, **params) -> Dataset:
    if kind == "synthetic_blobs":
        return synthetic_blobs(**params)
    if kind == "csv":
        return load_csv(**params)
    raise DatasetError(f"unknown dataset kind {kind!r}")


def partition(y: np.ndarray, clients: int, iid: bool = True, seed: int = 0) -> list[np.ndarray]:
    """Index sets, one per client.

    Non-IID: sort by label, cut into ``2*clients`` contiguous blocks and deal
    two blocks to each client.
    """
    n = len(y)
    if clients < 1 or n < (clients if iid else 2 * clients):
        raise DatasetError(f"cannot split {n} samples across {clients} clients")
    gen = rngmod.stream(seed, rngmod.DATASET, 2)
    if iid:
        return [np.sort(s) for s in np.array_split(gen.permutation(n), clients)]
    order = np.argsort(y, kind="stable")
    blocks = np.array_split(order, 2 * clients)
    deal = gen.permutation(2 * clients)
    return [np.sort(np.concatenate([blocks[deal[2 * k]], blocks[deal[2 * k + 1]]]))
            for k in range(clients)]
