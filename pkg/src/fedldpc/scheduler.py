"""Per-round BER targets and their translation into decoding-iteration budgets."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = ("snr_db", "q", "ber", "ci_halfwidth", "frames", "n", "code_seed",
              "mean_iters", "errors", "flag")
REQUIRED_COLUMNS = CSV_HEADER[:7]


@dataclass(frozen=True)
class BerSchedule:
    """Target BER ``b_r`` falling like ``1/(r+1)**2`` from ``b0`` to ``b_last``."""

    b0: float
    b_last: float
    rounds: int

    def __post_init__(self):
        if self.rounds <= 1:
            raise ValueError("schedule needs at least two rounds")
        if not self.b0 > self.b_last > 0:
            raise ValueError("need b0 > b_last > 0")

    @property
    def scale(self) -> float:
        r2 = self.rounds ** 2
        return (self.b0 - self.b_last) * r2 / (r2 - 1)

    @property
    def offset(self) -> float:
        r2 = self.rounds ** 2
        return (self.b_last * r2 - self.b0) / (r2 - 1)

    def target(self, r: int) -> float:
        return target_ber(self, r)

    def targets(self) -> list[float]:
        return [target_ber(self, r) for r in range(self.rounds)]


def target_ber(s: BerSchedule, r: int) -> float:
    if not 0 <= r < s.rounds:
        raise IndexError(f"round {r} outside [0, {s.rounds})")
    if r == 0:
        return s.b0
    if r == s.rounds - 1:
        return s.b_last
    return s.scale / (r + 1) ** 2 + s.offset


def schedule_sum_bound(theta: float, rounds: int, local_steps: int, n_bits: int) -> tuple[float, float]:
    """Both ends of the sum bound for ``b_r = theta/(r+1)**2``.

    Returns ``(sum_r b_r (1-b_r)**(N-1) / sqrt(T), theta/sqrt(T) * (2 - E/T))``
    with ``T = rounds * local_steps``.
    """
    if not 0 <= theta <= 0.5:
        raise ValueError("theta must lie in [0, 0.5]")
    if rounds <= 1:
        raise ValueError("rounds must exceed 1")
    t = rounds * local_steps
    b = theta / np.arange(1, rounds + 1, dtype=np.float64) ** 2
    lhs = math.fsum(b * (1.0 - b) ** (n_bits - 1)) / math.sqrt(t)
    rhs = theta / math.sqrt(t) * (2.0 - local_steps / t)
    return lhs, rhs


@dataclass(frozen=True)
class CalibrationEntry:
    snr_db: float
    q: int
    ber: float
    ci_halfwidth: float
    frames: int
    mean_iters: float = math.nan
    errors: int = -1
    flag: str = ""  # "", "exact" or "under_resolved"


@dataclass(frozen=True)
class CalibrationTable:
    entries: tuple[CalibrationEntry, ...]
    n: int
    code_seed: int
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[float, list[CalibrationEntry]] = {}
        for e in self.entries:
            index.setdefault(e.snr_db, []).append(e)
        for rows in index.values():
            rows.sort(key=lambda e: e.q)
        object.__setattr__(self, "_index", index)

    @property
    def snrs(self) -> list[float]:
        return sorted(self._index)

    def row(self, snr_db: float) -> list[CalibrationEntry]:
        try:
            return self._index[float(snr_db)]
        except KeyError:
            raise KeyError(f"no calibration at snr_db={snr_db}; have {self.snrs}") from None

    def entry(self, snr_db: float, q: int) -> CalibrationEntry:
        for e in self.row(snr_db):
            if e.q == q:
                return e
        raise KeyError(f"no calibration cell (snr_db={snr_db}, q={q})")

    def mean_iterations(self, snr_db: float, q: int) -> float:
        return self.entry(snr_db, q).mean_iters

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for e in sorted(self.entries, key=lambda e: (e.snr_db, e.q)):
            w.writerow([
                _fmt(e.snr_db), e.q, _fmt(e.ber), _fmt(e.ci_halfwidth), e.frames,
                self.n, self.code_seed, _fmt(e.mean_iters), e.errors, e.flag,
            ])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")

    @classmethod
    def from_csv(cls, text: str) -> CalibrationTable:
        reader = csv.DictReader(io.StringIO(text))
        missing = set(REQUIRED_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"calibration CSV lacks columns {sorted(missing)}")
        entries = []
        ident = None
        for line, row in enumerate(reader, start=2):
            try:
                this = (int(row["n"]), int(row["code_seed"]))
                entries.append(CalibrationEntry(
                    snr_db=float(row["snr_db"]),
                    q=int(row["q"]),
                    ber=float(row["ber"]),
                    ci_halfwidth=float(row["ci_halfwidth"]),
                    frames=int(row["frames"]),
                    mean_iters=float(row.get("mean_iters") or "nan"),
                    errors=int(row.get("errors") or -1),
                    flag=row.get("flag") or "",
                ))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"calibration CSV line {line}: {exc}") from None
            if ident is None:
                ident = this
            elif this != ident:
                raise ValueError(f"calibration CSV line {line}: mixed code identities")
        if ident is None:
            raise ValueError("calibration CSV has no rows")
        return cls(tuple(entries), n=ident[0], code_seed=ident[1])

    @classmethod
    def load(cls, path: str | Path) -> CalibrationTable:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _fmt(x: float) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(float(x))  # shortest round-tripping form, up to 17 digits


@dataclass(frozen=True)
class QChoice:
    q: int
    saturated: bool


def q_for_target(table: CalibrationTable, snr_db: float, target: float) -> QChoice:
    """Smallest tabulated Q whose BER meets ``target`` at exactly ``snr_db``.

    When no budget reaches the target the largest Q is returned with
    ``saturated=True``.
    """
    row = table.row(snr_db)
    for e in row:
        if e.ber <= target:
            return QChoice(e.q, False)
    return QChoice(row[-1].q, True)
