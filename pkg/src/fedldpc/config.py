"""Experiment configuration files.

Configs are TOML documents with one table per concern::

    seed = 1
    mode = "statistical"           # physical | statistical | error_free
    out_dir = "runs/demo"

    [code]        n, seed, normalized
    [channel]     snr_db, convention
    [calibration] snr_points, q_points, min_error_bits, min_frames, max_frames, table
    [fl]          clients, rounds, local_steps, eta, batch_size, n_bits, iid
    [schedule]    kind = adaptive | fixed_q | fixed_ber, b0, b_last, q, ber
    [model]       kind, hidden_dim
    [dataset]     kind = synthetic_blobs | csv, ...
    [energy]      decode_pj_per_bit_iter, tx_rx_pj_per_bit, train_mj_per_epoch, code_rate
    [bound]       constants for the convergence-bound report

Unknown keys are rejected and every schema problem is reported at once.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibration import DEFAULT_QS, DEFAULT_SNRS


class ConfigError(ValueError):
    """Raised with every problem found, one per line."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CodeSection(_Section):
    n: int = Field(1008, ge=12)
    seed: int = Field(7, ge=0)
    normalized: bool = True


class ChannelSection(_Section):
    snr_db: Union[float, Literal["inf", "noiseless"]] = 2.5
    convention: Literal["ebn0", "esn0"] = "ebn0"


class CalibrationSection(_Section):
    snr_points: list[Union[float, Literal["inf", "noiseless"]]] = Field(
        default_factory=lambda: list(DEFAULT_SNRS))
    q_points: list[int] = Field(default_factory=lambda: list(DEFAULT_QS))
    min_error_bits: int = Field(100, ge=50)
    min_frames: int = Field(1000, ge=0)
    max_frames: int = Field(50_000, ge=100)
    batch_frames: int = Field(200, ge=1)
    table: Optional[str] = None

    @model_validator(mode="after")
    def _sorted(self):
        if not self.q_points or self.q_points != sorted(self.q_points) or self.q_points[0] < 1:
            raise ValueError("q_points must be non-empty, ascending and >= 1")
        if self.min_frames > self.max_frames:
            raise ValueError("min_frames must not exceed max_frames")
        return self


class FlSection(_Section):
    clients: int = Field(10, ge=1)
    rounds: int = Field(30, ge=1)
    local_steps: int = Field(5, ge=1)
    eta: float = Field(0.01, gt=0)
    batch_size: int = Field(64, ge=1)
    n_bits: int = Field(8, ge=1, le=16)
    iid: bool = True


class ScheduleSection(_Section):
    kind: Literal["adaptive", "fixed_q", "fixed_ber"] = "adaptive"
    b0: float = Field(0.1, gt=0, le=0.5)
    b_last: float = Field(1e-4, gt=0, le=0.5)
    q: int = Field(0, ge=0)
    ber: float = Field(0.0, ge=0, le=0.5)

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "adaptive" and not self.b0 > self.b_last:
            raise ValueError("adaptive schedule needs b0 > b_last")
        if self.kind == "fixed_q" and self.q < 1:
            raise ValueError("fixed_q schedule needs q >= 1")
        return self


class ModelSection(_Section):
    kind: Literal["logistic_regression", "mlp_one_hidden"] = "logistic_regression"
    hidden_dim: int = Field(0, ge=0)


class BlobsSection(_Section):
    kind: Literal["synthetic_blobs"] = "synthetic_blobs"
    classes: int = Field(2, ge=2)
    dim: int = Field(5, ge=1)
    per_class: int = Field(1000, ge=1)
    spread: float = Field(1.0, gt=0)
    separation: float = Field(5.0, ge=0)
    offset: float = 10.0
    seed: int = Field(0, ge=0)


class CsvSection(_Section):
    kind: Literal["csv"]
    path: str
    label_column: Union[str, int] = -1
    seed: int = Field(0, ge=0)


class EnergySection(_Section):
    decode_pj_per_bit_iter: float = Field(20.1, ge=0)
    tx_rx_pj_per_bit: float = Field(81.2, ge=0)
    train_mj_per_epoch: float = Field(13.7, ge=0)
    code_rate: float = Field(0.5, gt=0, le=1)


class BoundSection(_Section):
    L: float = Field(1.0, ge=0)
    sigma_L2: float = Field(0.0, ge=0)
    sigma_G2: float = Field(0.0, ge=0)
    f0_minus_fstar: float = Field(1.0, ge=0)
    M: float = Field(1.0, ge=0)
    D: int = Field(12, ge=1)
    eta: Optional[float] = Field(None, gt=0)


class ExperimentConfig(_Section):
    seed: int = Field(0, ge=0, lt=2 ** 64)
    mode: Literal["physical", "statistical", "error_free"] = "statistical"
    out_dir: str = "runs/default"
    threads: int = Field(1, ge=1)
    code: CodeSection = Field(default_factory=CodeSection)
    channel: ChannelSection = Field(default_factory=ChannelSection)
    calibration: CalibrationSection = Field(default_factory=CalibrationSection)
    fl: FlSection = Field(default_factory=FlSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    model: ModelSection = Field(default_factory=ModelSection)
    dataset: Union[BlobsSection, CsvSection] = Field(default_factory=BlobsSection,
                                                     discriminator="kind")
    energy: EnergySection = Field(default_factory=EnergySection)
    bound: BoundSection = Field(default_factory=BoundSection)

    @model_validator(mode="after")
    def _model_dims(self):
        if self.model.kind == "mlp_one_hidden" and self.model.hidden_dim < 1:
            raise ValueError("mlp_one_hidden needs model.hidden_dim >= 1")
        return self


def _format_errors(exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"{loc}: {err['msg']}")
    return out


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax: {exc}"]) from None
    if "dataset" in raw and isinstance(raw["dataset"], dict):
        raw["dataset"].setdefault("kind", "synthetic_blobs")
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
    if base_dir is not None:
        cfg = _resolve_paths(cfg, base_dir)
    return cfg


def _resolve_paths(cfg: ExperimentConfig, base: Path) -> ExperimentConfig:
    updates = {}
    if cfg.calibration.table and not Path(cfg.calibration.table).is_absolute():
        updates["calibration"] = cfg.calibration.model_copy(
            update={"table": str(base / cfg.calibration.table)})
    if isinstance(cfg.dataset, CsvSection) and not Path(cfg.dataset.path).is_absolute():
        updates["dataset"] = cfg.dataset.model_copy(update={"path": str(base / cfg.dataset.path)})
    return cfg.model_copy(update=updates) if updates else cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config(text, path.parent)
