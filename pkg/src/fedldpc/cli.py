"""Command-line entry point.

    fedldpc calibrate --config exp.toml [--seed S] [--threads N] [--out DIR]
    fedldpc train     --config exp.toml [--seed S] [--mode M] [--threads N] [--out DIR]
    fedldpc bound     --config exp.toml [--out DIR]
    fedldpc validate  {lemma1,corollary1,energy,quantizer,gradients,all}

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Failures print one line to stderr of the form
``error: module=<name> [round=<r>] [client=<k>] cause=<text>``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

from .calibration import CalibrationJob, monotonicity_violations, run_calibration, summarize
from .channel import parse_snr
from .config import ConfigError, CsvSection, ExperimentConfig, load_config
from .data import DatasetError, make_dataset
from .energy import BoundConstants, EnergyModel, convergence_bound_rhs
from .fl import CodeAssets, ExperimentError, FlConfig, LinkPolicy, records_to_csv, run_experiment
from .ldpc import construct_code
from .models import ModelSpec
from .scheduler import BerSchedule, CalibrationTable
from .validation import SUITES, run_suite

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class CliFailure(Exception):
    def __init__(self, code: int, module: str, cause: str, round_index: int | None = None,
                 client: int | None = None):
        super().__init__(cause)
        self.code = code
        self.module = module
        self.cause = cause
        self.round = round_index
        self.client = client

    def line(self) -> str:
        parts = [f"module={self.module}"]
        if self.round is not None:
            parts.append(f"round={self.round}")
        if self.client is not None:
            parts.append(f"client={self.client}")
        cause = " ".join(self.cause.split())
        return "error: " + " ".join(parts) + f" cause={cause}"


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH")
    common.add_argument("--seed", type=_u64, metavar="U64")
    common.add_argument("--threads", type=_positive, metavar="N")
    common.add_argument("--out", metavar="DIR")

    p = argparse.ArgumentParser(prog="fedldpc",
                                description="Federated learning over an LDPC-coded noisy downlink.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("calibrate", parents=[common], help="measure the (SNR, Q) -> BER table")
    train = sub.add_parser("train", parents=[common], help="run a federated experiment")
    train.add_argument("--mode", choices=("physical", "statistical", "error_free"))
    sub.add_parser("bound", parents=[common], help="evaluate the convergence bound as JSON")
    val = sub.add_parser("validate", help="run property suites")
    val.add_argument("suite", choices=SUITES + ("all",))
    return p


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CliFailure(EXIT_USAGE, "config", "; ".join(exc.problems)) from None
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.out is not None:
        updates["out_dir"] = args.out
    if getattr(args, "mode", None) is not None:
        updates["mode"] = args.mode
    return cfg.model_copy(update=updates)


# ---------------------------------------------------------------- outputs

def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def _json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _run_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliFailure(EXIT_RUNTIME, "output", f"cannot create {out}: {exc.strerror}") from None
    # Worker count and output location never influence results, so they are
    # left out of the snapshot to keep it identical across such reruns.
    snapshot = cfg.model_dump(mode="json", exclude={"threads", "out_dir"})
    _write(out / "config.resolved.json", _json(snapshot))
    return out


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------- builders

def _code(cfg: ExperimentConfig):
    try:
        return construct_code(cfg.code.n, cfg.code.seed)
    except Exception as exc:
        raise CliFailure(EXIT_RUNTIME, "ldpc_codec", str(exc)) from None


def _calibration_job(cfg: ExperimentConfig, snr_points) -> CalibrationJob:
    c = cfg.calibration
    return CalibrationJob(
        snr_points=tuple(parse_snr(s) for s in snr_points),
        q_points=tuple(c.q_points),
        min_error_bits=c.min_error_bits,
        min_frames=c.min_frames,
        max_frames=c.max_frames,
        seed=cfg.seed,
        batch_frames=c.batch_frames,
        convention=cfg.channel.convention,
        normalized=cfg.code.normalized,
    )


def _calibrate(cfg: ExperimentConfig, h, enc, snr_points) -> CalibrationTable:
    try:
        return run_calibration(_calibration_job(cfg, snr_points), h, enc, cfg.threads)
    except Exception as exc:
        raise CliFailure(EXIT_RUNTIME, "calibration", str(exc)) from None


def _energy(cfg: ExperimentConfig) -> EnergyModel:
    return EnergyModel(**cfg.energy.model_dump())


def _policy(cfg: ExperimentConfig) -> LinkPolicy:
    s = cfg.schedule
    return LinkPolicy(kind=s.kind, b0=s.b0, b_last=s.b_last, q=s.q, ber=s.ber)


def _fl_config(cfg: ExperimentConfig) -> FlConfig:
    f = cfg.fl
    return FlConfig(
        clients=f.clients, rounds=f.rounds, local_steps=f.local_steps, eta=f.eta,
        batch_size=f.batch_size, n_bits=f.n_bits, mode=cfg.mode, policy=_policy(cfg),
        snr_db=parse_snr(cfg.channel.snr_db), seed=cfg.seed, iid=f.iid,
        convention=cfg.channel.convention, energy=_energy(cfg), threads=cfg.threads,
    )


def _dataset(cfg: ExperimentConfig):
    params = cfg.dataset.model_dump(exclude={"kind"})
    try:
        return make_dataset(cfg.dataset.kind, **params)
    except (DatasetError, OSError) as exc:
        code = EXIT_USAGE if isinstance(cfg.dataset, CsvSection) else EXIT_RUNTIME
        raise CliFailure(code, "dataset", str(exc)) from None


def _load_table(path: str, h) -> CalibrationTable:
    try:
        table = CalibrationTable.load(path)
    except (OSError, ValueError) as exc:
        raise CliFailure(EXIT_USAGE, "calibration", f"cannot load table {path}: {exc}") from None
    if (table.n, table.code_seed) != (h.cols, h.seed):
        raise CliFailure(EXIT_USAGE, "calibration",
                         f"table {path} was measured for n={table.n} code_seed={table.code_seed}, "
                         f"config uses n={h.cols} code_seed={h.seed}")
    return table


# ---------------------------------------------------------------- commands

def cmd_calibrate(cfg: ExperimentConfig) -> int:
    h, enc = _code(cfg)
    out = _run_dir(cfg)
    table = _calibrate(cfg, h, enc, cfg.calibration.snr_points)
    text = table.to_csv()
    _write(out / "calibration.csv", text)
    _write(out / "calibration.sha256", _sha256(text) + "\n")
    report = summarize(table)
    violations = monotonicity_violations(table)
    report += "".join(f"monotonicity violation: {v}\n" for v in violations)
    _write(out / "calibration_summary.txt", report)
    sys.stdout.write(report)
    return EXIT_OK


def cmd_train(cfg: ExperimentConfig) -> int:
    try:
        fl_cfg = _fl_config(cfg)
    except ValueError as exc:
        raise CliFailure(EXIT_USAGE, "config", str(exc)) from None
    dataset = _dataset(cfg)
    spec = ModelSpec(cfg.model.kind, dataset.input_dim, dataset.classes, cfg.model.hidden_dim)
    out = _run_dir(cfg)

    assets, table_hash = None, None
    if cfg.mode != "error_free":
        h, enc = _code(cfg)
        if cfg.calibration.table:
            table = _load_table(cfg.calibration.table, h)
        else:
            table = _calibrate(cfg, h, enc, [cfg.channel.snr_db])
            _write(out / "calibration.csv", table.to_csv())
        table_hash = _sha256(table.to_csv())
        _write(out / "calibration.sha256", table_hash + "\n")
        if fl_cfg.snr_db not in table.snrs:
            raise CliFailure(EXIT_USAGE, "calibration",
                             f"table has no row for snr_db={fl_cfg.snr_db}; rows: {table.snrs}")
        assets = CodeAssets(h, enc, table, normalized=cfg.code.normalized)

    try:
        result = run_experiment(fl_cfg, spec, dataset, assets)
    except ExperimentError as exc:
        raise CliFailure(EXIT_RUNTIME, exc.module, str(exc.__cause__), exc.round,
                         exc.client) from None
    except (ValueError, KeyError) as exc:
        raise CliFailure(EXIT_RUNTIME, "fl_engine", str(exc)) from None

    _write(out / "rounds.csv", records_to_csv(result.records))
    saturated = result.saturated_rounds
    summary = {
        "mode": cfg.mode,
        "policy": cfg.schedule.kind,
        "rounds": fl_cfg.rounds,
        "final_accuracy": result.final_acc,
        "client_average_accuracy": result.client_average_acc,
        "total_energy_j": result.total_energy,
        "total_iterations": result.total_iterations,
        "saturated_rounds": saturated,
        "warnings": ([f"decoder budget saturated in {len(saturated)} round(s): target BER "
                      f"not reachable at snr_db={fl_cfg.snr_db}"] if saturated else []),
        "calibration_sha256": table_hash,
    }
    _write(out / "summary.json", _json(summary))
    sys.stdout.write(f"final_accuracy={result.final_acc:.4f} "
                     f"total_iterations={result.total_iterations:.6g} "
                     f"total_energy_j={result.total_energy:.6g} "
                     f"saturated_rounds={len(saturated)}\n")
    return EXIT_OK


def cmd_bound(cfg: ExperimentConfig) -> int:
    f, b = cfg.fl, cfg.bound
    T = f.rounds * f.local_steps
    eta = b.eta if b.eta is not None else (1 / (b.L * math.sqrt(T)) if b.L > 0 else f.eta)
    s = cfg.schedule
    if s.kind == "adaptive":
        bers = BerSchedule(s.b0, s.b_last, f.rounds).targets()
    elif s.kind == "fixed_ber":
        bers = [s.ber] * f.rounds
    else:
        raise CliFailure(EXIT_USAGE, "analytics_energy",
                         "bound needs an adaptive or fixed_ber schedule for its BER sequence")
    try:
        c = BoundConstants(L=b.L, sigma_L2=b.sigma_L2, sigma_G2=b.sigma_G2,
                           f0_minus_fstar=b.f0_minus_fstar, M=b.M, K=f.clients,
                           E=f.local_steps, R=f.rounds, N=f.n_bits, D=b.D, eta=eta)
        report = convergence_bound_rhs(c, bers)
    except ValueError as exc:
        raise CliFailure(EXIT_USAGE, "analytics_energy", str(exc)) from None
    report["eta"] = eta
    text = _json(report)
    out = _run_dir(cfg)
    _write(out / "bound.json", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(suite: str) -> int:
    checks = run_suite(suite)
    for c in checks:
        sys.stdout.write(c.line() + "\n")
    failed = sum(not c.passed for c in checks)
    sys.stdout.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


COMMANDS = {"calibrate": cmd_calibrate, "train": cmd_train, "bound": cmd_bound}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)  # exits with 2 on usage errors
    try:
        if args.command == "validate":
            return cmd_validate(args.suite)
        return COMMANDS[args.command](_resolve(args))
    except CliFailure as exc:
        sys.stderr.write(exc.line() + "\n")
        return exc.code
    except Exception as exc:  # anything unforeseen still gets one parsable line
        sys.stderr.write(CliFailure(EXIT_RUNTIME, "cli", f"{type(exc).__name__}: {exc}").line()
                         + "\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
