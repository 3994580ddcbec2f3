"""Monte Carlo driver: rate, Bob FER/BER and Eve FER/BER over a (n_exp, p_m) grid.

Seeding scheme
--------------
Trial ``t`` of cell ``(n_exp, p_index)`` uses
``SeedSequence(master_seed, spawn_key=(n_exp, p_index, t))`` and spawns four
children for Alice's key, the R bits, Bob's noise and Eve's noise. Results
therefore do not depend on how trials are scheduled over threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from pcep.channel_math import QBER_THRESHOLD, capacity_summary
from pcep.construction import DEFAULT_MU, MAX_N_EXP
from pcep.protocol import alice_prepare, bob_reconcile, eve_attack
from pcep.structure import (
    CodeStructure,
    InadmissibleQBERError,
    PartitionTargets,
    build_code_structure,
)

CSV_COLUMNS = (
    "n_exp",
    "p_m",
    "p_w",
    "rate",
    "rate_over_csec",
    "bob_fer",
    "bob_ber",
    "eve_fer",
    "eve_ber",
    "trials",
    "anomalies",
    "seconds",
)
MIN_N_EXP = 4
CSEC_FLOOR = 1e-12
THREADS_ENV = "PCEP_THREADS"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ReportIOError(OSError):
    """Reading or writing a report failed; the message names the path."""


@dataclass(frozen=True)
class ExperimentConfig:
    n_exps: tuple[int, ...]
    p_grid: tuple[float, ...]
    trials: int
    fer_target: float = 0.1
    pai_target: float = 1e-7
    mu: int = DEFAULT_MU
    master_seed: int = 0
    output_path: str | None = None
    format: str = "csv"
    record_timing: bool = False
    cache_dir: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_exps", tuple(int(n) for n in self.n_exps))
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        if self.trials < 1:
            raise ConfigError(f"trials={self.trials} must be at least 1")
        for n in self.n_exps:
            if not MIN_N_EXP <= n <= MAX_N_EXP:
                raise ConfigError(f"n_exp={n} outside [{MIN_N_EXP}, {MAX_N_EXP}]")
        for p in self.p_grid:
            if not 0.0 <= p <= QBER_THRESHOLD:
                raise ConfigError(f"p={p} outside [0, {QBER_THRESHOLD}]")
        if not 0.0 < self.fer_target < 1.0:
            raise ConfigError(f"fer_target={self.fer_target} must lie in (0, 1)")
        if not self.pai_target > 0.0:
            raise ConfigError(f"pai_target={self.pai_target} must be positive")
        if self.mu < 2 or self.mu % 2:
            raise ConfigError(f"mu={self.mu} must be an even integer >= 2")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")

    @property
    def targets(self) -> PartitionTargets:
        return PartitionTargets(self.fer_target, self.pai_target)


@dataclass(frozen=True)
class TrialOutcome:
    bob_frame_error: bool
    bob_bit_errors: int
    eve_frame_error: bool
    eve_bit_errors: int


@dataclass(frozen=True)
class ReportRow:
    n_exp: int
    p_m: float
    p_w: float
    rate: float
    rate_over_csec: float
    bob_fer: float
    bob_ber: float
    eve_fer: float
    eve_ber: float
    trials: int
    anomalies: int
    seconds: float


@dataclass
class SimulationReport:
    rows: list[ReportRow] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "skipped": list(self.skipped)}

    @classmethod
    def from_dict(cls, d: dict) -> SimulationReport:
        return cls([ReportRow(**r) for r in d["rows"]], list(d.get("skipped", [])))


def _bsc_noise(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    return (rng.random(n) < p).astype(np.uint8)


def run_trial(structure: CodeStructure, trial_seed: np.random.SeedSequence | int) -> TrialOutcome:
    """One block through Alice, Bob and Eve with private noise substreams."""
    if not isinstance(trial_seed, np.random.SeedSequence):
        trial_seed = np.random.SeedSequence(trial_seed)
    key_ss, r_ss, bob_ss, eve_ss = trial_seed.spawn(4)
    k = structure.set_a.size
    ka = np.random.default_rng(key_ss).integers(0, 2, k, dtype=np.uint8)
    r_bits = np.random.default_rng(r_ss).integers(0, 2, structure.set_r.size, dtype=np.uint8)
    msg, final_a = alice_prepare(structure, ka, r_bits=r_bits)
    kb = ka ^ _bsc_noise(np.random.default_rng(bob_ss), k, structure.p_m)
    ke = ka ^ _bsc_noise(np.random.default_rng(eve_ss), k, structure.p_w)
    bob = bob_reconcile(structure, kb, msg).final_key
    eve = eve_attack(structure, ke, msg).final_key
    bob_err = int(np.count_nonzero(bob != final_a))
    eve_err = int(np.count_nonzero(eve != final_a))
    return TrialOutcome(bob_err > 0, bob_err, eve_err > 0, eve_err)


def trial_seed(master_seed: int, n_exp: int, p_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(n_exp, p_index, trial))


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from exc
    if threads < 1:
        raise ConfigError(f"thread count {threads} must be at least 1")
    return threads


def _run_chunk(structure, master_seed, n_exp, p_index, start, stop) -> np.ndarray:
    acc = np.zeros(4, dtype=np.int64)
    for t in range(start, stop):
        o = run_trial(structure, trial_seed(master_seed, n_exp, p_index, t))
        acc += (o.bob_frame_error, o.bob_bit_errors, o.eve_frame_error, o.eve_bit_errors)
    return acc


def _cell_counts(structure, cfg, p_index, pool, threads) -> np.ndarray:
    n_exp = structure.n_exp
    if pool is None:
        return _run_chunk(structure, cfg.master_seed, n_exp, p_index, 0, cfg.trials)
    bounds = np.linspace(0, cfg.trials, threads + 1).astype(int)
    futures = [
        pool.submit(_run_chunk, structure, cfg.master_seed, n_exp, p_index, lo, hi)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    # Integer sums are order-independent, so the thread layout cannot leak into results.
    return sum((f.result() for f in futures), np.zeros(4, dtype=np.int64))


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> SimulationReport:
    """Sweep the grid; cells with negative secrecy capacity are listed as skipped."""
    threads = thread_count(threads)
    report = SimulationReport()
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for n_exp in cfg.n_exps:
            for p_index, p_m in enumerate(cfg.p_grid):
                t0 = time.perf_counter()
                try:
                    structure = build_code_structure(
                        p_m, n_exp, cfg.targets, cfg.mu, cache_dir=cfg.cache_dir
                    )
                except InadmissibleQBERError as exc:
                    report.skipped.append({"n_exp": n_exp, "p_m": p_m, "reason": str(exc)})
                    continue
                bob_fe, bob_be, eve_fe, eve_be = (
                    int(c) for c in _cell_counts(structure, cfg, p_index, pool, threads)
                )
                bits = cfg.trials * structure.set_a.size
                c_sec = capacity_summary(p_m).c_sec
                elapsed = time.perf_counter() - t0 if cfg.record_timing else 0.0
                report.rows.append(
                    ReportRow(
                        n_exp=n_exp,
                        p_m=p_m,
                        p_w=structure.p_w,
                        rate=structure.rate,
                        rate_over_csec=structure.rate / max(c_sec, CSEC_FLOOR),
                        bob_fer=bob_fe / cfg.trials,
                        bob_ber=bob_be / bits if bits else 0.0,
                        eve_fer=eve_fe / cfg.trials,
                        eve_ber=eve_be / bits if bits else 0.0,
                        trials=cfg.trials,
                        anomalies=structure.anomaly_count,
                        seconds=elapsed,
                    )
                )
    finally:
        if pool is not None:
            pool.shutdown()
    return report


def rate_table(
    n_exps, p_grid, targets: PartitionTargets | None = None, mu: int = DEFAULT_MU, cache_dir=None
) -> SimulationReport:
    """Construction-only sweep: rate and rate/C_sec, error columns left at zero."""
    targets = targets or PartitionTargets()
    report = SimulationReport()
    for n_exp in n_exps:
        for p_m in p_grid:
            try:
                s = build_code_structure(p_m, n_exp, targets, mu, cache_dir=cache_dir)
            except InadmissibleQBERError as exc:
                report.skipped.append({"n_exp": n_exp, "p_m": p_m, "reason": str(exc)})
                continue
            c_sec = capacity_summary(p_m).c_sec
            report.rows.append(
                ReportRow(n_exp, p_m, s.p_w, s.rate, s.rate / max(c_sec, CSEC_FLOOR),
                          0.0, 0.0, 0.0, 0.0, 0, s.anomaly_count, 0.0)
            )
    return report


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def render_report(report: SimulationReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def emit_report(report: SimulationReport, fmt: str, path: str | os.PathLike) -> Path:
    text = render_report(report, fmt)
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return path


def load_report(path: str | os.PathLike) -> SimulationReport:
    """Read back a JSON or CSV report written by :func:`emit_report`."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot read report {path}: {exc.strerror or exc}") from exc
    if text.lstrip().startswith("{"):
        return SimulationReport.from_dict(json.loads(text))
    types = {f.name: f.type for f in fields(ReportRow)}
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(ReportRow(**{k: (int(v) if types[k] == "int" else float(v)) for k, v in rec.items()}))
    return SimulationReport(rows)
