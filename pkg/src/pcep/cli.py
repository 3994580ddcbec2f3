"""``pcep`` command line: sim, construct and rate subcommands.

Exit codes: 0 success, 2 configuration or domain error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from pcep.channel_math import DomainError
from pcep.construction import DEFAULT_MU, ResourceLimitError
from pcep.sim import (
    ConfigError,
    ExperimentConfig,
    ReportIOError,
    emit_report,
    rate_table,
    render_report,
    run_experiment,
)
from pcep.structure import InadmissibleQBERError, PartitionTargets, build_code_structure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_targets(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fer-target", type=float, default=0.1)
    p.add_argument("--pai-target", type=float, default=1e-7)
    p.add_argument("--mu", type=int, default=DEFAULT_MU, help="output alphabet cap of the construction")
    p.add_argument("--cache-dir", help="directory for cached reliability tables")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcep", description="Polar-code one-step QKD post-processing tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("sim", help="Monte Carlo FER/BER experiment over a grid")
    sim.add_argument("--n-exp", type=_int_list, required=True, help="e.g. 10,12")
    sim.add_argument("--p", type=_float_list, required=True, help="QBER grid, e.g. 0.01,0.02")
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0, help="master seed")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--out", help="report path; stdout when omitted")
    sim.add_argument("--timing", action="store_true", help="fill the seconds column (breaks byte-reproducibility)")
    sim.add_argument("--threads", type=int, help="worker threads (default: $PCEP_THREADS or 1)")
    _add_targets(sim)

    con = sub.add_parser("construct", help="emit the R/A/B code structure as JSON")
    con.add_argument("--p", type=float, required=True)
    con.add_argument("--n-exp", type=int, required=True)
    con.add_argument("--out", help="output path; stdout when omitted")
    _add_targets(con)

    rate = sub.add_parser("rate", help="code rate and rate/C_sec table, no Monte Carlo")
    rate.add_argument("--p-grid", type=_float_list, required=True)
    rate.add_argument("--n-exp", type=_int_list, required=True)
    rate.add_argument("--format", choices=("csv", "json"), default="csv")
    rate.add_argument("--out")
    _add_targets(rate)
    return parser


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _targets(args) -> PartitionTargets:
    try:
        return PartitionTargets(args.fer_target, args.pai_target)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_sim(args) -> None:
    cfg = ExperimentConfig(
        n_exps=args.n_exp,
        p_grid=args.p,
        trials=args.trials,
        fer_target=args.fer_target,
        pai_target=args.pai_target,
        mu=args.mu,
        master_seed=args.seed,
        output_path=args.out,
        format=args.format,
        record_timing=args.timing,
        cache_dir=args.cache_dir,
    )
    report = run_experiment(cfg, threads=args.threads)
    for cell in report.skipped:
        print(f"skipped n_exp={cell['n_exp']} p={cell['p_m']}: {cell['reason']}", file=sys.stderr)
    if args.out is None:
        sys.stdout.write(render_report(report, args.format))
    else:
        emit_report(report, args.format, args.out)


def _cmd_construct(args) -> None:
    structure = build_code_structure(args.p, args.n_exp, _targets(args), args.mu, cache_dir=args.cache_dir)
    _write(structure.to_json(indent=2) + "\n", args.out)


def _cmd_rate(args) -> None:
    report = rate_table(args.n_exp, args.p_grid, _targets(args), args.mu, cache_dir=args.cache_dir)
    _write(render_report(report, args.format), args.out)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    handler = {"sim": _cmd_sim, "construct": _cmd_construct, "rate": _cmd_rate}[args.command]
    try:
        handler(args)
    except (ReportIOError, OSError) as exc:
        print(f"pcep: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DomainError, InadmissibleQBERError, ResourceLimitError, ValueError) as exc:
        print(f"pcep: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
