"""Command line front end: ``simulate``, ``analyze``, ``report``, ``selfcheck``.

Exit codes: 0 success / key accepted, 1 the protocol rejected the key (an
attack was detected or the run aborted), 2 usage or configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import analysis, files
from .config import ConfigError, RunConfig, parse_config, parse_override
from .protocol import Verdict, config_dict, run_session

EXIT_OK = 0
EXIT_DETECTED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _emit(text: str, quiet: bool) -> None:
    if not quiet:
        sys.stdout.write(text)


def _load(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, str] = {}
    for item in args.set or []:
        key, value = parse_override(item)
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "attack", None):
        overrides["attack"] = args.attack
    return parse_config(args.config, overrides)


def cmd_simulate(run: RunConfig, out_dir: Path, quiet: bool = False) -> int:
    transcript = run_session(run.session, run.attack)
    out_dir.mkdir(parents=True, exist_ok=True)
    files.write_transcript(out_dir / "transcript.jsonl", transcript)
    summary = transcript.summary()
    summary["config"] = config_dict(run.session)
    files.write_summary(out_dir / "summary.txt", summary)
    _emit(files.format_summary(transcript.summary()), quiet)
    return EXIT_OK if transcript.verdict is Verdict.ACCEPTED else EXIT_DETECTED


def cmd_analyze(run: RunConfig, out_dir: Path, quiet: bool = False) -> int:
    sweep = run.sweep
    out_dir.mkdir(parents=True, exist_ok=True)
    i_star = analysis.critical_info()
    lines = []
    for t in sweep.t_values:
        points = analysis.sweep_curve(sweep.mu_grid(), sweep.etas, t, sweep.tol)
        label = files.t_label(t)
        files.write_curves(out_dir / f"curves_t{label}.csv", points)
        rows = []
        for eta in sweep.etas:
            mu_star = analysis.critical_mu(eta, t)
            crit = [p for p in points if p.eta == eta and p.is_critical]
            value = crit[0].i_e if crit else analysis.eve_info(analysis.ChannelParams(mu_star, eta, t), sweep.tol).i_e
            rows.append((eta, t, mu_star, value))
            lines.append(f"t={label} eta={eta:g} mu*={mu_star:.6f} I_E(mu*)={value:.6f}\n")
        files.write_annotations(out_dir / f"annotations_t{label}.csv", rows)
    lines.append(f"I_E* = {i_star:.6f}\n")
    _emit("".join(lines), quiet)
    return EXIT_OK


def _curve_digest(points: list[analysis.CurvePoint]) -> list[str]:
    out = []
    for eta in sorted({p.eta for p in points}):
        curve = [p for p in points if p.eta == eta]
        monotone = all(b.i_e >= a.i_e for a, b in zip(curve, curve[1:]))
        crit = [p for p in curve if p.is_critical]
        crit_text = f"mu*={crit[0].mu:g} I_E={crit[0].i_e:.6f}" if crit else "mu* outside grid"
        out.append(
            f"  eta={eta:g} points={len(curve)} start={curve[0].i_e:.6f} "
            f"end={curve[-1].i_e:.6f} monotone={'yes' if monotone else 'NO'} {crit_text}\n"
        )
    return out


def cmd_report(out_dir: Path, quiet: bool = False) -> int:
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory {str(out_dir)!r} does not exist")
    lines: list[str] = []
    summary = out_dir / "summary.txt"
    if summary.exists():
        lines.append("[session]\n")
        lines.extend(f"  {k} = {v}\n" for k, v in files.read_summary(summary).items())
    for path in sorted(out_dir.glob("curves_t*.csv")):
        lines.append(f"[{path.name}]\n")
        lines.extend(_curve_digest(files.read_curves(path)))
    if not lines:
        lines.append("nothing to report\n")
    text = "".join(lines)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    _emit(text, quiet)
    return EXIT_OK


def cmd_selfcheck(quiet: bool = False) -> int:
    from .acceptance import run_all

    results = run_all()
    for r in results:
        _emit(r.line() + "\n", quiet)
    failed = [r for r in results if not r.passed]
    _emit(f"{len(results) - len(failed)}/{len(results)} criteria passed\n", quiet)
    return EXIT_OK if not failed else EXIT_DETECTED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--seed", type=int, help="64-bit session seed")
    common.add_argument(
        "--attack", choices=("honest", "pns", "impersonation", "trojan"), help="adversary model"
    )
    common.add_argument("--quiet", action="store_true", help="suppress stdout")

    parser = argparse.ArgumentParser(prog="twoway-qkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one protocol session")
    sub.add_parser("analyze", parents=[common], help="write I_E(mu) curves and mu* annotations")
    sub.add_parser("report", parents=[common], help="summarize an output directory")
    sub.add_parser("selfcheck", parents=[common], help="run the acceptance suite")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "selfcheck":
            return cmd_selfcheck(args.quiet)
        if args.command == "report":
            return cmd_report(args.out, args.quiet)
        run = _load(args)
        if args.command == "simulate":
            return cmd_simulate(run, args.out, args.quiet)
        return cmd_analyze(run, args.out, args.quiet)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
