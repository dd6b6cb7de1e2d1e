"""Command-line entry point: ``dynrgg <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from . import validation

SUBCOMMANDS = ("static-census", "dynamic-run", "q-table", "theory", "validate")


def _number_list(text: str):
    values = [float(v) for v in text.split(",") if v.strip()]
    return values[0] if len(values) == 1 else values


def _int_list(text: str):
    values = [int(v) for v in text.split(",") if v.strip()]
    return values[0] if len(values) == 1 else values


def _tolerance(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynrgg", description="Dynamic random geometric graphs on the torus.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
        p.add_argument("--n", type=_int_list, help="agents (q-table accepts a comma list)")
        p.add_argument("--mu", type=_number_list, help="expected isolated vertices; sets r")
        p.add_argument("--r", type=float, help="communication radius (instead of --mu)")
        p.add_argument("--s", type=float, help="step length")
        p.add_argument("--target-qn", type=float, help="choose s so that q*n hits this value")
        p.add_argument("--m", type=int, help="steps between heading refreshes")
        p.add_argument("--trials", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--ell-max", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file; figures go next to it")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--ratios", type=lambda t: [float(v) for v in t.split(",")], help="s/r grid for q-table")
        p.add_argument("--q-samples", type=int, help="Monte Carlo samples where q has no quadrature")
        p.add_argument("--workers", type=int)
        p.add_argument("--tolerance", type=_tolerance, action="append", default=[], metavar="NAME=VALUE")
        p.add_argument("--no-plots", action="store_true")
        if name == "validate":
            p.add_argument("--quick", action="store_true", help="tiny workloads (smoke test only)")
            p.add_argument("--criteria", type=lambda t: [int(v) for v in t.split(",")],
                           help="comma list of criterion ids to run")
    return parser


FLAG_FIELDS = {"n": "n", "mu": "mu", "r": "r", "s": "s", "target_qn": "target_qn", "m": "m", "trials": "trials",
               "steps": "steps", "epsilon": "epsilon", "ell_max": "ell_max", "seed": "seed", "out": "output_path",
               "format": "format", "ratios": "ratios", "q_samples": "q_samples", "workers": "workers"}


def config_from_args(args) -> ex.ExperimentConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    data["mode"] = args.command
    for flag, name in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[name] = value
    if args.tolerance:
        data["tolerances"] = {**data.get("tolerances", {}), **dict(args.tolerance)}
    if args.no_plots:
        data["plots"] = False
    cfg = ex.ExperimentConfig.from_dict(data)
    if cfg.mode in ("static-census", "dynamic-run", "theory") and cfg.r is None and cfg.mu is None:
        cfg.mu = 1.0
    return cfg


def _emit(report: ex.Report, cfg: ex.ExperimentConfig, stdout) -> list[Path]:
    if cfg.output_path is None:
        stdout.write(report.csv_text() if cfg.format == "csv" else report.json_text())
        return []
    out = Path(cfg.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if cfg.format == "csv":
        out.write_text(report.csv_text(), encoding="utf-8", newline="")
        summary_path = out.with_suffix(".json")
        if summary_path == out:
            summary_path = out.with_name(out.name + ".summary.json")
        summary_path.write_text(report.json_text(), encoding="utf-8", newline="")
        written += [out, summary_path]
    else:
        out.write_text(report.json_text(), encoding="utf-8", newline="")
        written.append(out)
    if cfg.plots:
        from .plotting import render_report_figures

        written += render_report_figures(report, out)
    return written


def run_validate(cfg: ex.ExperimentConfig, args, stdout) -> int:
    unknown = set(cfg.tolerances) - set(validation.DEFAULT_TOLERANCES)
    if unknown:
        raise ex.ConfigError(f"unknown tolerance names: {sorted(unknown)}")
    kw = {"seed": cfg.seed, "tolerances": dict(cfg.tolerances), "workers": cfg.workers}
    if args.trials is not None:
        kw["static_trials"] = args.trials
        kw["connectivity_trials"] = min(args.trials, validation.ValidationSettings.connectivity_trials)
    if args.steps is not None:
        kw["dynamic_steps"] = args.steps
    settings = validation.ValidationSettings.quick(**kw) if args.quick else validation.ValidationSettings(**kw)
    results = validation.Suite(settings).run(args.criteria, progress=lambda r: print(r.line(), file=sys.stderr))
    verdict = validation.verdict_json(results, settings)
    if cfg.output_path:
        Path(cfg.output_path).write_text(verdict + "\n", encoding="utf-8")
    else:
        stdout.write(verdict + "\n")
    return 0 if all(r.passed for r in results) else 1


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        if cfg.mode == "validate":
            return run_validate(cfg, args, stdout)
        if cfg.mode == "static-census":
            report = ex.run_static_experiment(cfg)
        elif cfg.mode == "dynamic-run":
            report = ex.run_dynamic_experiment(cfg)
        else:
            report = ex.emit_theory_table(cfg)
        for path in _emit(report, cfg, stdout):
            print(f"wrote {path}", file=sys.stderr)
    except (ex.ConfigError, ValueError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
