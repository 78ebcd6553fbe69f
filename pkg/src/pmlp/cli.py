"""Command-line entry point.

Subcommands: gen, embed, train, prune-train, eval, compare. Exit codes:
0 success, 1 validation error, 2 runtime/numeric error, 3 I/O error.
All emitted files are written atomically and are byte-identical across
re-runs with the same configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    ComparisonReport,
    emit_report,
    evaluate,
    prepare_windows,
    run_experiment,
    train_baseline,
)
from .config import RunConfig, build_run_config
from .errors import DataFormatError, NumericError, ToolkitError, ValidationError
from .fileio import atomic_write_text
from . import lma
from .network import (
    MaskedMlp,
    Topology,
    full_mask,
    load_network,
    save_network,
)
from .pruning import FirstPassConfig, format_prune_report, two_stage_train
from .series import load_series
from .synth import PRESETS, generate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_pipeline_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--series", type=str, default=None, help="series file path")
    cmd.add_argument("--lags", type=int, default=None, help="input lag count")
    cmd.add_argument("--hidden", type=int, default=None, help="hidden unit count")
    cmd.add_argument("--n-train", type=int, default=None, help="training rows")
    cmd.add_argument("--n-test", type=int, default=None, help="evaluation rows")
    cmd.add_argument("--alpha", type=float, default=None, help="significance level")
    cmd.add_argument("--n-boot", type=int, default=None, help="bootstrap resamples")
    cmd.add_argument("--budget", type=float, default=None,
                     help="first-pass fraction of the training rows")
    cmd.add_argument("--runs", type=int, default=None, help="comparison runs")
    cmd.add_argument("--seed", type=int, default=None, help="master seed")
    cmd.add_argument("--out", type=str, default=None, help="output directory")
    cmd.add_argument("--config", type=str, default=None, help="config file")


def _make_parser() -> _Parser:
    parser = _Parser(prog="pmlp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic series file")
    gen.add_argument("--preset", choices=sorted(PRESETS), required=True)
    gen.add_argument("--length", type=int, default=4000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=str, required=True, help="series file to write")

    for name, help_text in (
        ("embed", "write the lagged supervised dataset as CSV"),
        ("train", "train the fully connected network"),
        ("prune-train", "two-stage training with significance pruning"),
        ("eval", "evaluate a saved network on the test window"),
        ("compare", "paired MLP vs pMLP protocol with report emission"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_pipeline_flags(cmd)
        if name == "eval":
            cmd.add_argument("--network", type=str, required=True,
                             help="network file to evaluate")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    flags = {
        "series": args.series,
        "lags": args.lags,
        "hidden": args.hidden,
        "n_train": args.n_train,
        "n_test": args.n_test,
        "alpha": args.alpha,
        "n_boot": args.n_boot,
        "budget": args.budget,
        "runs": args.runs,
        "seed": args.seed,
        "out": args.out,
    }
    return build_run_config(flags, args.config)


def _fit_summary_lines(result: lma.FitResult) -> list[str]:
    return [
        f"converged = {'true' if result.converged else 'false'}",
        f"reason = {result.reason}",
        f"iters = {result.iters}",
        f"final_loss = {result.final_loss:.17g}",
    ]


def _prune_ratio_of(net: MaskedMlp) -> float:
    return float((~net.mask).sum() / net.topology.m)


def cmd_gen(args: argparse.Namespace) -> int:
    values = generate(args.preset, args.length, args.seed)
    lines = [args.preset]
    lines.extend(format(x, ".17g") for x in values)
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.length} values to {args.out}")
    return EXIT_OK


def cmd_embed(cfg: RunConfig) -> int:
    cfg.validate()
    series = load_series(cfg.series_path)
    from .series import embed_lags

    ds = embed_lags(series, cfg.lags)
    header = ",".join([f"lag{j + 1}" for j in range(cfg.lags)] + ["target"])
    rows = [header]
    for i in range(ds.n):
        cells = [format(x, ".17g") for x in ds.inputs[i]]
        cells.append(format(ds.targets[i], ".17g"))
        rows.append(",".join(cells))
    path = atomic_write_text(Path(cfg.out_dir) / "lagged.csv", "\n".join(rows) + "\n")
    print(f"wrote {ds.n} rows to {path}")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    cfg.validate()
    series = load_series(cfg.series_path)
    train, test = prepare_windows(series, cfg)
    topology = Topology(cfg.lags, cfg.hidden)
    net, result = train_baseline(train, topology, cfg.seed, cfg.lma_batch)
    pair = evaluate(net, test)

    out = Path(cfg.out_dir)
    net_path = save_network(net, out / "mlp.net")
    summary = [
        "command = train",
        f"series = {series.name}",
        f"model = MLP",
        f"lags = {cfg.lags}",
        f"hidden = {cfg.hidden}",
        f"n_train = {cfg.n_train}",
        f"n_test = {cfg.n_test}",
        f"seed = {cfg.seed}",
        *_fit_summary_lines(result),
        f"test_nrmse = {pair.nrmse:.17g}",
        f"test_nmae = {pair.nmae:.17g}",
    ]
    atomic_write_text(out / "train_summary.txt", "\n".join(summary) + "\n")
    print(f"trained network written to {net_path}")
    print(f"test nrmse = {pair.nrmse:.6f}  nmae = {pair.nmae:.6f}")
    return EXIT_OK


def cmd_prune_train(cfg: RunConfig) -> int:
    cfg.validate()
    series = load_series(cfg.series_path)
    train, test = prepare_windows(series, cfg)
    topology = Topology(cfg.lags, cfg.hidden)
    fp_cfg = FirstPassConfig(
        budget_fraction=cfg.budget,
        replicate_size=cfg.replicate_size,
        n_replicates=cfg.n_replicates,
        master_seed=cfg.seed,
        lma=cfg.lma_first,
        shared_subsample=cfg.shared_subsample,
    )
    net, report, result = two_stage_train(
        train, topology, fp_cfg, cfg.alpha, cfg.lma_batch,
        n_boot=cfg.n_boot, warm_start=cfg.warm_start,
    )
    pair = evaluate(net, test)

    out = Path(cfg.out_dir)
    net_path = save_network(net, out / "pmlp.net")
    atomic_write_text(out / "prune_report.txt", format_prune_report(report))
    summary = [
        "command = prune-train",
        f"series = {series.name}",
        f"model = pMLP",
        f"lags = {cfg.lags}",
        f"hidden = {cfg.hidden}",
        f"n_train = {cfg.n_train}",
        f"n_test = {cfg.n_test}",
        f"seed = {cfg.seed}",
        f"alpha = {cfg.alpha:.17g}",
        f"n_boot = {cfg.n_boot}",
        f"pruned = {report.pruned_count}",
        f"prune_ratio = {report.prune_ratio:.17g}",
        *_fit_summary_lines(result),
        f"test_nrmse = {pair.nrmse:.17g}",
        f"test_nmae = {pair.nmae:.17g}",
    ]
    atomic_write_text(out / "prune_train_summary.txt", "\n".join(summary) + "\n")
    print(f"pruned network written to {net_path}")
    print(f"prune ratio = {report.prune_ratio:.6f}")
    print(f"test nrmse = {pair.nrmse:.6f}  nmae = {pair.nmae:.6f}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, network_path: str) -> int:
    cfg.validate()
    net = load_network(network_path)
    if net.topology.n_inputs != cfg.lags:
        raise ValidationError(
            f"network expects {net.topology.n_inputs} lags, config says {cfg.lags}"
        )
    series = load_series(cfg.series_path)
    _, test = prepare_windows(series, cfg)
    pair = evaluate(net, test)

    is_full = bool(net.mask.all())
    record = {
        "series_name": series.name,
        "model": "MLP" if is_full else "pMLP",
        "run_index": "NA",
        "seed": "NA",
        "nrmse": pair.nrmse,
        "nmae": pair.nmae,
        "prune_ratio": "NA" if is_full else _prune_ratio_of(net),
        "iters": "NA",
        "final_loss": "NA",
    }
    atomic_write_text(Path(cfg.out_dir) / "eval_record.jsonl", json.dumps(record) + "\n")
    print(f"nrmse = {pair.nrmse:.17g}")
    print(f"nmae = {pair.nmae:.17g}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    cfg.validate()
    series = load_series(cfg.series_path)
    report = run_experiment(series, cfg)
    table_path, records_path = emit_report(report, cfg.out_dir)
    for model in ("MLP", "pMLP"):
        pair = report.min_metrics[model]
        print(f"minima {model}: nRMSE {pair.nrmse:.6f}  nMAE {pair.nmae:.6f}")
    print(f"mean prune ratio: {report.mean_prune_ratio:.6f}")
    print(f"report: {table_path}")
    print(f"records: {records_path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _make_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        cfg = _config_from_args(args)
        if args.command == "embed":
            return cmd_embed(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "prune-train":
            return cmd_prune_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.network)
        if args.command == "compare":
            return cmd_compare(cfg)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DataFormatError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ToolkitError as exc:  # any remaining library error
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
