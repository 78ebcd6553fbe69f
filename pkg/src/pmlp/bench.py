"""Cross-comparison harness: plain vs. pruned network over repeated runs.

For each run a fresh seed is derived from the master seed; the baseline
network (all connections active) and the two-stage pruned network start
from that same seed and consume identical train/test rows, so the only
difference is the pipeline. Evaluation is one-step-ahead on the held-out
window: inputs are always measured lags, never fed-back predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import ValidationError
from . import lma
from .metrics import MetricPair, nmae, nrmse
from .network import MaskedMlp, Topology, full_mask, init_params, predict
from .pruning import FirstPassConfig, PruneReport, two_stage_train
from .series import LagDataset, SeriesFrame, SplitSpec, embed_lags, split

__all__ = [
    "RunRecord",
    "ComparisonReport",
    "derive_run_seed",
    "run_experiment",
    "build_report",
    "format_report_table",
    "format_record_line",
    "emit_report",
    "REPORT_FILENAME",
    "RECORDS_FILENAME",
]

REPORT_FILENAME = "compare_report.txt"
RECORDS_FILENAME = "compare_records.jsonl"

_RECORD_FIELDS = (
    "series_name",
    "model",
    "run_index",
    "seed",
    "nrmse",
    "nmae",
    "prune_ratio",
    "iters",
    "final_loss",
)


@dataclass(frozen=True)
class RunRecord:
    """One model's result in one run."""

    run_index: int
    seed: int
    model: str  # "MLP" | "pMLP"
    metrics: MetricPair
    prune_ratio: float | None
    iters: int
    final_loss: float
    converged: bool
    reason: str


@dataclass(frozen=True)
class ComparisonReport:
    """All runs plus per-model minima and winner flags."""

    series_name: str
    records: tuple[RunRecord, ...]
    min_metrics: dict  # model -> MetricPair of min-over-runs values
    mean_prune_ratio: float
    winners: dict  # metric name -> "MLP" | "pMLP" | "tie"


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """Stable per-run seed; independent of how many runs precede it."""
    return int(np.random.SeedSequence([master_seed, run_index]).generate_state(1)[0])


def build_report(series_name: str, records: list[RunRecord]) -> ComparisonReport:
    """Assemble the report; minima are recomputed from the contained runs."""
    if not records:
        raise ValidationError("a comparison report needs at least one run record")
    by_model: dict[str, list[RunRecord]] = {"MLP": [], "pMLP": []}
    for rec in records:
        if rec.model not in by_model:
            raise ValidationError(f"unknown model tag {rec.model!r}")
        by_model[rec.model].append(rec)
    if not by_model["MLP"] or not by_model["pMLP"]:
        raise ValidationError("report needs records for both MLP and pMLP")

    min_metrics = {
        model: MetricPair(
            nrmse=min(r.metrics.nrmse for r in recs),
            nmae=min(r.metrics.nmae for r in recs),
        )
        for model, recs in by_model.items()
    }
    ratios = [r.prune_ratio for r in by_model["pMLP"] if r.prune_ratio is not None]
    mean_ratio = float(np.mean(ratios)) if ratios else 0.0

    winners = {}
    for metric in ("nrmse", "nmae"):
        a = getattr(min_metrics["MLP"], metric)
        b = getattr(min_metrics["pMLP"], metric)
        winners[metric] = "tie" if a == b else ("MLP" if a < b else "pMLP")

    return ComparisonReport(
        series_name=series_name,
        records=tuple(records),
        min_metrics=min_metrics,
        mean_prune_ratio=mean_ratio,
        winners=winners,
    )


def _trim(series: SeriesFrame, offset: int) -> SeriesFrame:
    if offset == 0:
        return series
    if offset >= len(series):
        raise ValidationError(
            f"start_offset {offset} leaves no data (series length {len(series)})"
        )
    return SeriesFrame(series.values[offset:], series.name, series.source_path)


def prepare_windows(series: SeriesFrame, cfg: RunConfig) -> tuple[LagDataset, LagDataset]:
    """Embed and split a series according to the run configuration."""
    ds = embed_lags(_trim(series, cfg.start_offset), cfg.lags)
    return split(ds, SplitSpec(cfg.n_train, cfg.n_test))


def evaluate(net: MaskedMlp, test: LagDataset) -> MetricPair:
    """One-step-ahead forecast errors of a trained network on a window."""
    pred = predict(net, test.inputs)
    return MetricPair(nrmse=nrmse(pred, test.targets), nmae=nmae(pred, test.targets))


def train_baseline(
    train: LagDataset, topology: Topology, seed: int, cfg_lma: lma.LmaConfig
) -> tuple[MaskedMlp, lma.FitResult]:
    """Fit the fully connected network from a seeded init."""
    net = MaskedMlp(topology, init_params(topology, seed), full_mask(topology))
    result = lma.fit(net, train, cfg_lma)
    return net.with_params(result.params), result


def run_experiment(series: SeriesFrame, cfg: RunConfig) -> ComparisonReport:
    """The full protocol: n_runs paired trainings and evaluations."""
    cfg.validate(need_series=False)
    train, test = prepare_windows(series, cfg)
    topology = Topology(cfg.lags, cfg.hidden)

    records: list[RunRecord] = []
    pruned_records: list[RunRecord] = []
    for run_index in range(1, cfg.n_runs + 1):
        seed_i = derive_run_seed(cfg.seed, run_index)

        base_net, base_fit = train_baseline(train, topology, seed_i, cfg.lma_batch)
        records.append(
            RunRecord(
                run_index=run_index,
                seed=seed_i,
                model="MLP",
                metrics=evaluate(base_net, test),
                prune_ratio=None,
                iters=base_fit.iters,
                final_loss=base_fit.final_loss,
                converged=base_fit.converged,
                reason=base_fit.reason,
            )
        )

        fp_cfg = FirstPassConfig(
            budget_fraction=cfg.budget,
            replicate_size=cfg.replicate_size,
            n_replicates=cfg.n_replicates,
            master_seed=seed_i,
            lma=cfg.lma_first,
            shared_subsample=cfg.shared_subsample,
        )
        pruned_net, prune_report, second_fit = two_stage_train(
            train,
            topology,
            fp_cfg,
            cfg.alpha,
            cfg.lma_batch,
            n_boot=cfg.n_boot,
            warm_start=cfg.warm_start,
        )
        pruned_records.append(
            RunRecord(
                run_index=run_index,
                seed=seed_i,
                model="pMLP",
                metrics=evaluate(pruned_net, test),
                prune_ratio=prune_report.prune_ratio,
                iters=second_fit.iters,
                final_loss=second_fit.final_loss,
                converged=second_fit.converged,
                reason=second_fit.reason,
            )
        )

    return build_report(series.name, records + pruned_records)


def format_record_line(series_name: str, record: RunRecord) -> str:
    """One self-delimiting JSON record, fixed field order, NA when absent."""
    payload = {
        "series_name": series_name,
        "model": record.model,
        "run_index": record.run_index,
        "seed": record.seed,
        "nrmse": record.metrics.nrmse,
        "nmae": record.metrics.nmae,
        "prune_ratio": "NA" if record.prune_ratio is None else record.prune_ratio,
        "iters": record.iters,
        "final_loss": record.final_loss,
    }
    assert tuple(payload) == _RECORD_FIELDS
    return json.dumps(payload)


def format_report_table(report: ComparisonReport) -> str:
    """Human-readable table with a minima/winner footer."""
    lines = [
        f"series: {report.series_name}",
        f"records: {len(report.records)}",
        f"{'model':<6}{'run':>4}{'nRMSE':>12}{'nMAE':>12}{'prune_ratio':>13}",
    ]
    for rec in report.records:
        ratio = "-" if rec.prune_ratio is None else f"{rec.prune_ratio:.6f}"
        lines.append(
            f"{rec.model:<6}{rec.run_index:>4}{rec.metrics.nrmse:>12.6f}"
            f"{rec.metrics.nmae:>12.6f}{ratio:>13}"
        )
    for model in ("MLP", "pMLP"):
        pair = report.min_metrics[model]
        lines.append(
            f"minima {model}: nRMSE {pair.nrmse:.6f}  nMAE {pair.nmae:.6f}"
        )
    lines.append(f"mean prune ratio: {report.mean_prune_ratio:.6f}")
    lines.append(f"winner nRMSE: {report.winners['nrmse']}")
    lines.append(f"winner nMAE: {report.winners['nmae']}")
    return "\n".join(lines) + "\n"


def emit_report(report: ComparisonReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write the table and the record file; byte-stable for equal reports."""
    from .fileio import atomic_write_text

    recomputed = build_report(report.series_name, list(report.records))
    if recomputed.min_metrics != report.min_metrics:
        raise ValidationError("report minima do not match contained records")

    out_dir = Path(out_dir)
    table_path = atomic_write_text(out_dir / REPORT_FILENAME, format_report_table(report))
    lines = [format_record_line(report.series_name, rec) for rec in report.records]
    records_path = atomic_write_text(
        out_dir / RECORDS_FILENAME, "\n".join(lines) + "\n"
    )
    return table_path, records_path
