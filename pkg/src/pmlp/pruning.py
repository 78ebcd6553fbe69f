"""Two-stage training: replicate fits, significance pruning, batch refit.

First pass: N replicate fits of the full network on small random row
subsets (by default exactly m rows each, i.e. as many equations as
unknowns) produce an N x m matrix of converged parameter vectors, one
empirical distribution per weight/bias. All replicates start from the
same initial vector: hidden-unit permutation and sign symmetries would
otherwise scatter the replicates across equivalent basins and make the
per-parameter distributions meaningless.

Pruning: a percentile bootstrap of each parameter's mean gives interval
endpoints (t1, t2); the connection is cancelled when the interval covers
zero (t1 * t2 <= 0) and kept otherwise.

Second pass: the pruned network is re-initialized and trained on the
full training set with the ordinary batch fit.

All random draws are derived from (master_seed, stream, index) keys, so
results do not depend on the order in which replicates or bootstrap
columns are processed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ValidationError
from . import lma
from .network import MaskedMlp, Topology, full_mask, init_params, param_labels
from .series import LagDataset, _frozen

__all__ = [
    "FirstPassConfig",
    "ReplicateMeta",
    "WeightSamples",
    "CiTable",
    "PruneReport",
    "first_pass",
    "fit_replicate",
    "bootstrap_ci",
    "significance_mask",
    "jarque_bera",
    "two_stage_train",
    "format_prune_report",
]

# Sub-stream tags keeping subset draws and bootstrap draws independent.
_SUBSET_STREAM = 0
_BOOTSTRAP_STREAM = 1

_MIN_REPLICATES = 8
_MAX_RETRIES = 3


@dataclass(frozen=True)
class FirstPassConfig:
    """Replicate-fit budget and seeding.

    `replicate_size=None` means "one row per parameter" (a square system
    of m equations in m unknowns). With `n_replicates="auto"` the number
    of replicates is floor(budget_fraction * n_train / replicate_size),
    clamped to at least 8 so the per-parameter distributions stay usable.
    `shared_subsample=True` makes every replicate reuse the first draw
    (a degenerate mode kept for comparison experiments).
    """

    budget_fraction: float = 0.10
    replicate_size: int | None = None
    n_replicates: int | str = "auto"
    master_seed: int = 0
    lma: lma.LmaConfig = field(default_factory=lma.LmaConfig)
    shared_subsample: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.budget_fraction <= 1:
            raise ValidationError("budget_fraction must be in (0, 1]")
        if self.replicate_size is not None and self.replicate_size < 1:
            raise ValidationError("replicate_size must be >= 1")
        if isinstance(self.n_replicates, str):
            if self.n_replicates != "auto":
                raise ValidationError("n_replicates must be an integer or 'auto'")
        elif self.n_replicates < 2:
            raise ValidationError("n_replicates must be >= 2")
        if self.master_seed < 0:
            raise ValidationError("master_seed must be a non-negative integer")


@dataclass(frozen=True)
class ReplicateMeta:
    """Provenance of one replicate row: which rows it fit and how it went."""

    row_indices: np.ndarray
    iters: int
    final_loss: float
    converged: bool
    reason: str
    retries: int


@dataclass(frozen=True)
class WeightSamples:
    """N x m matrix of converged parameter vectors from the first pass."""

    samples: np.ndarray
    replicate_meta: tuple[ReplicateMeta, ...]
    topology: Topology

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != self.topology.m:
            raise ValidationError(
                f"samples must be (N, {self.topology.m}), got {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples must all be finite")
        object.__setattr__(self, "samples", _frozen(samples.copy()))

    @property
    def n_replicates(self) -> int:
        return int(self.samples.shape[0])


@dataclass(frozen=True)
class CiTable:
    """Per-parameter bootstrap interval endpoints."""

    t1: np.ndarray
    t2: np.ndarray
    alpha: float
    n_boot: int

    def __post_init__(self) -> None:
        t1 = np.asarray(self.t1, dtype=float)
        t2 = np.asarray(self.t2, dtype=float)
        if t1.shape != t2.shape or t1.ndim != 1:
            raise ValidationError("t1 and t2 must be matching 1-d vectors")
        if np.any(t1 > t2):
            raise ValidationError("interval endpoints must satisfy t1 <= t2")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must be in (0, 1)")
        object.__setattr__(self, "t1", _frozen(t1.copy()))
        object.__setattr__(self, "t2", _frozen(t2.copy()))


@dataclass(frozen=True)
class PruneReport:
    """Outcome of the significance test over all m parameters."""

    mask: np.ndarray
    pruned_count: int
    prune_ratio: float
    ci_table: CiTable
    jb_stats: np.ndarray
    topology: Topology
    pre_guard_pruned_count: int
    guard_applied: bool


def _replicate_count(cfg: FirstPassConfig, n_train: int, replicate_size: int) -> int:
    if cfg.n_replicates == "auto":
        return max(_MIN_REPLICATES, int(cfg.budget_fraction * n_train / replicate_size))
    return int(cfg.n_replicates)


def fit_replicate(
    train: LagDataset,
    topology: Topology,
    cfg: FirstPassConfig,
    index: int,
) -> tuple[lma.FitResult, np.ndarray, int]:
    """Fit one replicate; independent of any other replicate's execution.

    Draws `replicate_size` training rows without replacement from a
    generator keyed by (master_seed, stream, index), starts from the
    shared initial vector and runs the damped least-squares fit. A
    replicate that errors or returns non-finite parameters is redrawn
    with an escalated key, at most 3 times.

    Returns (fit result, sorted row indices, retries used).
    """
    size = cfg.replicate_size if cfg.replicate_size is not None else topology.m
    if train.n < size:
        raise ValidationError(
            f"training set has {train.n} rows; replicates need {size}"
        )
    start = init_params(topology, cfg.master_seed)
    net = MaskedMlp(topology, start, full_mask(topology))
    draw_index = 0 if cfg.shared_subsample else index

    for retry in range(_MAX_RETRIES + 1):
        key = [cfg.master_seed, _SUBSET_STREAM, draw_index]
        if retry:
            key.append(retry)
        rng = np.random.default_rng(key)
        rows = np.sort(rng.choice(train.n, size=size, replace=False))
        try:
            result = lma.fit(net, train.take(rows), cfg.lma)
        except NumericError:
            continue
        if np.all(np.isfinite(result.params)):
            return result, rows, retry
    raise NumericError(
        f"replicate {index}: non-finite parameters after {_MAX_RETRIES} retries"
    )


def first_pass(
    train: LagDataset, topology: Topology, cfg: FirstPassConfig
) -> WeightSamples:
    """Run all replicate fits and stack the converged parameter vectors."""
    size = cfg.replicate_size if cfg.replicate_size is not None else topology.m
    if train.n < size:
        raise ValidationError(
            f"training set has {train.n} rows; replicates need {size}"
        )
    n_rep = _replicate_count(cfg, train.n, size)
    samples = np.empty((n_rep, topology.m))
    meta = []
    for i in range(n_rep):
        result, rows, retries = fit_replicate(train, topology, cfg, i)
        samples[i] = result.params
        meta.append(
            ReplicateMeta(
                row_indices=_frozen(rows),
                iters=result.iters,
                final_loss=result.final_loss,
                converged=result.converged,
                reason=result.reason,
                retries=retries,
            )
        )
    return WeightSamples(samples, tuple(meta), topology)


def bootstrap_ci(
    samples: np.ndarray, n_boot: int, alpha: float, seed
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of a sample.

    Draws `n_boot` resamples (size N, with replacement), records each
    resample's mean and returns the empirical alpha/2 and 1 - alpha/2
    percentiles of those means. Percentiles use the linear-interpolation
    quantile definition (numpy's default).
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValidationError("need a 1-d sample with at least 2 values")
    if n_boot < 1:
        raise ValidationError("n_boot must be >= 1")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must be in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    means = values[idx].mean(axis=1)
    return float(np.quantile(means, alpha / 2)), float(np.quantile(means, 1 - alpha / 2))


def significance_mask(
    ws: WeightSamples, alpha: float, n_boot: int, seed: int
) -> tuple[np.ndarray, CiTable]:
    """Bootstrap test of every parameter's mean against zero.

    Parameter j is pruned (mask False) iff its interval satisfies
    t1 * t2 <= 0, i.e. the interval covers zero or touches it (an
    endpoint exactly at zero cannot certify a sign). Each column gets
    its own seeded generator, so the test is order-independent.

    If the rule would cancel B2 together with every W2 entry, the output
    would be undefined; the single entry of that group with the largest
    absolute column mean is re-activated.
    """
    m = ws.topology.m
    t1 = np.empty(m)
    t2 = np.empty(m)
    for j in range(m):
        t1[j], t2[j] = bootstrap_ci(
            ws.samples[:, j], n_boot, alpha, seed=[seed, _BOOTSTRAP_STREAM, j]
        )
    keep = t1 * t2 > 0

    out = ws.topology.output_slice
    if not np.any(keep[out]):
        group_means = np.abs(ws.samples[:, out].mean(axis=0))
        keep[out.start + int(np.argmax(group_means))] = True

    return _frozen(keep), CiTable(t1, t2, alpha, n_boot)


def jarque_bera(samples: np.ndarray) -> float:
    """Normality statistic JB = (N/6) (S^2 + (K-3)^2 / 4).

    S is the sample skewness and K the raw (non-excess) kurtosis, both
    from biased (1/N) moment estimators. Diagnostic only; pruning never
    consults it.
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or values.size < 4:
        raise ValidationError("need a 1-d sample with at least 4 values")
    centered = values - values.mean()
    m2 = np.mean(centered**2)
    if m2 == 0:
        raise ValidationError("sample variance is zero; moments undefined")
    skew = np.mean(centered**3) / m2**1.5
    kurt = np.mean(centered**4) / m2**2
    return float(values.size / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0))


def _jb_column_stats(ws: WeightSamples) -> np.ndarray:
    """Per-column JB values; NaN where the column is degenerate."""
    stats = np.empty(ws.topology.m)
    for j in range(ws.topology.m):
        try:
            stats[j] = jarque_bera(ws.samples[:, j])
        except ValidationError:
            stats[j] = np.nan
    return _frozen(stats)


def two_stage_train(
    train: LagDataset,
    topology: Topology,
    cfg: FirstPassConfig,
    alpha: float,
    lma2: lma.LmaConfig,
    *,
    n_boot: int = 4000,
    warm_start: bool = False,
) -> tuple[MaskedMlp, PruneReport, lma.FitResult]:
    """Replicate fits, significance pruning, then a full-batch refit.

    The pruned network restarts from a fresh init_params vector (masked
    entries zeroed); `warm_start=True` starts from the first-pass column
    means instead. Returns the trained pruned network, the prune report
    and the second-pass fit result.
    """
    ws = first_pass(train, topology, cfg)
    mask, ci = significance_mask(ws, alpha, n_boot, cfg.master_seed)
    pre_guard_keep = ci.t1 * ci.t2 > 0

    if warm_start:
        theta = ws.samples.mean(axis=0)
    else:
        theta = init_params(topology, cfg.master_seed)
    theta = theta.copy()
    theta[~mask] = 0.0

    pruned_net = MaskedMlp(topology, theta, mask)
    second = lma.fit(pruned_net, train, lma2)
    trained = pruned_net.with_params(second.params)

    pruned_count = int((~mask).sum())
    report = PruneReport(
        mask=mask,
        pruned_count=pruned_count,
        prune_ratio=pruned_count / topology.m,
        ci_table=ci,
        jb_stats=_jb_column_stats(ws),
        topology=topology,
        pre_guard_pruned_count=int((~pre_guard_keep).sum()),
        guard_applied=bool(np.any(mask & ~pre_guard_keep)),
    )
    return trained, report, second


def format_prune_report(report: PruneReport) -> str:
    """One line per parameter: index, layer tag, t1, t2, decision, JB."""
    labels = param_labels(report.topology)
    lines = [
        "pruning report",
        f"alpha = {report.ci_table.alpha:.17g}",
        f"n_boot = {report.ci_table.n_boot}",
        f"parameters = {report.topology.m}",
        f"pruned = {report.pruned_count} (pre-guard {report.pre_guard_pruned_count})",
        f"prune_ratio = {report.prune_ratio:.6f}",
        f"guard_applied = {'yes' if report.guard_applied else 'no'}",
        f"{'index':<6}{'tag':<10}{'t1':>15}{'t2':>15}  {'decision':<8}{'jb':>12}",
    ]
    for j in range(report.topology.m):
        decision = "kept" if report.mask[j] else "pruned"
        lines.append(
            f"{j:<6}{labels[j]:<10}{report.ci_table.t1[j]:>15.6g}"
            f"{report.ci_table.t2[j]:>15.6g}  {decision:<8}"
            f"{report.jb_stats[j]:>12.6g}"
        )
    return "\n".join(lines) + "\n"
