"""Pruned tanh perceptrons for one-step-ahead time-series forecasting.

The pipeline: load a univariate series, embed its recent lags as inputs,
train a one-hidden-layer tanh network by damped least squares, prune the
connections whose first-pass weight distributions are not significantly
different from zero (percentile bootstrap test), retrain the pruned
network on the full batch, and cross-compare both variants with
mean-normalized error metrics.
"""

from .errors import (
    DataFormatError,
    FactorizationError,
    NumericError,
    ToolkitError,
    ValidationError,
)
from .series import LagDataset, SeriesFrame, SplitSpec, embed_lags, load_series, split
from .network import (
    MaskedMlp,
    Topology,
    forward,
    full_mask,
    init_params,
    jacobian,
    load_network,
    param_labels,
    predict,
    residuals,
    save_network,
    serialize_network,
)
from .lma import FitResult, LmaConfig, fit, loss, solve_damped_normal_equations
from .pruning import (
    CiTable,
    FirstPassConfig,
    PruneReport,
    WeightSamples,
    bootstrap_ci,
    first_pass,
    fit_replicate,
    format_prune_report,
    jarque_bera,
    significance_mask,
    two_stage_train,
)
from .metrics import MetricPair, nmae, nrmse
from .bench import (
    ComparisonReport,
    RunRecord,
    build_report,
    derive_run_seed,
    emit_report,
    run_experiment,
)
from .config import RunConfig, build_run_config, parse_config_file

__version__ = "0.1.0"
