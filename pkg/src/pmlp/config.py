"""Run configuration: defaults, config-file parsing and flag precedence.

The config file is flat `key = value` text, one pair per line, full-line
`#` comments allowed. Every command-line flag has a key of the same name
with `-` replaced by `_` (e.g. `n_train`); additional keys without flag
equivalents tune the fitting stages. Precedence is
command-line flag > config-file key > built-in default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataFormatError, ValidationError
from .lma import LmaConfig

__all__ = ["RunConfig", "parse_config_file", "build_run_config", "CONFIG_KEYS"]


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_replicates(text: str):
    return text if text == "auto" else int(text)


def _parse_optional_int(text: str):
    return None if text == "none" else int(text)


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline command needs, validated before any compute."""

    series_path: str = ""
    lags: int = 7
    hidden: int = 2
    n_train: int = 3200
    n_test: int = 400
    alpha: float = 0.05
    n_boot: int = 4000
    budget: float = 0.10
    n_runs: int = 7
    seed: int = 0
    out_dir: str = "out"
    start_offset: int = 0
    replicate_size: int | None = None
    n_replicates: int | str = "auto"
    shared_subsample: bool = False
    warm_start: bool = False
    lma_first: LmaConfig = field(default_factory=LmaConfig)
    lma_batch: LmaConfig = field(default_factory=LmaConfig)

    def validate(self, *, need_series: bool = True) -> None:
        if need_series and not self.series_path:
            raise ValidationError("a series file is required (--series)")
        if self.lags < 1:
            raise ValidationError("lags must be >= 1")
        if self.hidden < 1:
            raise ValidationError("hidden must be >= 1")
        if self.n_train < 1 or self.n_test < 1:
            raise ValidationError("n_train and n_test must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must be in (0, 1)")
        if self.n_boot < 1:
            raise ValidationError("n_boot must be >= 1")
        if not 0 < self.budget <= 1:
            raise ValidationError("budget must be in (0, 1]")
        if self.n_runs < 1:
            raise ValidationError("runs must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        if self.start_offset < 0:
            raise ValidationError("start_offset must be >= 0")
        if self.replicate_size is not None and self.replicate_size < 1:
            raise ValidationError("replicate_size must be >= 1")
        if isinstance(self.n_replicates, str) and self.n_replicates != "auto":
            raise ValidationError("n_replicates must be an integer or 'auto'")
        if isinstance(self.n_replicates, int) and self.n_replicates < 2:
            raise ValidationError("n_replicates must be >= 2")


# key -> (attribute path, parser). Flat keys mirror the CLI flags; the
# first_*/batch_* groups tune the replicate-fit and batch LMA schedules.
_LMA_FIELDS = {
    "lambda0": float,
    "lambda_up": float,
    "lambda_down": float,
    "max_iters": int,
    "step_tol": float,
    "loss_tol": float,
    "lambda_max": float,
}

CONFIG_KEYS: dict = {
    "series": ("series_path", str),
    "lags": ("lags", int),
    "hidden": ("hidden", int),
    "n_train": ("n_train", int),
    "n_test": ("n_test", int),
    "alpha": ("alpha", float),
    "n_boot": ("n_boot", int),
    "budget": ("budget", float),
    "runs": ("n_runs", int),
    "seed": ("seed", int),
    "out": ("out_dir", str),
    "start_offset": ("start_offset", int),
    "replicate_size": ("replicate_size", _parse_optional_int),
    "n_replicates": ("n_replicates", _parse_replicates),
    "shared_subsample": ("shared_subsample", _parse_bool),
    "warm_start": ("warm_start", _parse_bool),
}
for _name, _parser in _LMA_FIELDS.items():
    CONFIG_KEYS[f"first_{_name}"] = (("lma_first", _name), _parser)
    CONFIG_KEYS[f"batch_{_name}"] = (("lma_batch", _name), _parser)


def parse_config_file(path: str | Path) -> dict:
    """Read `key = value` pairs; unknown keys and bad values are errors."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    settings: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise DataFormatError(f"{path}: line {lineno}: unknown key {key!r}")
        _, parser = CONFIG_KEYS[key]
        try:
            settings[key] = parser(value)
        except ValueError as exc:
            raise DataFormatError(
                f"{path}: line {lineno}: bad value for {key!r}: {value!r}"
            ) from exc
    return settings


def _apply(cfg: RunConfig, key: str, value) -> RunConfig:
    target, _ = CONFIG_KEYS[key]
    if isinstance(target, tuple):
        group_name, field_name = target
        group = replace(getattr(cfg, group_name), **{field_name: value})
        return replace(cfg, **{group_name: group})
    return replace(cfg, **{target: value})


def build_run_config(flag_values: dict, config_path: str | None) -> RunConfig:
    """Merge defaults, config-file keys and explicit flags, in that order.

    `flag_values` maps config keys to values; entries that are None are
    treated as "flag not given".
    """
    cfg = RunConfig()
    if config_path:
        for key, value in parse_config_file(config_path).items():
            cfg = _apply(cfg, key, value)
    for key, value in flag_values.items():
        if value is None:
            continue
        if key not in CONFIG_KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        cfg = _apply(cfg, key, value)
    return cfg
