"""Forecast error metrics normalized by the observation mean."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["MetricPair", "nrmse", "nmae"]


@dataclass(frozen=True)
class MetricPair:
    nrmse: float
    nmae: float


def _check(pred: np.ndarray, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    pred = np.asarray(pred, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if pred.ndim != 1 or obs.ndim != 1:
        raise ValidationError("pred and obs must be 1-d vectors")
    if pred.size != obs.size:
        raise ValidationError(f"length mismatch: {pred.size} vs {obs.size}")
    if pred.size == 0:
        raise ValidationError("metrics need at least one value")
    mean_obs = float(np.mean(obs))
    if mean_obs == 0:
        raise ValidationError("observation mean is zero; normalization undefined")
    # Normalize by the magnitude so the metric stays >= 0 for negative-mean
    # series as well.
    return pred, obs, abs(mean_obs)


def nrmse(pred: np.ndarray, obs: np.ndarray) -> float:
    """Root-mean-square error divided by the mean of the observations."""
    pred, obs, scale = _check(pred, obs)
    return float(np.sqrt(np.mean((pred - obs) ** 2)) / scale)


def nmae(pred: np.ndarray, obs: np.ndarray) -> float:
    """Mean absolute error divided by the mean of the observations."""
    pred, obs, scale = _check(pred, obs)
    return float(np.mean(np.abs(pred - obs)) / scale)
