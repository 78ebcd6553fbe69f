"""Synthetic series generators.

Stand-ins for measured data so every documented experiment is runnable
offline. All presets carry a positive offset (the error metrics divide
by the observation mean) and keep values at a scale a raw tanh network
can learn without input scaling.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

__all__ = ["ar1", "ar2", "seasonal", "trend", "white_noise", "PRESETS", "generate"]

_BURN_IN = 200


def ar1(length: int, seed: int, *, phi: float = 0.8, sigma: float = 0.5,
        mean: float = 2.0) -> np.ndarray:
    """First-order autoregression around `mean`."""
    rng = np.random.default_rng(seed)
    total = length + _BURN_IN
    eps = rng.normal(0.0, sigma, total)
    x = np.empty(total)
    x[0] = mean
    c = mean * (1.0 - phi)
    for t in range(1, total):
        x[t] = c + phi * x[t - 1] + eps[t]
    return x[_BURN_IN:]


def ar2(length: int, seed: int, *, phi1: float = 0.55, phi2: float = 0.25,
        sigma: float = 0.5, mean: float = 2.0) -> np.ndarray:
    """Second-order autoregression around `mean` (coefficients stationary)."""
    rng = np.random.default_rng(seed)
    total = length + _BURN_IN
    eps = rng.normal(0.0, sigma, total)
    x = np.empty(total)
    x[0] = x[1] = mean
    c = mean * (1.0 - phi1 - phi2)
    for t in range(2, total):
        x[t] = c + phi1 * x[t - 1] + phi2 * x[t - 2] + eps[t]
    return x[_BURN_IN:]


def seasonal(length: int, seed: int, *, period: int = 24, amplitude: float = 1.0,
              sigma: float = 0.3, mean: float = 2.0) -> np.ndarray:
    """Sinusoidal daily-style cycle plus white noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    return mean + amplitude * np.sin(2.0 * np.pi * t / period) + rng.normal(0.0, sigma, length)


def trend(length: int, seed: int, *, start: float = 1.5, slope: float = 5e-4,
          sigma: float = 0.3) -> np.ndarray:
    """Slow linear drift plus white noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    return start + slope * t + rng.normal(0.0, sigma, length)


def white_noise(length: int, seed: int, *, sigma: float = 0.5,
                mean: float = 2.0) -> np.ndarray:
    """iid noise around a positive offset; the unforecastable baseline."""
    rng = np.random.default_rng(seed)
    return mean + rng.normal(0.0, sigma, length)


PRESETS = {
    "ar1": ar1,
    "ar2": ar2,
    "seasonal": seasonal,
    "trend": trend,
    "noise": white_noise,
}


def generate(preset: str, length: int, seed: int) -> np.ndarray:
    """Generate a preset series by name."""
    if preset not in PRESETS:
        raise ValidationError(
            f"unknown preset {preset!r}; choose from {sorted(PRESETS)}"
        )
    if length < 1:
        raise ValidationError("length must be >= 1")
    if seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    return PRESETS[preset](length, seed)
