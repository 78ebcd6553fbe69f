"""Damped least-squares (Levenberg-Marquardt) fitting of masked networks.

Each iteration solves the damped normal equations

    (J^T J + lambda I) d = -J^T r

for a step d over the active parameters, accepts the step only if it
lowers the mean squared residual, and rescales lambda: down after an
accepted step, up after a rejection. Large lambda degrades into small
gradient-descent-like steps; lambda -> 0 recovers the Gauss-Newton step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import FactorizationError, NumericError, ValidationError
from .network import MaskedMlp, jacobian, residuals
from .series import LagDataset, _frozen

__all__ = ["LmaConfig", "FitResult", "solve_damped_normal_equations", "loss", "fit"]

# Relative accuracy required of the damped linear solve.
_SOLVE_TOL = 1e-10


@dataclass(frozen=True)
class LmaConfig:
    """Damping schedule and stopping control.

    Defaults follow the classical Marquardt recipe: start gently damped,
    multiply lambda by 10 on rejection, divide by 10 on acceptance.
    """

    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    max_iters: int = 200
    step_tol: float = 1e-8
    loss_tol: float = 1e-12
    lambda_max: float = 1e10

    def __post_init__(self) -> None:
        if self.lambda0 <= 0:
            raise ValidationError("lambda0 must be > 0")
        if self.lambda_up <= 1 or self.lambda_down <= 1:
            raise ValidationError("lambda_up and lambda_down must be > 1")
        if self.max_iters < 0:
            raise ValidationError("max_iters must be >= 0")
        if self.step_tol < 0 or self.loss_tol < 0:
            raise ValidationError("tolerances must be >= 0")
        if self.lambda_max <= self.lambda0:
            raise ValidationError("lambda_max must exceed lambda0")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit.

    `params` is the full packed vector (masked entries still exactly 0),
    `iters` counts accepted steps only, and `loss_trace` records the loss
    after every accepted step, starting with the initial loss.
    """

    params: np.ndarray
    final_loss: float
    iters: int
    converged: bool
    reason: str  # step_small | loss_stall | max_iters | lambda_overflow
    loss_trace: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))


def solve_damped_normal_equations(J: np.ndarray, r: np.ndarray, lam: float) -> np.ndarray:
    """Solve (J^T J + lam I) d = -J^T r by Cholesky factorization.

    lam > 0 makes the system symmetric positive definite. One step of
    iterative refinement is applied if needed; if the relative residual
    of the linear solve still exceeds 1e-10, a FactorizationError tells
    the caller to escalate lam.
    """
    J = np.asarray(J, dtype=float)
    r = np.asarray(r, dtype=float)
    if J.ndim != 2 or r.ndim != 1 or J.shape[0] != r.size:
        raise ValidationError(f"shape mismatch: J {J.shape} vs r {r.shape}")
    if lam <= 0:
        raise ValidationError("lambda must be > 0")
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(r))):
        raise NumericError("non-finite entries in J or r")

    g = J.T @ r
    k = J.shape[1]
    if not np.any(g):
        return np.zeros(k)

    system = J.T @ J
    system[np.diag_indices(k)] += lam
    try:
        factor = scipy.linalg.cho_factor(system, lower=True)
        d = scipy.linalg.cho_solve(factor, -g)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationError(f"Cholesky factorization failed: {exc}") from exc

    g_norm = np.linalg.norm(g)
    defect = system @ d + g
    if np.linalg.norm(defect) > _SOLVE_TOL * g_norm:
        d = d - scipy.linalg.cho_solve(factor, defect)
        defect = system @ d + g
        if np.linalg.norm(defect) > _SOLVE_TOL * g_norm:
            raise FactorizationError(
                "damped system too ill-conditioned for the requested accuracy"
            )
    return d


def loss(net: MaskedMlp, ds: LagDataset) -> float:
    """Mean squared residual (1/n) sum r_i^2."""
    r = residuals(net, ds)
    return float(np.mean(r * r))


def fit(net: MaskedMlp, ds: LagDataset, cfg: LmaConfig) -> FitResult:
    """Minimize the mean squared residual over the active parameters.

    The damping loop: propose a step at the current lambda; accept it iff
    the loss strictly decreases (lambda /= lambda_down), otherwise retry
    with lambda *= lambda_up until lambda_max overflows. Rejected
    proposals do not count against max_iters. Stopping reasons:

    - step_small: the proposed (or accepted) step has max-norm < step_tol
    - loss_stall: an accepted step improved the loss by < loss_tol
    - max_iters: accepted-step budget exhausted
    - lambda_overflow: no acceptable step below lambda_max

    Masked parameters stay exactly 0 throughout.
    """
    active = net.mask
    if not np.any(active):
        raise ValidationError("cannot fit a network with no active parameters")
    if ds.p != net.topology.n_inputs:
        raise ValidationError(
            f"dataset width {ds.p} does not match network inputs "
            f"{net.topology.n_inputs}"
        )

    params = net.params.copy()
    current = loss(net, ds)
    if not np.isfinite(current):
        raise NumericError("non-finite loss at iteration 0")

    lam = cfg.lambda0
    trace = [current]
    accepted = 0
    converged = False
    reason: str | None = None

    while reason is None and accepted < cfg.max_iters:
        here = net.with_params(params)
        r = residuals(here, ds)
        J = jacobian(here, ds)
        fresh_proposal = True

        while True:
            try:
                d = solve_damped_normal_equations(J, r, lam)
            except FactorizationError:
                lam *= cfg.lambda_up
                if lam > cfg.lambda_max:
                    reason = "lambda_overflow"
                    break
                continue

            if fresh_proposal and np.max(np.abs(d)) < cfg.step_tol:
                reason = "step_small"
                converged = True
                break
            fresh_proposal = False

            trial = params.copy()
            trial[active] += d
            trial_loss = loss(net.with_params(trial), ds)
            if trial_loss < current:
                params = trial
                accepted += 1
                improvement = current - trial_loss
                current = trial_loss
                trace.append(current)
                lam = lam / cfg.lambda_down
                if np.max(np.abs(d)) < cfg.step_tol:
                    reason = "step_small"
                    converged = True
                elif improvement < cfg.loss_tol:
                    reason = "loss_stall"
                    converged = True
                break
            # Rejected (covers non-finite trial losses too: NaN/inf < x is false).
            lam *= cfg.lambda_up
            if lam > cfg.lambda_max:
                reason = "lambda_overflow"
                break

    if reason is None:
        reason = "max_iters"

    final = loss(net.with_params(params), ds)
    return FitResult(
        params=_frozen(params),
        final_loss=final,
        iters=accepted,
        converged=converged,
        reason=reason,
        loss_trace=_frozen(np.array(trace)),
    )
