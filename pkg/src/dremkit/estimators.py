"""Gradient-descent estimators for vector and mixed scalar regressions.

Continuous-time estimators integrate with fixed-step RK4, reading the data
signals at half steps by linear interpolation between grid samples (the data
only exists on the grid). Discrete-time estimators are exact recursions. The
closed-form error envelopes

    CT:  err(t) = exp(-gamma * int_0^t Delta^2) * err(0)
    DT:  err(k) = prod_{j=1..k} [1 / (1 + Delta(j)^2 / gamma)] * err(0)

serve as independent oracles for the mixed estimators; the DT product starts
at j = 1 because the sample at index 0 is the initial condition and triggers
no update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixing import MixedRegression
from .quadrature import cumulative_simpson
from .signals import Trajectory


@dataclass(frozen=True, eq=False)
class GradientConfig:
    """Adaptation gain(s) and initial estimate.

    ``gamma`` is a single positive gain for the vector estimators, or one
    positive gain per component for the mixed scalar estimators.
    """

    gamma: float | np.ndarray
    theta_hat0: np.ndarray

    def __post_init__(self) -> None:
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if np.any(gamma <= 0):
            raise ValueError("all gains must be positive")
        theta0 = np.atleast_1d(np.asarray(self.theta_hat0, dtype=float))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "theta_hat0", theta0)

    def gains(self, m: int) -> np.ndarray:
        g = self.gamma
        if g.shape == (1,):
            return np.full(m, g[0])
        if g.shape != (m,):
            raise ValueError(f"expected {m} gains, got shape {g.shape}")
        return g

    def initial(self, m: int) -> np.ndarray:
        th0 = self.theta_hat0
        if th0.shape != (m,):
            raise ValueError(f"theta_hat0 must have shape ({m},)")
        return th0.copy()


@dataclass(frozen=True, eq=False)
class EstimatorRun:
    """Estimate trajectory with optional error trajectory and the per-sample
    excitation signal (Delta for mixed runs, |phi|^2 for vector runs)."""

    theta_hat: Trajectory
    theta_tilde: Trajectory | None
    diagnostics: Trajectory


def _error_trajectory(theta_hat: Trajectory, theta_true) -> Trajectory | None:
    if theta_true is None:
        return None
    if isinstance(theta_true, Trajectory):
        if theta_true.grid != theta_hat.grid:
            raise ValueError("theta_true trajectory lives on a different grid")
        truth = theta_true.values
    else:
        truth = np.atleast_1d(np.asarray(theta_true, dtype=float))
    return theta_hat.with_values(theta_hat.values - truth)


def _midpoints(values: np.ndarray) -> np.ndarray:
    return 0.5 * (values[:-1] + values[1:])


def ct_gradient(
    y: Trajectory, phi: Trajectory, cfg: GradientConfig, theta_true=None
) -> EstimatorRun:
    """Vector gradient estimator theta_hat' = gamma * phi * (y - phi.theta_hat)."""
    if not y.is_scalar or not phi.is_vector:
        raise ValueError("ct_gradient expects scalar y and vector phi")
    if y.grid != phi.grid or y.kind != "ct" or phi.kind != "ct":
        raise ValueError("signals must be CT on one grid")
    m = phi.dim
    gamma = cfg.gains(m)
    if not np.all(gamma == gamma[0]):
        raise ValueError("the vector estimator uses a single gain")
    g = gamma[0]
    h = y.grid.step
    pv, yv = phi.values, y.values
    pm, ym = _midpoints(pv), _midpoints(yv)

    th = np.empty((y.grid.count, m))
    x = cfg.initial(m)
    th[0] = x
    for k in range(y.grid.count - 1):
        k1 = g * pv[k] * (yv[k] - pv[k] @ x)
        x1 = x + 0.5 * h * k1
        k2 = g * pm[k] * (ym[k] - pm[k] @ x1)
        x2 = x + 0.5 * h * k2
        k3 = g * pm[k] * (ym[k] - pm[k] @ x2)
        x3 = x + h * k3
        k4 = g * pv[k + 1] * (yv[k + 1] - pv[k + 1] @ x3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        th[k + 1] = x
    hat = Trajectory(y.grid, th, "ct")
    diag = Trajectory(y.grid, np.einsum("ki,ki->k", pv, pv), "ct")
    return EstimatorRun(hat, _error_trajectory(hat, theta_true), diag)


def dt_gradient(
    y: Trajectory, phi: Trajectory, cfg: GradientConfig, theta_true=None
) -> EstimatorRun:
    """Normalized DT gradient estimator

        theta_hat(k) = theta_hat(k-1)
                       + phi(k) / (gamma + |phi(k)|^2) * [y(k) - phi(k).theta_hat(k-1)]

    run exactly for k >= 1; index 0 carries the initial estimate.
    """
    if not y.is_scalar or not phi.is_vector:
        raise ValueError("dt_gradient expects scalar y and vector phi")
    if y.grid != phi.grid or y.kind != "dt" or phi.kind != "dt":
        raise ValueError("signals must be DT on one grid")
    m = phi.dim
    gamma = cfg.gains(m)
    if not np.all(gamma == gamma[0]):
        raise ValueError("the vector estimator uses a single gain")
    g = gamma[0]
    pv, yv = phi.values, y.values

    th = np.empty((y.grid.count, m))
    x = cfg.initial(m)
    th[0] = x
    for k in range(1, y.grid.count):
        p = pv[k]
        x = x + p / (g + p @ p) * (yv[k] - p @ x)
        th[k] = x
    hat = Trajectory(y.grid, th, "dt")
    diag = Trajectory(y.grid, np.einsum("ki,ki->k", pv, pv), "dt")
    return EstimatorRun(hat, _error_trajectory(hat, theta_true), diag)


def drem_ct(mixed: MixedRegression, cfg: GradientConfig, theta_true=None) -> EstimatorRun:
    """Decoupled scalar estimators

        theta_hat_i' = gamma_i * Delta * (calY_i - Delta * theta_hat_i),

    one independent RK4 integration per component.
    """
    if mixed.calY.kind != "ct":
        raise ValueError("drem_ct expects CT mixed data")
    m = mixed.dim
    gamma = cfg.gains(m)
    grid = mixed.calY.grid
    h = grid.step
    D, Yc = mixed.Delta.values, mixed.calY.values
    Dm, Ym = _midpoints(D), _midpoints(Yc)

    th = np.empty((grid.count, m))
    x = cfg.initial(m)
    th[0] = x
    for k in range(grid.count - 1):
        k1 = gamma * D[k] * (Yc[k] - D[k] * x)
        k2 = gamma * Dm[k] * (Ym[k] - Dm[k] * (x + 0.5 * h * k1))
        k3 = gamma * Dm[k] * (Ym[k] - Dm[k] * (x + 0.5 * h * k2))
        k4 = gamma * D[k + 1] * (Yc[k + 1] - D[k + 1] * (x + h * k3))
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        th[k + 1] = x
    hat = Trajectory(grid, th, "ct")
    return EstimatorRun(hat, _error_trajectory(hat, theta_true), mixed.Delta)


def drem_dt(mixed: MixedRegression, cfg: GradientConfig, theta_true=None) -> EstimatorRun:
    """Decoupled scalar DT estimators

        theta_hat_i(k) = theta_hat_i(k-1)
                         + Delta(k) / (gamma_i + Delta(k)^2)
                           * [calY_i(k) - Delta(k) * theta_hat_i(k-1)]

    run exactly for k >= 1.
    """
    if mixed.calY.kind != "dt":
        raise ValueError("drem_dt expects DT mixed data")
    m = mixed.dim
    gamma = cfg.gains(m)
    grid = mixed.calY.grid
    D, Yc = mixed.Delta.values, mixed.calY.values

    th = np.empty((grid.count, m))
    x = cfg.initial(m)
    th[0] = x
    for k in range(1, grid.count):
        d = D[k]
        x = x + d / (gamma + d * d) * (Yc[k] - d * x)
        th[k] = x
    hat = Trajectory(grid, th, "dt")
    return EstimatorRun(hat, _error_trajectory(hat, theta_true), mixed.Delta)


def closed_form_error_ct(
    delta: Trajectory, gamma: float, theta_tilde0: float
) -> Trajectory:
    """Error envelope exp(-gamma * int_0^t Delta^2) * err0 on the grid, with
    the integral from cumulative Simpson quadrature."""
    if not delta.is_scalar or delta.kind != "ct":
        raise ValueError("closed_form_error_ct expects a scalar CT Delta")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    energy = cumulative_simpson(delta.values * delta.values, delta.grid.step)
    return Trajectory(delta.grid, np.exp(-gamma * energy) * theta_tilde0, "ct")


def closed_form_error_dt(
    delta: Trajectory, gamma: float, theta_tilde0: float
) -> Trajectory:
    """Running-product error envelope matching the DT recursion exactly."""
    if not delta.is_scalar or delta.kind != "dt":
        raise ValueError("closed_form_error_dt expects a scalar DT Delta")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d2 = delta.values * delta.values
    factors = 1.0 / (1.0 + d2 / gamma)
    factors = factors.copy()
    factors[0] = 1.0  # index 0 is the initial condition, no update
    return Trajectory(delta.grid, np.cumprod(factors) * theta_tilde0, "dt")
