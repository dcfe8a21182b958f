"""Numerical excitation analysis.

Persistency of excitation is an asymptotic property and cannot be decided
from a finite record, so these checks report finite-horizon certificates:
``alpha_hat`` is the infimum, over every window start inside the record, of
the smallest eigenvalue of the windowed Gramian

    CT: int_t^{t+T} phi phi^T ds        DT: sum_{j=k+1}^{k+K} phi(j) phi(j)^T

and ``is_pe`` just compares it against the caller's threshold. Divergence of
the excitation energy is likewise certified only against a caller-supplied
growth envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import cumulative_simpson
from .signals import Trajectory

DEFAULT_THRESHOLD = 1e-3
DEFAULT_DT_HORIZON = 100_000
DEFAULT_CT_HORIZON = 100.0


@dataclass(frozen=True, eq=False)
class PeReport:
    """Finite-horizon excitation certificate for one window size."""

    window: float | int
    threshold: float
    alpha_hat: float
    is_pe: bool
    min_eigenvalues: np.ndarray
    start_times: np.ndarray


def _as_vector_values(phi: Trajectory) -> np.ndarray:
    if phi.is_scalar:
        return phi.values[:, None]
    if phi.is_vector:
        return phi.values
    raise ValueError("phi must be a scalar or vector trajectory")


def _window_min_eigs(grams: np.ndarray) -> np.ndarray:
    if grams.shape[1] == 1:
        return grams[:, 0, 0].copy()
    return np.linalg.eigvalsh(grams)[:, 0]


def pe_check_ct(
    phi: Trajectory, window: float, threshold: float = DEFAULT_THRESHOLD
) -> PeReport:
    """Scan every admissible start of a length-``window`` Gramian (Simpson
    quadrature) and report the worst smallest eigenvalue."""
    if phi.kind != "ct":
        raise ValueError("pe_check_ct expects a CT trajectory")
    vals = _as_vector_values(phi)
    step = phi.grid.step
    lag = int(round(window / step))
    if lag < 1 or abs(window - lag * step) > 1e-9 * max(step, window):
        raise ValueError("window must be a positive grid multiple")
    if phi.grid.horizon < 2 * window:
        raise ValueError("horizon must cover at least two windows")
    outer = np.einsum("ki,kj->kij", vals, vals)
    cum = cumulative_simpson(outer, step)
    grams = cum[lag:] - cum[:-lag]
    eigs = _window_min_eigs(grams)
    alpha = float(eigs.min())
    return PeReport(
        window=window,
        threshold=threshold,
        alpha_hat=alpha,
        is_pe=bool(alpha > threshold),
        min_eigenvalues=eigs,
        start_times=phi.times()[: len(eigs)],
    )


def pe_check_dt(
    phi: Trajectory, window: int, threshold: float = DEFAULT_THRESHOLD
) -> PeReport:
    """Exact windowed sums over every admissible start, windows
    [k+1, k+K] for starts k with the window inside the record."""
    if phi.kind != "dt":
        raise ValueError("pe_check_dt expects a DT trajectory")
    vals = _as_vector_values(phi)
    m = vals.shape[1]
    window = int(window)
    if window < m:
        raise ValueError(f"window {window} must be at least the dimension {m}")
    n = vals.shape[0]
    if n < window + 1:
        raise ValueError("record too short for this window")
    if m == 1:
        sq = vals[:, 0] ** 2
        sums = np.lib.stride_tricks.sliding_window_view(sq[1:], window).sum(axis=-1)
        eigs = sums
    else:
        outer = np.einsum("ki,kj->kij", vals, vals)
        stacked = np.lib.stride_tricks.sliding_window_view(
            outer[1:], window, axis=0
        ).sum(axis=-1)
        eigs = _window_min_eigs(stacked)
    alpha = float(eigs.min())
    return PeReport(
        window=window,
        threshold=threshold,
        alpha_hat=alpha,
        is_pe=bool(alpha > threshold),
        min_eigenvalues=eigs,
        start_times=phi.times()[: len(eigs)],
    )


def cumulative_energy(delta: Trajectory) -> Trajectory:
    """Cumulative squared signal: Simpson integral of Delta^2 for CT data,
    running sum for DT data.

    The DT sum is exactly non-decreasing; the CT integral is non-decreasing
    up to the Simpson rule's local truncation error (order step^3) near
    zeros of the signal.
    """
    if not delta.is_scalar:
        raise ValueError("cumulative_energy expects a scalar trajectory")
    sq = delta.values * delta.values
    if delta.kind == "ct":
        out = cumulative_simpson(sq, delta.grid.step)
    else:
        out = np.cumsum(sq)
    return delta.with_values(out)


def energy_exceeds(energy: Trajectory, envelope, t_min: float | None = None) -> bool:
    """Growth certificate: does the recorded energy dominate ``envelope(t)``
    at every grid time from ``t_min`` on (default: the second half)?"""
    times = energy.times()
    if t_min is None:
        t_min = times[len(times) // 2]
    mask = times >= t_min
    env = np.array([envelope(float(t)) for t in times[mask]])
    return bool(np.all(energy.values[mask] >= env))


@dataclass(frozen=True)
class CounterexampleReport:
    """Windowed-excitation scan and energy growth for the decaying regressor
    phi(k) = (k+1)^(-1/4) with a one-step extension window, plus the forward
    direction (an excited signal produces diverging mixed energy)."""

    horizon: int
    threshold: float
    alpha_by_window: dict[int, float]
    all_below_threshold: bool
    energy_final: float
    energy_bound: float
    energy_diverges: bool
    forward_alpha: float
    forward_energy_final: float
    forward_energy_linear: bool

    @property
    def passes(self) -> bool:
        return self.all_below_threshold and self.energy_diverges and self.forward_energy_linear


def counterexample_suite(
    horizon: int = DEFAULT_DT_HORIZON,
    max_window: int = 100,
    threshold: float = DEFAULT_THRESHOLD,
) -> CounterexampleReport:
    """Build the decaying-regressor construction and measure both directions.

    The regressor phi(k) = (k+1)^(-1/4) tends to zero, so its windowed sums
    decay toward zero while the mixed signal Delta(k) = phi(k-1)^2 has
    energy sum ~ ln(horizon). The forward direction uses alternating basis
    vectors, which are excited at window 2 and give linearly growing energy.
    """
    from .mixing import mix
    from .operators import SlidingWindowSpec, sliding_window_phi
    from .signals import TimeGrid

    grid = TimeGrid(t0=0.0, step=1.0, count=horizon)
    k = np.arange(horizon)
    phi_vals = (k + 1.0) ** -0.25
    phi = Trajectory(grid, phi_vals[:, None], "dt")
    y = Trajectory(grid, np.zeros(horizon), "dt")
    Y, Phi = sliding_window_phi(y, phi, SlidingWindowSpec(window=1))
    mixed = mix(Y, Phi)

    alpha_by_window = {
        K: pe_check_dt(phi, K, threshold).alpha_hat
        for K in range(1, max_window + 1)
    }
    all_below = all(a < threshold for a in alpha_by_window.values())

    energy = cumulative_energy(mixed.Delta)
    energy_final = float(energy.values[-1])
    energy_bound = 0.9 * float(np.log(horizon))
    energy_diverges = energy_final >= energy_bound

    # forward direction: alternating basis vectors, window 2
    fwd_vals = np.zeros((horizon, 2))
    fwd_vals[0::2, 0] = 1.0
    fwd_vals[1::2, 1] = 1.0
    fwd = Trajectory(grid, fwd_vals, "dt")
    fy = Trajectory(grid, np.zeros(horizon), "dt")
    fY, fPhi = sliding_window_phi(fy, fwd, SlidingWindowSpec(window=2))
    fmixed = mix(fY, fPhi)
    fwd_alpha = pe_check_dt(fwd, 2, threshold).alpha_hat
    fwd_energy = cumulative_energy(fmixed.Delta)
    fwd_final = float(fwd_energy.values[-1])
    # Delta = 1 once the window fills, so the sum grows like the horizon
    fwd_linear = fwd_final >= 0.9 * (horizon - 2)

    return CounterexampleReport(
        horizon=horizon,
        threshold=threshold,
        alpha_by_window=alpha_by_window,
        all_below_threshold=all_below,
        energy_final=energy_final,
        energy_bound=energy_bound,
        energy_diverges=energy_diverges,
        forward_alpha=float(fwd_alpha),
        forward_energy_final=fwd_final,
        forward_energy_linear=bool(fwd_linear),
    )
