import numpy as np
import pytest

from dremkit.estimators import GradientConfig, closed_form_error_ct, drem_ct
from dremkit.ftc import (
    ClipContractError,
    FtcConfig,
    clip_w,
    ftc_alert_estimate,
    ftc_estimate,
    interval_excitation_time,
    interval_excitation_time_delayed,
    run_ftc,
    run_ftc_alert,
    update_w,
    update_w_delayed,
)
from dremkit.mixing import MixedRegression
from dremkit.signals import TimeGrid, Trajectory


def ct_scalar(values, step=1e-3):
    values = np.asarray(values, float)
    return Trajectory(TimeGrid(0.0, step, len(values)), values, "ct")


def sine_delta(horizon=3.0, step=1e-3):
    grid = TimeGrid.from_horizon(horizon, step)
    return Trajectory(grid, np.sin(2 * np.pi * grid.times()), "ct")


def envelope_estimate(delta, gamma, theta, theta_hat0):
    """Estimate following its exact error envelope (shared quadrature)."""
    env = closed_form_error_ct(delta, gamma, theta_hat0 - theta)
    return ct_scalar(theta + env.values, step=delta.grid.step)


class TestUpdateW:
    def test_zero_delta(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        w = update_w(Trajectory(grid, np.zeros(grid.count), "ct"), 1.0)
        np.testing.assert_array_equal(w.values, np.ones(grid.count))

    def test_unit_delta(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        w = update_w(Trajectory(grid, np.ones(grid.count), "ct"), 1.0)
        np.testing.assert_allclose(w.values, np.exp(-grid.times()), rtol=1e-10)

    def test_sine_delta_value_at_one(self):
        delta = sine_delta(1.0)
        w = update_w(delta, 2.0)
        assert abs(w.values[-1] - np.exp(-1.0)) <= 1e-8

    def test_monotone_and_in_unit_interval(self):
        delta = sine_delta(2.0)
        w = update_w(delta, 2.0)
        assert np.all(np.diff(w.values) <= 0)
        assert np.all((w.values > 0) & (w.values <= 1.0))


class TestClipW:
    def test_clips_above_threshold(self):
        grid = TimeGrid.from_horizon(0.1, 1e-3)
        w = Trajectory(grid, np.ones(grid.count), "ct")
        np.testing.assert_array_equal(clip_w(w, 0.98).values, np.full(grid.count, 0.98))

    def test_crossing_time(self):
        grid = TimeGrid.from_horizon(0.1, 1e-3)
        t = grid.times()
        w = Trajectory(grid, np.exp(-t), "ct")
        wc = clip_w(w, 0.98)
        crossing = -np.log(0.98)  # about 0.020203
        np.testing.assert_array_equal(wc.values[t < crossing], 0.98)
        below = t >= crossing
        np.testing.assert_array_equal(wc.values[below], w.values[below])

    def test_untouched_below_threshold(self):
        grid = TimeGrid.from_horizon(0.01, 1e-3)
        w = Trajectory(grid, np.full(grid.count, 0.5), "ct")
        np.testing.assert_array_equal(clip_w(w, 0.98).values, w.values)

    def test_mu_validation(self):
        grid = TimeGrid.from_horizon(0.01, 1e-3)
        w = Trajectory(grid, np.ones(grid.count), "ct")
        with pytest.raises(ValueError):
            clip_w(w, 1.0)


class TestFtcEstimate:
    def test_zero_weight_returns_estimate(self, rng):
        grid = TimeGrid.from_horizon(0.01, 1e-3)
        hat = Trajectory(grid, rng.normal(size=grid.count), "ct")
        w = Trajectory(grid, np.zeros(grid.count), "ct")
        out = ftc_estimate(hat, w, np.array([hat.values[0]]))
        np.testing.assert_array_equal(out.values, hat.values)

    def test_frozen_estimate_is_fixed_point(self):
        grid = TimeGrid.from_horizon(0.01, 1e-3)
        hat = Trajectory(grid, np.full(grid.count, 2.5), "ct")
        w = Trajectory(grid, np.full(grid.count, 0.5), "ct")
        out = ftc_estimate(hat, w, np.array([2.5]))
        np.testing.assert_allclose(out.values, np.full(grid.count, 2.5), rtol=1e-15)

    def test_algebraic_exactness_on_envelope(self):
        # theta = 10, start at 0, Delta = 1, gamma = 2: the identity cancels
        # the transient exactly once w dips under the threshold
        grid = TimeGrid.from_horizon(2.0, 1e-3)
        t = grid.times()
        delta = Trajectory(grid, np.ones(grid.count), "ct")
        hat = envelope_estimate(delta, 2.0, theta=10.0, theta_hat0=0.0)
        w = update_w(delta, 2.0)
        wc = clip_w(w, 0.98)
        out = ftc_estimate(hat, wc, np.array([0.0]))
        active = w.values < 0.98
        assert np.abs(out.values[active] - 10.0).max() <= 1e-9 * 10.0

    def test_weight_at_one_rejected(self):
        grid = TimeGrid.from_horizon(0.01, 1e-3)
        hat = Trajectory(grid, np.zeros(grid.count), "ct")
        w = Trajectory(grid, np.ones(grid.count), "ct")
        with pytest.raises(ClipContractError):
            ftc_estimate(hat, w, np.array([0.0]))


class TestUpdateWDelayed:
    def test_zero_delta(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        wd = update_w_delayed(Trajectory(grid, np.zeros(grid.count), "ct"), 1.0, 0.2)
        np.testing.assert_array_equal(wd.values, np.ones(grid.count))

    def test_constant_delta_saturates(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        t = grid.times()
        c, gamma, TD = 1.5, 0.8, 0.2
        wd = update_w_delayed(Trajectory(grid, np.full(grid.count, c), "ct"), gamma, TD)
        early = t <= TD + 1e-12
        np.testing.assert_allclose(wd.values[early], np.exp(-gamma * c * c * t[early]), rtol=1e-9)
        late = t >= TD
        np.testing.assert_allclose(
            wd.values[late], np.full(late.sum(), np.exp(-gamma * c * c * TD)), rtol=1e-9
        )

    def test_periodic_for_periodic_delta(self):
        delta = sine_delta(3.0)
        wd = update_w_delayed(delta, 2.0, 0.2)
        t = delta.times()
        k_period = 500  # sin(2 pi t)^2 has period 1/2
        sel = t >= 0.2
        a = wd.values[sel][:-k_period]
        b = wd.values[sel][k_period:]
        assert np.abs(a - b).max() <= 1e-8

    def test_moving_window_quadrature_oracle(self):
        # independent oracle: windowed Simpson integral per sample
        from dremkit.quadrature import cumulative_simpson

        delta = sine_delta(1.0)
        gamma, TD = 2.0, 0.2
        wd = update_w_delayed(delta, gamma, TD)
        energy = cumulative_simpson(delta.values**2, delta.grid.step)
        lag = 200
        expected = np.exp(-gamma * (energy - np.concatenate([np.zeros(lag), energy[:-lag]])))
        np.testing.assert_allclose(wd.values, np.minimum(expected, 1.0), rtol=1e-12)

    def test_quotient_identity(self):
        delta = sine_delta(2.0)
        gamma, TD = 2.0, 0.2
        w = update_w(delta, gamma)
        wd = update_w_delayed(delta, gamma, TD)
        lag = 200
        quotient = w.values[lag:] / w.values[:-lag]
        assert np.abs(wd.values[lag:] - quotient).max() <= 1e-9

    def test_off_grid_window_rejected(self):
        delta = sine_delta(1.0)
        with pytest.raises(ValueError):
            update_w_delayed(delta, 1.0, 0.00015)


class TestAlertEstimate:
    def test_zero_weight_returns_estimate(self, rng):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        hat = Trajectory(grid, rng.normal(size=grid.count), "ct")
        wd = Trajectory(grid, np.zeros(grid.count), "ct")
        out = ftc_alert_estimate(hat, wd, 0.2)
        np.testing.assert_array_equal(out.values, hat.values)

    def test_exact_recovery_constant_theta(self):
        grid = TimeGrid.from_horizon(2.0, 1e-3)
        delta = Trajectory(grid, np.ones(grid.count), "ct")
        gamma, TD, theta = 2.0, 0.2, 7.0
        hat = envelope_estimate(delta, gamma, theta=theta, theta_hat0=0.0)
        wd = update_w_delayed(delta, gamma, TD)
        out = ftc_alert_estimate(hat, wd, TD)
        t = grid.times()
        usable = t >= TD
        assert np.abs(out.values[usable] - theta).max() <= 1e-9 * theta

    def test_snapshot_flag_switches_reference(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        delta = Trajectory(grid, np.ones(grid.count), "ct")
        hat = envelope_estimate(delta, 2.0, theta=7.0, theta_hat0=0.0)
        wd = update_w_delayed(delta, 2.0, 0.2)
        snap0 = ftc_alert_estimate(hat, wd, 0.2, use_delayed_snapshot=False)
        # referencing theta_hat(0) = 0 turns the identity into hat / (1 - wd)
        # wherever the window carries excitation
        usable = 1.0 - wd.values > 1e-9
        expected = hat.values.copy()
        expected[usable] = hat.values[usable] / (1.0 - wd.values[usable])
        np.testing.assert_allclose(snap0.values, expected, rtol=1e-12)


class TestIntervalExcitation:
    def test_zero_delta_never(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        assert interval_excitation_time(Trajectory(grid, np.zeros(grid.count), "ct"), 1.0, 0.5) is None

    def test_unit_delta_log_threshold(self):
        grid = TimeGrid.from_horizon(2.0, 1e-3)
        delta = Trajectory(grid, np.ones(grid.count), "ct")
        tc = interval_excitation_time(delta, 1.0, float(np.exp(-1.0)))
        assert tc == pytest.approx(1.0, abs=1.1e-3)

    def test_sine_against_root_oracle(self):
        # bisect t/2 - sin(4 pi t)/(8 pi) = -ln(mu)/gamma on the analytic
        # antiderivative and compare with the grid detection
        gamma, mu = 2.0, 0.98
        target = -np.log(mu) / gamma

        def F(t):
            return t / 2.0 - np.sin(4 * np.pi * t) / (8 * np.pi) - target

        lo, hi = 0.0, 0.5
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if F(mid) >= 0:
                hi = mid
            else:
                lo = mid
        root = 0.5 * (lo + hi)
        delta = sine_delta(1.0)
        tc = interval_excitation_time(delta, gamma, mu)
        assert tc is not None and abs(tc - root) <= 1e-3 + 1e-9
        assert tc <= 0.1  # small activation time for this excitation

    def test_delayed_zero_never(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        assert (
            interval_excitation_time_delayed(
                Trajectory(grid, np.zeros(grid.count), "ct"), 1.0, 0.5, 0.2
            )
            is None
        )

    def test_delayed_constant_saturates_at_window(self):
        grid = TimeGrid.from_horizon(1.0, 1e-3)
        delta = Trajectory(grid, np.full(grid.count, 2.0), "ct")
        # gamma c^2 TD = 0.8 * 4 * 0.2 > -ln(0.98): triggers right at the window
        tc = interval_excitation_time_delayed(delta, 0.8, 0.98, 0.2)
        assert tc == pytest.approx(0.2, abs=1e-12)

    def test_delayed_sine_finite(self):
        delta = sine_delta(1.0)
        tc = interval_excitation_time_delayed(delta, 2.0, 0.98, 0.2)
        assert tc is not None and tc <= 0.5


class TestPipelines:
    def test_plain_pipeline_exact_after_activation(self):
        delta = sine_delta(3.0)
        theta = 10.0
        hat = envelope_estimate(delta, 2.0, theta=theta, theta_hat0=0.0)
        run = run_ftc(hat, delta, FtcConfig(gamma=2.0, clip_threshold=0.98))
        assert run.t_c is not None and run.t_c <= 0.1
        t = delta.times()
        after = t >= run.t_c
        assert np.abs(run.theta_ftc.values[after] - theta).max() <= 1e-9 * theta
        # inactive samples pass the raw estimate through
        before = ~run.active
        np.testing.assert_array_equal(run.theta_ftc.values[before], hat.values[before])

    def test_alert_pipeline_exact_after_activation(self):
        delta = sine_delta(3.0)
        theta = 10.0
        hat = envelope_estimate(delta, 2.0, theta=theta, theta_hat0=0.0)
        run = run_ftc_alert(hat, delta, FtcConfig(gamma=2.0, clip_threshold=0.98, delay_window=0.2))
        assert run.t_c == pytest.approx(0.2, abs=1e-12)
        t = delta.times()
        after = t >= run.t_c
        assert np.abs(run.theta_ftc.values[after] - theta).max() <= 1e-8 * theta

    def test_alertness_contrast(self):
        # with persistent excitation the full-history weight dies out and the
        # plain recovery collapses onto the raw estimate, while the windowed
        # weight keeps oscillating strictly inside (0, 1)
        grid = TimeGrid.from_horizon(25.0, 1e-3)
        t = grid.times()
        delta = Trajectory(grid, np.sin(2 * np.pi * t), "ct")
        theta = 10.0
        hat = envelope_estimate(delta, 2.0, theta=theta, theta_hat0=0.0)
        cfg = FtcConfig(gamma=2.0, clip_threshold=0.98, delay_window=0.2)
        plain = run_ftc(hat, delta, cfg)
        alert = run_ftc_alert(hat, delta, cfg)
        late = t >= 20.0
        gap = np.abs(plain.theta_ftc.values[late] - hat.values[late])
        assert gap.max() <= 1e-6 * (1.0 + theta)
        wd_late = alert.w_delayed.values[late]
        assert wd_late.min() >= 0.5
        assert wd_late.max() <= 0.97

    def test_alert_reacquires_after_jump(self):
        # parameter jumps mid-run: the plain recovery stays glued to the raw
        # estimate, the windowed one recovers the new value
        grid = TimeGrid.from_horizon(20.0, 1e-3)
        t = grid.times()
        delta_vals = np.sin(2 * np.pi * t)
        delta = Trajectory(grid, delta_vals, "ct")
        theta = np.where(t < 10.0, 10.0, 15.0)
        y = delta_vals * theta
        mixed = MixedRegression(
            calY=Trajectory(grid, y[:, None], "ct"), Delta=delta
        )
        est = drem_ct(mixed, GradientConfig(2.0, np.array([0.0])))
        hat = Trajectory(grid, est.theta_hat.values[:, 0], "ct")
        cfg = FtcConfig(gamma=2.0, clip_threshold=0.98, delay_window=0.2)
        plain = run_ftc(hat, delta, cfg)
        alert = run_ftc_alert(hat, delta, cfg)
        settle = (t >= 11.0) & (t <= 19.0)
        assert np.abs(alert.theta_ftc.values[settle] - 15.0).max() <= 1e-3
        tail = t >= 12.0
        assert np.abs(plain.theta_ftc.values[tail] - hat.values[tail]).max() <= 1e-3
