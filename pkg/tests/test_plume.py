"""Tests for filament transport and the wind-history source estimate."""

from __future__ import annotations

import math

import numpy as np
import pytest

from oslsim.plume import (
    Filament,
    PlumeState,
    WindField,
    concentration_at,
    concentration_contributions,
    release_filament,
    step_filaments,
    wind_source_estimate,
)


def make_plume(source=(0.0,), **kwargs) -> PlumeState:
    return PlumeState(source_position=np.array(source, dtype=float), **kwargs)


class TestRelease:
    def test_two_releases_record_release_times(self):
        p = make_plume()
        p = release_filament(p, 0.0)
        p = release_filament(p, 0.1)
        assert p.n_filaments == 2
        assert np.array_equal(p.release_times, [0.0, 0.1])
        assert np.array_equal(p.positions, [[0.0], [0.0]])
        assert np.array_equal(p.drifts, [[0.0], [0.0]])

    def test_ten_hz_release_over_one_second_gives_ten_filaments(self):
        p = make_plume(release_period=0.1)
        t, next_release = 0.0, 0.0
        while t < 1.0 - 1e-12:
            while next_release <= t + 1e-12:
                p = release_filament(p, next_release)
                next_release += p.release_period
            t += 0.1
        assert p.n_filaments == 10

    def test_defaults(self):
        p = make_plume()
        assert p.kernel_width == 0.5
        assert p.kernel_amplitude == 1.0
        assert p.release_period == 0.1


class TestConcentration:
    def test_empty_plume_reads_zero(self):
        assert concentration_at(make_plume(), np.array([1.0])) == 0.0

    def test_single_filament_kernel_value(self):
        p = release_filament(make_plume(), 0.0)
        # Frozen: amp * exp(-r^2 / (2 sigma^2)) at r = 1.5 = 3 sigma, sigma = 0.5.
        expected = math.exp(-(1.5**2) / (2 * 0.25))
        assert concentration_at(p, np.array([1.5])) == pytest.approx(expected, rel=1e-12)
        assert concentration_at(p, np.array([0.0])) == pytest.approx(1.0, rel=1e-12)

    def test_two_cocircular_filaments_add_exactly(self):
        p = release_filament(release_filament(make_plume(), 0.0), 0.1)
        x = np.array([0.7])
        single = PlumeState(
            source_position=np.zeros(1),
            positions=p.positions[:1],
            release_times=p.release_times[:1],
            drifts=p.drifts[:1],
        )
        assert concentration_at(p, x) == pytest.approx(2.0 * concentration_at(single, x), rel=1e-12)

    def test_concentration_nonnegative_and_bounded_by_population(self):
        rng = np.random.default_rng(3)
        p = make_plume(source=(0.0, 0.0))
        for k in range(20):
            p = release_filament(p, 0.1 * k)
        p = step_filaments(p, WindField(mean=np.array([0.3, 0.1]), noise_sigma=0.4), 0.0, 1.0, rng)
        for x in rng.uniform(-3, 3, size=(50, 2)):
            c = concentration_at(p, x)
            assert 0.0 <= c <= p.kernel_amplitude * p.n_filaments


class TestAdvection:
    def test_noiseless_recovery_exact_under_time_varying_wind(self):
        # Gusty, capped, modulated wind: bookkeeping must still recover the
        # source exactly for every filament at every step.
        w = WindField(
            mean=np.array([0.5, -0.2]),
            v_max=1.0,
            noise_sigma=0.0,
            additive_scale=0.2,
            additive_freq_hz=0.4,
            multiplicative_scale=0.3,
            multiplicative_freq_hz=0.23,
        )
        rng = np.random.default_rng(0)
        p = make_plume(source=(2.5, -1.0))
        t = 0.0
        for k in range(100):
            if k % 2 == 0:
                p = release_filament(p, t)
            p = step_filaments(p, w, t, 0.05, rng)
            t += 0.05
            for f in p.filaments:
                assert np.all(np.abs(wind_source_estimate(f) - p.source_position) <= 1e-12)

    def test_drift_identity_randomized(self):
        # position - drift + drift - position == 0 to floating rounding.
        rng = np.random.default_rng(11)
        pos = rng.uniform(-50, 50, size=(1000, 3))
        dr = rng.uniform(-20, 20, size=(1000, 3))
        for k in range(0, 1000, 97):
            f = Filament(pos[k], 0.0, dr[k])
            q = wind_source_estimate(f)
            assert np.all(np.abs(q + f.accumulated_mean_drift - f.position) <= 1e-12)

    def test_monte_carlo_variance_matches_noise_budget(self):
        # 1e4 filaments advected for 1 s at noise_sigma = 0.2 accumulate
        # positional variance dt * n_steps * sigma^2 = 0.04 per axis.
        n, sigma, dt, steps = 10_000, 0.2, 0.01, 100
        p = PlumeState(
            source_position=np.zeros(2),
            positions=np.zeros((n, 2)),
            release_times=np.zeros(n),
            drifts=np.zeros((n, 2)),
        )
        w = WindField(mean=np.array([0.5, 0.0]), noise_sigma=sigma)
        rng = np.random.default_rng(7)
        t = 0.0
        for _ in range(steps):
            p = step_filaments(p, w, t, dt, rng)
            t += dt
        spread = p.positions - p.drifts  # noise-only displacement
        var = spread.var(axis=0)
        assert np.all(np.abs(var - 0.04) < 0.004)

    def test_same_seed_reproduces_trajectories(self):
        def run():
            rng = np.random.default_rng(42)
            p = release_filament(make_plume(), 0.0)
            w = WindField(mean=np.array([0.3]), noise_sigma=0.5)
            t = 0.0
            for _ in range(50):
                p = step_filaments(p, w, t, 0.02, rng)
                t += 0.02
            return p.positions.copy()

        assert np.array_equal(run(), run())

    def test_filament_ages_respected(self):
        # A filament released later accumulates strictly less drift.
        w = WindField(mean=np.array([0.4]))
        rng = np.random.default_rng(0)
        p = release_filament(make_plume(), 0.0)
        p = step_filaments(p, w, 0.0, 0.1, rng)
        p = release_filament(p, 0.1)
        p = step_filaments(p, w, 0.1, 0.1, rng)
        drifts = p.drifts[:, 0]
        assert drifts[0] == pytest.approx(0.08, abs=1e-15)
        assert drifts[1] == pytest.approx(0.04, abs=1e-15)


class TestWindField:
    def test_magnitude_cap_holds_under_modulation(self):
        w = WindField(
            mean=np.array([0.9, 0.9]),
            v_max=1.0,
            additive_scale=0.8,
            multiplicative_scale=0.9,
        )
        for t in np.linspace(0.0, 30.0, 400):
            assert np.linalg.norm(w.mean_at(t)) <= 1.0 + 1e-12

    def test_callable_mean(self):
        w = WindField(mean=lambda t: np.array([math.sin(t), 0.2]), v_max=2.0)
        assert np.allclose(w.mean_at(0.0), [0.0, 0.2])

    def test_constant_mean_below_cap_passes_through(self):
        w = WindField(mean=np.array([0.5]), v_max=1.0)
        assert np.array_equal(w.mean_at(3.7), [0.5])

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError, match="v_max"):
            WindField(mean=np.array([0.1]), v_max=0.0)
        with pytest.raises(ValueError, match="noise_sigma"):
            WindField(mean=np.array([0.1]), noise_sigma=-0.1)
        with pytest.raises(ValueError, match="release_period"):
            PlumeState(source_position=np.zeros(1), release_period=0.0)
        with pytest.raises(ValueError, match="kernel_width"):
            PlumeState(source_position=np.zeros(1), kernel_width=-1.0)

    def test_step_rejects_nonpositive_dt(self):
        p = release_filament(make_plume(), 0.0)
        with pytest.raises(ValueError, match="dt"):
            step_filaments(p, WindField(mean=np.array([0.1])), 0.0, 0.0, np.random.default_rng(0))


def test_contributions_align_with_total():
    p = make_plume()
    for k in range(5):
        p = release_filament(p, 0.1 * k)
    rng = np.random.default_rng(1)
    p = step_filaments(p, WindField(mean=np.array([0.5]), noise_sigma=0.3), 0.0, 0.5, rng)
    x = np.array([0.3])
    contribs = concentration_contributions(p, x)
    assert contribs.shape == (5,)
    assert concentration_at(p, x) == pytest.approx(float(contribs.sum()), rel=1e-15)
