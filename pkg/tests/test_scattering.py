from __future__ import annotations

import math

import numpy as np
import pytest

from app.domain import scattering as scattering_module
from app.domain.ensembles import sample_goe, sample_gue
from app.domain.models import (
    EnsembleKind,
    EnsembleSpec,
    ObservableCurve,
    ObservableKind,
    ScatteringConfig,
    SMatrixSeries,
)
from app.domain.scattering import (
    V_MAX,
    amplitude_distribution,
    build_coupling,
    calibrate_coupling,
    coupling_from_transmission,
    cross_correlation,
    default_eps_grid,
    detailed_balance_delta,
    fluctuations,
    frequency_grid,
    local_unfolding,
    normalize_correlation,
    rayleigh_distance,
    s_matrix,
    s_matrix_series,
    scattering_with_rp,
    simulate_realization,
    sliding_delta,
    transmission_from_coupling,
    two_point_correlation,
    unfold_hamiltonian,
    window_statistics,
)
from app.infrastructure.exceptions import (
    ConfigurationError,
    InsufficientDataError,
    UndefinedCorrelationError,
    ValidationError,
)


def _system(n: int = 40, channels: int = 4, complex_h: bool = False, seed: int = 0):
    rng = np.random.default_rng(seed)
    h = unfold_hamiltonian(sample_gue(n, rng) if complex_h else sample_goe(n, rng))
    w = build_coupling(n, channels, [0.2, 0.25] + [0.05] * (channels - 2), rng)
    return h, w


def _white_noise(shape: tuple[int, ...], seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


class TestCouplings:
    @pytest.mark.parametrize("t", [0.0, 0.1, 0.5, 0.9, 1.0])
    def test_transmission_inverse(self, t):
        assert transmission_from_coupling(coupling_from_transmission(t)) == pytest.approx(t)

    def test_perfect_coupling(self):
        assert coupling_from_transmission(1.0) == pytest.approx(V_MAX)

    def test_transmission_range(self):
        with pytest.raises(ValidationError):
            coupling_from_transmission(1.5)

    def test_rows_are_orthogonal(self):
        w = build_coupling(50, 3, [0.1, 0.2, 0.3], np.random.default_rng(1))
        expected = 50 * np.diag([0.01, 0.04, 0.09])
        np.testing.assert_allclose(w @ w.T, expected, atol=1e-12)

    def test_too_many_channels(self):
        with pytest.raises(ConfigurationError):
            build_coupling(5, 6, 0.1, np.random.default_rng())

    def test_negative_amplitude(self):
        with pytest.raises(ValidationError):
            build_coupling(10, 2, [-0.1, 0.1], np.random.default_rng())


class TestHamiltonian:
    def test_unfolded_to_unit_spacing(self):
        h = unfold_hamiltonian(sample_goe(200, np.random.default_rng(2)))
        centre, spacing = local_unfolding(h)
        assert centre == pytest.approx(0.0, abs=1e-9)
        assert spacing == pytest.approx(1.0)

    def test_frequency_grid(self):
        grid = frequency_grid(400, 11, 20.0)
        assert grid[0] == -10.0 and grid[-1] == 10.0

    def test_frequency_grid_bounds(self):
        with pytest.raises(ValidationError):
            frequency_grid(400, 1, 20.0)


class TestSMatrix:
    def test_closed_system_is_identity(self):
        h, _ = _system()
        sample = s_matrix(h, np.zeros((3, 40)), 0.3)
        np.testing.assert_array_equal(sample.entries, np.eye(3))

    def test_unitary(self):
        h, w = _system(complex_h=True)
        s = s_matrix(h, w, 0.37).entries
        np.testing.assert_allclose(s @ s.conj().T, np.eye(4), atol=1e-10)

    def test_reciprocal_for_real_hamiltonian(self):
        h, w = _system()
        s = s_matrix(h, w, -1.2).entries
        np.testing.assert_allclose(s, s.T, atol=1e-10)

    def test_not_reciprocal_for_complex_hamiltonian(self):
        h, w = _system(complex_h=True)
        s = s_matrix(h, w, -1.2).entries
        assert abs(s[0, 1] - s[1, 0]) > 1e-6

    def test_series_matches_direct_solve(self):
        h, w = _system(complex_h=True, seed=3)
        freqs = np.array([-2.0, 0.1, 1.7])
        series = s_matrix_series(h, w, freqs)
        for k, f in enumerate(freqs):
            np.testing.assert_allclose(series.s[k], s_matrix(h, w, f).entries[:2, :2], atol=1e-8)

    def test_mismatched_coupling(self):
        h, _ = _system()
        with pytest.raises(ValidationError):
            s_matrix(h, np.ones((2, 10)), 0.0)


class TestCorrelations:
    def test_fluctuations_have_zero_mean(self):
        values = _white_noise((3, 100)) + 0.5
        fl = fluctuations(values, window_points=25)
        np.testing.assert_allclose(fl[:, :25].mean(axis=1), 0.0, atol=1e-12)

    def test_fluctuation_window(self):
        with pytest.raises(ValidationError):
            fluctuations(np.ones(10), window_points=1)

    def test_white_noise_correlation(self):
        fl = _white_noise((20, 1000))
        curve = two_point_correlation(fl, 0.1, [0.0, 0.5, 1.0])
        assert curve.values[0] == pytest.approx(1.0, rel=0.03)
        np.testing.assert_allclose(curve.values[1:], 0.0, atol=0.02)
        np.testing.assert_allclose(curve.grid, [0.0, 0.5, 1.0])

    def test_lag_longer_than_half_window(self):
        with pytest.raises(InsufficientDataError):
            two_point_correlation(_white_noise((1, 100)), 1.0, [60.0])

    def test_normalization(self):
        curve = ObservableCurve(
            ObservableKind.CORRELATION, np.array([0.0, 1.0]), np.array([2.0, 1.0])
        )
        np.testing.assert_allclose(normalize_correlation(curve).values, [1.0, 0.5])

    def test_normalization_needs_positive_c0(self):
        curve = ObservableCurve(
            ObservableKind.CORRELATION, np.array([0.0, 1.0]), np.array([0.0, 1.0])
        )
        with pytest.raises(UndefinedCorrelationError):
            normalize_correlation(curve)

    def test_cross_correlation_bounds(self):
        x = _white_noise((500,))
        assert cross_correlation(x, x) == pytest.approx(1.0)
        assert cross_correlation(x, -x) == pytest.approx(-1.0)
        assert cross_correlation(x, 1j * x) == pytest.approx(0.0, abs=1e-12)

    def test_cross_correlation_undefined(self):
        with pytest.raises(UndefinedCorrelationError):
            cross_correlation(np.zeros(10), np.ones(10))

    def test_detailed_balance(self):
        x = np.array([1.0, 0.0, 2.0])
        y = np.array([1.0j, 0.0, 1.0])
        delta, excluded = detailed_balance_delta(x, y)
        assert excluded == 1
        assert delta[0] == 0.0
        assert np.isnan(delta[1])
        assert delta[2] == pytest.approx(1.0 / 3.0)

    def test_sliding_delta_needs_a_window(self):
        with pytest.raises(InsufficientDataError):
            sliding_delta(np.linspace(0, 5, 10), np.zeros(10), 10.0)

    def test_amplitude_histogram_is_normalized(self):
        curve = amplitude_distribution(_white_noise((20_000,)), bins=40)
        width = curve.grid[1] - curve.grid[0]
        assert float(np.sum(curve.values) * width) == pytest.approx(1.0)

    def test_gaussian_noise_is_rayleigh(self):
        assert rayleigh_distance(_white_noise((20_000,))) < 0.02

    def test_default_lag_grid(self):
        np.testing.assert_allclose(default_eps_grid(0.1, 1.0), np.linspace(0.0, 1.0, 11))


class TestWindowStatistics:
    def test_reciprocal_windows(self):
        freqs = np.arange(100.0)
        s = np.empty((100, 2, 2), dtype=complex)
        s[:, 0, 0] = 0.5
        s[:, 1, 1] = 0.5
        s[:, 0, 1] = _white_noise((100,), seed=5)
        s[:, 1, 0] = s[:, 0, 1]
        frame = window_statistics(SMatrixSeries(freqs, s, unit="GHz"), 25.0)
        assert len(frame) == 3
        np.testing.assert_allclose(frame["ccross"], 1.0)
        np.testing.assert_allclose(frame["delta_mean"], 0.0)
        np.testing.assert_allclose(frame["t_a"], 0.75)

    def test_width_must_be_positive(self):
        s = np.zeros((10, 2, 2), dtype=complex)
        with pytest.raises(ValidationError):
            window_statistics(SMatrixSeries(np.arange(10.0), s), 0.0)


class TestSimulation:
    CONFIG = ScatteringConfig(
        dim=60,
        tau_abs=0.5,
        fictitious_channels=10,
        freq_points=128,
        freq_span=10.0,
        realizations=4,
        master_seed=3,
        couplings=(0.2, 0.22, coupling_from_transmission(0.05)),
    )
    LAGS = np.array([0.0, 0.5, 1.0, 2.0])

    def test_realization_is_reproducible(self):
        spec = EnsembleSpec(EnsembleKind.GOE, dim=60, master_seed=3)
        a = simulate_realization(spec, self.CONFIG, self.CONFIG.couplings, 1)
        b = simulate_realization(spec, self.CONFIG, self.CONFIG.couplings, 1)
        np.testing.assert_array_equal(a.s, b.s)

    def test_time_reversal_invariant_limit(self):
        source = EnsembleSpec(EnsembleKind.GOE_TO_GUE, dim=60, master_seed=3, xi=0.0)
        stats, series = scattering_with_rp(source, self.CONFIG, eps_grid=self.LAGS)
        assert len(series) == 4
        assert stats.ccross == pytest.approx(1.0, abs=1e-8)
        assert stats.delta_mean == pytest.approx(0.0, abs=1e-8)

    def test_time_reversal_violation_lowers_ccross(self):
        source = EnsembleSpec(EnsembleKind.GOE_TO_GUE, dim=60, master_seed=3, xi=1.0)
        stats, _ = scattering_with_rp(source, self.CONFIG, eps_grid=self.LAGS)
        assert stats.ccross < 0.95
        assert stats.delta_mean > 0.0

    def test_dimension_mismatch(self):
        source = EnsembleSpec(EnsembleKind.GOE, dim=50, master_seed=3)
        with pytest.raises(ConfigurationError):
            scattering_with_rp(source, self.CONFIG)


class TestCalibration:
    @pytest.mark.slow
    def test_reaches_targets(self):
        calibration = calibrate_coupling(
            (0.5, 0.6), tau_abs=1.0, n=60, realizations=10, fictitious_channels=10, freq_points=64
        )
        assert calibration.measured_t[0] == pytest.approx(0.5, abs=0.02)
        assert calibration.measured_t[1] == pytest.approx(0.6, abs=0.02)
        assert 0.0 < calibration.couplings[0] < calibration.couplings[1] <= V_MAX
        assert calibration.fictitious_t == pytest.approx(0.1)

    @pytest.mark.slow
    def test_reaches_targets_on_rp_hamiltonians(self):
        source = EnsembleSpec(EnsembleKind.RP, dim=60, master_seed=4, lam=0.5)
        calibration = calibrate_coupling(
            (0.5, 0.6),
            tau_abs=1.0,
            n=60,
            realizations=10,
            master_seed=4,
            fictitious_channels=10,
            freq_points=64,
            source=source,
        )
        assert calibration.kind == "rp"
        assert calibration.measured_t == pytest.approx((0.5, 0.6), abs=0.02)

    def test_draws_hamiltonians_from_source(self, monkeypatch):
        seen = []
        original = scattering_module.sample_matrix

        def recording(spec, index):
            seen.append((spec.kind, spec.lam))
            return original(spec, index)

        monkeypatch.setattr(scattering_module, "sample_matrix", recording)
        source = EnsembleSpec(EnsembleKind.RP, dim=30, master_seed=1, lam=0.4)
        calibration = calibrate_coupling(
            (0.5, 0.5),
            tau_abs=0.5,
            n=30,
            realizations=2,
            fictitious_channels=4,
            freq_points=16,
            freq_span=5.0,
            tolerance=1.0,
            source=source,
        )
        assert seen == [(EnsembleKind.RP, 0.4)] * 2
        assert calibration.as_dict()["kind"] == "rp"

    def test_absorption_needs_enough_channels(self):
        with pytest.raises(ConfigurationError):
            calibrate_coupling((0.5, 0.5), tau_abs=40.0, n=60, fictitious_channels=30)

    def test_target_range(self):
        with pytest.raises(ValidationError):
            calibrate_coupling((1.0, 0.5), tau_abs=1.0, n=60)
