from __future__ import annotations

import math

import numpy as np
import pytest

from app.domain.inference import (
    build_tau_oracle,
    build_xi_table,
    estimate_xi_crosscorr,
    fit_lambda_sigma2,
    fit_lambda_windows,
    fit_tau_abs,
    reciprocal_xi_fit,
    tau_grid,
)
from app.domain.models import (
    CorrelationOracle,
    EnsembleKind,
    EnsembleSpec,
    ObservableCurve,
    ObservableKind,
    RawSpectrum,
    ScatteringConfig,
    XiTable,
)
from app.domain.rp_analytics import sigma2_rp_curve
from app.infrastructure.exceptions import (
    ExtrapolationRefusedError,
    InsufficientDataError,
    ValidationError,
)

L_GRID = np.arange(0.1, 5.05, 0.1)


def _xi_table(scale: float = 1.0) -> XiTable:
    xi = np.linspace(0.0, 1.0, 51)
    return XiTable(
        t_a=0.6,
        t_b=0.68,
        tau_abs=1.6,
        xi=xi,
        ccross=scale * np.exp(-3.0 * xi),
        stderr=np.full(xi.size, 0.01),
        realizations=100,
    )


def _oracle() -> CorrelationOracle:
    eps = np.linspace(0.0, 10.0, 101)
    taus = np.arange(0.5, 4.01, 0.5)
    curves = np.exp(-0.5 * taus[:, None] * eps[None, :])
    return CorrelationOracle(eps=eps, tau_abs=taus, curves=curves, meta={"kind": "goe"})


def _correlation(tau: float) -> ObservableCurve:
    eps = np.linspace(0.0, 8.0, 161)
    return ObservableCurve(ObservableKind.CORRELATION, eps, np.exp(-0.5 * tau * eps))


class TestLambdaFit:
    def test_recovers_analytic_curve(self):
        fit = fit_lambda_sigma2(sigma2_rp_curve(0.6, L_GRID))
        assert fit.estimate == pytest.approx(0.6, abs=0.01)
        assert fit.parameter_name == "lambda"
        assert fit.bound is None
        assert fit.objective < 1e-3
        assert fit.settings["points"] == 50

    def test_poisson_data_sits_on_lower_edge(self):
        curve = ObservableCurve(ObservableKind.NUMBER_VARIANCE, L_GRID, L_GRID.copy())
        fit = fit_lambda_sigma2(curve)
        assert fit.estimate < 0.01

    def test_too_few_points(self):
        curve = ObservableCurve(
            ObservableKind.NUMBER_VARIANCE, np.array([1.0, 2.0]), np.array([1.0, 2.0])
        )
        with pytest.raises(InsufficientDataError):
            fit_lambda_sigma2(curve)

    def test_empty_interval(self):
        with pytest.raises(ValidationError):
            fit_lambda_sigma2(sigma2_rp_curve(0.6, L_GRID), interval=(2.0, 1.0))

    def test_per_window_fits(self):
        levels = np.cumsum(np.random.default_rng(8).exponential(size=2000))
        edges = [0.0, float(levels[999]), float(levels[-1]) + 1.0]
        fits = fit_lambda_windows(RawSpectrum(levels, unit="GHz"), edges)
        assert len(fits) == 2
        assert fits[0].settings["window"] == [edges[0], edges[1]]
        assert fits[1].settings["levels"] == 1001
        for fit in fits:
            assert fit.estimate < 0.5


class TestXiInversion:
    def test_inverts_monotone_table(self):
        fit = estimate_xi_crosscorr(math.exp(-1.2), 0.6, 0.68, 1.6, _xi_table())
        assert fit.estimate == pytest.approx(0.4, abs=0.005)
        assert fit.bound is None
        assert fit.search_interval == (0.0, 1.0)

    def test_parameter_mismatch(self):
        with pytest.raises(ExtrapolationRefusedError):
            estimate_xi_crosscorr(0.5, 0.6, 0.68, 2.0, _xi_table())

    def test_above_table_maximum(self):
        with pytest.raises(ExtrapolationRefusedError):
            estimate_xi_crosscorr(0.99, 0.6, 0.68, 1.6, _xi_table(scale=0.95))

    def test_below_table_minimum_is_a_bound(self):
        fit = estimate_xi_crosscorr(0.01, 0.6, 0.68, 1.6, _xi_table())
        assert fit.estimate == 1.0
        assert fit.bound == ">="

    def test_range(self):
        with pytest.raises(ValidationError):
            estimate_xi_crosscorr(1.5, 0.6, 0.68, 1.6, _xi_table())

    def test_reciprocal_shortcut(self):
        fit = reciprocal_xi_fit(1.0, 0.6, 0.68, 1.6)
        assert fit is not None
        assert fit.estimate == 0.0
        assert reciprocal_xi_fit(0.9, 0.6, 0.68, 1.6) is None


class TestTauFit:
    def test_default_grid(self):
        grid = tau_grid()
        assert grid.size == 24
        assert grid[0] == 0.25 and grid[-1] == pytest.approx(6.0)

    def test_recovers_interior_value(self):
        fit = fit_tau_abs(_correlation(2.2), _oracle())
        assert fit.estimate == pytest.approx(2.2, abs=0.1)
        assert fit.bound is None
        assert fit.local_minima == [fit.estimate]
        assert fit.diagnostics["kind"] == "goe"

    def test_lower_edge(self):
        fit = fit_tau_abs(_correlation(0.2), _oracle())
        assert fit.bound == "<="

    def test_upper_edge(self):
        fit = fit_tau_abs(_correlation(5.0), _oracle())
        assert fit.bound == ">="

    def test_grid_too_small(self):
        oracle = _oracle()
        small = CorrelationOracle(oracle.eps, oracle.tau_abs[:2], oracle.curves[:2])
        with pytest.raises(InsufficientDataError):
            fit_tau_abs(_correlation(1.0), small)

    def test_no_overlap(self):
        curve = ObservableCurve(
            ObservableKind.CORRELATION, np.linspace(20.0, 30.0, 11), np.zeros(11)
        )
        with pytest.raises(InsufficientDataError):
            fit_tau_abs(curve, _oracle())


SMALL = ScatteringConfig(
    dim=40, fictitious_channels=10, freq_points=64, freq_span=8.0, master_seed=1
)


@pytest.mark.slow
class TestOracles:
    def test_xi_table(self):
        table = build_xi_table(
            0.5, 0.5, 0.5, SMALL, xi_step=0.5, realizations=3, calibration_realizations=4
        )
        np.testing.assert_allclose(table.xi, [0.0, 0.5, 1.0])
        assert table.ccross[0] == pytest.approx(1.0, abs=1e-8)
        assert np.all(np.diff(table.ccross) <= 0)
        assert table.matches(0.5, 0.5, 0.5)

    def test_tau_oracle(self):
        source = EnsembleSpec(EnsembleKind.GOE, dim=40, master_seed=1)
        oracle = build_tau_oracle(
            source,
            SMALL,
            np.array([0.5, 1.0, 1.5]),
            realizations=3,
            eps_max=2.0,
            calibration_realizations=4,
        )
        assert oracle.curves.shape == (3, oracle.eps.size)
        np.testing.assert_allclose(oracle.curves[:, 0], 1.0)
        assert oracle.meta["kind"] == "goe"
