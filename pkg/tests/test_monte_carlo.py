"""Monte-Carlo ensembles of 400 × 400 matrices against the analytic transition curves."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest

from app.domain import rp_analytics
from app.domain.ensembles import sample_ensemble
from app.domain.inference import fit_lambda_sigma2
from app.domain.models import EnsembleKind, EnsembleSpec, UnfoldedSpectrum
from app.domain.observables import (
    form_factor,
    log_log_slope,
    nnsd_cumulative,
    number_variance,
    power_spectrum,
    spacing_ratios,
)
from app.domain.reference import wigner_surmise_cdf
from app.domain.unfolding import unfold_ensemble

pytestmark = pytest.mark.slow

DIM = 400
REALIZATIONS = 200
SEED = 2024
SLOPE_RANGE = (1e-2, 1e-1)


@lru_cache(maxsize=None)
def _unfolded(kind: EnsembleKind, lam: float = 0.0) -> list[UnfoldedSpectrum]:
    spec = EnsembleSpec(kind, dim=DIM, master_seed=SEED, realizations=REALIZATIONS, lam=lam)
    return unfold_ensemble(sample_ensemble(spec, threads=4), spec)


def _rp(lam: float) -> list[UnfoldedSpectrum]:
    return _unfolded(EnsembleKind.RP, lam)


class TestRpAgainstAnalytic:
    @pytest.mark.parametrize("lam", [0.325, 0.475, 0.625])
    def test_cumulative_spacing_distribution(self, lam):
        grid = np.linspace(0.0, 4.0, 161)
        empirical = nnsd_cumulative(_rp(lam), grid).values
        analytic = np.asarray(rp_analytics.nnsd_rp_cdf(grid, lam))
        assert np.max(np.abs(empirical - analytic)) < 0.02

    def test_number_variance(self):
        grid = np.arange(0.5, 8.01, 0.5)
        curve = number_variance(_rp(0.475), grid)
        analytic = np.asarray(rp_analytics.sigma2_rp(grid, 0.475))
        bound = np.maximum(0.03, 3.0 * curve.stderr)
        assert np.all(np.abs(curve.values - analytic) <= bound)

    def test_form_factor(self):
        grid = np.arange(0.5, 2.0 * math.pi, 0.25)
        curve = form_factor(_rp(0.475), grid)
        analytic = np.asarray(rp_analytics.k_rp(grid, 0.475))
        bound = np.maximum(0.05, 3.0 * curve.stderr)
        assert np.all(np.abs(curve.values - analytic) <= bound)

    def test_strong_coupling_is_gue(self):
        grid = np.linspace(0.0, 4.0, 161)
        empirical = nnsd_cumulative(_rp(5.0), grid).values
        surmise = wigner_surmise_cdf(EnsembleKind.GUE, grid)
        assert np.max(np.abs(empirical - surmise)) < 0.02


class TestLambdaRecovery:
    @pytest.mark.parametrize("lam", [0.2, 0.475, 0.8])
    def test_fit_recovers_coupling(self, lam):
        curve = number_variance(_rp(lam), np.arange(0.1, 5.05, 0.1))
        fit = fit_lambda_sigma2(curve, l_max=5.0)
        assert fit.estimate == pytest.approx(lam, abs=0.05)
        assert fit.bound is None


class TestGueBaselines:
    def test_mean_ratio(self):
        ratios = spacing_ratios(_unfolded(EnsembleKind.GUE))
        r_tilde = np.minimum(ratios, 1.0 / ratios)
        assert float(np.mean(r_tilde)) == pytest.approx(0.600, abs=0.005)

    def test_form_factor_ramp(self):
        grid = np.arange(1.0, 5.01, 0.25)
        curve = form_factor(_unfolded(EnsembleKind.GUE), grid)
        bound = np.maximum(0.05, 3.0 * curve.stderr)
        assert np.all(np.abs(curve.values - grid / (2.0 * math.pi)) <= bound)


class TestPowerSpectrumSlopes:
    def test_gue(self):
        slope = log_log_slope(power_spectrum(_unfolded(EnsembleKind.GUE)), *SLOPE_RANGE)
        assert slope == pytest.approx(-1.0, abs=0.15)

    def test_poisson(self):
        slope = log_log_slope(power_spectrum(_unfolded(EnsembleKind.POISSON)), *SLOPE_RANGE)
        assert slope == pytest.approx(-2.0, abs=0.15)

    @pytest.mark.parametrize("lam", [0.325, 0.625])
    def test_rp_follows_long_range_statistics(self, lam):
        # K_RP(2πτ) falls over this range, so the slope sits near or below the Poisson value
        slope = log_log_slope(power_spectrum(_rp(lam)), *SLOPE_RANGE)
        assert -3.0 < slope < -1.5
