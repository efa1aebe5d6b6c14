from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from app.domain.models import EnsembleKind, ObservableKind
from app.domain.reference import (
    form_factor_reference,
    mean_ratio_tilde,
    power_spectrum_reference,
    ratio_surmise,
    ratio_tilde_cdf,
    reference_statistics,
    sigma2_gue,
    sigma2_reference,
    wigner_surmise,
    wigner_surmise_cdf,
    y2_reference,
)
from app.infrastructure.exceptions import NotAvailableError

KINDS = [EnsembleKind.POISSON, EnsembleKind.GOE, EnsembleKind.GUE]


class TestSurmises:
    @pytest.mark.parametrize("kind", KINDS)
    def test_normalized_with_unit_mean(self, kind):
        norm = integrate.quad(lambda s: float(wigner_surmise(kind, s)), 0, np.inf)[0]
        mean = integrate.quad(lambda s: s * float(wigner_surmise(kind, s)), 0, np.inf)[0]
        assert norm == pytest.approx(1.0, rel=1e-8)
        assert mean == pytest.approx(1.0, rel=1e-8)

    @pytest.mark.parametrize("kind", KINDS)
    def test_cdf_matches_density(self, kind):
        integral = integrate.quad(lambda s: float(wigner_surmise(kind, s)), 0, 1.3)[0]
        assert float(wigner_surmise_cdf(kind, 1.3)) == pytest.approx(integral, rel=1e-8)

    @pytest.mark.parametrize("kind", KINDS)
    def test_ratio_density_normalized(self, kind):
        norm = integrate.quad(lambda r: float(ratio_surmise(kind, r)), 0, np.inf)[0]
        assert norm == pytest.approx(1.0, rel=1e-6)
        assert float(ratio_tilde_cdf(kind, np.array(1.0))) == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize(
        ("kind", "expected"),
        [
            (EnsembleKind.POISSON, 2 * math.log(2) - 1),
            (EnsembleKind.GOE, 4 - 2 * math.sqrt(3)),
            (EnsembleKind.GUE, 2 * math.sqrt(3) / math.pi - 0.5),
        ],
    )
    def test_mean_r_tilde(self, kind, expected):
        assert mean_ratio_tilde(kind) == pytest.approx(expected, rel=1e-6)


class TestCorrelationFunctions:
    def test_y2_at_origin(self):
        assert float(y2_reference(EnsembleKind.GUE, np.array(0.0))) == pytest.approx(1.0)
        assert float(y2_reference(EnsembleKind.GOE, np.array(0.0))) == pytest.approx(1.0)
        assert float(y2_reference(EnsembleKind.POISSON, np.array(2.0))) == 0.0

    def test_gue_form_factor_ramp(self):
        tau = np.array([math.pi, 2 * math.pi, 3 * math.pi])
        np.testing.assert_allclose(form_factor_reference(EnsembleKind.GUE, tau), [0.5, 1.0, 1.0])

    def test_goe_form_factor_continuous_at_heisenberg_time(self):
        below = float(form_factor_reference(EnsembleKind.GOE, np.array(2 * math.pi - 1e-9)))
        above = float(form_factor_reference(EnsembleKind.GOE, np.array(2 * math.pi + 1e-9)))
        assert below == pytest.approx(2 - math.log(3), rel=1e-7)
        assert above == pytest.approx(below, rel=1e-7)

    def test_number_variance_large_l(self):
        length = np.array([10.0])
        gue = (math.log(2 * math.pi * 10) + np.euler_gamma + 1) / math.pi**2
        goe = 2 / math.pi**2 * (math.log(2 * math.pi * 10) + np.euler_gamma + 1 - math.pi**2 / 8)
        assert float(sigma2_gue(length)[0]) == pytest.approx(gue, rel=0.01)
        assert float(sigma2_reference(EnsembleKind.GOE, length)[0]) == pytest.approx(goe, rel=0.01)
        assert float(sigma2_reference(EnsembleKind.POISSON, length)[0]) == 10.0

    def test_number_variance_at_zero(self):
        assert float(sigma2_gue(np.array([0.0]))[0]) == 0.0


class TestPowerSpectrumReference:
    def test_poisson_closed_form(self):
        assert float(power_spectrum_reference(EnsembleKind.POISSON, np.array(0.5))) == 0.5

    def test_gue_table_below_poisson(self):
        tau = np.linspace(0.01, 0.1, 10)
        gue = power_spectrum_reference(EnsembleKind.GUE, tau, levels=200)
        poisson = power_spectrum_reference(EnsembleKind.POISSON, tau)
        assert np.all(gue < poisson)


class TestDispatch:
    def test_curve_carries_reference_label(self):
        curve = reference_statistics(EnsembleKind.GOE, ObservableKind.NNSD, np.linspace(0, 3, 31))
        assert curve.meta["reference"] == "goe"
        assert curve.values[0] == 0.0

    def test_tilde_ratio(self):
        grid = np.linspace(0, 1, 11)
        curve = reference_statistics(
            EnsembleKind.POISSON, ObservableKind.RATIO_DIST, grid, tilde=True
        )
        np.testing.assert_allclose(curve.values, 2.0 / (1.0 + grid) ** 2)

    def test_no_reference_for_rp(self):
        with pytest.raises(NotAvailableError):
            reference_statistics(EnsembleKind.RP, ObservableKind.NNSD, np.linspace(0, 3, 31))

    def test_no_reference_for_length_spectrum(self):
        with pytest.raises(NotAvailableError):
            reference_statistics(
                EnsembleKind.GUE, ObservableKind.LENGTH_SPECTRUM, np.linspace(0, 3, 31)
            )
