from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special as sp

from app.domain.special import (
    bessel_i1e,
    erfc,
    erfcx,
    expint_ei,
    hyp2f2_half,
    i1_over_x,
)
from app.infrastructure.exceptions import ValidationError


class TestWrappers:
    def test_point_values(self):
        assert erfc(0.0) == 1.0
        assert expint_ei(1.0) == pytest.approx(1.8951178163559368, rel=1e-12)

    def test_erfcx_large_argument_is_finite(self):
        # e^{x²}·erfc(x) ~ 1/(x√π)
        assert erfcx(1e3) == pytest.approx(1.0 / (1e3 * math.sqrt(math.pi)), rel=1e-6)

    def test_ei_singularity(self):
        with pytest.raises(ValidationError):
            expint_ei(0.0)

    def test_ei_negative_argument(self):
        assert expint_ei(-1.0) == pytest.approx(-0.21938393439552, rel=1e-10)

    def test_i1e_matches_unscaled(self):
        x = np.array([0.5, 3.0, 20.0])
        np.testing.assert_allclose(bessel_i1e(x) * np.exp(x), sp.i1(x), rtol=1e-12)

    def test_i1_over_x_limit(self):
        assert i1_over_x(0.0) == pytest.approx(0.5)
        assert i1_over_x(1e-5) == pytest.approx(0.5, rel=1e-9)
        assert i1_over_x(2.0) == pytest.approx(sp.i1(2.0) / 2.0)


class TestHypergeometric:
    def test_value_at_zero(self):
        assert hyp2f2_half(0.0) == pytest.approx(1.0)

    def test_series_against_definition(self):
        # Σ x^k / ((2k+1)(3/2)_k), summed directly with scipy's Pochhammer
        x = 3.7
        direct = sum(x**k / ((2 * k + 1) * sp.poch(1.5, k)) for k in range(80))
        assert hyp2f2_half(x) == pytest.approx(direct, rel=1e-12)

    def test_series_and_integral_agree_at_switch(self):
        below = hyp2f2_half(50.0)
        above = hyp2f2_half(50.0 + 1e-9)
        assert above == pytest.approx(below, rel=1e-8)

    def test_negative_argument(self):
        expected, _ = integrate.quad(lambda t: sp.hyp1f1(1.0, 1.5, -t * t), 0.0, 1.0)
        assert hyp2f2_half(-1.0) == pytest.approx(expected, rel=1e-10)

    def test_overflow_guard(self):
        with pytest.raises(ValidationError):
            hyp2f2_half(800.0)
