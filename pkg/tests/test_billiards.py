from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from app.domain.billiards import (
    bessel_zeros,
    circle_eigenfrequencies,
    fit_weyl_offset,
    periodic_orbit_lengths,
    weyl_count,
    weyl_density,
)
from app.domain.models import SPEED_OF_LIGHT, BilliardGeometry
from app.infrastructure.exceptions import ValidationError

CIRCLE = BilliardGeometry(radius_m=0.25)


class TestBesselZeros:
    def test_first_zeros_match_scipy(self):
        previous = list(special.jn_zeros(0, 12))
        np.testing.assert_allclose(bessel_zeros(1, previous), special.jn_zeros(1, 11), rtol=1e-12)

    def test_lowest_level(self):
        freqs = circle_eigenfrequencies(CIRCLE, 2.0)
        expected = SPEED_OF_LIGHT * special.jn_zeros(0, 1)[0] / (2 * math.pi * 0.25) / 1e9
        assert freqs[0] == pytest.approx(expected, rel=1e-12)


class TestCircleSpectrum:
    def test_levels_to_20_ghz(self):
        freqs = circle_eigenfrequencies(CIRCLE, 20.0)
        assert np.all(np.diff(freqs) >= 0)
        assert freqs[-1] <= 20.0
        # Weyl estimate of the count below 20 GHz
        assert freqs.size == pytest.approx(float(weyl_count(CIRCLE, 20.0)), rel=0.02)

    def test_angular_orders_are_doubly_degenerate(self):
        freqs = circle_eigenfrequencies(CIRCLE, 3.0)
        m1 = SPEED_OF_LIGHT * special.jn_zeros(1, 1)[0] / (2 * math.pi * 0.25) / 1e9
        assert np.count_nonzero(np.isclose(freqs, m1, rtol=1e-10)) == 2

    def test_bound(self):
        with pytest.raises(ValidationError):
            circle_eigenfrequencies(CIRCLE, 0.0)
        with pytest.raises(ValidationError):
            circle_eigenfrequencies(CIRCLE, 1e4)


class TestOrbits:
    def test_shortest_lengths(self):
        lengths = [o.length_m for o in periodic_orbit_lengths(CIRCLE, 1.5)]
        # diameter orbit bounced twice, triangle, square
        assert lengths[0] == pytest.approx(1.0)
        assert lengths[1] == pytest.approx(1.5 * math.sqrt(3.0) / 2.0, rel=1e-12)
        assert lengths[2] == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_labels_are_primitive(self):
        orbits = periodic_orbit_lengths(CIRCLE, 2.0)
        for orbit in orbits:
            assert math.gcd(*orbit.label) == 1

    def test_bound(self):
        with pytest.raises(ValidationError):
            periodic_orbit_lengths(CIRCLE, -1.0)


class TestWeyl:
    def test_density_is_derivative(self):
        f = 10.0
        h = 1e-4
        numeric = (weyl_count(CIRCLE, f + h) - weyl_count(CIRCLE, f - h)) / (2 * h)
        assert weyl_density(CIRCLE, f) == pytest.approx(float(numeric), rel=1e-6)

    def test_offset_fit_centres_staircase(self):
        freqs = circle_eigenfrequencies(CIRCLE, 20.0)
        n0 = fit_weyl_offset(freqs, CIRCLE)
        residual = np.arange(1, freqs.size + 1) - 0.5 - weyl_count(CIRCLE, freqs, n0=n0)
        assert abs(float(residual.mean())) < 1e-9
