from __future__ import annotations

import math

import numpy as np
import pytest

from app.domain.ensembles import (
    RP_BAND_WIDTH,
    eigenvalues,
    rp_coupling,
    rp_spacing,
    sample_ensemble,
    sample_goe,
    sample_goe_to_gue,
    sample_gue,
    sample_matrix,
    sample_rp,
    sample_spectrum,
)
from app.domain.models import EnsembleKind, EnsembleSpec
from app.infrastructure.exceptions import ContractViolationError, ValidationError


def _rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


class TestSampling:
    def test_gue_is_hermitian_and_complex(self):
        h = sample_gue(50, _rng()).entries
        np.testing.assert_array_equal(h, h.conj().T)
        assert np.iscomplexobj(h)

    def test_goe_is_real_symmetric(self):
        h = sample_goe(50, _rng()).entries
        assert not np.iscomplexobj(h)
        np.testing.assert_array_equal(h, h.T)

    def test_gue_off_diagonal_variance(self):
        n = 200
        h = sample_gue(n, _rng(1)).entries
        off = h[np.triu_indices(n, 1)]
        assert np.mean(np.abs(off) ** 2) == pytest.approx(1.0 / (2 * n), rel=0.05)

    def test_gue_semicircle_radius(self):
        eigs = eigenvalues(sample_gue(400, _rng(2)))
        assert eigs.max() == pytest.approx(math.sqrt(2.0), abs=0.1)
        assert eigs.min() == pytest.approx(-math.sqrt(2.0), abs=0.1)

    def test_goe_semicircle_radius(self):
        eigs = eigenvalues(sample_goe(400, _rng(3)))
        assert eigs.max() == pytest.approx(1.0, abs=0.08)

    def test_matrices_are_read_only(self):
        h = sample_goe(10, _rng())
        with pytest.raises(ValueError):
            h.entries[0, 0] = 1.0

    def test_rp_lambda_zero_is_diagonal(self):
        h = sample_rp(30, 0.0, _rng()).entries
        np.testing.assert_array_equal(h, np.diag(np.diag(h)))

    def test_rp_coupling_scale(self):
        assert rp_coupling(400, 0.475) == pytest.approx(math.pi**2 * 0.475 * math.sqrt(2 / 400))

    @pytest.mark.parametrize("n", [50, 400, 1000])
    def test_rp_coupling_in_spacing_units(self, n):
        rms = rp_coupling(n, 0.8) * math.sqrt(1.0 / (2 * n))
        assert rms / rp_spacing(n) == pytest.approx(math.pi * 0.8 / 2)

    def test_rp_diagonal_fills_band(self):
        diag = np.diag(sample_rp(2000, 0.0, _rng(6)).entries).real
        assert diag.min() >= -RP_BAND_WIDTH / 2
        assert diag.max() <= RP_BAND_WIDTH / 2
        assert np.mean(np.diff(np.sort(diag))) == pytest.approx(rp_spacing(2000), rel=0.01)

    def test_rp_off_diagonal_rms(self):
        n = 300
        h = sample_rp(n, 0.5, _rng(8)).entries
        off = h[np.triu_indices(n, 1)]
        rms = math.sqrt(np.mean(np.abs(off) ** 2))
        assert rms / rp_spacing(n) == pytest.approx(math.pi * 0.5 / 2, rel=0.02)

    def test_rp_diagonal_shared_across_lambda(self):
        a = sample_rp(20, 0.3, _rng(5)).entries
        b = sample_rp(20, 0.6, _rng(5)).entries
        off_a = a - np.diag(np.diag(a))
        off_b = b - np.diag(np.diag(b))
        np.testing.assert_allclose(off_b, 2.0 * off_a, rtol=1e-12)

    def test_goe_to_gue_endpoints(self):
        h0 = sample_goe_to_gue(40, 0.0, _rng()).entries
        assert not np.iscomplexobj(h0)
        h1 = sample_goe_to_gue(40, 1.0, _rng()).entries
        assert np.iscomplexobj(h1)
        np.testing.assert_allclose(h1, h1.conj().T, atol=1e-15)

    @pytest.mark.parametrize("n", [0, 1])
    def test_dimension_bound(self, n):
        with pytest.raises(ValidationError):
            sample_gue(n, _rng())

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValidationError):
            sample_rp(10, -0.1, _rng())


class TestEigenvalues:
    def test_ascending(self):
        eigs = eigenvalues(sample_gue(30, _rng()))
        assert np.all(np.diff(eigs) >= 0)

    def test_non_hermitian_rejected(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ContractViolationError):
            eigenvalues(m)

    def test_non_square_rejected(self):
        with pytest.raises(ContractViolationError):
            eigenvalues(np.zeros((2, 3)))


class TestReproducibility:
    def test_realization_is_pure_function_of_index(self):
        spec = EnsembleSpec(EnsembleKind.RP, dim=40, master_seed=42, realizations=4, lam=0.475)
        np.testing.assert_array_equal(sample_spectrum(spec, 2), sample_spectrum(spec, 2))
        assert not np.allclose(sample_spectrum(spec, 1), sample_spectrum(spec, 2))

    def test_ensemble_independent_of_threads(self):
        spec = EnsembleSpec(EnsembleKind.GUE, dim=30, master_seed=7, realizations=5)
        serial = sample_ensemble(spec, threads=1)
        parallel = sample_ensemble(spec, threads=2)
        for a, b in zip(serial, parallel, strict=True):
            np.testing.assert_array_equal(a, b)

    def test_poisson_spectrum_is_sorted_diagonal(self):
        spec = EnsembleSpec(EnsembleKind.POISSON, dim=25, master_seed=3)
        h = sample_matrix(spec, 0)
        np.testing.assert_array_equal(sample_spectrum(spec, 0), np.sort(np.diag(h.entries)))

    def test_realizations_bound(self):
        spec = EnsembleSpec(EnsembleKind.GOE, dim=10, master_seed=0, realizations=0)
        with pytest.raises(ValidationError):
            sample_ensemble(spec)
