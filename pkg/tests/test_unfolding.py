from __future__ import annotations

import numpy as np
import pytest

from app.domain.billiards import circle_eigenfrequencies
from app.domain.ensembles import sample_ensemble, sample_spectrum
from app.domain.models import (
    BilliardGeometry,
    EnsembleKind,
    EnsembleSpec,
    RawSpectrum,
    UnfoldMethod,
)
from app.domain.unfolding import (
    fit_staircase_polynomial,
    prepare_levels,
    split_frequency_windows,
    trim_edges,
    unfold_ensemble,
    unfold_ensemble_spectrum,
    unfold_polynomial,
    unfold_weyl,
)
from app.infrastructure.exceptions import (
    DegenerateFitError,
    InsufficientDataError,
    ValidationError,
)


class TestPrepareLevels:
    def test_sorts(self):
        out = prepare_levels(np.arange(10.0)[::-1])
        np.testing.assert_array_equal(out, np.arange(10.0))

    def test_splits_ties(self):
        levels = np.array([0.0, 1.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
        out = prepare_levels(levels)
        assert np.all(np.diff(out) > 0)
        assert out[3] - out[1] == pytest.approx(2e-9 * 7.0 / 9.0)

    def test_too_few_levels(self):
        with pytest.raises(InsufficientDataError):
            prepare_levels(np.arange(9.0))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            prepare_levels(np.append(np.arange(10.0), np.nan))


class TestTrim:
    def test_drops_fraction_each_side(self):
        trimmed = trim_edges(np.arange(100.0), 0.2)
        assert len(trimmed) == 60
        assert trimmed.levels[0] == 20.0
        assert trimmed.meta["trimmed_levels"] == 40

    def test_bound(self):
        with pytest.raises(ValidationError):
            trim_edges(np.arange(100.0), 0.5)


class TestPolynomial:
    def test_quadratic_density_is_recovered(self):
        # staircase N(E) = E², levels at √i
        levels = np.sqrt(np.arange(1, 501, dtype=float))
        unfolded = unfold_polynomial(levels, 2)
        np.testing.assert_allclose(np.diff(unfolded.epsilons), 1.0, atol=1e-6)
        assert unfolded.method is UnfoldMethod.POLYNOMIAL

    def test_non_monotone_fit(self):
        # two dense clusters with an empty gap: the cubic overshoots and turns back
        levels = np.concatenate([np.linspace(0.0, 1.0, 100), np.linspace(9.0, 10.0, 100)])
        with pytest.raises(DegenerateFitError):
            fit_staircase_polynomial(levels, 3)

    def test_degree_bound(self):
        with pytest.raises(ValidationError):
            fit_staircase_polynomial(np.arange(20.0), 5)


class TestEnsembleUnfolding:
    @pytest.mark.parametrize("kind", [EnsembleKind.GOE, EnsembleKind.GUE, EnsembleKind.POISSON])
    def test_unit_mean_spacing(self, kind):
        spec = EnsembleSpec(kind, dim=400, master_seed=11)
        unfolded = unfold_ensemble_spectrum(sample_spectrum(spec, 0), spec)
        assert unfolded.method is UnfoldMethod.ANALYTIC
        assert float(np.mean(unfolded.spacings())) == pytest.approx(1.0, abs=0.1)

    def test_rp_falls_back_to_polynomial(self):
        spec = EnsembleSpec(EnsembleKind.RP, dim=200, master_seed=1, lam=0.5)
        unfolded = unfold_ensemble_spectrum(sample_spectrum(spec, 0), spec)
        assert unfolded.method is UnfoldMethod.POLYNOMIAL
        assert unfolded.degree == 3

    def test_weyl_refused_for_matrices(self):
        spec = EnsembleSpec(EnsembleKind.GOE, dim=50, master_seed=1)
        with pytest.raises(ValidationError):
            unfold_ensemble_spectrum(sample_spectrum(spec, 0), spec, method=UnfoldMethod.WEYL)

    def test_pooled_staircase_for_rp(self):
        spec = EnsembleSpec(EnsembleKind.RP, dim=200, master_seed=2, realizations=20, lam=0.5)
        unfolded = unfold_ensemble(sample_ensemble(spec), spec)
        assert len(unfolded) == 20
        assert all(u.method is UnfoldMethod.POLYNOMIAL and len(u) == 120 for u in unfolded)
        assert unfolded[0].meta["pooled"] == 20
        spacing = np.mean([np.mean(u.spacings()) for u in unfolded])
        assert spacing == pytest.approx(1.0, abs=0.05)

    def test_pooled_staircase_keeps_count_fluctuations(self):
        # uncoupled levels: the central 120 of 200 span about 120 ± 7 mean spacings
        spec = EnsembleSpec(EnsembleKind.RP, dim=200, master_seed=3, realizations=30, lam=0.0)
        unfolded = unfold_ensemble(sample_ensemble(spec), spec)
        spans = [u.epsilons[-1] - u.epsilons[0] for u in unfolded]
        assert np.mean(spans) == pytest.approx(120.0, abs=5.0)
        assert np.std(spans) > 4.0

    def test_closed_form_ensembles_unfold_per_spectrum(self):
        spec = EnsembleSpec(EnsembleKind.GUE, dim=100, master_seed=4, realizations=3)
        unfolded = unfold_ensemble(sample_ensemble(spec), spec)
        assert all(u.method is UnfoldMethod.ANALYTIC for u in unfolded)


class TestWeyl:
    def test_circle_unfolds_to_unit_spacing(self):
        geom = BilliardGeometry(radius_m=0.25)
        raw = RawSpectrum(circle_eigenfrequencies(geom, 20.0), unit="GHz")
        unfolded = unfold_weyl(raw, geom)
        assert unfolded.meta["mean_spacing"] == pytest.approx(1.0, abs=0.02)
        assert unfolded.method is UnfoldMethod.WEYL


class TestWindows:
    def test_half_open_windows(self):
        raw = RawSpectrum(np.arange(0.0, 30.0), unit="GHz")
        windows = split_frequency_windows(raw, [0.0, 10.0, 20.0])
        assert [len(w) for w in windows] == [10, 10]
        assert windows[1].meta["window"] == [10.0, 20.0]

    def test_edges_must_increase(self):
        with pytest.raises(ValidationError):
            split_frequency_windows(RawSpectrum(np.arange(5.0)), [1.0, 1.0])
