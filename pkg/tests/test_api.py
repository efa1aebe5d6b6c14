from __future__ import annotations

import os

import numpy as np
import pytest

from app.application.api import (
    billiard_levels,
    fit_lambda,
    generate_spectra,
    unfold_all,
    unfold_levels,
)
from app.domain.billiards import circle_eigenfrequencies
from app.domain.ensembles import eigenvalues, sample_ensemble, sample_gue
from app.domain.models import (
    BilliardGeometry,
    EnsembleKind,
    EnsembleSpec,
    RawSpectrum,
    UnfoldMethod,
)
from app.infrastructure.config import reset_settings
from app.infrastructure.exceptions import ValidationError
from app.utils.exports import read_levels, write_levels


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for key in list(os.environ):
        if key.startswith(("SIM_", "FIT_", "SCAT_", "APP_")):
            monkeypatch.delenv(key, raising=False)
    reset_settings()
    yield
    reset_settings()


def _poisson(n: int, seed: int) -> np.ndarray:
    return np.cumsum(np.random.default_rng(seed).exponential(size=n))


class TestUnfoldDispatch:
    def test_generated_file_uses_ensemble_density(self):
        eigs = eigenvalues(sample_gue(200, np.random.default_rng(4)))
        raw = RawSpectrum(eigs, meta={"model": "gue", "dim": 200, "seed": 4})
        unfolded = unfold_levels(raw)
        assert unfolded.method is UnfoldMethod.ANALYTIC
        assert len(unfolded) == 120

    def test_billiard_header_uses_weyl(self):
        geom = BilliardGeometry(radius_m=0.25)
        raw = RawSpectrum(circle_eigenfrequencies(geom, 10.0), unit="GHz", meta={"radius_m": 0.25})
        unfolded = unfold_levels(raw)
        assert unfolded.method is UnfoldMethod.WEYL
        assert float(np.mean(unfolded.spacings())) == pytest.approx(1.0, rel=0.05)

    def test_plain_file_uses_polynomial(self):
        unfolded = unfold_levels(RawSpectrum(_poisson(500, 1)))
        assert unfolded.method is UnfoldMethod.POLYNOMIAL

    def test_none_keeps_levels(self):
        levels = _poisson(50, 2)
        unfolded = unfold_levels(RawSpectrum(levels), "none")
        assert unfolded.method is UnfoldMethod.NONE
        np.testing.assert_allclose(unfolded.epsilons, levels)

    def test_weyl_needs_radius(self):
        with pytest.raises(ValidationError):
            unfold_levels(RawSpectrum(_poisson(50, 3)), "weyl")

    def test_files_of_one_ensemble_share_a_staircase(self):
        spec = EnsembleSpec(EnsembleKind.RP, dim=150, master_seed=5, realizations=4, lam=0.5)
        header = {"model": "rp", "dim": 150, "seed": 5, "lambda": 0.5}
        raws = [
            RawSpectrum(e, meta={**header, "realization": i})
            for i, e in enumerate(sample_ensemble(spec))
        ]
        unfolded = unfold_all(raws)
        assert [u.meta["pooled"] for u in unfolded] == [4] * 4

    def test_mixed_files_unfold_one_by_one(self):
        raws = [RawSpectrum(_poisson(300, 5)), RawSpectrum(_poisson(300, 6))]
        unfolded = unfold_all(raws)
        assert all("pooled" not in u.meta for u in unfolded)


class TestUseCases:
    def test_generate_writes_model_header(self, tmp_path):
        result = generate_spectra(tmp_path, "rp", 50, 2, 9, lam=0.3, threads=1)
        assert len(result.outputs) == 2
        raw = read_levels(result.outputs[0])
        assert raw.meta["model"] == "rp"
        assert raw.meta["lambda"] == 0.3
        assert raw.meta["realization"] == 0
        assert len(raw) == 50
        assert result.master_seed == 9

    def test_fit_lambda_on_poisson_levels(self, tmp_path):
        paths = [
            write_levels(tmp_path / f"levels_{i}.csv", _poisson(1000, 10 + i), {"unit": "GHz"})
            for i in range(3)
        ]
        result = fit_lambda(tmp_path / "fit", paths)
        names = sorted(p.name for p in result.outputs)
        assert names == ["sigma2.csv", "sigma2_rp_fit.csv"]
        assert result.results["fit"]["parameter_name"] == "lambda"
        assert result.results["fit"]["estimate"] < 0.2

    def test_window_fit_needs_single_file(self, tmp_path):
        paths = [write_levels(tmp_path / f"l{i}.csv", _poisson(300, i), {}) for i in range(2)]
        with pytest.raises(ValidationError):
            fit_lambda(tmp_path / "fit", paths, window_edges=[0.0, 100.0, 300.0])

    def test_billiard_counts(self, tmp_path):
        result = billiard_levels(tmp_path, 0.25, 5.0)
        assert result.results["levels"] == len(read_levels(tmp_path / "circle_levels.csv"))
        assert result.results["orbits"] > 0
