import pytest

from app.domain.models import EnsembleKind, ObservableKind
from app.domain.schemas import (
    AnalyzeInput,
    EnsembleInput,
    FitLambdaInput,
    FitXiInput,
    ScatterInput,
    require_valid,
    validate_input,
)
from app.infrastructure.exceptions import MultipleValidationError, ValidationError


def test_ensemble_input_defaults():
    params = EnsembleInput(model="gue")
    assert params.model is EnsembleKind.GUE
    assert params.dim == 400
    assert params.realizations == 1


def test_ensemble_input_rp_needs_lambda():
    assert not validate_input(EnsembleInput, {"model": "rp"}).success
    assert validate_input(EnsembleInput, {"model": "rp", "lam": 0.5}).success


@pytest.mark.parametrize(
    "data",
    [
        {"model": "rp", "lam": 0.5, "xi": 0.1},
        {"model": "goe2gue", "lam": 0.5, "xi": 0.1},
        {"model": "goe", "xi": 0.1},
        {"model": "poisson", "lam": 1.0},
    ],
)
def test_ensemble_input_foreign_parameter(data):
    assert not validate_input(EnsembleInput, data).success


def test_ensemble_input_bounds():
    response = validate_input(EnsembleInput, {"model": "goe", "dim": 1})
    assert not response.success
    assert response.errors[0].field == "dim"
    assert response.errors[0].value == 1


def test_analyze_input_splits_observables():
    params = AnalyzeInput(observables=" nnsd, sigma2 ,")
    assert params.observables == [ObservableKind.NNSD, ObservableKind.NUMBER_VARIANCE]


def test_analyze_input_weyl_needs_radius():
    assert not validate_input(AnalyzeInput, {"observables": "nnsd", "unfold": "weyl"}).success
    params = AnalyzeInput(observables="nnsd", unfold="weyl", radius_m=0.25)
    assert params.radius_m == 0.25


def test_analyze_input_unknown_unfold():
    assert not validate_input(AnalyzeInput, {"observables": "nnsd", "unfold": "spline"}).success


def test_analyze_input_strips_control_characters():
    assert AnalyzeInput(observables="nnsd", unfold="po\x07ly2").unfold == "poly2"


def test_fit_lambda_interval():
    assert validate_input(FitLambdaInput, {}).success
    assert not validate_input(FitLambdaInput, {"lambda_min": 2.0, "lambda_max": 1.0}).success


def test_scatter_input_absorption_channels():
    data = {"t_a": 0.6, "t_b": 0.68, "tau_abs": 40.0, "fictitious_channels": 30}
    assert not validate_input(ScatterInput, data).success
    assert validate_input(ScatterInput, {**data, "tau_abs": 1.6}).success


def test_scatter_input_perfect_coupling_excluded():
    assert not validate_input(ScatterInput, {"t_a": 1.0, "t_b": 0.5, "tau_abs": 1.0}).success


def test_require_valid_returns_clean_values():
    params = require_valid(FitXiInput, {"ccross": "0.8", "t_a": 0.6, "t_b": 0.68, "tau_abs": 1.6})
    assert params["ccross"] == 0.8


def test_require_valid_single_error():
    with pytest.raises(ValidationError) as info:
        require_valid(FitXiInput, {"ccross": 1.5, "t_a": 0.6, "t_b": 0.68, "tau_abs": 1.6})
    assert info.value.field == "ccross"
    assert info.value.value == 1.5


def test_require_valid_several_errors():
    with pytest.raises(MultipleValidationError) as info:
        require_valid(FitXiInput, {"ccross": 1.5, "t_a": -0.1, "t_b": 0.68, "tau_abs": 1.6})
    assert {e.field for e in info.value.validation_errors} == {"ccross", "t_a"}
