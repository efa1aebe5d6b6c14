"""
Pydantic schemas for command-line inputs.

Each command validates its parameters through one of these schemas before any
computation starts, so bound violations surface as usage errors naming the field.
"""

from __future__ import annotations

import re
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..infrastructure.exceptions import MultipleValidationError, ValidationError
from .models import EnsembleKind, ObservableKind

UNFOLD_CHOICES = ("auto", "weyl", "poly2", "none")


class BaseValidationSchema(BaseModel):
    """Base schema with common validation utilities."""

    model_config = ConfigDict(str_strip_whitespace=True, validate_assignment=True, frozen=False)

    @field_validator("*", mode="before")
    @classmethod
    def strip_control_characters(cls, v: Any) -> Any:
        if isinstance(v, str):
            return re.sub(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f]", "", v.strip())
        return v


class EnsembleInput(BaseValidationSchema):
    """Ensemble selection shared by `gen` and `scatter`."""

    model: EnsembleKind
    dim: int = Field(400, ge=2, le=20000, description="Matrix dimension N")
    lam: float | None = Field(None, ge=0, description="RP coupling λ")
    xi: float | None = Field(None, ge=0, description="T-violation strength ξ")
    seed: int = Field(0, ge=0)
    realizations: int = Field(1, ge=1, le=100000)

    @model_validator(mode="after")
    def check_model_parameter(self) -> EnsembleInput:
        if self.model is EnsembleKind.RP:
            if self.xi is not None:
                raise ValueError("--xi does not apply to the rp model")
            if self.lam is None:
                raise ValueError("the rp model needs --lambda")
        elif self.model is EnsembleKind.GOE_TO_GUE:
            if self.lam is not None:
                raise ValueError("--lambda does not apply to the goe2gue model")
            if self.xi is None:
                raise ValueError("the goe2gue model needs --xi")
        elif self.lam is not None or self.xi is not None:
            raise ValueError(f"the {self.model.value} model takes neither --lambda nor --xi")
        return self


class AnalyzeInput(BaseValidationSchema):
    unfold: str = Field("auto")
    observables: list[ObservableKind] = Field(..., min_length=1)
    trim: float = Field(0.0, ge=0, lt=0.5)
    l_max: float = Field(8.0, gt=0, le=100)
    radius_m: float | None = Field(None, gt=0)

    @field_validator("unfold")
    @classmethod
    def check_unfold(cls, v: str) -> str:
        if v not in UNFOLD_CHOICES:
            raise ValueError(f"unfold must be one of {', '.join(UNFOLD_CHOICES)}")
        return v

    @field_validator("observables", mode="before")
    @classmethod
    def split_list(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @model_validator(mode="after")
    def check_weyl_geometry(self) -> AnalyzeInput:
        if self.unfold == "weyl" and self.radius_m is None:
            raise ValueError("Weyl unfolding needs the billiard radius")
        return self


class FitLambdaInput(BaseValidationSchema):
    l_max: float = Field(5.0, gt=0, le=50)
    lambda_min: float = Field(0.0, ge=0)
    lambda_max: float = Field(3.0, gt=0, le=50)
    tolerance: float = Field(1e-3, gt=0, lt=1)

    @model_validator(mode="after")
    def check_interval(self) -> FitLambdaInput:
        if self.lambda_min >= self.lambda_max:
            raise ValueError("lambda_min must be below lambda_max")
        return self


class ScatterInput(BaseValidationSchema):
    t_a: float = Field(..., ge=0, lt=1)
    t_b: float = Field(..., ge=0, lt=1)
    tau_abs: float = Field(..., ge=0)
    fictitious_channels: int = Field(30, ge=1)
    freq_points: int = Field(1024, ge=16)
    freq_span: float = Field(100.0, gt=0)

    @model_validator(mode="after")
    def check_absorption(self) -> ScatterInput:
        if self.tau_abs > self.fictitious_channels:
            raise ValueError("tau_abs cannot exceed the number of absorption channels")
        return self


class FitXiInput(BaseValidationSchema):
    ccross: float = Field(..., ge=-1, le=1)
    t_a: float = Field(..., ge=0, lt=1)
    t_b: float = Field(..., ge=0, lt=1)
    tau_abs: float = Field(..., ge=0)


class ValidationErrorDetail(BaseModel):
    """Schema for validation error details."""

    field: str
    message: str
    value: Any = None


class ValidationResponse(BaseModel):
    """Schema for validation responses."""

    success: bool
    errors: list[ValidationErrorDetail] = []
    data: dict[str, Any] | None = None


def validate_input(schema_class: type[BaseModel], data: dict[str, Any]) -> ValidationResponse:
    """
    Centralized validation function that returns structured validation results.

    Args:
        schema_class: Pydantic model class to use for validation
        data: Input data to validate

    Returns:
        ValidationResponse with success status and any errors

    Example:
        >>> result = validate_input(FitXiInput, {"ccross": 2.0, "t_a": 0.6, "t_b": 0.68,
        ...                                      "tau_abs": 1.6})
        >>> result.success
        False
    """
    try:
        validated = schema_class(**data)
        return ValidationResponse(success=True, data=validated.model_dump())
    except Exception as e:
        errors = []
        if hasattr(e, "errors"):
            for error in e.errors():
                field = ".".join(str(x) for x in error["loc"]) or "general"
                errors.append(
                    ValidationErrorDetail(
                        field=field, message=error["msg"], value=error.get("input")
                    )
                )
        else:
            errors.append(ValidationErrorDetail(field="general", message=str(e)))

        return ValidationResponse(success=False, errors=errors)


def require_valid(schema_class: type[BaseModel], data: dict[str, Any]) -> dict[str, Any]:
    """
    Validate ``data`` and return the cleaned values.

    Raises:
        ValidationError: for a single failing field
        MultipleValidationError: when several fields fail
    """
    response = validate_input(schema_class, data)
    if response.success:
        return response.data or {}
    errors = [
        ValidationError(
            detail.field, detail.message, detail.value if _scalar(detail.value) else None
        )
        for detail in response.errors
    ]
    if len(errors) == 1:
        raise errors[0]
    raise MultipleValidationError(errors)


def _scalar(value: Any) -> bool:
    return isinstance(value, (int, float, str, bool)) or value is None
