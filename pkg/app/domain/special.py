"""
Special functions used by the analytic transition curves.

Thin wrappers around scipy.special with the argument checks the analytic
formulas rely on, plus the confluent series ₂F₂(½,1;3/2,3/2;x) which scipy
does not provide.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special as scipy_special

from ..infrastructure.exceptions import NumericFailureError, ValidationError

HYP2F2_SERIES_LIMIT = 50.0
HYP2F2_MAX_ARG = 700.0


def erfc(x: np.ndarray | float) -> np.ndarray | float:
    """Complementary error function."""
    return scipy_special.erfc(x)


def erfcx(x: np.ndarray | float) -> np.ndarray | float:
    """Scaled complementary error function e^{x²}·erfc(x)."""
    return scipy_special.erfcx(x)


def expint_ei(x: np.ndarray | float) -> np.ndarray | float:
    """
    Exponential integral Ei(x) (principal value for x < 0).

    Raises:
        ValidationError: at the logarithmic singularity x = 0
    """
    if np.any(np.asarray(x) == 0.0):
        raise ValidationError("x", "Ei is singular at 0", 0.0)
    return scipy_special.expi(x)


def bessel_i1(x: np.ndarray | float) -> np.ndarray | float:
    """Modified Bessel function of the first kind, order one."""
    return scipy_special.i1(x)


def bessel_i1e(x: np.ndarray | float) -> np.ndarray | float:
    """Exponentially scaled I₁: e^{-|x|}·I₁(x)."""
    return scipy_special.i1e(x)


def _hyp2f2_series(x: float, rtol: float = 1e-14, max_terms: int = 2000) -> float:
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        term *= x * (2 * k + 1) / ((2 * k + 3) * (k + 1.5))
        total += term
        if abs(term) <= rtol * abs(total):
            return total
    raise NumericFailureError(
        "2F2 series did not converge", diagnostics={"x": x, "terms": max_terms}
    )


def _hyp1f1_one_three_halves(y: float) -> float:
    # 1F1(1; 3/2; y) = √π e^y erf(√y) / (2√y) for y > 0
    if y <= 1e-12:
        return float(scipy_special.hyp1f1(1.0, 1.5, y))
    root = math.sqrt(y)
    return math.sqrt(math.pi) * math.exp(y) * math.erf(root) / (2.0 * root)


def hyp2f2_half(x: float) -> float:
    """
    Generalized hypergeometric ₂F₂(½, 1; 3/2, 3/2; x).

    - Power series Σ x^k / ((2k+1)(3/2)_k) for 0 ≤ x ≤ 50.
    - Integral ∫₀¹ ₁F₁(1; 3/2; x t²) dt otherwise (including negative x).

    Raises:
        ValidationError: for x above 700, where the result overflows
    """
    x = float(x)
    if not math.isfinite(x) or x > HYP2F2_MAX_ARG:
        raise ValidationError("x", f"2F2 argument must be finite and <= {HYP2F2_MAX_ARG}", x)
    if 0.0 <= x <= HYP2F2_SERIES_LIMIT:
        return _hyp2f2_series(x)

    if x > 0:
        integrand = lambda t: _hyp1f1_one_three_halves(x * t * t)  # noqa: E731
    else:
        integrand = lambda t: float(scipy_special.hyp1f1(1.0, 1.5, x * t * t))  # noqa: E731
    value, error = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    if not math.isfinite(value) or error > 1e-8 * abs(value):
        raise NumericFailureError(
            "2F2 integral representation failed", diagnostics={"x": x, "error": error}
        )
    return value


def i1_over_x(x: np.ndarray | float) -> np.ndarray | float:
    """I₁(x)/x with its limit 1/2 at the origin."""
    arr = np.asarray(x, dtype=float)
    small = np.abs(arr) < 1e-4
    safe = np.where(small, 1.0, arr)
    out = np.where(small, 0.5 + arr**2 / 16.0, scipy_special.i1(safe) / safe)
    return out if out.ndim else float(out)
