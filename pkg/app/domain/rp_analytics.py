"""
Exact analytic curves of the Poisson → GUE (Rosenzweig-Porter) transition.

- ``k_rp``: form factor K(τ), evaluated with composite Gauss-Legendre
  quadrature vectorized over τ and an adaptive fallback.
- ``y2_rp``: two-point cluster function from the graded-eigenvalue double
  integral, or as the cosine transform of b(τ) = 1 − K(τ) for cross-checks.
- ``sigma2_rp``: number variance obtained from the tabulated b(τ).
- ``nnsd_rp`` / ``nnsd_rp_cdf``: the two-level spacing surmise.

All functions take the N-independent coupling λ; the curve parameters
follow from :class:`RpScales`.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate, interpolate, special

from ..infrastructure.exceptions import NumericFailureError, ValidationError
from ..infrastructure.logging import log_timed_operation
from . import special as sf
from .models import ObservableCurve, ObservableKind, RpScales

GAUSS_WIDTHS = 14.0
K_PANELS = 8
K_NODES = 48
K_TOLERANCE = 1e-8
K_QUAD_TOLERANCE = 1e-7

# b(τ) table: fine step up to TABLE_SPLIT, coarse tail up to min(TABLE_MAX, 2π + TAIL/α̃)
TABLE_FINE_STEP = 0.02
TABLE_COARSE_STEP = 0.1
TABLE_SPLIT = 16.0
TABLE_MAX = 400.0
TABLE_TAIL = 60.0
TABLE_HEAD_POINTS = 40  # geometric nodes resolving the linear rise b ≈ πα̃²τ

GRADED_PHI_NODES = 256
GRADED_RHO_NODES = 8  # per radial panel
GRADED_CUTOFF = 40.0  # exponent where the radial Gaussian is dropped
GRADED_MIN_PANELS = 16
GRADED_MAX_PANELS = 20_000
GRADED_CHUNK = 4096

SPACING_CLOSED_FORM_MAX = 10.0  # α_L² up to which D uses erfcx/Ei/₂F₂
SPACING_X_MAX = 50.0
SPACING_GAUSS_WIDTHS = 9.0
CDF_STEP = 0.005

Y2Method = Literal["graded", "spectral"]

logger = logging.getLogger(__name__)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(K_NODES)
_PHI_X, _PHI_W = np.polynomial.legendre.leggauss(GRADED_PHI_NODES)
_RHO_X, _RHO_W = np.polynomial.legendre.leggauss(GRADED_RHO_NODES)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValidationError("lambda", "coupling must be a finite non-negative number", lam)
    return lam


def _as_output(values: np.ndarray, scalar: bool) -> np.ndarray | float:
    return float(values[0]) if scalar else values


# --------------------------------------------------------------------------
# Form factor
# --------------------------------------------------------------------------


def _k_parameters(tau: np.ndarray, alpha: float) -> tuple[np.ndarray, ...]:
    gamma = math.sqrt(2.0 * math.pi) * alpha**2 * tau**1.5
    t_star = np.sqrt(2.0 * math.pi / tau)
    sigma = 1.0 / (alpha * tau)
    lo = np.maximum(1.0, t_star - GAUSS_WIDTHS * sigma)
    hi = np.maximum(1.0, t_star) + GAUSS_WIDTHS * sigma
    return gamma, t_star, sigma, lo, hi


def _k_integrand(
    t: np.ndarray, gamma: np.ndarray, t_star: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    # (t²−1)·I₁(γt)·exp[−t²α̃²τ²/2 − πα̃²τ] with the exponentials merged
    return (t * t - 1.0) * special.i1e(gamma * t) * np.exp(-0.5 * ((t - t_star) / sigma) ** 2)


def _k_integral(
    gamma: np.ndarray,
    t_star: np.ndarray,
    sigma: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    panels: int,
) -> np.ndarray:
    edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, panels + 1)[None, :]
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    t = mid[..., None] + half[..., None] * _GL_X
    f = _k_integrand(t, gamma[:, None, None], t_star[:, None, None], sigma[:, None, None])
    return np.sum(f * _GL_W * half[..., None], axis=(1, 2))


def _k_integral_adaptive(
    gamma: float,
    t_star: float,
    sigma: float,
    lo: float,
    hi: float,
    scale: float,
    lam: float,
    tau: float,
) -> float:
    points = [t_star] if lo < t_star < hi else None
    value, error = integrate.quad(
        lambda t: float(_k_integrand(np.asarray(t), gamma, t_star, sigma)),
        lo,
        hi,
        points=points,
        epsabs=1e-10,
        epsrel=1e-10,
        limit=500,
    )
    if not math.isfinite(value) or scale * error > K_QUAD_TOLERANCE:
        raise NumericFailureError(
            "form-factor quadrature did not converge",
            diagnostics={"lambda": lam, "tau": tau, "error": error},
        )
    return value


def k_rp(tau: np.ndarray | float, lam: float) -> np.ndarray | float:
    """
    Form factor K(τ) of the transition ensemble.

    τ is the Fourier variable conjugate to the unfolded separation, so
    K → 1 for λ → 0 and K → min(τ/2π, 1) for λ → ∞.

    Raises:
        ValidationError: for τ ≤ 0 or λ < 0
        NumericFailureError: if the adaptive fallback quadrature fails
    """
    lam = _check_lambda(lam)
    scalar = np.ndim(tau) == 0
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(~np.isfinite(tau_arr)) or np.any(tau_arr <= 0):
        raise ValidationError("tau", "form-factor arguments must be positive")
    if lam == 0.0:
        return _as_output(np.ones_like(tau_arr), scalar)

    alpha = RpScales.from_lambda(lam).alpha_tilde
    gamma, t_star, sigma, lo, hi = _k_parameters(tau_arr, alpha)

    scale = tau_arr / (2.0 * math.pi) * gamma
    coarse = _k_integral(gamma, t_star, sigma, lo, hi, K_PANELS)
    fine = _k_integral(gamma, t_star, sigma, lo, hi, 2 * K_PANELS)
    unresolved = np.flatnonzero(~(scale * np.abs(fine - coarse) <= K_TOLERANCE))
    if unresolved.size:
        logger.debug("Refining %d form-factor points adaptively", unresolved.size)
    for i in unresolved:
        fine[i] = _k_integral_adaptive(
            gamma[i], t_star[i], sigma[i], lo[i], hi[i], scale[i], lam, float(tau_arr[i])
        )

    leading = 2.0 * special.i1e(gamma) / gamma * np.exp(-0.5 * ((1.0 - t_star) / sigma) ** 2)
    values = 1.0 + leading - scale * fine
    return _as_output(values, scalar)


def k_rp_curve(lam: float, tau_grid: np.ndarray) -> ObservableCurve:
    """K(τ) on ``tau_grid`` as an exportable curve."""
    grid = np.asarray(tau_grid, dtype=float)
    values = np.asarray(k_rp(grid, lam), dtype=float).reshape(grid.shape)
    return ObservableCurve(
        ObservableKind.FORM_FACTOR, grid, values, None, meta={"model": "rp", "lambda": lam}
    )


@lru_cache(maxsize=64)
@log_timed_operation("rp_b_table")
def _b_table(lam: float) -> tuple[np.ndarray, np.ndarray, int]:
    """τ grid (with τ = 0 prepended), b(τ) = 1 − K(τ) and the index of τ = 16."""
    alpha = RpScales.from_lambda(lam).alpha_tilde
    ramp = 1.0 / (math.pi * alpha**2)
    head_start = min(0.01 * ramp, 0.1 * TABLE_FINE_STEP)
    head = np.geomspace(head_start, TABLE_FINE_STEP, TABLE_HEAD_POINTS, endpoint=False)
    n_fine = int(round(TABLE_SPLIT / TABLE_FINE_STEP))
    fine = TABLE_FINE_STEP * np.arange(1, n_fine + 1)
    tail_end = min(TABLE_MAX, 2.0 * math.pi + TABLE_TAIL / alpha)
    n_coarse = max(0, int(math.ceil((tail_end - TABLE_SPLIT) / TABLE_COARSE_STEP)))
    coarse = TABLE_SPLIT + TABLE_COARSE_STEP * np.arange(1, n_coarse + 1)
    tau = np.concatenate([head, fine, coarse])
    b = 1.0 - np.asarray(k_rp(tau, lam))
    # K(0) = 1 for every λ > 0
    tau = np.concatenate([[0.0], tau])
    b = np.concatenate([[0.0], b])
    tau.setflags(write=False)
    b.setflags(write=False)
    return tau, b, head.size + n_fine


def b_table(lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Cached b(τ) = 1 − K(τ) table used by the Σ² and Y₂ evaluations."""
    lam = _check_lambda(lam)
    tau, b, _ = _b_table(round(lam, 12))
    return tau, b


# --------------------------------------------------------------------------
# Two-point cluster function and number variance
# --------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _b_spline(lam: float) -> interpolate.CubicSpline:
    tau, b, _ = _b_table(lam)
    return interpolate.CubicSpline(tau, b)


def _y2_spectral(r: float, lam: float) -> float:
    tau, _, _ = _b_table(lam)
    spline = _b_spline(lam)
    if r == 0.0:
        value, error = integrate.quad(spline, 0.0, tau[-1], limit=400)
    else:
        value, error = integrate.quad(
            spline, 0.0, tau[-1], weight="cos", wvar=r, limit=400
        )
    if not math.isfinite(value):
        raise NumericFailureError(
            "Y2 cosine transform failed", diagnostics={"lambda": lam, "r": r, "error": error}
        )
    return value / math.pi


_PHI = 0.5 * math.pi * (_PHI_X + 1.0)
_PHI_WEIGHTS = 0.5 * math.pi * _PHI_W * np.cos(_PHI)
_E_PLUS = np.exp(1j * _PHI)
_E_MINUS = np.conj(_E_PLUS)
_SIN_PHI = np.sin(_PHI)


def _graded_radial_nodes(c: float, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on radial panels spanning about half an oscillation each."""
    u_max = 2.0 * c * GRADED_CUTOFF
    # the phase ρ²/(2cκ) is linear in u = ρ², so panels are uniform in u
    wanted = math.ceil(GRADED_CUTOFF / (math.pi * kappa))
    panels = min(GRADED_MAX_PANELS, max(GRADED_MIN_PANELS, wanted))
    if wanted > GRADED_MAX_PANELS:
        logger.debug("Graded Y2 capped at %d radial panels (wanted %d)", panels, wanted)
    edges = np.sqrt(np.linspace(0.0, u_max, panels + 1))
    breaks = [p for p in (kappa, 2.0 * kappa) if p < edges[-1]]
    edges = np.union1d(edges, breaks)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _RHO_X).ravel()
    weights = (half[:, None] * _RHO_W).ravel()
    return nodes, weights


def _graded_angular(rho: np.ndarray, c: float, kappa: float) -> np.ndarray:
    """∫₀^π dφ cos φ·[Re A + Re B] at every radius in ``rho``."""
    q = (rho / kappa)[:, None]
    den_a = 1.0 - q * _SIN_PHI
    den_b = 1.0 + q * _SIN_PHI
    den_a = np.where(den_a == 0.0, 1e-300, den_a)
    phase = (rho * rho / (2.0 * c * kappa))[:, None]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        a = _E_PLUS * den_a / (1.0 + 0.5j * q * _E_PLUS) * np.exp(-1j * phase / den_a)
        b = _E_MINUS * den_b / (1.0 + 0.5j * q * _E_MINUS) * np.exp(-1j * phase / den_b)
    return np.nan_to_num(a.real + b.real) @ _PHI_WEIGHTS


def _y2_graded(r: float, alpha: float) -> float:
    # integration variable ρ replaces the inner r; κ and the leading terms use the outer r
    c = 1.0 / (math.pi * alpha) ** 2
    kappa = r / (math.pi * alpha**2)
    leading = (1.0 - math.exp(-2.0 * r * r / alpha**2) * math.cos(2.0 * math.pi * r)) / (
        2.0 * (math.pi * r) ** 2
    ) - c

    value = 0.0
    nodes, weights = _graded_radial_nodes(c, kappa)
    for start in range(0, nodes.size, GRADED_CHUNK):
        rho = nodes[start : start + GRADED_CHUNK]
        radial = weights[start : start + GRADED_CHUNK] * rho * np.exp(-rho * rho / (2.0 * c))
        value += float(np.dot(radial, _graded_angular(rho, c, kappa)))
    if not math.isfinite(value):
        raise NumericFailureError(
            "graded Y2 double integral failed",
            diagnostics={"alpha_tilde": alpha, "r": r, "panels": nodes.size // GRADED_RHO_NODES},
        )
    return leading + value / math.pi


def y2_rp(
    r: np.ndarray | float, lam: float, method: Y2Method = "graded"
) -> np.ndarray | float:
    """
    Two-point cluster function Y₂(r) of the transition ensemble.

    ``graded`` evaluates the radial/angular double integral directly;
    ``spectral`` evaluates (1/π)∫₀^∞ b(τ)cos(rτ)dτ on the cached b table
    and serves as the cross-check against the form factor. Y₂(0) = 1 for
    every λ > 0. For r ≫ πα̃² the tail is −α̃²/r².
    """
    lam = _check_lambda(lam)
    scalar = np.ndim(r) == 0
    r_arr = np.abs(np.atleast_1d(np.asarray(r, dtype=float)))
    if lam == 0.0:
        return _as_output(np.zeros_like(r_arr), scalar)
    key = round(lam, 12)
    if method == "graded":
        alpha = RpScales.from_lambda(lam).alpha_tilde
        values = np.array([1.0 if x == 0.0 else _y2_graded(float(x), alpha) for x in r_arr])
    elif method == "spectral":
        values = np.array([_y2_spectral(float(x), key) for x in r_arr])
    else:
        raise ValidationError("method", "expected 'graded' or 'spectral'", method)
    return _as_output(values, scalar)


def sigma2_rp(length: np.ndarray | float, lam: float) -> np.ndarray | float:
    """
    Number variance Σ²(L) = L − 2∫₀^L (L−r)Y₂(r)dr.

    Evaluated as L − (2/π)∫₀^∞ b(τ)(1 − cos Lτ)/τ² dτ with Simpson's rule
    on the cached b table, so a whole L grid costs one table.
    """
    lam = _check_lambda(lam)
    scalar = np.ndim(length) == 0
    grid = np.atleast_1d(np.asarray(length, dtype=float))
    if np.any(~np.isfinite(grid)) or np.any(grid < 0):
        raise ValidationError("L", "window lengths must be non-negative")
    if lam == 0.0:
        return _as_output(grid.copy(), scalar)

    tau, b, split = _b_table(round(lam, 12))
    safe = np.where(tau > 0, tau, 1.0)
    ell = grid[:, None]
    kernel = np.where(
        tau > 0, 2.0 * np.sin(0.5 * ell * safe) ** 2 / safe**2, 0.5 * ell * ell
    )
    integrand = b * kernel
    head = integrate.simpson(integrand[:, : split + 1], x=tau[: split + 1], axis=-1)
    tail = (
        integrate.simpson(integrand[:, split:], x=tau[split:], axis=-1)
        if tau.size > split + 1
        else 0.0
    )
    values = grid - 2.0 / math.pi * (head + tail)
    return _as_output(values, scalar)


def sigma2_rp_curve(lam: float, l_grid: np.ndarray) -> ObservableCurve:
    grid = np.asarray(l_grid, dtype=float)
    values = np.asarray(sigma2_rp(grid, lam), dtype=float).reshape(grid.shape)
    return ObservableCurve(
        ObservableKind.NUMBER_VARIANCE, grid, values, None, meta={"model": "rp", "lambda": lam}
    )


def y2_rp_curve(lam: float, r_grid: np.ndarray, method: Y2Method = "graded") -> ObservableCurve:
    grid = np.asarray(r_grid, dtype=float)
    values = np.asarray(y2_rp(grid, lam, method), dtype=float).reshape(grid.shape)
    meta = {"model": "rp", "lambda": lam, "route": method}
    return ObservableCurve(ObservableKind.Y2, grid, values, None, meta=meta)


# --------------------------------------------------------------------------
# Spacing distribution
# --------------------------------------------------------------------------


def _spacing_scale_closed(alpha_l: float) -> float:
    a2 = alpha_l * alpha_l
    return (
        1.0 / math.sqrt(math.pi)
        + float(sf.erfcx(alpha_l)) / (2.0 * alpha_l)
        - 0.5 * alpha_l * float(sf.expint_ei(a2))
        + 2.0 * a2 / math.sqrt(math.pi) * sf.hyp2f2_half(a2)
    )


def _spacing_scale_integral(alpha_l: float) -> float:
    def integrand(x: float) -> float:
        if x == 0.0:
            return 2.0 / alpha_l
        y = x / (2.0 * alpha_l)
        bracket = math.sqrt(math.pi) * (1.0 + 2.0 * y * y) * math.erf(y) + 2.0 * y * math.exp(
            -y * y
        )
        return math.exp(-x) / x * bracket

    value, error = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    if not math.isfinite(value) or error > 1e-9 * max(1.0, abs(value)):
        raise NumericFailureError(
            "spacing scale integral did not converge",
            diagnostics={"alpha_L": alpha_l, "error": error},
        )
    return alpha_l / math.sqrt(math.pi) * value


def spacing_scale(alpha_l: float, method: Literal["auto", "closed", "integral"] = "auto") -> float:
    """
    D(α_L) fixing unit mean spacing of the surmise.

    The closed form in erfcx, Ei and ₂F₂ cancels catastrophically for large
    α_L, so ``auto`` switches to the equivalent one-dimensional integral
    above α_L² = 10.
    """
    if not math.isfinite(alpha_l) or alpha_l <= 0:
        raise ValidationError("alpha_L", "must be positive", alpha_l)
    if method == "closed" or (method == "auto" and alpha_l**2 <= SPACING_CLOSED_FORM_MAX):
        return _spacing_scale_closed(alpha_l)
    if method in ("auto", "integral"):
        return _spacing_scale_integral(alpha_l)
    raise ValidationError("method", "expected 'auto', 'closed' or 'integral'", method)


def _nnsd_point(s: float, alpha_l: float, d: float) -> float:
    if s == 0.0:
        return 0.0
    centre = 2.0 * alpha_l * d * s
    width = SPACING_GAUSS_WIDTHS * 2.0 * alpha_l
    lo = max(0.0, centre - width)
    hi = min(SPACING_X_MAX, centre + width)
    if lo >= hi:
        return 0.0
    slope = d * s / alpha_l

    def integrand(x: float) -> float:
        # e^{-D²s²}·e^{-x²/4α²}·sinh z = e^{-(Ds − x/2α)²}·(1 − e^{-2z})/2
        z = x * slope
        ratio = 1.0 if z < 1e-12 else -math.expm1(-2.0 * z) / (2.0 * z)
        return math.exp(-x - (d * s - x / (2.0 * alpha_l)) ** 2) * ratio

    points = [centre] if lo < centre < hi else None
    value, error = integrate.quad(
        integrand, lo, hi, points=points, epsabs=1e-14, epsrel=1e-10, limit=200
    )
    if not math.isfinite(value):
        raise NumericFailureError(
            "spacing surmise quadrature failed",
            diagnostics={"s": s, "alpha_L": alpha_l, "error": error},
        )
    return value


def nnsd_rp(s: np.ndarray | float, lam: float) -> np.ndarray | float:
    """
    Spacing distribution P(s) of the two-level transition surmise.

    Normalized with unit mean for every λ > 0; λ = 0 returns e^{-s}.
    """
    lam = _check_lambda(lam)
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(~np.isfinite(s_arr)) or np.any(s_arr < 0):
        raise ValidationError("s", "spacings must be non-negative")
    if lam == 0.0:
        return _as_output(np.exp(-s_arr), scalar)

    alpha_l = RpScales.from_lambda(lam).alpha_l
    d = spacing_scale(alpha_l)
    c = 4.0 * d**3 / math.sqrt(math.pi)
    integrals = np.array([_nnsd_point(float(x), alpha_l, d) for x in s_arr])
    return _as_output(c * s_arr * s_arr * integrals, scalar)


def nnsd_rp_cdf(s: np.ndarray | float, lam: float) -> np.ndarray | float:
    """Cumulative spacing distribution I(s) = ∫₀^s P(x)dx of the surmise."""
    lam = _check_lambda(lam)
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(~np.isfinite(s_arr)) or np.any(s_arr < 0):
        raise ValidationError("s", "spacings must be non-negative")
    if lam == 0.0:
        return _as_output(-np.expm1(-s_arr), scalar)
    top = float(s_arr.max())
    fine = np.linspace(0.0, top, max(3, int(math.ceil(top / CDF_STEP)) + 1))
    density = np.asarray(nnsd_rp(fine, lam))
    cumulative = integrate.cumulative_simpson(density, x=fine, initial=0.0)
    return _as_output(np.interp(s_arr, fine, cumulative), scalar)


def nnsd_rp_curve(lam: float, s_grid: np.ndarray, cumulative: bool = False) -> ObservableCurve:
    grid = np.asarray(s_grid, dtype=float)
    func = nnsd_rp_cdf if cumulative else nnsd_rp
    values = np.asarray(func(grid, lam), dtype=float).reshape(grid.shape)
    kind = ObservableKind.CUMULATIVE_NNSD if cumulative else ObservableKind.NNSD
    return ObservableCurve(kind, grid, values, None, meta={"model": "rp", "lambda": lam})
