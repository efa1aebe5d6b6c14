"""
Reference curves for Poisson, GOE and GUE statistics.

Closed forms are used wherever they exist: Wigner surmises for P(s), the
ratio surmise for P(r), sine-kernel expressions for Y₂, K and Σ². Power
spectra of GOE/GUE come from a cached Monte-Carlo table.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from ..infrastructure.exceptions import NotAvailableError
from .ensembles import sample_ensemble
from .models import EnsembleKind, EnsembleSpec, ObservableCurve, ObservableKind
from .observables import power_spectrum
from .unfolding import unfold_ensemble_spectrum

REFERENCE_KINDS = (EnsembleKind.POISSON, EnsembleKind.GOE, EnsembleKind.GUE)
POWER_TABLE_SEED = 0x5EED
POWER_TABLE_REALIZATIONS = 64

_RATIO_BETA = {EnsembleKind.GOE: 1, EnsembleKind.GUE: 2}
_RATIO_NORM = {
    EnsembleKind.GOE: 8.0 / 27.0,
    EnsembleKind.GUE: 4.0 * math.pi / (81.0 * math.sqrt(3.0)),
}

logger = logging.getLogger(__name__)


def _check_kind(kind: EnsembleKind) -> None:
    if kind not in REFERENCE_KINDS:
        raise NotAvailableError(
            f"no reference statistics for ensemble {kind.value}", {"kind": kind.value}
        )


def wigner_surmise(kind: EnsembleKind, s: np.ndarray) -> np.ndarray:
    """Spacing density: e^{-s}, (π/2)s e^{-πs²/4} or (32/π²)s² e^{-4s²/π}."""
    _check_kind(kind)
    s = np.asarray(s, dtype=float)
    if kind is EnsembleKind.POISSON:
        return np.exp(-s)
    if kind is EnsembleKind.GOE:
        return 0.5 * math.pi * s * np.exp(-0.25 * math.pi * s * s)
    return 32.0 / math.pi**2 * s * s * np.exp(-4.0 * s * s / math.pi)


def wigner_surmise_cdf(kind: EnsembleKind, s: np.ndarray) -> np.ndarray:
    """Cumulative spacing distribution of the surmises."""
    _check_kind(kind)
    s = np.asarray(s, dtype=float)
    if kind is EnsembleKind.POISSON:
        return -np.expm1(-s)
    if kind is EnsembleKind.GOE:
        return -np.expm1(-0.25 * math.pi * s * s)
    return special.erf(2.0 * s / math.sqrt(math.pi)) - 4.0 * s / math.pi * np.exp(
        -4.0 * s * s / math.pi
    )


def ratio_surmise(kind: EnsembleKind, r: np.ndarray) -> np.ndarray:
    """Density of r = s_j/s_{j-1}: 1/(1+r)² or (r+r²)^β / (Z(1+r+r²)^{1+3β/2})."""
    _check_kind(kind)
    r = np.asarray(r, dtype=float)
    if kind is EnsembleKind.POISSON:
        return 1.0 / (1.0 + r) ** 2
    beta = _RATIO_BETA[kind]
    return (r + r * r) ** beta / (_RATIO_NORM[kind] * (1.0 + r + r * r) ** (1.0 + 1.5 * beta))


def ratio_surmise_cdf(kind: EnsembleKind, r: np.ndarray) -> np.ndarray:
    _check_kind(kind)
    r = np.asarray(r, dtype=float)
    if kind is EnsembleKind.POISSON:
        return r / (1.0 + r)
    out = np.array(
        [integrate.quad(lambda x: float(ratio_surmise(kind, x)), 0.0, v)[0] for v in r.ravel()]
    )
    return out.reshape(r.shape)


def ratio_tilde_surmise(kind: EnsembleKind, r_tilde: np.ndarray) -> np.ndarray:
    """Density of r̃ = min(r, 1/r) on [0, 1]: twice the r density."""
    return 2.0 * ratio_surmise(kind, r_tilde)


def ratio_tilde_cdf(kind: EnsembleKind, r_tilde: np.ndarray) -> np.ndarray:
    return 2.0 * ratio_surmise_cdf(kind, np.clip(r_tilde, 0.0, 1.0))


def mean_ratio_tilde(kind: EnsembleKind) -> float:
    """⟨r̃⟩ of the reference distribution (2 ln 2 − 1 for Poisson)."""
    _check_kind(kind)
    if kind is EnsembleKind.POISSON:
        return 2.0 * math.log(2.0) - 1.0
    return integrate.quad(lambda x: x * float(ratio_tilde_surmise(kind, x)), 0.0, 1.0)[0]


def _sine_kernel(r: np.ndarray) -> np.ndarray:
    return np.sinc(r)  # sin(πr)/(πr)


def _sine_kernel_derivative(r: np.ndarray) -> np.ndarray:
    x = math.pi * r
    safe = np.where(np.abs(x) < 1e-8, 1.0, x)
    value = math.pi * (safe * np.cos(safe) - np.sin(safe)) / (safe * safe)
    return np.where(np.abs(x) < 1e-8, 0.0, value)


def y2_reference(kind: EnsembleKind, r: np.ndarray) -> np.ndarray:
    """Two-point cluster function: 0, s(r)² + s'(r)(½ − Si(πr)/π), or s(r)²."""
    _check_kind(kind)
    r = np.abs(np.asarray(r, dtype=float))
    if kind is EnsembleKind.POISSON:
        return np.zeros_like(r)
    s = _sine_kernel(r)
    if kind is EnsembleKind.GUE:
        return s * s
    si, _ = special.sici(math.pi * r)
    return s * s + _sine_kernel_derivative(r) * (0.5 - si / math.pi)


def form_factor_reference(kind: EnsembleKind, tau: np.ndarray) -> np.ndarray:
    """K(τ) = 1 − b(τ) with the Heisenberg point at τ = 2π."""
    _check_kind(kind)
    tau = np.abs(np.asarray(tau, dtype=float))
    if kind is EnsembleKind.POISSON:
        return np.ones_like(tau)
    t = tau / (2.0 * math.pi)
    if kind is EnsembleKind.GUE:
        return np.minimum(t, 1.0)
    small = 2.0 * t - t * np.log1p(2.0 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        large = 2.0 - t * np.log((2.0 * t + 1.0) / (2.0 * t - 1.0))
    return np.where(t <= 1.0, small, large)


def sigma2_gue(length: np.ndarray) -> np.ndarray:
    """Exact GUE number variance."""
    length = np.asarray(length, dtype=float)
    x = 2.0 * math.pi * np.where(length > 0, length, 1.0)
    si, ci = special.sici(x)
    value = (np.log(x) + np.euler_gamma + 1.0 - np.cos(x) - ci) / math.pi**2 + length * (
        1.0 - 2.0 / math.pi * si
    )
    return np.where(length > 0, value, 0.0)


def sigma2_reference(kind: EnsembleKind, length: np.ndarray) -> np.ndarray:
    """Σ²(L): L for Poisson, exact sine-kernel expressions for GOE and GUE."""
    _check_kind(kind)
    length = np.asarray(length, dtype=float)
    if kind is EnsembleKind.POISSON:
        return length.copy()
    gue = sigma2_gue(length)
    if kind is EnsembleKind.GUE:
        return gue
    si_half, _ = special.sici(math.pi * length)
    return 2.0 * gue + (si_half / math.pi) ** 2 - si_half / math.pi


@lru_cache(maxsize=16)
def _power_table(kind: EnsembleKind, levels: int) -> tuple[np.ndarray, np.ndarray]:
    dim = int(math.ceil(levels / 0.6)) + 2
    spec = EnsembleSpec(
        kind, dim=dim, master_seed=POWER_TABLE_SEED, realizations=POWER_TABLE_REALIZATIONS
    )
    logger.info("Building %s power-spectrum table for %d levels", kind.value, levels)
    unfolded = [unfold_ensemble_spectrum(e, spec) for e in sample_ensemble(spec)]
    curve = power_spectrum(unfolded, levels=levels)
    return curve.grid, curve.values


def power_spectrum_reference(
    kind: EnsembleKind, tau: np.ndarray, levels: int | None = None
) -> np.ndarray:
    """
    Mean power spectrum of δ_q.

    Poisson uses the random-walk form 1/(2 sin²(πτ)); GOE and GUE are
    interpolated from a Monte-Carlo table for ``levels`` levels.
    """
    _check_kind(kind)
    tau = np.asarray(tau, dtype=float)
    if kind is EnsembleKind.POISSON:
        with np.errstate(divide="ignore"):
            return 1.0 / (2.0 * np.sin(math.pi * tau) ** 2)
    n = levels if levels is not None else int(round(1.0 / float(np.min(tau))))
    grid, values = _power_table(kind, n)
    return np.interp(tau, grid, values)


def reference_statistics(
    kind: EnsembleKind,
    observable: ObservableKind,
    grid: np.ndarray,
    tilde: bool = False,
    levels: int | None = None,
) -> ObservableCurve:
    """
    Reference curve of ``observable`` for a Poisson, GOE or GUE spectrum.

    Raises:
        NotAvailableError: for other ensembles or observables without a reference
    """
    _check_kind(kind)
    grid = np.asarray(grid, dtype=float)
    if observable is ObservableKind.NNSD:
        values = wigner_surmise(kind, grid)
    elif observable is ObservableKind.CUMULATIVE_NNSD:
        values = wigner_surmise_cdf(kind, grid)
    elif observable is ObservableKind.RATIO_DIST:
        values = ratio_tilde_surmise(kind, grid) if tilde else ratio_surmise(kind, grid)
    elif observable is ObservableKind.CUMULATIVE_RATIO_DIST:
        values = ratio_tilde_cdf(kind, grid) if tilde else ratio_surmise_cdf(kind, grid)
    elif observable is ObservableKind.NUMBER_VARIANCE:
        values = sigma2_reference(kind, grid)
    elif observable is ObservableKind.Y2:
        values = y2_reference(kind, grid)
    elif observable is ObservableKind.FORM_FACTOR:
        values = form_factor_reference(kind, grid)
    elif observable is ObservableKind.POWER_SPECTRUM:
        values = power_spectrum_reference(kind, grid, levels)
    else:
        raise NotAvailableError(
            f"no reference curve for {observable.value}",
            {"kind": kind.value, "observable": observable.value},
        )
    return ObservableCurve(
        observable, grid, np.asarray(values, dtype=float), None, meta={"reference": kind.value}
    )
