"""
Unfolding of raw level sequences to unit mean spacing.

Three ways to obtain the smooth staircase ⟨N(E)⟩:
    - Weyl formula of a billiard with a least-squares offset N₀
    - low-order polynomial fitted to the empirical staircase N(E_i) = i
    - a known ensemble density (semicircle or the uniform RP band)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import stats

from ..infrastructure.exceptions import DegenerateFitError, InsufficientDataError, ValidationError
from .billiards import fit_weyl_offset, weyl_count
from .ensembles import RP_BAND_WIDTH
from .models import (
    BilliardGeometry,
    EnsembleKind,
    EnsembleSpec,
    RawSpectrum,
    UnfoldedSpectrum,
    UnfoldMethod,
)

MIN_LEVELS = 10
DEGENERACY_SHIFT = 1e-9  # in units of the mean spacing
UNIT_MISMATCH_FACTOR = 10.0

logger = logging.getLogger(__name__)

Staircase = Callable[[np.ndarray], np.ndarray]


def _as_raw(raw: RawSpectrum | np.ndarray | Sequence[float]) -> RawSpectrum:
    if isinstance(raw, RawSpectrum):
        return raw
    return RawSpectrum(levels=np.asarray(raw, dtype=float), source="array")


def prepare_levels(levels: np.ndarray) -> np.ndarray:
    """
    Sorted copy with exact ties split by 1e-9 of the mean spacing.

    Raises:
        InsufficientDataError: for fewer than 10 levels
    """
    arr = np.sort(np.asarray(levels, dtype=float))
    if arr.size < MIN_LEVELS:
        raise InsufficientDataError(
            f"unfolding needs at least {MIN_LEVELS} levels", MIN_LEVELS, int(arr.size)
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError("levels", "levels must be finite")
    mean_spacing = (arr[-1] - arr[0]) / (arr.size - 1)
    if mean_spacing <= 0:
        raise InsufficientDataError("all levels coincide", 2, 1)

    ties = np.diff(arr) <= 0
    if np.any(ties):
        # k-th member of a run of equal values moves up by k shifts
        run = np.zeros(arr.size)
        for i in np.flatnonzero(ties) + 1:
            run[i] = run[i - 1] + 1
        arr = arr + run * DEGENERACY_SHIFT * mean_spacing
        logger.debug("Split %d degenerate levels", int(np.count_nonzero(ties)))
    return arr


def trim_edges(raw: RawSpectrum | np.ndarray, fraction: float) -> RawSpectrum:
    """Drop ``fraction`` of the levels at each end of the sorted spectrum."""
    spectrum = _as_raw(raw)
    if not 0.0 <= fraction < 0.5:
        raise ValidationError("trim", "edge fraction must lie in [0, 0.5)", fraction)
    levels = np.sort(spectrum.levels)
    cut = int(math.floor(fraction * levels.size))
    kept = levels[cut : levels.size - cut]
    meta = {**spectrum.meta, "trim_fraction": fraction, "trimmed_levels": 2 * cut}
    return RawSpectrum(levels=kept, source=spectrum.source, unit=spectrum.unit, meta=meta)


def _check_mean_spacing(eps: np.ndarray, method: str) -> float:
    mean_spacing = float((eps[-1] - eps[0]) / (eps.size - 1))
    if not (1.0 / UNIT_MISMATCH_FACTOR <= mean_spacing <= UNIT_MISMATCH_FACTOR):
        logger.warning(
            "Unfolded mean spacing %.4g after %s unfolding; check level units", mean_spacing, method
        )
    return mean_spacing


def unfold_weyl(raw: RawSpectrum | np.ndarray, geom: BilliardGeometry) -> UnfoldedSpectrum:
    """
    ε_i = ⟨N(f_i)⟩ from the Weyl formula, levels in GHz.

    N₀ is fitted by least squares against the staircase midpoints.
    """
    spectrum = _as_raw(raw)
    levels = prepare_levels(spectrum.levels)
    n0 = fit_weyl_offset(levels, geom)
    eps = weyl_count(geom, levels, n0=n0)
    mean_spacing = _check_mean_spacing(eps, "Weyl")
    return UnfoldedSpectrum(
        epsilons=eps,
        method=UnfoldMethod.WEYL,
        source=spectrum.source,
        meta={**spectrum.meta, "n0": n0, "mean_spacing": mean_spacing, "radius_m": geom.radius_m},
    )


def fit_staircase_polynomial(
    levels: np.ndarray, degree: int = 2, counts: np.ndarray | None = None
) -> Polynomial:
    """
    Least-squares polynomial through the staircase N(E_i) = i.

    ``counts`` replaces the default staircase values i, e.g. with the
    ensemble-averaged staircase of pooled levels.

    Raises:
        DegenerateFitError: if the fit decreases anywhere on the data range
    """
    if degree not in (2, 3):
        raise ValidationError("degree", "polynomial degree must be 2 or 3", degree)
    staircase = np.arange(1, levels.size + 1, dtype=float) if counts is None else counts
    poly = Polynomial.fit(levels, staircase, degree)
    grid = np.union1d(np.linspace(levels[0], levels[-1], 512), levels)
    if np.any(poly.deriv()(grid) <= 0):
        raise DegenerateFitError("fitted mean staircase is not monotone on the data range", degree)
    return poly


def unfold_polynomial(raw: RawSpectrum | np.ndarray, degree: int = 2) -> UnfoldedSpectrum:
    """ε_i from a polynomial fit of the empirical staircase."""
    spectrum = _as_raw(raw)
    levels = prepare_levels(spectrum.levels)
    poly = fit_staircase_polynomial(levels, degree)
    eps = poly(levels)
    mean_spacing = _check_mean_spacing(eps, f"degree-{degree} polynomial")
    return UnfoldedSpectrum(
        epsilons=eps,
        method=UnfoldMethod.POLYNOMIAL,
        degree=degree,
        source=spectrum.source,
        meta={**spectrum.meta, "mean_spacing": mean_spacing},
    )


def semicircle_staircase(n: int, radius: float) -> Staircase:
    """Integrated semicircle density n·F(E/R)."""

    def staircase(energies: np.ndarray) -> np.ndarray:
        x = np.clip(np.asarray(energies, dtype=float) / radius, -1.0, 1.0)
        return n * (0.5 + (x * np.sqrt(1.0 - x * x) + np.arcsin(x)) / math.pi)

    return staircase


def uniform_staircase(n: int, width: float) -> Staircase:
    """Integrated box density on [−W/2, W/2]."""

    def staircase(energies: np.ndarray) -> np.ndarray:
        return n * stats.uniform.cdf(np.asarray(energies, dtype=float), -0.5 * width, width)

    return staircase


def ensemble_staircase(spec: EnsembleSpec) -> Staircase | None:
    """Large-n mean staircase of an ensemble, when one is known in closed form."""
    n = spec.dim
    if spec.kind is EnsembleKind.POISSON:
        return uniform_staircase(n, RP_BAND_WIDTH)
    if spec.kind is EnsembleKind.GOE:
        return semicircle_staircase(n, 1.0)
    if spec.kind is EnsembleKind.GUE:
        return semicircle_staircase(n, math.sqrt(2.0))
    if spec.kind is EnsembleKind.GOE_TO_GUE:
        return semicircle_staircase(n, math.sqrt(1.0 + (spec.xi * math.pi) ** 2 / n))
    return None


def unfold_analytic(raw: RawSpectrum | np.ndarray, staircase: Staircase) -> UnfoldedSpectrum:
    """ε_i = ⟨N(E_i)⟩ for a known mean staircase."""
    spectrum = _as_raw(raw)
    levels = prepare_levels(spectrum.levels)
    eps = np.asarray(staircase(levels), dtype=float)
    mean_spacing = _check_mean_spacing(eps, "analytic")
    return UnfoldedSpectrum(
        epsilons=eps,
        method=UnfoldMethod.ANALYTIC,
        source=spectrum.source,
        meta={**spectrum.meta, "mean_spacing": mean_spacing},
    )


def unfold_ensemble_spectrum(
    eigs: np.ndarray,
    spec: EnsembleSpec,
    trim: float = 0.2,
    method: UnfoldMethod | None = None,
    degree: int = 3,
) -> UnfoldedSpectrum:
    """
    Unfold one matrix spectrum.

    By default the known ensemble density is used where it exists and a
    cubic staircase fit otherwise (RP); ``trim`` of the levels is dropped at
    each edge before unfolding.
    """
    raw = RawSpectrum(
        levels=np.asarray(eigs, dtype=float),
        source=f"{spec.kind.value}:n={spec.dim}",
        meta={"kind": spec.kind.value},
    )
    staircase = ensemble_staircase(spec)
    if method is None:
        method = UnfoldMethod.ANALYTIC if staircase is not None else UnfoldMethod.POLYNOMIAL

    trimmed = trim_edges(raw, trim)
    if method is UnfoldMethod.ANALYTIC:
        if staircase is None:
            raise ValidationError("unfold", "no closed-form density for this ensemble", spec.kind)
        return unfold_analytic(trimmed, staircase)
    if method is UnfoldMethod.POLYNOMIAL:
        return unfold_polynomial(trimmed, degree)
    if method is UnfoldMethod.NONE:
        levels = prepare_levels(trimmed.levels)
        return UnfoldedSpectrum(levels, UnfoldMethod.NONE, source=raw.source, meta=trimmed.meta)
    raise ValidationError("unfold", "Weyl unfolding applies to billiard spectra only", method)


def unfold_ensemble(
    spectra: Sequence[np.ndarray], spec: EnsembleSpec, trim: float = 0.2, degree: int = 3
) -> list[UnfoldedSpectrum]:
    """
    Unfold every realization of an ensemble with one shared staircase.

    Without a closed-form density (RP) the polynomial is fitted to the
    pooled, realization-averaged staircase over the central 1 − trim of the
    levels, so long-range fluctuations of single spectra are not fitted
    away.
    """
    if ensemble_staircase(spec) is not None or len(spectra) < 2:
        return [unfold_ensemble_spectrum(e, spec, trim=trim, degree=degree) for e in spectra]

    pooled = prepare_levels(np.concatenate([np.asarray(e, dtype=float) for e in spectra]))
    counts = np.arange(1, pooled.size + 1, dtype=float) / len(spectra)
    cut = int(math.floor(0.5 * trim * pooled.size))
    central = slice(cut, pooled.size - cut)
    poly = fit_staircase_polynomial(pooled[central], degree, counts=counts[central])
    logger.debug("Pooled %d levels from %d spectra for the staircase", pooled.size, len(spectra))

    unfolded = []
    for eigs in spectra:
        raw = RawSpectrum(
            levels=np.asarray(eigs, dtype=float),
            source=f"{spec.kind.value}:n={spec.dim}",
            meta={"kind": spec.kind.value},
        )
        trimmed = trim_edges(raw, trim)
        eps = poly(prepare_levels(trimmed.levels))
        mean_spacing = _check_mean_spacing(eps, "pooled polynomial")
        unfolded.append(
            UnfoldedSpectrum(
                epsilons=eps,
                method=UnfoldMethod.POLYNOMIAL,
                degree=degree,
                source=raw.source,
                meta={**trimmed.meta, "mean_spacing": mean_spacing, "pooled": len(spectra)},
            )
        )
    return unfolded


def split_frequency_windows(
    raw: RawSpectrum, edges: Sequence[float]
) -> list[RawSpectrum]:
    """Cut a spectrum into half-open windows [edges[k], edges[k+1])."""
    bounds = np.asarray(edges, dtype=float)
    if bounds.size < 2 or np.any(np.diff(bounds) <= 0):
        raise ValidationError("edges", "window edges must be increasing with at least two values")
    windows = []
    for lo, hi in zip(bounds[:-1], bounds[1:], strict=True):
        mask = (raw.levels >= lo) & (raw.levels < hi)
        windows.append(
            RawSpectrum(
                levels=raw.levels[mask],
                source=f"{raw.source}[{lo:g},{hi:g})",
                unit=raw.unit,
                meta={**raw.meta, "window": [float(lo), float(hi)]},
            )
        )
    return windows
