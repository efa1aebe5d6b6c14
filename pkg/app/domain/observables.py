"""
Fluctuation statistics of unfolded spectra.

Every estimator accepts one spectrum or a sequence of spectra (an
ensemble); ensemble averages are plain pooled sums, so the order of the
realizations never matters.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy import integrate, signal, stats

from ..infrastructure.exceptions import (
    DegenerateInputError,
    InsufficientDataError,
    ValidationError,
)
from .models import SPEED_OF_LIGHT, ObservableCurve, ObservableKind, RawSpectrum, UnfoldedSpectrum

MIN_HISTOGRAM_LEVELS = 100
MIN_Y2_SPECTRA = 50
LENGTH_PEAK_MIN_M = 0.3

logger = logging.getLogger(__name__)

SpectrumLike = UnfoldedSpectrum | RawSpectrum | np.ndarray
SpectrumInput = SpectrumLike | Sequence[SpectrumLike]


def level_arrays(data: SpectrumInput) -> list[np.ndarray]:
    """Normalize one spectrum or an ensemble into a list of ascending arrays."""
    if isinstance(data, UnfoldedSpectrum):
        return [np.asarray(data.epsilons, dtype=float)]
    if isinstance(data, RawSpectrum):
        return [np.sort(np.asarray(data.levels, dtype=float))]
    if isinstance(data, np.ndarray) and data.ndim == 1:
        return [np.sort(data.astype(float))]
    if isinstance(data, (list, tuple)) and data and np.isscalar(data[0]):
        return [np.sort(np.asarray(data, dtype=float))]
    arrays: list[np.ndarray] = []
    for item in data:
        arrays.extend(level_arrays(item))
    return arrays


def _require_levels(arrays: list[np.ndarray], minimum: int, what: str) -> int:
    total = sum(a.size for a in arrays)
    if total < minimum:
        raise InsufficientDataError(f"{what} needs at least {minimum} levels", minimum, total)
    return total


def _density_histogram(
    samples: np.ndarray, edges: np.ndarray, total: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    counts, _ = np.histogram(samples, bins=edges)
    widths = np.diff(edges)
    norm = (total if total is not None else samples.size) * widths
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, counts / norm, np.sqrt(counts) / norm


def _empirical_cdf(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    ordered = np.sort(samples)
    return np.searchsorted(ordered, grid, side="right") / ordered.size


def spacings(data: SpectrumInput) -> np.ndarray:
    """Nearest-neighbour spacings pooled over every spectrum."""
    return np.concatenate([np.diff(a) for a in level_arrays(data)])


def nnsd(
    data: SpectrumInput, bin_width: float = 0.1, s_max: float | None = None
) -> ObservableCurve:
    """
    Normalized spacing histogram P(s).

    Raises:
        InsufficientDataError: for fewer than 100 levels in total
    """
    arrays = level_arrays(data)
    _require_levels(arrays, MIN_HISTOGRAM_LEVELS, "spacing distribution")
    s = spacings(arrays)
    top = s_max if s_max is not None else bin_width * math.ceil(s.max() / bin_width + 1e-12)
    edges = np.arange(0.0, top + 0.5 * bin_width, bin_width)
    grid, density, err = _density_histogram(s[s <= edges[-1]], edges, total=s.size)
    return ObservableCurve(
        ObservableKind.NNSD,
        grid,
        density,
        err,
        meta={"bin_width": bin_width, "spacings": int(s.size), "mean_spacing": float(s.mean())},
    )


def nnsd_cumulative(data: SpectrumInput, grid: np.ndarray | None = None) -> ObservableCurve:
    """Cumulative spacing distribution I(s), monotone from 0 to 1."""
    arrays = level_arrays(data)
    _require_levels(arrays, MIN_HISTOGRAM_LEVELS, "spacing distribution")
    s = spacings(arrays)
    if grid is None:
        grid = np.linspace(0.0, float(s.max()), 401)
    values = _empirical_cdf(s, grid)
    return ObservableCurve(
        ObservableKind.CUMULATIVE_NNSD,
        np.asarray(grid, dtype=float),
        values,
        np.sqrt(values * (1.0 - values) / s.size),
        meta={"spacings": int(s.size)},
    )


def spacing_ratios(data: SpectrumInput) -> np.ndarray:
    """
    r_j = s_j / s_{j-1} within each spectrum.

    Raises:
        DegenerateInputError: on a zero spacing
    """
    ratios = []
    for levels in level_arrays(data):
        s = np.diff(levels)
        if np.any(s <= 0):
            raise DegenerateInputError(
                "zero spacing in level sequence", {"position": int(np.argmin(s))}
            )
        ratios.append(s[1:] / s[:-1])
    return np.concatenate(ratios)


def ratio_distribution(
    data: SpectrumInput, tilde: bool = False, bin_width: float = 0.1, r_max: float = 10.0
) -> ObservableCurve:
    """
    Histogram of spacing ratios, or of r̃ = min(r, 1/r) on [0, 1].

    The r histogram covers [0, r_max] plus one overflow bin up to the largest
    ratio, so it integrates to one. Unfolding does not change ratios.
    """
    arrays = level_arrays(data)
    _require_levels(arrays, MIN_HISTOGRAM_LEVELS, "ratio distribution")
    r = spacing_ratios(arrays)
    r_tilde = np.minimum(r, 1.0 / r)
    if tilde:
        edges = np.linspace(0.0, 1.0, int(round(1.0 / bin_width)) + 1)
        samples = r_tilde
    else:
        edges = np.arange(0.0, r_max + 0.5 * bin_width, bin_width)
        if r.max() > edges[-1]:
            edges = np.append(edges, r.max())
        samples = r
    grid, density, err = _density_histogram(samples, edges)
    return ObservableCurve(
        ObservableKind.RATIO_DIST,
        grid,
        density,
        err,
        meta={
            "variable": "r_tilde" if tilde else "r",
            "bin_width": bin_width,
            "ratios": int(r.size),
            "mean_r_tilde": float(r_tilde.mean()),
        },
    )


def ratio_cumulative(
    data: SpectrumInput, tilde: bool = False, grid: np.ndarray | None = None
) -> ObservableCurve:
    """Empirical CDF of r (or r̃)."""
    r = spacing_ratios(data)
    samples = np.minimum(r, 1.0 / r) if tilde else r
    if grid is None:
        grid = np.linspace(0.0, 1.0 if tilde else 10.0, 401)
    values = _empirical_cdf(samples, grid)
    return ObservableCurve(
        ObservableKind.CUMULATIVE_RATIO_DIST,
        np.asarray(grid, dtype=float),
        values,
        np.sqrt(values * (1.0 - values) / samples.size),
        meta={"variable": "r_tilde" if tilde else "r", "ratios": int(samples.size)},
    )


def _window_counts(levels: np.ndarray, length: float, step: float) -> np.ndarray:
    origins = np.arange(levels[0], levels[-1] - length + 1e-12, step)
    if origins.size == 0:
        return np.zeros(0)
    return np.searchsorted(levels, origins + length, side="left") - np.searchsorted(
        levels, origins, side="left"
    )


def number_variance(
    data: SpectrumInput, l_grid: np.ndarray | Sequence[float], step: float = 0.25
) -> ObservableCurve:
    """
    Σ²(L) from windows [x, x+L) slid in steps of ``step`` mean spacings.

    Counts from every realization are pooled; the error bar is the spread
    of per-realization variances (or of ten contiguous blocks for a single
    spectrum).

    Raises:
        InsufficientDataError: if max(L) exceeds a tenth of the shortest spectrum
    """
    arrays = level_arrays(data)
    grid = np.asarray(l_grid, dtype=float)
    if grid.size == 0 or np.any(grid < 0):
        raise ValidationError("l_grid", "window lengths must be non-negative")
    shortest = min(a.size for a in arrays)
    if grid.max() > shortest / 10.0:
        raise InsufficientDataError(
            f"L_max={grid.max():g} exceeds a tenth of the {shortest} available levels",
            required=int(math.ceil(10 * grid.max())),
            available=shortest,
        )

    values = np.zeros(grid.size)
    errors = np.zeros(grid.size)
    for k, length in enumerate(grid):
        per_sample = [_window_counts(a, length, step) for a in arrays]
        if len(per_sample) == 1:
            per_sample = [b for b in np.array_split(per_sample[0], 10) if b.size > 1]
        pooled = np.concatenate(per_sample).astype(float)
        values[k] = pooled.var()
        partial = np.array([p.var() for p in per_sample if p.size > 1])
        errors[k] = partial.std(ddof=1) / math.sqrt(partial.size) if partial.size > 1 else np.nan
    return ObservableCurve(
        ObservableKind.NUMBER_VARIANCE,
        grid,
        values,
        errors,
        meta={"window_step": step, "realizations": len(arrays)},
    )


def estimate_y2(
    data: SpectrumInput, r_max: float = 5.0, dr: float = 0.1
) -> ObservableCurve:
    """
    Two-point cluster function Y₂(r) = 1 − R₂(r) from pair separations.

    Only levels at least ``r_max`` below the top of their spectrum serve as
    reference levels, so every reference sees a complete neighbourhood.
    """
    arrays = level_arrays(data)
    if len(arrays) < MIN_Y2_SPECTRA:
        logger.warning(
            "Y2 from %d spectra (fewer than %d) has a high variance", len(arrays), MIN_Y2_SPECTRA
        )
    edges = np.arange(0.0, r_max + 0.5 * dr, dr)
    counts = np.zeros(edges.size - 1)
    references = 0
    for levels in arrays:
        n_ref = int(np.searchsorted(levels, levels[-1] - r_max, side="right"))
        if n_ref == 0:
            continue
        references += n_ref
        ref = levels[:n_ref]
        offset = 1
        while offset < levels.size:
            diffs = levels[offset : offset + n_ref] - ref[: levels.size - offset]
            if diffs.size == 0 or diffs.min() > r_max:
                break
            counts += np.histogram(diffs, bins=edges)[0]
            offset += 1
    if references == 0:
        raise InsufficientDataError("no spectrum is longer than r_max", r_max, 0)
    r2 = counts / (references * dr)
    grid = 0.5 * (edges[:-1] + edges[1:])
    return ObservableCurve(
        ObservableKind.Y2,
        grid,
        1.0 - r2,
        np.sqrt(counts) / (references * dr),
        meta={"dr": dr, "reference_levels": references, "spectra": len(arrays)},
    )


def sigma2_from_y2(y2: ObservableCurve, l_grid: np.ndarray) -> np.ndarray:
    """Σ²(L) = L − 2∫₀^L (L − r)·Y₂(r) dr by trapezoid on the Y₂ grid."""
    r = np.concatenate([[0.0], y2.grid])
    y = np.concatenate([[y2.values[0]], y2.values])
    out = np.empty(len(l_grid))
    for k, length in enumerate(l_grid):
        mask = r <= length
        rr = np.append(r[mask], length)
        yy = np.append(y[mask], np.interp(length, r, y))
        out[k] = length - 2.0 * integrate.trapezoid((length - rr) * yy, rr)
    return out


def form_factor(
    data: SpectrumInput,
    tau_grid: np.ndarray | Sequence[float],
    tau_bin: float = 0.2,
    sub_samples: int = 16,
) -> ObservableCurve:
    """
    Connected, Gaussian-windowed spectral form factor.

    K(τ) = (⟨|S(τ)|²⟩ − |⟨S(τ)⟩|²) / ⟨Σ_j w_j²⟩
    with S(τ) = Σ_j w_j e^{iτε_j}. Each grid value is averaged over
    ``sub_samples`` points spanning ``tau_bin``. The convention puts the
    GUE Heisenberg point at τ = 2π.
    """
    arrays = level_arrays(data)
    grid = np.asarray(tau_grid, dtype=float)
    if np.any(grid <= 0):
        raise ValidationError("tau_grid", "form-factor arguments must be positive")
    offsets = (np.arange(sub_samples) + 0.5) / sub_samples - 0.5
    fine = grid[:, None] + tau_bin * offsets[None, :]

    sums = []
    norms = []
    for levels in arrays:
        centre = 0.5 * (levels[0] + levels[-1])
        width = (levels[-1] - levels[0]) / 8.0
        w = np.exp(-0.5 * ((levels - centre) / width) ** 2)
        phases = np.exp(1j * fine[..., None] * levels[None, None, :])
        sums.append(phases @ w)
        norms.append(float(np.sum(w * w)))
    s = np.asarray(sums)  # (realizations, grid, sub)
    norm = float(np.mean(norms))
    power = np.abs(s) ** 2
    if len(arrays) > 1:
        connected = power - np.abs(s.mean(axis=0, keepdims=True)) ** 2
    else:
        connected = power
    per_realization = connected.mean(axis=2) / norm
    values = per_realization.mean(axis=0)
    if len(arrays) > 1:
        errors = per_realization.std(axis=0, ddof=1) / math.sqrt(len(arrays))
    else:
        errors = np.full(grid.size, np.nan)
    return ObservableCurve(
        ObservableKind.FORM_FACTOR,
        grid,
        values,
        errors,
        meta={"tau_bin": tau_bin, "window": "gaussian, sigma = range/8", "spectra": len(arrays)},
    )


def power_spectrum(data: SpectrumInput, levels: int | None = None) -> ObservableCurve:
    """
    s(τ = l/n) = ⟨|n^{-1/2} Σ_q δ_q e^{-2πi l q / n}|²⟩ for l = 1 … n.

    δ_q = ε_{q+1} − ε_1 − q. Spectra longer than ``levels`` (default: the
    shortest one) are truncated to their first ``levels`` values.
    """
    arrays = level_arrays(data)
    n = levels if levels is not None else min(a.size for a in arrays)
    if n < MIN_HISTOGRAM_LEVELS:
        raise InsufficientDataError(
            f"power spectrum needs at least {MIN_HISTOGRAM_LEVELS} levels", MIN_HISTOGRAM_LEVELS, n
        )
    if any(a.size < n for a in arrays):
        raise InsufficientDataError("spectra are shorter than the requested length", n)
    spectra = []
    for a in arrays:
        eps = a[:n]
        delta = eps - eps[0] - np.arange(n)
        amp = np.fft.fft(delta)
        spectra.append(np.abs(np.roll(amp, -1)) ** 2 / n)  # l = 1..n-1, then l = n ≡ 0
    stack = np.asarray(spectra)
    values = stack.mean(axis=0)
    errors = (
        stack.std(axis=0, ddof=1) / math.sqrt(len(spectra))
        if len(spectra) > 1
        else np.full(n, np.nan)
    )
    grid = np.arange(1, n + 1) / n
    return ObservableCurve(
        ObservableKind.POWER_SPECTRUM,
        grid,
        values,
        errors,
        meta={"levels": n, "spectra": len(spectra)},
    )


def log_log_slope(curve: ObservableCurve, lo: float, hi: float) -> float:
    """Least-squares slope of log(values) against log(grid) on [lo, hi]."""
    mask = (curve.grid >= lo) & (curve.grid <= hi) & (curve.values > 0)
    if np.count_nonzero(mask) < 2:
        raise InsufficientDataError("fewer than two points in the slope range", 2)
    fit = stats.linregress(np.log(curve.grid[mask]), np.log(curve.values[mask]))
    return float(fit.slope)


def _k_window(k: np.ndarray, k_lo: float, k_hi: float, taper: float) -> np.ndarray:
    w = np.ones_like(k)
    rise = k < k_lo + taper
    fall = k > k_hi - taper
    sigma = taper / 3.0
    w[rise] = np.exp(-0.5 * ((k[rise] - (k_lo + taper)) / sigma) ** 2)
    w[fall] = np.exp(-0.5 * ((k[fall] - (k_hi - taper)) / sigma) ** 2)
    return w


def length_spectrum(
    raw: RawSpectrum | np.ndarray,
    smooth_density: Callable[[np.ndarray], np.ndarray],
    l_grid_m: np.ndarray | Sequence[float],
    taper_fraction: float = 0.1,
) -> ObservableCurve:
    """
    |Σ_i w(k_i)e^{ik_iℓ} − ∫w(k)ρ̄(k)e^{ikℓ}dk| over ℓ (metres), k_i = 2πf_i/c.

    ``smooth_density`` is the mean level density per GHz (derivative of the
    smooth staircase). The window w is flat with Gaussian-tapered edges of
    ``taper_fraction`` of the k range.
    """
    levels = np.sort(raw.levels if isinstance(raw, RawSpectrum) else np.asarray(raw, dtype=float))
    if levels.size < 10:
        raise InsufficientDataError("length spectrum needs at least 10 levels", 10, levels.size)
    ell = np.asarray(l_grid_m, dtype=float)
    to_k = 2.0 * math.pi * 1e9 / SPEED_OF_LIGHT  # rad/m per GHz
    k = levels * to_k
    k_lo, k_hi = float(k[0]), float(k[-1])
    taper = taper_fraction * (k_hi - k_lo)

    resolution = 2.0 * math.pi / (k_hi - k_lo)
    if ell.size > 1 and np.min(np.diff(ell)) > 0.5 * resolution:
        logger.warning(
            "Length grid step exceeds half the resolution %.4g m; peaks may be missed", resolution
        )
    nyquist = math.pi / float(np.mean(np.diff(k)))
    if ell.max() > nyquist:
        logger.warning("Length grid extends beyond the sampling limit %.4g m", nyquist)

    w_levels = _k_window(k, k_lo, k_hi, taper)
    points = max(8192, int(20 * (k_hi - k_lo) * max(ell.max(), 1.0)))
    f_fine = np.linspace(levels[0], levels[-1], points)
    k_fine = f_fine * to_k
    weight_fine = _k_window(k_fine, k_lo, k_hi, taper) * smooth_density(f_fine)

    values = np.empty(ell.size)
    for j, length in enumerate(ell):
        discrete = np.sum(w_levels * np.exp(1j * k * length))
        smooth = integrate.trapezoid(weight_fine * np.exp(1j * k_fine * length), f_fine)
        values[j] = abs(discrete - smooth)
    return ObservableCurve(
        ObservableKind.LENGTH_SPECTRUM,
        ell,
        values,
        None,
        meta={"resolution_m": resolution, "taper_fraction": taper_fraction, "levels": levels.size},
    )


def find_length_peaks(
    curve: ObservableCurve, min_length_m: float = LENGTH_PEAK_MIN_M, count: int | None = None
) -> np.ndarray:
    """
    Local maxima of a length spectrum beyond ``min_length_m``, strongest first.

    The region near ℓ = 0 carries leakage of the smooth part and is skipped.
    """
    mask = curve.grid > min_length_m
    grid = curve.grid[mask]
    values = curve.values[mask]
    noise = float(np.median(values))
    idx, props = signal.find_peaks(values, prominence=noise)
    order = np.argsort(props["prominences"])[::-1]
    peaks = grid[idx[order]]
    return peaks[:count] if count is not None else peaks
