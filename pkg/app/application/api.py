"""
Application layer: one use case per command.

Each use case validates its parameters, runs the domain services, writes its
output files and returns a :class:`RunResult` that the caller turns into a run
manifest with :func:`write_run_manifest`.
"""

from __future__ import annotations

import math
import time
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..domain import rp_analytics
from ..domain.billiards import circle_eigenfrequencies, periodic_orbit_lengths, weyl_density
from ..domain.ensembles import sample_ensemble
from ..domain.inference import (
    build_tau_oracle,
    build_xi_table,
    estimate_xi_crosscorr,
    fit_lambda_sigma2,
    fit_lambda_windows,
    fit_tau_abs,
    reciprocal_xi_fit,
    tau_grid,
)
from ..domain.models import (
    BilliardGeometry,
    EnsembleKind,
    EnsembleSpec,
    ObservableCurve,
    ObservableKind,
    RawSpectrum,
    RunManifest,
    ScatteringConfig,
    UnfoldedSpectrum,
    UnfoldMethod,
)
from ..domain.observables import (
    estimate_y2,
    find_length_peaks,
    form_factor,
    length_spectrum,
    log_log_slope,
    nnsd,
    nnsd_cumulative,
    number_variance,
    power_spectrum,
    ratio_cumulative,
    ratio_distribution,
)
from ..domain.reference import reference_statistics
from ..domain.scattering import (
    cross_correlation,
    default_eps_grid,
    fluctuations,
    normalize_correlation,
    scattering_with_rp,
    transmission_coefficients,
    two_point_correlation,
    window_statistics,
)
from ..domain.schemas import (
    AnalyzeInput,
    EnsembleInput,
    FitLambdaInput,
    FitXiInput,
    ScatterInput,
    require_valid,
)
from ..domain.unfolding import (
    prepare_levels,
    trim_edges,
    unfold_ensemble,
    unfold_ensemble_spectrum,
    unfold_polynomial,
    unfold_weyl,
)
from ..infrastructure.config import get_settings
from ..infrastructure.exceptions import NotAvailableError, ValidationError
from ..infrastructure.logging import get_logger, log_operation
from ..utils import exports

logger = get_logger(__name__)

REFERENCE_KINDS = (EnsembleKind.POISSON, EnsembleKind.GOE, EnsembleKind.GUE)
FORM_FACTOR_GRID = np.arange(0.25, 3.0 * math.pi, 0.25)
LENGTH_GRID_M = np.arange(0.0, 2.0, 0.001)
POWER_SLOPE_RANGE = (1e-2, 1e-1)


@dataclass(slots=True)
class RunResult:
    """Files and headline numbers produced by a use case."""

    outputs: list[Path] = field(default_factory=list)
    inputs: list[Path] = field(default_factory=list)
    results: dict[str, Any] = field(default_factory=dict)
    parameters: dict[str, Any] = field(default_factory=dict)
    master_seed: int | None = None


def _threads(threads: int | None) -> int:
    if threads is not None:
        return threads
    return get_settings().simulation.resolved_threads()


def _spec_from_header(header: dict[str, Any]) -> EnsembleSpec | None:
    try:
        kind = EnsembleKind(header["model"])
        return EnsembleSpec(
            kind,
            dim=int(header["dim"]),
            master_seed=int(header.get("seed", 0)),
            lam=float(header.get("lambda", 0.0)),
            xi=float(header.get("xi", 0.0)),
        )
    except (KeyError, ValueError, TypeError):
        return None


def unfold_levels(
    raw: RawSpectrum,
    unfold: str = "auto",
    trim: float | None = None,
    radius_m: float | None = None,
) -> UnfoldedSpectrum:
    """
    Unfold one level file.

    ``auto`` uses the ensemble density for files written by ``gen``, the Weyl
    formula when the header names a billiard radius, and a quadratic staircase
    otherwise.
    """
    spec = _spec_from_header(raw.meta)
    if radius_m is None and isinstance(raw.meta.get("radius_m"), (int, float)):
        radius_m = float(raw.meta["radius_m"])

    method = unfold
    if method == "auto":
        method = "ensemble" if spec is not None else "weyl" if radius_m is not None else "poly2"

    if method == "ensemble" and spec is not None:
        edge = get_settings().simulation.edge_trim if trim is None else trim
        return unfold_ensemble_spectrum(raw.levels, spec, trim=edge)
    edge = 0.0 if trim is None else trim
    trimmed = trim_edges(raw, edge) if edge > 0 else raw
    if method == "weyl":
        if radius_m is None:
            raise ValidationError("unfold", "Weyl unfolding needs the billiard radius", method)
        return unfold_weyl(trimmed, BilliardGeometry(radius_m=radius_m))
    if method == "poly2":
        return unfold_polynomial(trimmed, 2)
    return UnfoldedSpectrum(
        prepare_levels(trimmed.levels), UnfoldMethod.NONE, source=raw.source, meta=trimmed.meta
    )


def unfold_all(
    raws: Sequence[RawSpectrum],
    unfold: str = "auto",
    trim: float | None = None,
    radius_m: float | None = None,
) -> list[UnfoldedSpectrum]:
    """
    Unfold a set of level files.

    Files generated from one ensemble share a pooled mean staircase;
    everything else is unfolded file by file.
    """
    specs = [_spec_from_header(raw.meta) for raw in raws]
    first = specs[0]
    shared = all(s == first for s in specs)
    if first is not None and shared and unfold in ("auto", "ensemble") and len(raws) > 1:
        edge = get_settings().simulation.edge_trim if trim is None else trim
        return unfold_ensemble([raw.levels for raw in raws], first, trim=edge)
    return [unfold_levels(raw, unfold, trim, radius_m) for raw in raws]


def _read_all(paths: Sequence[str | Path]) -> list[RawSpectrum]:
    if not paths:
        raise ValidationError("levels", "at least one level file is required")
    return [exports.read_levels(p) for p in paths]


# --------------------------------------------------------------------------
# gen
# --------------------------------------------------------------------------


@log_operation("generate_spectra")
def generate_spectra(
    out_dir: str | Path,
    model: str,
    dim: int,
    realizations: int,
    seed: int,
    lam: float | None = None,
    xi: float | None = None,
    threads: int | None = None,
    progress: bool = False,
) -> RunResult:
    """
    Sample an ensemble and write one eigenvalue file per realization.

    Raises:
        ValidationError: on a bound violation or a parameter that does not
            belong to the model

    Example:
        >>> result = generate_spectra("runs/rp", "rp", 400, 200, 42, lam=0.475)
        >>> len(result.outputs)
        200
    """
    params = require_valid(
        EnsembleInput,
        {
            "model": model,
            "dim": dim,
            "lam": lam,
            "xi": xi,
            "seed": seed,
            "realizations": realizations,
        },
    )
    spec = EnsembleSpec(
        params["model"],
        dim=params["dim"],
        master_seed=params["seed"],
        realizations=params["realizations"],
        lam=params["lam"] or 0.0,
        xi=params["xi"] or 0.0,
    )
    spectra = sample_ensemble(spec, threads=_threads(threads), progress=progress)

    out = Path(out_dir)
    header: dict[str, Any] = {
        "model": spec.kind.value,
        "dim": spec.dim,
        "seed": spec.master_seed,
        "unit": "dimensionless",
    }
    if spec.kind is EnsembleKind.RP:
        header["lambda"] = spec.lam
    if spec.kind is EnsembleKind.GOE_TO_GUE:
        header["xi"] = spec.xi

    width = max(4, len(str(spec.realizations - 1)))
    outputs = []
    for index, eigs in enumerate(spectra):
        path = out / f"levels_{index:0{width}d}.csv"
        outputs.append(exports.write_levels(path, eigs, {**header, "realization": index}))
    logger.info("Wrote %d spectra of %d levels to %s", len(outputs), spec.dim, out)
    return RunResult(
        outputs=outputs,
        results={"spectra": len(outputs), "levels_per_spectrum": spec.dim},
        parameters={**params, "model": spec.kind.value},
        master_seed=spec.master_seed,
    )


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------


def _observable_curve(
    kind: ObservableKind,
    unfolded: list[UnfoldedSpectrum],
    raws: list[RawSpectrum],
    l_max: float,
    radius_m: float | None,
) -> ObservableCurve:
    settings = get_settings()
    if kind is ObservableKind.NNSD:
        return nnsd(unfolded)
    if kind is ObservableKind.CUMULATIVE_NNSD:
        return nnsd_cumulative(unfolded)
    if kind is ObservableKind.RATIO_DIST:
        return ratio_distribution(unfolded)
    if kind is ObservableKind.CUMULATIVE_RATIO_DIST:
        return ratio_cumulative(unfolded)
    if kind is ObservableKind.NUMBER_VARIANCE:
        grid = np.arange(0.1, l_max + 1e-9, settings.inference.l_step)
        return number_variance(unfolded, grid, step=settings.simulation.window_step)
    if kind is ObservableKind.Y2:
        return estimate_y2(unfolded)
    if kind is ObservableKind.FORM_FACTOR:
        return form_factor(unfolded, FORM_FACTOR_GRID)
    if kind is ObservableKind.POWER_SPECTRUM:
        return power_spectrum(unfolded)
    if kind is ObservableKind.LENGTH_SPECTRUM:
        if radius_m is None:
            raise ValidationError("observables", "the length spectrum needs a billiard radius")
        geom = BilliardGeometry(radius_m=radius_m)
        if len(raws) != 1:
            raise ValidationError("levels", "the length spectrum takes a single level file")
        return length_spectrum(raws[0], lambda f: weyl_density(geom, f), LENGTH_GRID_M)
    raise NotAvailableError(
        f"{kind.value} is not a level statistic", {"observable": kind.value}
    )


def _rp_curve(kind: ObservableKind, lam: float, grid: np.ndarray) -> ObservableCurve | None:
    if kind is ObservableKind.NNSD:
        return rp_analytics.nnsd_rp_curve(lam, grid)
    if kind is ObservableKind.CUMULATIVE_NNSD:
        return rp_analytics.nnsd_rp_curve(lam, grid, cumulative=True)
    if kind is ObservableKind.NUMBER_VARIANCE:
        return rp_analytics.sigma2_rp_curve(lam, grid)
    if kind is ObservableKind.Y2:
        return rp_analytics.y2_rp_curve(lam, grid)
    if kind is ObservableKind.FORM_FACTOR:
        return rp_analytics.k_rp_curve(lam, grid)
    return None


@log_operation("analyze_levels")
def analyze_levels(
    out_dir: str | Path,
    level_files: Sequence[str | Path],
    observables: str | Sequence[str],
    unfold: str = "auto",
    trim: float | None = None,
    l_max: float = 8.0,
    radius_m: float | None = None,
) -> RunResult:
    """
    Compute level statistics of one or more level files, with reference curves.

    Every requested observable is written as ``<observable>.csv``; the Poisson,
    GOE and GUE references on the same grid as ``<observable>_<kind>.csv``, and
    the analytic RP curve for files generated with the RP model.
    """
    raws = _read_all(level_files)
    if radius_m is None and isinstance(raws[0].meta.get("radius_m"), (int, float)):
        radius_m = float(raws[0].meta["radius_m"])
    params = require_valid(
        AnalyzeInput,
        {
            "unfold": unfold,
            "observables": observables,
            "trim": trim or 0.0,
            "l_max": l_max,
            "radius_m": radius_m,
        },
    )
    unfolded = unfold_all(raws, params["unfold"], trim, radius_m)
    rp_lambda = raws[0].meta.get("lambda") if raws[0].meta.get("model") == "rp" else None

    out = Path(out_dir)
    result = RunResult(
        inputs=[Path(p) for p in level_files],
        parameters={**params, "observables": [o.value for o in params["observables"]]},
    )
    for kind in params["observables"]:
        curve = _observable_curve(kind, unfolded, raws, params["l_max"], radius_m)
        result.outputs.append(exports.write_curve(out / f"{kind.value}.csv", curve))
        summary: dict[str, Any] = {"points": int(curve.grid.size)}

        for reference in REFERENCE_KINDS:
            try:
                ref = reference_statistics(
                    reference, kind, curve.grid, levels=curve.meta.get("levels")
                )
            except NotAvailableError:
                break
            result.outputs.append(
                exports.write_curve(out / f"{kind.value}_{reference.value}.csv", ref)
            )
        if isinstance(rp_lambda, (int, float)):
            analytic = _rp_curve(kind, float(rp_lambda), curve.grid)
            if analytic is not None:
                path = out / f"{kind.value}_rp_analytic.csv"
                result.outputs.append(exports.write_curve(path, analytic))

        if kind is ObservableKind.POWER_SPECTRUM:
            summary["log_log_slope"] = log_log_slope(curve, *POWER_SLOPE_RANGE)
        if kind is ObservableKind.LENGTH_SPECTRUM:
            summary["peaks_m"] = [float(x) for x in find_length_peaks(curve, count=5)]
        if kind is ObservableKind.RATIO_DIST:
            summary["mean_r_tilde"] = curve.meta["mean_r_tilde"]
        result.results[kind.value] = summary
    return result


# --------------------------------------------------------------------------
# fit-lambda
# --------------------------------------------------------------------------


@log_operation("fit_lambda")
def fit_lambda(
    out_dir: str | Path,
    level_files: Sequence[str | Path],
    unfold: str = "auto",
    l_max: float | None = None,
    lambda_min: float | None = None,
    lambda_max: float | None = None,
    tolerance: float | None = None,
    radius_m: float | None = None,
    window_edges: Sequence[float] | None = None,
) -> RunResult:
    """
    Fit the RP coupling to the number variance of the given spectra.

    With ``window_edges`` a single measured spectrum is split into frequency
    windows and λ is fitted per window.
    """
    cfg = get_settings().inference
    params = require_valid(
        FitLambdaInput,
        {
            "l_max": l_max if l_max is not None else cfg.l_max,
            "lambda_min": lambda_min if lambda_min is not None else cfg.lambda_min,
            "lambda_max": lambda_max if lambda_max is not None else cfg.lambda_max,
            "tolerance": tolerance if tolerance is not None else cfg.tolerance,
        },
    )
    options = {
        "interval": (params["lambda_min"], params["lambda_max"]),
        "tolerance": params["tolerance"],
        "scan_points": cfg.scan_points,
        "curvature_threshold": cfg.curvature_threshold,
    }
    raws = _read_all(level_files)
    out = Path(out_dir)
    result = RunResult(inputs=[Path(p) for p in level_files], parameters=dict(params))

    if window_edges:
        if len(raws) != 1:
            raise ValidationError("levels", "window fits take a single level file")
        geom = BilliardGeometry(radius_m=radius_m) if radius_m is not None else None
        fits = fit_lambda_windows(
            raws[0],
            window_edges,
            geom=geom,
            l_max=params["l_max"],
            l_step=cfg.l_step,
            window_step=get_settings().simulation.window_step,
            **options,
        )
        frame = pd.DataFrame(
            [
                {
                    "f_lo": fit.settings["window"][0],
                    "f_hi": fit.settings["window"][1],
                    "levels": fit.settings["levels"],
                    "lambda": fit.estimate,
                    "objective": fit.objective,
                    "bound": fit.bound or "",
                }
                for fit in fits
            ]
        )
        result.outputs.append(exports.write_frame(out / "lambda_windows.csv", frame))
        result.results["windows"] = [asdict(fit) for fit in fits]
        result.parameters["window_edges"] = list(window_edges)
        return result

    unfolded = unfold_all(raws, unfold, None, radius_m)
    grid = np.arange(cfg.l_step, params["l_max"] + 1e-9, cfg.l_step)
    curve = number_variance(unfolded, grid, step=get_settings().simulation.window_step)
    fit = fit_lambda_sigma2(curve, l_max=params["l_max"], **options)
    result.outputs.append(exports.write_curve(out / "sigma2.csv", curve))
    fitted = rp_analytics.sigma2_rp_curve(fit.estimate, grid)
    result.outputs.append(exports.write_curve(out / "sigma2_rp_fit.csv", fitted))
    result.results["fit"] = asdict(fit)
    logger.info("Fitted lambda=%.4f from %d spectra", fit.estimate, len(raws))
    return result


# --------------------------------------------------------------------------
# scatter
# --------------------------------------------------------------------------


def _scattering_base(
    dim: int, t_a: float, t_b: float, tau_abs: float, seed: int, realizations: int
) -> ScatteringConfig:
    scat = get_settings().scattering
    params = require_valid(
        ScatterInput,
        {
            "t_a": t_a,
            "t_b": t_b,
            "tau_abs": tau_abs,
            "fictitious_channels": scat.fictitious_channels,
            "freq_points": scat.freq_points,
            "freq_span": scat.freq_span,
        },
    )
    return ScatteringConfig(
        dim=dim,
        target_t=(params["t_a"], params["t_b"]),
        tau_abs=params["tau_abs"],
        fictitious_channels=params["fictitious_channels"],
        freq_points=params["freq_points"],
        freq_span=params["freq_span"],
        realizations=realizations,
        master_seed=seed,
    )


@log_operation("scatter")
def run_scattering(
    out_dir: str | Path,
    model: str,
    t_a: float,
    t_b: float,
    tau_abs: float,
    dim: int,
    realizations: int,
    seed: int,
    lam: float | None = None,
    xi: float | None = None,
    threads: int | None = None,
    progress: bool = False,
    save_series: bool = False,
) -> RunResult:
    """Simulate S-matrix spectra and write C_ab(ε), amplitude and Δ_ab curves."""
    ensemble = require_valid(
        EnsembleInput,
        {
            "model": model,
            "dim": dim,
            "lam": lam,
            "xi": xi,
            "seed": seed,
            "realizations": realizations,
        },
    )
    config = _scattering_base(dim, t_a, t_b, tau_abs, seed, realizations)
    source = EnsembleSpec(
        ensemble["model"],
        dim=dim,
        master_seed=seed,
        realizations=realizations,
        lam=ensemble["lam"] or 0.0,
        xi=ensemble["xi"] or 0.0,
    )
    stats, series = scattering_with_rp(
        source,
        config,
        calibration_realizations=get_settings().scattering.calibration_realizations,
        threads=_threads(threads),
        progress=progress,
    )

    out = Path(out_dir)
    result = RunResult(
        parameters={
            "model": source.kind.value,
            "lam": source.lam,
            "xi": source.xi,
            **{k: v for k, v in asdict(config).items() if k != "couplings"},
        },
        master_seed=seed,
    )
    result.outputs.append(exports.write_curve(out / "correlation.csv", stats.correlation))
    normalized = normalize_correlation(stats.correlation)
    result.outputs.append(exports.write_curve(out / "correlation_normalized.csv", normalized))
    result.outputs.append(exports.write_curve(out / "amplitude.csv", stats.amplitude))
    if stats.delta_windows is not None:
        result.outputs.append(exports.write_curve(out / "delta.csv", stats.delta_windows))
    if save_series:
        result.outputs.append(exports.write_s_matrix(out / "s_matrix_0000.csv", series[0]))
    result.results = {
        "ccross": stats.ccross,
        "delta_mean": stats.delta_mean,
        "delta_excluded": stats.delta_excluded,
        "transmission": list(stats.transmission),
        **{k: v for k, v in stats.meta.items() if k != "kind"},
    }
    return result


# --------------------------------------------------------------------------
# fit-xi
# --------------------------------------------------------------------------


@log_operation("fit_xi")
def fit_xi(
    out_dir: str | Path,
    tau_abs: float,
    ccross: float | None = None,
    t_a: float | None = None,
    t_b: float | None = None,
    table_path: str | Path | None = None,
    smatrix_path: str | Path | None = None,
    dim: int | None = None,
    seed: int | None = None,
    realizations: int | None = None,
    threads: int | None = None,
    progress: bool = False,
) -> RunResult:
    """
    Infer ξ from a cross-correlation coefficient.

    C^cross and the transmissions may come from a measured S-matrix file. A
    lookup table is read from ``table_path`` or generated and written to
    ``xi_table.csv``.
    """
    settings = get_settings()
    result = RunResult()
    if smatrix_path is not None:
        series = exports.read_s_matrix(smatrix_path)
        result.inputs.append(Path(smatrix_path))
        measured_t = transmission_coefficients(series)
        t_a = measured_t[0] if t_a is None else t_a
        t_b = measured_t[1] if t_b is None else t_b
        if ccross is None:
            ccross = cross_correlation(
                fluctuations(series.element(0, 1)), fluctuations(series.element(1, 0))
            )
        width = settings.scattering.window_ghz
        if series.frequencies[-1] - series.frequencies[0] >= width:
            frame = window_statistics(series, width)
            result.outputs.append(exports.write_frame(Path(out_dir) / "windows.csv", frame))
    params = require_valid(
        FitXiInput, {"ccross": ccross, "t_a": t_a, "t_b": t_b, "tau_abs": tau_abs}
    )
    result.parameters = dict(params)

    reciprocal = reciprocal_xi_fit(
        params["ccross"], params["t_a"], params["t_b"], params["tau_abs"]
    )
    if reciprocal is not None and table_path is None:
        result.results["fit"] = asdict(reciprocal)
        return result

    if table_path is not None:
        table = exports.read_xi_table(table_path)
        result.inputs.append(Path(table_path))
    else:
        seed = settings.simulation.default_seed if seed is None else seed
        base = _scattering_base(
            dim or settings.simulation.default_dim,
            params["t_a"],
            params["t_b"],
            params["tau_abs"],
            seed,
            1,
        )
        table = build_xi_table(
            params["t_a"],
            params["t_b"],
            params["tau_abs"],
            base,
            xi_step=settings.inference.xi_step,
            xi_max=settings.inference.xi_max,
            realizations=realizations or settings.inference.xi_realizations,
            calibration_realizations=settings.scattering.calibration_realizations,
            threads=_threads(threads),
            progress=progress,
        )
        result.master_seed = seed
        result.outputs.append(exports.write_xi_table(Path(out_dir) / "xi_table.csv", table))

    fit = estimate_xi_crosscorr(
        params["ccross"], params["t_a"], params["t_b"], params["tau_abs"], table
    )
    result.results["fit"] = asdict(fit)
    return result


# --------------------------------------------------------------------------
# fit-tau
# --------------------------------------------------------------------------


def _correlation_from_s_matrix(path: str | Path, spacing_ghz: float) -> ObservableCurve:
    series = exports.read_s_matrix(path)
    step_ghz = float(np.mean(np.diff(series.frequencies)))
    step = step_ghz / spacing_ghz
    eps = default_eps_grid(step, min(10.0, 0.45 * step * series.frequencies.size))
    fl = fluctuations(series.element(0, 1))
    return normalize_correlation(two_point_correlation(fl, step, eps))


@log_operation("fit_tau")
def fit_tau(
    out_dir: str | Path,
    curve_path: str | Path | None = None,
    smatrix_path: str | Path | None = None,
    spacing_ghz: float | None = None,
    oracle_path: str | Path | None = None,
    model: str = "goe",
    lam: float | None = None,
    xi: float | None = None,
    t_a: float | None = None,
    t_b: float | None = None,
    dim: int | None = None,
    seed: int | None = None,
    realizations: int | None = None,
    threads: int | None = None,
    progress: bool = False,
) -> RunResult:
    """
    Infer τ_abs from a normalized autocorrelation C_ab(ε)/C_ab(0).

    The curve comes from a curve file (ε in mean spacings) or from an S-matrix
    file together with the mean level spacing in GHz.
    """
    settings = get_settings()
    result = RunResult()
    if curve_path is not None:
        curve = normalize_correlation(exports.read_curve(curve_path))
        result.inputs.append(Path(curve_path))
    elif smatrix_path is not None:
        if spacing_ghz is None or spacing_ghz <= 0:
            raise ValidationError("spacing_ghz", "an S-matrix file needs the mean spacing in GHz")
        curve = _correlation_from_s_matrix(smatrix_path, spacing_ghz)
        result.inputs.append(Path(smatrix_path))
    else:
        raise ValidationError("curve", "give a correlation curve or an S-matrix file")

    if oracle_path is not None:
        oracle = exports.read_oracle(oracle_path)
        result.inputs.append(Path(oracle_path))
    else:
        if t_a is None or t_b is None:
            raise ValidationError("t_a", "building an oracle needs both transmissions")
        inference = settings.inference
        taus = tau_grid(inference.tau_min, inference.tau_max, inference.tau_step)
        seed = settings.simulation.default_seed if seed is None else seed
        dim = dim or settings.simulation.default_dim
        ensemble = require_valid(
            EnsembleInput,
            {"model": model, "dim": dim, "lam": lam, "xi": xi, "seed": seed},
        )
        n_real = realizations or inference.tau_realizations
        source = EnsembleSpec(
            ensemble["model"],
            dim=dim,
            master_seed=seed,
            realizations=n_real,
            lam=ensemble["lam"] or 0.0,
            xi=ensemble["xi"] or 0.0,
        )
        base = _scattering_base(dim, t_a, t_b, float(taus[0]), seed, n_real)
        oracle = build_tau_oracle(
            source,
            base,
            taus,
            realizations=n_real,
            calibration_realizations=settings.scattering.calibration_realizations,
            threads=_threads(threads),
            progress=progress,
        )
        result.master_seed = seed
        result.outputs.append(exports.write_oracle(Path(out_dir) / "tau_oracle.csv", oracle))

    fit = fit_tau_abs(curve, oracle)
    result.results["fit"] = asdict(fit)
    result.parameters = {"model": model, "lam": lam, "xi": xi, "t_a": t_a, "t_b": t_b}
    return result


# --------------------------------------------------------------------------
# billiard
# --------------------------------------------------------------------------


@log_operation("billiard_levels")
def billiard_levels(out_dir: str | Path, radius_m: float, f_max_ghz: float) -> RunResult:
    """
    Eigenfrequencies and periodic-orbit lengths of a circular billiard.

    Degenerate pairs are split by 1e-9 of the mean spacing so the level file
    stays strictly increasing.
    """
    if radius_m <= 0 or f_max_ghz <= 0:
        raise ValidationError("radius_m", "radius and frequency limit must be positive")
    geom = BilliardGeometry(radius_m=radius_m)
    degenerate = circle_eigenfrequencies(geom, f_max_ghz)
    levels = prepare_levels(degenerate)
    orbits = periodic_orbit_lengths(geom, float(LENGTH_GRID_M[-1]))
    out = Path(out_dir)
    header = {
        "source": geom.shape.value,
        "unit": "GHz",
        "radius_m": radius_m,
        "f_max_ghz": f_max_ghz,
        "degenerate_pairs": int(np.count_nonzero(np.diff(degenerate) == 0)),
    }
    frame = pd.DataFrame(
        [{"length_m": o.length_m, "winding": o.label[0], "bounces": o.label[1]} for o in orbits]
    )
    return RunResult(
        outputs=[
            exports.write_levels(out / "circle_levels.csv", levels, header),
            exports.write_frame(out / "orbits.csv", frame, {"radius_m": radius_m}),
        ],
        results={"levels": int(levels.size), "orbits": len(orbits)},
        parameters={"radius_m": radius_m, "f_max_ghz": f_max_ghz},
    )


# --------------------------------------------------------------------------
# Manifest
# --------------------------------------------------------------------------


def write_run_manifest(
    out_dir: str | Path,
    command_line: list[str],
    result: RunResult,
    started: float,
) -> Path:
    """Record everything needed to reproduce a run in ``manifest.json``."""
    manifest = RunManifest(
        command_line=command_line,
        config={"parameters": result.parameters, "settings": get_settings().snapshot()},
        master_seed=result.master_seed,
        versions=exports.package_versions(),
        inputs={str(p): exports.file_digest(p) for p in result.inputs},
        outputs={str(p): exports.file_digest(p) for p in result.outputs},
        wall_time_s=round(time.perf_counter() - started, 3),
        results=result.results,
    )
    return exports.write_manifest(Path(out_dir) / "manifest.json", manifest)
