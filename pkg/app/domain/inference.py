"""
Parameter inference: λ from the number variance, ξ from C^cross, τ_abs from C_ab(ε).

λ is fitted to the analytic Σ² curve; ξ and τ_abs are read off
Monte-Carlo oracles generated with the scattering engine.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy import interpolate, optimize

from ..infrastructure.exceptions import (
    ExtrapolationRefusedError,
    InsufficientDataError,
    ValidationError,
)
from ..infrastructure.logging import log_timed_operation
from ..infrastructure.parallel import run_realizations
from .models import (
    BilliardGeometry,
    CorrelationOracle,
    EnsembleKind,
    EnsembleSpec,
    FitResult,
    ObservableCurve,
    RawSpectrum,
    ScatteringConfig,
    XiTable,
)
from .observables import number_variance
from .rp_analytics import sigma2_rp
from .scattering import (
    calibrate_coupling,
    coupling_from_transmission,
    cross_correlation,
    default_eps_grid,
    fluctuations,
    normalize_correlation,
    simulate_realization,
    two_point_correlation,
)
from .unfolding import split_frequency_windows, unfold_polynomial, unfold_weyl

CURVATURE_STEP = 0.01
CCROSS_SLACK = 1e-6
EPS_MAX = 10.0

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# λ from the number variance
# --------------------------------------------------------------------------


def _fit_points(curve: ObservableCurve, l_max: float) -> tuple[np.ndarray, np.ndarray]:
    mask = (curve.grid > 0) & (curve.grid <= l_max + 1e-12) & np.isfinite(curve.values)
    if np.count_nonzero(mask) < 3:
        raise InsufficientDataError(
            f"number variance has fewer than three points in (0, {l_max:g}]",
            3,
            int(np.count_nonzero(mask)),
        )
    return curve.grid[mask], curve.values[mask]


def fit_lambda_sigma2(
    curve: ObservableCurve,
    l_max: float = 5.0,
    interval: tuple[float, float] = (0.0, 3.0),
    tolerance: float = 1e-3,
    scan_points: int = 31,
    curvature_threshold: float = 1e-4,
) -> FitResult:
    """
    λ̂ = argmin Σ_L (Σ²_emp(L) − Σ²_RP(L; λ))² over ``interval``.

    A coarse scan brackets the minimum, then a golden-section search refines
    it to ``tolerance``. A flat objective at the optimum is reported as an
    unidentifiable parameter.
    """
    lo, hi = interval
    if not 0.0 <= lo < hi:
        raise ValidationError("interval", "need 0 <= lambda_min < lambda_max", interval)
    ells, target = _fit_points(curve, l_max)

    def objective(lam: float) -> float:
        model = np.asarray(sigma2_rp(ells, min(hi, max(lo, lam))))
        return float(np.sum((target - model) ** 2))

    scan = np.linspace(lo, hi, scan_points)
    values = np.array([objective(x) for x in scan])
    best = int(np.argmin(values))
    logger.debug("Coarse lambda scan minimum %.4g at %.3f", values[best], scan[best])

    if 0 < best < scan_points - 1:
        result = optimize.minimize_scalar(
            objective,
            bracket=(scan[best - 1], scan[best], scan[best + 1]),
            method="golden",
            options={"xtol": tolerance / max(scan[best], tolerance)},
        )
    else:
        neighbour = scan[1] if best == 0 else scan[-2]
        result = optimize.minimize_scalar(
            objective,
            bounds=tuple(sorted((scan[best], neighbour))),
            method="bounded",
            options={"xatol": tolerance},
        )
    estimate = float(min(hi, max(lo, result.x)))
    final = objective(estimate)

    h = CURVATURE_STEP
    left, right = max(lo, estimate - h), min(hi, estimate + h)
    mid = 0.5 * (left + right)
    curvature = (objective(right) - 2.0 * objective(mid) + objective(left)) / (
        0.5 * (right - left)
    ) ** 2
    unidentifiable = abs(curvature) < curvature_threshold
    if unidentifiable:
        logger.warning(
            "Number-variance objective is flat at lambda=%.3f (curvature %.3g)",
            estimate,
            curvature,
        )

    bound = None
    if estimate - lo <= tolerance:
        bound = "<="
    elif hi - estimate <= tolerance:
        bound = ">="
    return FitResult(
        parameter_name="lambda",
        estimate=estimate,
        search_interval=(lo, hi),
        objective=final,
        curve_used="sigma2",
        settings={
            "l_max": l_max,
            "tolerance": tolerance,
            "scan_points": scan_points,
            "points": int(ells.size),
        },
        diagnostics={
            "curvature": float(curvature),
            "unidentifiable": unidentifiable,
            "scan_minimum": float(scan[best]),
            "iterations": int(getattr(result, "nit", 0)),
        },
        bound=bound,
    )


def fit_lambda_windows(
    raw: RawSpectrum,
    window_edges: Sequence[float],
    geom: BilliardGeometry | None = None,
    l_max: float = 5.0,
    l_step: float = 0.1,
    window_step: float = 0.25,
    **fit_options: float,
) -> list[FitResult]:
    """
    λ per frequency window.

    Each window is unfolded on its own (Weyl with a billiard geometry,
    quadratic staircase otherwise) before its Σ² is fitted.
    """
    results = []
    grid = np.arange(l_step, l_max + 0.5 * l_step, l_step)
    for window in split_frequency_windows(raw, window_edges):
        unfolded = unfold_weyl(window, geom) if geom is not None else unfold_polynomial(window, 2)
        curve = number_variance(unfolded, grid, step=window_step)
        fit = fit_lambda_sigma2(curve, l_max=l_max, **fit_options)
        fit.settings.update({"window": window.meta["window"], "levels": len(window)})
        logger.info(
            "Window %s: lambda=%.3f from %d levels",
            window.meta["window"],
            fit.estimate,
            len(window),
        )
        results.append(fit)
    return results


# --------------------------------------------------------------------------
# ξ from the cross-correlation coefficient
# --------------------------------------------------------------------------


def _scattering_config(
    base: ScatteringConfig, tau_abs: float, couplings: tuple[float, float, float], realizations: int
) -> ScatteringConfig:
    return ScatteringConfig(
        dim=base.dim,
        target_t=base.target_t,
        tau_abs=tau_abs,
        fictitious_channels=base.fictitious_channels,
        freq_points=base.freq_points,
        freq_span=base.freq_span,
        realizations=realizations,
        master_seed=base.master_seed,
        couplings=couplings,
    )


def _ccross_cell(
    spec: EnsembleSpec, config: ScatteringConfig, couplings: tuple[float, float, float]
) -> tuple[float, float]:
    per_realization = []
    ab, ba = [], []
    for i in range(config.realizations):
        series = simulate_realization(spec, config, couplings, i)
        fl_ab = fluctuations(series.element(0, 1))
        fl_ba = fluctuations(series.element(1, 0))
        ab.append(fl_ab)
        ba.append(fl_ba)
        per_realization.append(cross_correlation(fl_ab, fl_ba))
    value = cross_correlation(np.concatenate(ab), np.concatenate(ba))
    spread = np.std(per_realization, ddof=1) if len(per_realization) > 1 else float("nan")
    return value, float(spread / math.sqrt(len(per_realization)))


@log_timed_operation("build_xi_table")
def build_xi_table(
    t_a: float,
    t_b: float,
    tau_abs: float,
    base: ScatteringConfig,
    xi_step: float = 0.02,
    xi_max: float = 1.0,
    realizations: int = 200,
    calibration_realizations: int = 40,
    threads: int = 1,
    progress: bool = False,
) -> XiTable:
    """
    Monte-Carlo C^cross(ξ) table at fixed (T_a, T_b, τ_abs).

    Couplings are calibrated once, on the GOE→GUE ensemble at mid-range ξ;
    cells run in parallel. The stored curve is made non-increasing in ξ.
    """
    calibration = calibrate_coupling(
        (t_a, t_b),
        tau_abs,
        base.dim,
        realizations=calibration_realizations,
        master_seed=base.master_seed,
        fictitious_channels=base.fictitious_channels,
        freq_span=base.freq_span,
        source=EnsembleSpec(
            EnsembleKind.GOE_TO_GUE, dim=base.dim, master_seed=base.master_seed, xi=0.5 * xi_max
        ),
    )
    config = _scattering_config(base, tau_abs, calibration.couplings, realizations)
    xi = xi_step * np.arange(0, int(round(xi_max / xi_step)) + 1)

    def cell(k: int) -> tuple[float, float]:
        spec = EnsembleSpec(
            EnsembleKind.GOE_TO_GUE,
            dim=base.dim,
            master_seed=base.master_seed,
            realizations=realizations,
            xi=float(xi[k]),
        )
        return _ccross_cell(spec, config, calibration.couplings)

    cells = run_realizations(cell, xi.size, threads=threads, progress=progress, desc="xi cells")
    raw = np.array([c[0] for c in cells])
    stderr = np.array([c[1] for c in cells])
    monotone = np.minimum.accumulate(raw)
    if np.any(monotone < raw - 2.0 * np.nan_to_num(stderr, nan=0.0) - 1e-12):
        logger.warning("C^cross table was not monotone in xi beyond 2 sigma; clipped")
    return XiTable(
        t_a=t_a,
        t_b=t_b,
        tau_abs=tau_abs,
        xi=xi,
        ccross=monotone,
        stderr=stderr,
        realizations=realizations,
    )


def reciprocal_xi_fit(ccross: float, t_a: float, t_b: float, tau_abs: float) -> FitResult | None:
    """ξ̂ = 0 without a table when C^cross is one within tolerance (S_ab = S_ba)."""
    if ccross < 1.0 - CCROSS_SLACK:
        return None
    return FitResult(
        parameter_name="xi",
        estimate=0.0,
        search_interval=(0.0, 0.0),
        objective=0.0,
        curve_used="ccross",
        diagnostics={"ccross": ccross, "t_a": t_a, "t_b": t_b, "tau_abs": tau_abs},
    )


def estimate_xi_crosscorr(
    ccross: float, t_a: float, t_b: float, tau_abs: float, table: XiTable
) -> FitResult:
    """
    ξ̂ by monotone (PCHIP) inversion of a C^cross(ξ) table.

    A value below the table minimum returns the upper table edge flagged
    as a ">=" bound.

    Raises:
        ValidationError: for C^cross outside [−1, 1]
        ExtrapolationRefusedError: for a table of other (T_a, T_b, τ_abs)
            or a value above the table maximum
    """
    if not -1.0 <= ccross <= 1.0:
        raise ValidationError("ccross", "cross-correlation must lie in [-1, 1]", ccross)
    if not table.matches(t_a, t_b, tau_abs):
        raise ExtrapolationRefusedError(
            "no xi table for these transmission and absorption parameters",
            {
                "requested": [t_a, t_b, tau_abs],
                "table": [table.t_a, table.t_b, table.tau_abs],
            },
        )
    curve = np.minimum.accumulate(table.ccross)
    settings = {"table_step": float(table.xi[1] - table.xi[0]) if table.xi.size > 1 else 0.0}
    settings["table_realizations"] = table.realizations
    interval = (float(table.xi[0]), float(table.xi[-1]))

    if ccross > curve[0] + CCROSS_SLACK:
        raise ExtrapolationRefusedError(
            "cross-correlation above the table maximum",
            {"ccross": ccross, "table_max": float(curve[0])},
        )
    bound = None
    if ccross >= curve[0]:
        estimate = interval[0]
    elif ccross <= curve[-1]:
        estimate = interval[1]
        bound = ">="
    else:
        keep = np.concatenate([[True], np.diff(curve) < 0])
        x = curve[keep][::-1]
        y = table.xi[keep][::-1]
        estimate = float(interpolate.PchipInterpolator(x, y)(ccross))
    return FitResult(
        parameter_name="xi",
        estimate=estimate,
        search_interval=interval,
        objective=0.0,
        curve_used="ccross",
        settings=settings,
        diagnostics={"ccross": ccross, "t_a": t_a, "t_b": t_b, "tau_abs": tau_abs},
        bound=bound,
    )


# --------------------------------------------------------------------------
# τ_abs from the autocorrelation function
# --------------------------------------------------------------------------


def tau_grid(tau_min: float = 0.25, tau_max: float = 6.0, step: float = 0.25) -> np.ndarray:
    return tau_min + step * np.arange(0, int(round((tau_max - tau_min) / step)) + 1)


@log_timed_operation("build_tau_oracle")
def build_tau_oracle(
    source: EnsembleSpec,
    base: ScatteringConfig,
    taus: np.ndarray,
    realizations: int = 100,
    eps_max: float = EPS_MAX,
    calibration_realizations: int = 40,
    threads: int = 1,
    progress: bool = False,
) -> CorrelationOracle:
    """
    Normalized C_ab(ε) for every τ_abs in ``taus``.

    Antenna couplings are calibrated once; the absorption amplitude follows
    T_f = τ_abs/Λ at each grid point.
    """
    calibration = calibrate_coupling(
        base.target_t,
        float(taus[0]),
        base.dim,
        realizations=calibration_realizations,
        master_seed=base.master_seed,
        fictitious_channels=base.fictitious_channels,
        freq_span=base.freq_span,
        source=source,
    )
    v_a, v_b, _ = calibration.couplings
    step = base.freq_span / (base.freq_points - 1)
    eps = default_eps_grid(step, eps_max)
    spec = EnsembleSpec(
        source.kind,
        dim=base.dim,
        master_seed=base.master_seed,
        realizations=realizations,
        lam=source.lam,
        xi=source.xi,
    )

    def row(k: int) -> np.ndarray:
        tau = float(taus[k])
        v_f = coupling_from_transmission(tau / base.fictitious_channels)
        couplings = (v_a, v_b, v_f)
        config = _scattering_config(base, tau, couplings, realizations)
        fl = np.stack(
            [
                fluctuations(simulate_realization(spec, config, couplings, i).element(0, 1))[0]
                for i in range(realizations)
            ]
        )
        return normalize_correlation(two_point_correlation(fl, step, eps)).values

    curves = np.array(
        run_realizations(row, len(taus), threads=threads, progress=progress, desc="tau_abs grid")
    )
    return CorrelationOracle(
        eps=eps,
        tau_abs=np.asarray(taus, dtype=float),
        curves=curves,
        meta={
            "kind": source.kind.value,
            "lambda": source.lam,
            "xi": source.xi,
            "target_t": list(base.target_t),
            "realizations": realizations,
            "couplings": calibration.as_dict(),
        },
    )


def fit_tau_abs(curve: ObservableCurve, oracle: CorrelationOracle) -> FitResult:
    """
    τ̂_abs minimizing the squared distance between a normalized C_ab(ε) and
    the oracle curves.

    The sum of squares is splined over the τ_abs grid, every local minimum
    is refined, and all of them are reported; the global one is the
    estimate. Minima on a grid edge are flagged as bounds.
    """
    if oracle.tau_abs.size < 3:
        raise InsufficientDataError("tau_abs oracle needs at least three grid points", 3)
    if np.any(np.diff(oracle.tau_abs) <= 0):
        raise ValidationError("oracle", "tau_abs grid must be increasing")
    lo_eps, hi_eps = float(curve.grid.min()), float(curve.grid.max())
    mask = (oracle.eps >= lo_eps) & (oracle.eps <= min(hi_eps, EPS_MAX))
    if np.count_nonzero(mask) < 3:
        raise InsufficientDataError("correlation curve overlaps the oracle grid too little", 3)
    empirical = np.interp(oracle.eps[mask], curve.grid, curve.values)
    sse = np.sum((oracle.curves[:, mask] - empirical[None, :]) ** 2, axis=1)

    taus = oracle.tau_abs
    spline = interpolate.CubicSpline(taus, sse)
    minima = []
    for i in range(taus.size):
        left = sse[i - 1] if i > 0 else np.inf
        right = sse[i + 1] if i < taus.size - 1 else np.inf
        if sse[i] <= left and sse[i] <= right:
            a = taus[max(0, i - 1)]
            b = taus[min(taus.size - 1, i + 1)]
            refined = optimize.minimize_scalar(spline, bounds=(a, b), method="bounded")
            if refined.fun <= sse[i]:
                minima.append((float(refined.fun), float(refined.x)))
            else:
                minima.append((float(sse[i]), float(taus[i])))
    minima.sort()
    objective, estimate = minima[0]
    if len(minima) > 1:
        logger.warning(
            "tau_abs objective has %d local minima: %s",
            len(minima),
            ", ".join(f"{x:.3f}" for _, x in minima),
        )

    step = float(taus[1] - taus[0])
    bound = None
    if estimate <= taus[0] + 0.5 * step and sse[0] <= sse[1]:
        bound = "<="
    elif estimate >= taus[-1] - 0.5 * step and sse[-1] <= sse[-2]:
        bound = ">="
    return FitResult(
        parameter_name="tau_abs",
        estimate=estimate,
        search_interval=(float(taus[0]), float(taus[-1])),
        objective=objective,
        curve_used="correlation",
        settings={"eps_max": float(oracle.eps[mask].max()), "grid_step": step},
        diagnostics={"sse": sse.tolist(), **oracle.meta},
        bound=bound,
        local_minima=sorted(x for _, x in minima),
    )
