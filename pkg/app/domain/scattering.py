"""
S-matrix Monte-Carlo engine for an open resonator and its fluctuation statistics.

The resonator Hamiltonian is rescaled to unit mean spacing at the band
centre and coupled to two antenna channels (a, b) plus Λ fictitious
channels that model absorption:

    S(f) = 1 − 2πi·W·(f − H + iπ·W†W)⁻¹·W†

with W of shape (channels, states). The estimators below operate on
:class:`SMatrixSeries` objects and therefore accept simulated and
measured data alike.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from ..infrastructure.exceptions import (
    CalibrationError,
    ConfigurationError,
    InsufficientDataError,
    NumericFailureError,
    UndefinedCorrelationError,
    ValidationError,
)
from ..infrastructure.logging import log_timed_operation
from ..infrastructure.parallel import realization_rng, run_realizations
from .ensembles import eigenvalues, sample_matrix
from .models import (
    CouplingCalibration,
    EnsembleKind,
    EnsembleSpec,
    HermitianMatrix,
    ObservableCurve,
    ObservableKind,
    ScatteringConfig,
    ScatteringStatistics,
    SMatrixSample,
    SMatrixSeries,
)

V_MAX = 1.0 / math.pi  # perfect coupling, x = π²v² = 1
MIN_AMPLITUDE_SAMPLES = 10_000
CENTRAL_FRACTION = 0.1  # share of levels used for the local mean spacing
COUPLING_STREAM = 1
CALIBRATION_STREAM = 2
CALIBRATION_SWEEPS = 2

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Couplings
# --------------------------------------------------------------------------


def transmission_from_coupling(v: float | np.ndarray) -> float | np.ndarray:
    """Large-N transmission T = 4x/(1+x)² with x = π²v²."""
    x = (math.pi * np.asarray(v, dtype=float)) ** 2
    out = 4.0 * x / (1.0 + x) ** 2
    return float(out) if np.ndim(out) == 0 else out


def coupling_from_transmission(t: float) -> float:
    """Weak-coupling branch (x ≤ 1) of the inverse of ``transmission_from_coupling``."""
    if not 0.0 <= t <= 1.0:
        raise ValidationError("transmission", "must lie in [0, 1]", t)
    if t == 0.0:
        return 0.0
    x = (2.0 - t - 2.0 * math.sqrt(1.0 - t)) / t
    return math.sqrt(x) / math.pi


def build_coupling(
    n: int, m: int, v: float | Sequence[float], rng: np.random.Generator
) -> np.ndarray:
    """
    Real coupling matrix W of shape (m, n).

    Rows are exactly orthogonal with squared norms n·v_e²: Gaussian draws,
    QR orthonormalization, then rescaling.

    Raises:
        ConfigurationError: if there are more channels than states
        ValidationError: for negative or mismatched amplitudes
    """
    if m < 1 or m > n:
        raise ConfigurationError(
            f"{m} channels cannot couple orthogonally to {n} states", config_key="channels"
        )
    amplitudes = np.broadcast_to(np.asarray(v, dtype=float), (m,)).copy()
    if np.any(~np.isfinite(amplitudes)) or np.any(amplitudes < 0):
        raise ValidationError("coupling", "amplitudes must be finite and non-negative", v)
    q, _ = np.linalg.qr(rng.standard_normal((n, m)))
    return (q * (math.sqrt(n) * amplitudes)).T


def _channel_amplitudes(couplings: tuple[float, float, float], fictitious: int) -> np.ndarray:
    v_a, v_b, v_f = couplings
    return np.concatenate([[v_a, v_b], np.full(fictitious, v_f)])


# --------------------------------------------------------------------------
# Hamiltonian in spacing units
# --------------------------------------------------------------------------


def local_unfolding(h: HermitianMatrix | np.ndarray) -> tuple[float, float]:
    """Band centre and mean level spacing of the central tenth of the spectrum."""
    eigs = eigenvalues(h)
    n = eigs.size
    half = max(2, int(round(0.5 * CENTRAL_FRACTION * n)))
    mid = n // 2
    lo, hi = max(0, mid - half), min(n - 1, mid + half)
    spacing = (eigs[hi] - eigs[lo]) / (hi - lo)
    if spacing <= 0:
        raise InsufficientDataError("degenerate central spectrum", 2, 1)
    return float(np.median(eigs)), float(spacing)


def unfold_hamiltonian(h: HermitianMatrix | np.ndarray) -> np.ndarray:
    """(H − E_c)/D_local, so that the frequency axis counts mean spacings."""
    entries = h.entries if isinstance(h, HermitianMatrix) else np.asarray(h)
    centre, spacing = local_unfolding(entries)
    out = (entries - centre * np.eye(entries.shape[0])) / spacing
    return out


def frequency_grid(n: int, points: int, span: float) -> np.ndarray:
    """Bulk-centred grid of ``points`` frequencies covering ``span`` spacings."""
    if points < 2 or span <= 0:
        raise ValidationError("frequency_grid", "need at least two points and a positive span")
    if span > n / 4.0:
        logger.warning(
            "Frequency span %.4g exceeds a quarter of the %d levels; edge states distort S",
            span,
            n,
        )
    return np.linspace(-0.5 * span, 0.5 * span, points)


# --------------------------------------------------------------------------
# S matrix
# --------------------------------------------------------------------------


def s_matrix(h: HermitianMatrix | np.ndarray, w: np.ndarray, f: float) -> SMatrixSample:
    """
    Full channel S matrix at frequency ``f`` by one linear solve.

    Raises:
        NumericFailureError: if f − H_eff is singular
    """
    entries = h.entries if isinstance(h, HermitianMatrix) else np.asarray(h)
    w = np.asarray(w)
    m, n = w.shape
    if entries.shape != (n, n):
        raise ValidationError("coupling", "W must have one column per resonator state")
    if not np.any(w):
        return SMatrixSample(frequency=float(f), entries=np.eye(m, dtype=complex))
    w_dag = w.conj().T
    system = f * np.eye(n) - entries + 1j * math.pi * (w_dag @ w)
    try:
        g_w = linalg.solve(system, w_dag.astype(complex), check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError(
            "singular resonance system", diagnostics={"frequency": float(f)}
        ) from exc
    if not np.all(np.isfinite(g_w)):
        raise NumericFailureError("singular resonance system", diagnostics={"frequency": float(f)})
    s = np.eye(m, dtype=complex) - 2j * math.pi * (w @ g_w)
    return SMatrixSample(frequency=float(f), entries=s)


def s_matrix_series(
    h: HermitianMatrix | np.ndarray,
    w: np.ndarray,
    frequencies: np.ndarray,
    channels: tuple[int, int] = (0, 1),
    source: str = "simulation",
) -> SMatrixSeries:
    """
    Antenna block of S on a frequency grid by pole expansion.

    H_eff = H − iπW†W is diagonalized once; S_ab(f) = δ_ab − 2πi Σ_k
    (WR)_ak (R⁻¹W†)_kb / (f − E_k).
    """
    entries = h.entries if isinstance(h, HermitianMatrix) else np.asarray(h)
    w = np.asarray(w)
    freqs = np.asarray(frequencies, dtype=float)
    idx = list(channels)
    block = w[idx]
    if not np.any(block):
        s = np.broadcast_to(np.eye(2, dtype=complex), (freqs.size, 2, 2)).copy()
        return SMatrixSeries(freqs, s, source=source)

    h_eff = entries - 1j * math.pi * (w.conj().T @ w)
    poles, right = linalg.eig(h_eff, check_finite=False)
    left = block @ right  # (2, n)
    try:
        inner = linalg.solve(right, block.conj().T.astype(complex), check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericFailureError(
            "defective effective Hamiltonian", diagnostics={"dim": entries.shape[0]}
        ) from exc
    resolvent = 1.0 / (freqs[:, None] - poles[None, :])  # (F, n)
    s = np.eye(2, dtype=complex)[None] - 2j * math.pi * np.einsum(
        "ak,fk,kb->fab", left, resolvent, inner
    )
    if not np.all(np.isfinite(s)):
        raise NumericFailureError(
            "S series has non-finite entries", diagnostics={"dim": entries.shape[0]}
        )
    return SMatrixSeries(freqs, s, source=source)


def _realization_inputs(
    spec: EnsembleSpec, index: int, amplitudes: np.ndarray, stream: int = COUPLING_STREAM
) -> tuple[np.ndarray, np.ndarray]:
    h = unfold_hamiltonian(sample_matrix(spec, index))
    rng = realization_rng(spec.master_seed, index, stream)
    w = build_coupling(spec.dim, amplitudes.size, amplitudes, rng)
    return h, w


def simulate_realization(
    spec: EnsembleSpec,
    config: ScatteringConfig,
    couplings: tuple[float, float, float],
    index: int,
) -> SMatrixSeries:
    """One realization of the antenna S block; a pure function of (spec, config, index)."""
    amplitudes = _channel_amplitudes(couplings, config.fictitious_channels)
    h, w = _realization_inputs(spec, index, amplitudes)
    freqs = frequency_grid(spec.dim, config.freq_points, config.freq_span)
    return s_matrix_series(h, w, freqs, source=f"{spec.kind.value}#{index}")


# --------------------------------------------------------------------------
# Calibration
# --------------------------------------------------------------------------


def _mean_diagonal(
    systems: list[tuple[np.ndarray, np.ndarray]],
    amplitudes: np.ndarray,
    freqs: np.ndarray,
) -> np.ndarray:
    """Ensemble and frequency average of (S_aa, S_bb) for the given amplitudes."""
    total = np.zeros(2, dtype=complex)
    for h, directions in systems:
        w = directions * amplitudes[:, None]
        series = s_matrix_series(h, w, freqs)
        total += np.array([series.s[:, 0, 0].mean(), series.s[:, 1, 1].mean()])
    return total / len(systems)


@log_timed_operation("calibrate_coupling")
def calibrate_coupling(
    target_t: tuple[float, float],
    tau_abs: float,
    n: int,
    realizations: int = 40,
    master_seed: int = 0,
    fictitious_channels: int = 30,
    freq_points: int = 128,
    freq_span: float | None = None,
    tolerance: float = 0.02,
    source: EnsembleSpec | None = None,
) -> CouplingCalibration:
    """
    Antenna amplitudes reproducing T_e = 1 − |⟨S_ee⟩|².

    Each antenna amplitude is found by a bracketed root search on
    v ∈ [0, 1/π] with common random numbers (fixed Hamiltonians and coupling
    directions), alternating between the two antennas. The absorption
    channels use T_f = τ_abs/Λ. Hamiltonians are drawn from the kind, λ and
    ξ of ``source`` (GOE when it is omitted).

    Raises:
        ValidationError: for targets outside [0, 1) or negative τ_abs
        ConfigurationError: if τ_abs/Λ exceeds one
        CalibrationError: if a target cannot be bracketed or is missed by more than ``tolerance``
    """
    for t in target_t:
        if not 0.0 <= t < 1.0:
            raise ValidationError("target_t", "transmission targets must lie in [0, 1)", t)
    if not math.isfinite(tau_abs) or tau_abs < 0:
        raise ValidationError("tau_abs", "must be non-negative", tau_abs)
    if fictitious_channels < 1:
        raise ConfigurationError("at least one absorption channel is required", "channels")
    t_f = tau_abs / fictitious_channels
    if t_f > 1.0:
        raise ConfigurationError(
            f"tau_abs={tau_abs:g} needs more than {fictitious_channels} channels",
            "fictitious_channels",
        )
    v_f = coupling_from_transmission(t_f)
    m = 2 + fictitious_channels
    span = freq_span if freq_span is not None else n / 4.0
    freqs = frequency_grid(n, freq_points, span)

    if source is None:
        source = EnsembleSpec(EnsembleKind.GOE, dim=n, master_seed=master_seed)
    spec = EnsembleSpec(
        source.kind,
        dim=n,
        master_seed=master_seed,
        realizations=realizations,
        lam=source.lam,
        xi=source.xi,
    )
    unit = np.ones(m)
    systems = [
        _realization_inputs(spec, i, unit, stream=CALIBRATION_STREAM) for i in range(realizations)
    ]
    amplitudes = np.concatenate(
        [[coupling_from_transmission(t) for t in target_t], np.full(fictitious_channels, v_f)]
    )

    def measured(channel: int, v: float) -> float:
        trial = amplitudes.copy()
        trial[channel] = v
        mean_s = _mean_diagonal(systems, trial, freqs)[channel]
        return 1.0 - abs(mean_s) ** 2

    for sweep in range(CALIBRATION_SWEEPS):
        for channel, target in enumerate(target_t):
            if target == 0.0:
                amplitudes[channel] = 0.0
                continue
            upper = measured(channel, V_MAX)
            if upper < target:
                raise CalibrationError(
                    "transmission target cannot be bracketed",
                    diagnostics={"channel": channel, "target": target, "t_at_v_max": upper},
                )
            amplitudes[channel] = optimize.brentq(
                lambda v, c=channel, t=target: measured(c, v) - t, 0.0, V_MAX, xtol=1e-5
            )
            logger.debug(
                "Sweep %d channel %d: v=%.5f for T=%.3f",
                sweep,
                channel,
                amplitudes[channel],
                target,
            )

    final = _mean_diagonal(systems, amplitudes, freqs)
    achieved = tuple(float(1.0 - abs(s) ** 2) for s in final)
    misses = [abs(a - t) for a, t in zip(achieved, target_t, strict=True)]
    if max(misses) > tolerance:
        raise CalibrationError(
            "calibrated transmissions miss their targets",
            diagnostics={"target": list(target_t), "achieved": list(achieved)},
        )
    logger.info(
        "Calibrated couplings v_a=%.4f v_b=%.4f v_f=%.4f (T=%.3f, %.3f)",
        amplitudes[0],
        amplitudes[1],
        v_f,
        achieved[0],
        achieved[1],
    )
    return CouplingCalibration(
        couplings=(float(amplitudes[0]), float(amplitudes[1]), v_f),
        measured_t=(achieved[0], achieved[1]),
        fictitious_t=t_f,
        realizations=realizations,
        dim=n,
        kind=spec.kind.value,
    )


# --------------------------------------------------------------------------
# Fluctuation statistics
# --------------------------------------------------------------------------


def _stack(series: SMatrixSeries | Sequence[SMatrixSeries], a: int, b: int) -> np.ndarray:
    items = [series] if isinstance(series, SMatrixSeries) else list(series)
    if not items:
        raise InsufficientDataError("no S-matrix series supplied", 1, 0)
    sizes = {item.frequencies.size for item in items}
    if len(sizes) != 1:
        raise ValidationError("series", "all series must share one frequency grid")
    return np.stack([item.element(a, b) for item in items])


def fluctuations(values: np.ndarray, window_points: int | None = None) -> np.ndarray:
    """S^fl = S − ⟨S⟩ with the mean taken per realization and per frequency window."""
    arr = np.atleast_2d(np.asarray(values, dtype=complex))
    points = arr.shape[1] if window_points is None else int(window_points)
    if points < 2:
        raise ValidationError("window_points", "windows need at least two points", points)
    out = np.empty_like(arr)
    for start in range(0, arr.shape[1], points):
        chunk = arr[:, start : start + points]
        out[:, start : start + points] = chunk - chunk.mean(axis=1, keepdims=True)
    return out


def transmission_coefficients(
    series: SMatrixSeries | Sequence[SMatrixSeries],
) -> tuple[float, float]:
    """T_e = 1 − |⟨S_ee⟩|² averaged over frequency and realizations."""
    t_a = 1.0 - abs(_stack(series, 0, 0).mean()) ** 2
    t_b = 1.0 - abs(_stack(series, 1, 1).mean()) ** 2
    return float(t_a), float(t_b)


def two_point_correlation(
    fluct: np.ndarray, step: float, eps_grid: np.ndarray | Sequence[float]
) -> ObservableCurve:
    """
    C(ε) = ⟨S^fl(ν)·S^fl*(ν+ε)⟩ on a uniform frequency grid of spacing ``step``.

    The real part is reported; the imaginary part is kept in ``meta``.

    Raises:
        InsufficientDataError: if the largest lag exceeds half the window
    """
    arr = np.atleast_2d(np.asarray(fluct, dtype=complex))
    eps = np.asarray(eps_grid, dtype=float)
    if step <= 0 or np.any(eps < 0):
        raise ValidationError("eps_grid", "lags and grid step must be non-negative")
    lags = np.rint(eps / step).astype(int)
    points = arr.shape[1]
    if lags.max() >= points // 2:
        raise InsufficientDataError(
            f"largest lag {eps.max():g} needs a window of {2 * (lags.max() + 1)} points",
            required=int(2 * (lags.max() + 1)),
            available=points,
        )
    per_realization = np.array(
        [np.mean(arr[:, : points - k] * np.conj(arr[:, k:]), axis=1) for k in lags]
    ).T  # (R, lags)
    values = per_realization.mean(axis=0)
    if arr.shape[0] > 1:
        stderr = per_realization.real.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])
    else:
        stderr = np.full(eps.size, np.nan)
    return ObservableCurve(
        ObservableKind.CORRELATION,
        lags * step,
        values.real,
        stderr,
        meta={"imag": values.imag.tolist(), "realizations": arr.shape[0], "step": step},
    )


def normalize_correlation(curve: ObservableCurve) -> ObservableCurve:
    """C(ε)/C(0), with the error bar scaled alike."""
    zero = float(curve.values[np.argmin(curve.grid)])
    if zero <= 0:
        raise UndefinedCorrelationError("C(0) must be positive to normalize")
    stderr = None if curve.stderr is None else curve.stderr / zero
    return ObservableCurve(
        curve.observable, curve.grid, curve.values / zero, stderr, {**curve.meta, "c0": zero}
    )


def cross_correlation(s_ab: np.ndarray, s_ba: np.ndarray) -> float:
    """
    C^cross = Re⟨S^fl_ab·S^fl*_ba⟩ / √(⟨|S^fl_ab|²⟩⟨|S^fl_ba|²⟩), in [−1, 1].

    Raises:
        UndefinedCorrelationError: if either fluctuation has zero variance
    """
    x = np.asarray(s_ab, dtype=complex).ravel()
    y = np.asarray(s_ba, dtype=complex).ravel()
    if x.shape != y.shape:
        raise ValidationError("s_ba", "S_ab and S_ba must share one frequency grid")
    var_x = float(np.mean(np.abs(x) ** 2))
    var_y = float(np.mean(np.abs(y) ** 2))
    if var_x == 0.0 or var_y == 0.0:
        raise UndefinedCorrelationError("cross-correlation of a zero-variance series")
    value = float(np.mean(x * np.conj(y)).real / math.sqrt(var_x * var_y))
    return min(1.0, max(-1.0, value))


def detailed_balance_delta(s_ab: np.ndarray, s_ba: np.ndarray) -> tuple[np.ndarray, int]:
    """
    Pointwise Δ_ab = ||S_ab| − |S_ba|| / (|S_ab| + |S_ba|).

    Points where both amplitudes vanish are returned as NaN and counted.
    """
    x = np.abs(np.asarray(s_ab))
    y = np.abs(np.asarray(s_ba))
    if x.shape != y.shape:
        raise ValidationError("s_ba", "S_ab and S_ba must share one frequency grid")
    denominator = x + y
    excluded = denominator == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        delta = np.where(excluded, np.nan, np.abs(x - y) / np.where(excluded, 1.0, denominator))
    count = int(np.count_nonzero(excluded))
    if count:
        logger.debug("Excluded %d points with vanishing S_ab and S_ba", count)
    return delta, count


def sliding_delta(
    frequencies: np.ndarray, delta: np.ndarray, width: float, step: float | None = None
) -> ObservableCurve:
    """Averages of Δ_ab in sliding windows of ``width``; NaN points are skipped."""
    freqs = np.asarray(frequencies, dtype=float)
    values = np.atleast_2d(delta)
    if width <= 0 or freqs[-1] - freqs[0] < width:
        raise InsufficientDataError("frequency range shorter than one window", width, 0)
    stride = step if step is not None else 0.25 * width
    centres = np.arange(freqs[0] + 0.5 * width, freqs[-1] - 0.5 * width + 1e-12, stride)
    means = np.full(centres.size, np.nan)
    for i, centre in enumerate(centres):
        mask = np.abs(freqs - centre) <= 0.5 * width
        window = values[:, mask]
        if np.any(np.isfinite(window)):
            means[i] = float(np.nanmean(window))
    return ObservableCurve(
        ObservableKind.DETAILED_BALANCE, centres, means, None, meta={"width": width}
    )


def amplitude_distribution(
    fluct: np.ndarray, bins: int = 60, a_max: float | None = None
) -> ObservableCurve:
    """Normalized histogram of |S^fl|."""
    amplitude = np.abs(np.asarray(fluct)).ravel()
    if amplitude.size < MIN_AMPLITUDE_SAMPLES:
        logger.warning(
            "Amplitude histogram from %d samples (fewer than %d)",
            amplitude.size,
            MIN_AMPLITUDE_SAMPLES,
        )
    top = a_max if a_max is not None else float(amplitude.max()) * 1.0001
    edges = np.linspace(0.0, top, bins + 1)
    counts, _ = np.histogram(amplitude, bins=edges)
    width = edges[1] - edges[0]
    density = counts / (amplitude.size * width)
    return ObservableCurve(
        ObservableKind.AMPLITUDE_DIST,
        0.5 * (edges[:-1] + edges[1:]),
        density,
        np.sqrt(counts) / (amplitude.size * width),
        meta={"samples": int(amplitude.size), "mean_square": float(np.mean(amplitude**2))},
    )


def rayleigh_distance(fluct: np.ndarray) -> float:
    """Sup distance between the empirical CDF of |S^fl| and a Rayleigh law of equal ⟨|S|²⟩."""
    amplitude = np.sort(np.abs(np.asarray(fluct)).ravel())
    mean_square = float(np.mean(amplitude**2))
    if mean_square == 0.0:
        raise UndefinedCorrelationError("zero-variance fluctuations")
    model = -np.expm1(-(amplitude**2) / mean_square)
    n = amplitude.size
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - model), np.max(model - lower)))


# --------------------------------------------------------------------------
# Full run
# --------------------------------------------------------------------------


def _nan_mean(values: np.ndarray) -> float:
    return float(np.nanmean(values)) if np.any(np.isfinite(values)) else float("nan")


def default_eps_grid(step: float, eps_max: float = 10.0) -> np.ndarray:
    return step * np.arange(0, int(math.floor(eps_max / step)) + 1)


@log_timed_operation("scattering_run")
def scattering_with_rp(
    source: EnsembleSpec,
    config: ScatteringConfig,
    eps_grid: np.ndarray | None = None,
    calibration_realizations: int = 40,
    delta_width: float = 10.0,
    threads: int = 1,
    progress: bool = False,
) -> tuple[ScatteringStatistics, list[SMatrixSeries]]:
    """
    Scattering statistics for an RP or GOE→GUE resonator Hamiltonian.

    ``source`` selects the Hamiltonian ensemble (its ``dim`` must equal
    ``config.dim``). Couplings are calibrated first unless ``config``
    carries them already.
    """
    if source.dim != config.dim:
        raise ConfigurationError("source and config dimensions differ", "dim")
    if config.couplings is None:
        calibration = calibrate_coupling(
            config.target_t,
            config.tau_abs,
            config.dim,
            realizations=calibration_realizations,
            master_seed=config.master_seed,
            fictitious_channels=config.fictitious_channels,
            freq_span=config.freq_span,
            source=source,
        )
        couplings = calibration.couplings
        calibration_meta = calibration.as_dict()
    else:
        couplings = config.couplings
        calibration_meta = {"v_a": couplings[0], "v_b": couplings[1], "v_f": couplings[2]}

    spec = EnsembleSpec(
        source.kind,
        dim=config.dim,
        master_seed=config.master_seed,
        realizations=config.realizations,
        lam=source.lam,
        xi=source.xi,
    )
    series = run_realizations(
        lambda i: simulate_realization(spec, config, couplings, i),
        config.realizations,
        threads=threads,
        progress=progress,
        desc="S-matrix realizations",
    )
    stats = series_statistics(series, eps_grid=eps_grid, delta_width=delta_width)
    stats.meta.update(
        {
            "kind": source.kind.value,
            "lambda": source.lam,
            "xi": source.xi,
            "tau_abs": config.tau_abs,
            "target_t": list(config.target_t),
            "couplings": calibration_meta,
        }
    )
    return stats, series


def series_statistics(
    series: Sequence[SMatrixSeries],
    eps_grid: np.ndarray | None = None,
    window_points: int | None = None,
    delta_width: float = 10.0,
) -> ScatteringStatistics:
    """Correlation, C^cross, Δ_ab, amplitude histogram and T for a set of series."""
    freqs = series[0].frequencies
    step = float(freqs[1] - freqs[0])
    s_ab = _stack(series, 0, 1)
    s_ba = _stack(series, 1, 0)
    fl_ab = fluctuations(s_ab, window_points)
    fl_ba = fluctuations(s_ba, window_points)

    grid = eps_grid if eps_grid is not None else default_eps_grid(step)
    correlation = two_point_correlation(fl_ab, step, grid)
    delta, excluded = detailed_balance_delta(s_ab, s_ba)
    delta_curve = sliding_delta(freqs, delta, min(delta_width, float(freqs[-1] - freqs[0])))
    return ScatteringStatistics(
        correlation=correlation,
        ccross=cross_correlation(fl_ab, fl_ba),
        delta_mean=_nan_mean(delta),
        delta_excluded=excluded,
        amplitude=amplitude_distribution(fl_ab),
        transmission=transmission_coefficients(series),
        delta_windows=delta_curve,
        meta={"realizations": len(series), "step": step},
    )


def window_statistics(series: SMatrixSeries, width: float) -> pd.DataFrame:
    """
    Per-window C^cross, Δ_ab and T for one (typically measured) series.

    Windows are consecutive, of ``width`` in the series' frequency unit.
    """
    freqs = series.frequencies
    if width <= 0:
        raise ValidationError("width", "window width must be positive", width)
    rows = []
    start = float(freqs[0])
    while start + width <= float(freqs[-1]) + 1e-9:
        mask = (freqs >= start) & (freqs < start + width)
        if np.count_nonzero(mask) >= 2:
            sub = SMatrixSeries(freqs[mask], series.s[mask], series.source, series.unit)
            fl_ab = fluctuations(sub.element(0, 1))
            fl_ba = fluctuations(sub.element(1, 0))
            delta, excluded = detailed_balance_delta(sub.element(0, 1), sub.element(1, 0))
            t_a, t_b = transmission_coefficients(sub)
            try:
                ccross = cross_correlation(fl_ab, fl_ba)
            except UndefinedCorrelationError:
                ccross = float("nan")
            rows.append(
                {
                    "f_lo": start,
                    "f_hi": start + width,
                    "points": int(np.count_nonzero(mask)),
                    "ccross": ccross,
                    "delta_mean": _nan_mean(delta),
                    "delta_excluded": excluded,
                    "t_a": t_a,
                    "t_b": t_b,
                }
            )
        start += width
    if not rows:
        span = float(freqs[-1] - freqs[0])
        raise InsufficientDataError("no complete frequency window", width, span)
    return pd.DataFrame(rows)
