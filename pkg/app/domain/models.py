from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8  # m/s


class EnsembleKind(str, Enum):
    POISSON = "poisson"
    GOE = "goe"
    GUE = "gue"
    RP = "rp"  # Rosenzweig-Porter, Poisson -> GUE
    GOE_TO_GUE = "goe2gue"


@dataclass(slots=True, frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    dim: int
    master_seed: int
    realizations: int = 1
    lam: float = 0.0  # RP coupling, used only for kind=RP
    xi: float = 0.0  # T-violation strength, used only for kind=GOE_TO_GUE

    def parameter(self) -> float | None:
        if self.kind is EnsembleKind.RP:
            return self.lam
        if self.kind is EnsembleKind.GOE_TO_GUE:
            return self.xi
        return None


@dataclass(slots=True, frozen=True)
class HermitianMatrix:
    """Read-only Hermitian (or real symmetric) matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)


class BilliardShape(str, Enum):
    CIRCLE_DIRICHLET = "circle_dirichlet"


@dataclass(slots=True, frozen=True)
class BilliardGeometry:
    radius_m: float
    shape: BilliardShape = BilliardShape.CIRCLE_DIRICHLET
    n0: float = 0.0

    @property
    def area_m2(self) -> float:
        return math.pi * self.radius_m**2

    @property
    def perimeter_m(self) -> float:
        return 2.0 * math.pi * self.radius_m


@dataclass(slots=True, frozen=True)
class PeriodicOrbit:
    length_m: float
    label: tuple[int, int]  # (winding m, bounces n)


@dataclass(slots=True)
class RawSpectrum:
    levels: np.ndarray
    source: str = "unknown"
    unit: str = "dimensionless"  # "GHz" for measured eigenfrequencies
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.levels.size)


class UnfoldMethod(str, Enum):
    WEYL = "weyl"
    POLYNOMIAL = "polynomial"
    ANALYTIC = "analytic"
    NONE = "none"


@dataclass(slots=True)
class UnfoldedSpectrum:
    epsilons: np.ndarray
    method: UnfoldMethod
    degree: int | None = None
    source: str = "unknown"
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.epsilons.size)

    def spacings(self) -> np.ndarray:
        return np.diff(self.epsilons)


class ObservableKind(str, Enum):
    NNSD = "nnsd"
    CUMULATIVE_NNSD = "nnsd_cumulative"
    RATIO_DIST = "ratio"
    CUMULATIVE_RATIO_DIST = "ratio_cumulative"
    NUMBER_VARIANCE = "sigma2"
    Y2 = "y2"
    FORM_FACTOR = "form_factor"
    POWER_SPECTRUM = "power_spectrum"
    LENGTH_SPECTRUM = "length"
    CORRELATION = "correlation"
    AMPLITUDE_DIST = "amplitude"
    DETAILED_BALANCE = "delta"


@dataclass(slots=True)
class ObservableCurve:
    observable: ObservableKind
    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have equal length")
        if self.stderr is not None and self.stderr.shape != self.values.shape:
            raise ValueError("stderr must match values")


@dataclass(slots=True, frozen=True)
class RpScales:
    """Scale relations between the RP coupling and the analytic-curve parameters."""

    lam: float
    alpha_tilde: float
    alpha_l: float

    @classmethod
    def from_lambda(cls, lam: float) -> RpScales:
        alpha_tilde = math.pi * lam / math.sqrt(2.0)
        return cls(lam=lam, alpha_tilde=alpha_tilde, alpha_l=math.sqrt(2.0) * lam)

    def tau_tilde(self, tau: float) -> float:
        """Rescaled time τ/α̃² of the graded-eigenvalue representation."""
        return tau / self.alpha_tilde**2


@dataclass(slots=True, frozen=True)
class ScatteringConfig:
    dim: int = 400
    target_t: tuple[float, float] = (0.6, 0.68)  # antennas a, b
    tau_abs: float = 1.6
    fictitious_channels: int = 30
    freq_points: int = 1024
    freq_span: float = 100.0  # mean spacings
    realizations: int = 50
    master_seed: int = 0
    couplings: tuple[float, float, float] | None = None  # calibrated (v_a, v_b, v_f)

    @property
    def antenna_channels(self) -> int:
        return 2

    @property
    def total_channels(self) -> int:
        return self.antenna_channels + self.fictitious_channels

    @property
    def fictitious_t(self) -> float:
        """Transmission T_f of each absorption channel (Weisskopf sum τ_abs = Λ·T_f)."""
        return self.tau_abs / self.fictitious_channels


@dataclass(slots=True, frozen=True)
class CouplingCalibration:
    couplings: tuple[float, float, float]  # (v_a, v_b, v_f)
    measured_t: tuple[float, float]
    fictitious_t: float
    realizations: int
    dim: int
    kind: str = "goe"

    def as_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "v_a": self.couplings[0],
            "v_b": self.couplings[1],
            "v_f": self.couplings[2],
            "measured_t_a": self.measured_t[0],
            "measured_t_b": self.measured_t[1],
            "fictitious_t": self.fictitious_t,
            "realizations": self.realizations,
            "dim": self.dim,
        }


@dataclass(slots=True)
class SMatrixSample:
    frequency: float
    entries: np.ndarray  # 2x2 antenna block


@dataclass(slots=True)
class SMatrixSeries:
    """Antenna block of S over a frequency grid; shape (F, 2, 2)."""

    frequencies: np.ndarray
    s: np.ndarray
    source: str = "simulation"
    unit: str = "spacing"  # "GHz" for measured data

    def __post_init__(self) -> None:
        if self.s.shape != (self.frequencies.size, 2, 2):
            raise ValueError("S series must have shape (F, 2, 2)")

    def element(self, a: int, b: int) -> np.ndarray:
        return self.s[:, a, b]

    def sample(self, index: int) -> SMatrixSample:
        return SMatrixSample(frequency=float(self.frequencies[index]), entries=self.s[index])


@dataclass(slots=True)
class ScatteringStatistics:
    correlation: ObservableCurve
    ccross: float
    delta_mean: float
    delta_excluded: int
    amplitude: ObservableCurve
    transmission: tuple[float, float]
    delta_windows: ObservableCurve | None = None
    meta: dict[str, Any] = field(default_factory=dict)


@dataclass(slots=True)
class FitResult:
    parameter_name: str
    estimate: float
    search_interval: tuple[float, float]
    objective: float
    curve_used: str
    settings: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    bound: str | None = None  # ">=" or "<=" when the estimate sits on a table edge
    local_minima: list[float] = field(default_factory=list)


@dataclass(slots=True)
class XiTable:
    t_a: float
    t_b: float
    tau_abs: float
    xi: np.ndarray
    ccross: np.ndarray
    stderr: np.ndarray
    realizations: int

    def matches(self, t_a: float, t_b: float, tau_abs: float, atol: float = 1e-6) -> bool:
        return (
            abs(self.t_a - t_a) <= atol
            and abs(self.t_b - t_b) <= atol
            and abs(self.tau_abs - tau_abs) <= atol
        )


@dataclass(slots=True)
class CorrelationOracle:
    """Normalized Monte-Carlo C_ab(ε)/C_ab(0) curves, one row per τ_abs."""

    eps: np.ndarray
    tau_abs: np.ndarray
    curves: np.ndarray  # (len(tau_abs), len(eps))
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.curves.shape != (self.tau_abs.size, self.eps.size):
            raise ValueError("oracle curves must have shape (tau grid, eps grid)")


@dataclass(slots=True)
class RunManifest:
    command_line: list[str]
    config: dict[str, Any]
    master_seed: int | None
    versions: dict[str, str]
    inputs: dict[str, str]  # path -> sha256
    outputs: dict[str, str]  # path -> sha256
    wall_time_s: float
    results: dict[str, Any] = field(default_factory=dict)
