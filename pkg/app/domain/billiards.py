"""
Closed-form oracle for the Dirichlet circle billiard.

Eigenfrequencies follow from Bessel zeros, f_{m,n} = c·j_{m,n}/(2πR), with
every angular order m > 0 doubly degenerate. Zeros of J_m are bracketed by
the interlacing j_{m-1,n} < j_{m,n} < j_{m-1,n+1} and refined with brentq.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import optimize, special

from ..infrastructure.exceptions import NumericFailureError, ValidationError
from .models import SPEED_OF_LIGHT, BilliardGeometry, PeriodicOrbit

MAX_BESSEL_ARGUMENT = 400.0

logger = logging.getLogger(__name__)


def _jv_at(x: float, m: int) -> float:
    return float(special.jv(m, x))


def _j0_zeros(x_max: float) -> list[float]:
    # consecutive zeros of J_0 are more than 3 apart, so unit cells hold at most one
    grid = np.arange(1.0, x_max + 5.0, 1.0)
    values = special.jv(0, grid)
    zeros = []
    for lo, hi, f_lo, f_hi in zip(grid[:-1], grid[1:], values[:-1], values[1:], strict=True):
        if f_lo * f_hi < 0:
            zeros.append(optimize.brentq(_jv_at, lo, hi, args=(0,), xtol=1e-13, rtol=1e-14))
    return zeros


def bessel_zeros(m: int, previous: list[float]) -> list[float]:
    """
    Zeros of J_m bracketed by consecutive zeros of J_{m-1}.

    ``previous`` must extend at least one zero beyond the range of interest;
    the result holds one zero fewer than ``previous``.
    """
    zeros = []
    for lo, hi in zip(previous[:-1], previous[1:], strict=True):
        zeros.append(optimize.brentq(_jv_at, lo, hi, args=(m,), xtol=1e-13, rtol=1e-14))
    return zeros


def _zero_table(x_max: float) -> dict[int, list[float]]:
    """All Bessel zeros j_{m,n} ≤ x_max, keyed by angular order."""
    table: dict[int, list[float]] = {}
    # order m needs zeros of order m-1 one past x_max; keep a margin of orders
    m_top = int(math.ceil(x_max)) + 2
    current = _j0_zeros(x_max + math.pi * (m_top + 2))
    for m in range(0, m_top + 1):
        if m > 0:
            current = bessel_zeros(m, current)
        kept = [z for z in current if z <= x_max]
        if not kept:
            break
        if len(kept) == len(current):
            raise NumericFailureError(
                "Bessel zero enumeration is not gap-free", diagnostics={"order": m, "x_max": x_max}
            )
        table[m] = kept
    return table


def circle_eigenfrequencies(geom: BilliardGeometry, f_max_ghz: float) -> np.ndarray:
    """
    Ascending eigenfrequencies (GHz) of the circle billiard up to ``f_max_ghz``.

    Orders m > 0 appear twice.

    Raises:
        ValidationError: for a non-positive or intractably large f_max
    """
    if not f_max_ghz > 0:
        raise ValidationError("f_max_ghz", "must be positive", f_max_ghz)
    x_max = 2.0 * math.pi * geom.radius_m * f_max_ghz * 1e9 / SPEED_OF_LIGHT
    if x_max > MAX_BESSEL_ARGUMENT:
        raise ValidationError(
            "f_max_ghz", f"Bessel argument {x_max:.1f} exceeds {MAX_BESSEL_ARGUMENT}", f_max_ghz
        )

    scale = SPEED_OF_LIGHT / (2.0 * math.pi * geom.radius_m) / 1e9
    freqs: list[float] = []
    for m, zeros in _zero_table(x_max).items():
        multiplicity = 1 if m == 0 else 2
        for z in zeros:
            freqs.extend([z * scale] * multiplicity)
    result = np.sort(np.asarray(freqs))
    logger.debug(
        "Circle billiard R=%.4f m: %d levels below %.3f GHz", geom.radius_m, result.size, f_max_ghz
    )
    return result


def periodic_orbit_lengths(geom: BilliardGeometry, l_max_m: float) -> list[PeriodicOrbit]:
    """
    Periodic-orbit lengths L(m, n) = 2nR·sin(πm/n) up to ``l_max_m``.

    Repetitions sharing a length with a primitive orbit are labelled by the
    primitive (m, n).
    """
    if not l_max_m > 0:
        raise ValidationError("l_max_m", "must be positive", l_max_m)
    r = geom.radius_m
    orbits: dict[float, PeriodicOrbit] = {}
    # L(m, n) ≥ 2nR·sin(π/n) ≥ 4R for n ≥ 2 and grows with n, so n is bounded
    n = 2
    while 2.0 * n * r * math.sin(math.pi / n) <= l_max_m:
        for m in range(1, n // 2 + 1):
            length = 2.0 * n * r * math.sin(math.pi * m / n)
            if length > l_max_m:
                continue
            key = round(length, 12)
            g = math.gcd(m, n)
            label = (m // g, n // g)
            if key not in orbits or label < orbits[key].label:
                orbits[key] = PeriodicOrbit(length_m=length, label=label)
        n += 1
    return sorted(orbits.values(), key=lambda orbit: orbit.length_m)


def weyl_count(
    geom: BilliardGeometry, freq_ghz: np.ndarray | float, n0: float | None = None
) -> np.ndarray:
    """Smooth staircase 𝒜πf²/c² − ℒf/(2c) + N₀ with f in GHz."""
    f = np.asarray(freq_ghz, dtype=float) * 1e9
    offset = geom.n0 if n0 is None else n0
    c = SPEED_OF_LIGHT
    return geom.area_m2 * math.pi * f**2 / c**2 - geom.perimeter_m * f / (2.0 * c) + offset


def weyl_density(geom: BilliardGeometry, freq_ghz: np.ndarray | float) -> np.ndarray:
    """Derivative of the smooth staircase per GHz."""
    f = np.asarray(freq_ghz, dtype=float) * 1e9
    c = SPEED_OF_LIGHT
    return (2.0 * geom.area_m2 * math.pi * f / c**2 - geom.perimeter_m / (2.0 * c)) * 1e9


def fit_weyl_offset(levels_ghz: np.ndarray, geom: BilliardGeometry) -> float:
    """
    Least-squares N₀ against the empirical staircase N(f_i) = i − 1/2.

    The residual is linear in N₀, so the optimum is the mean residual.
    """
    levels = np.sort(np.asarray(levels_ghz, dtype=float))
    staircase = np.arange(1, levels.size + 1) - 0.5
    return float(np.mean(staircase - weyl_count(geom, levels, n0=0.0)))
