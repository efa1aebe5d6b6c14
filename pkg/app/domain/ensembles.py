"""
Random-matrix ensembles and their spectra.

Variance conventions (dimension n):
    GUE: Re/Im off-diagonal 1/(4n) each, real diagonal 1/(2n)
    GOE: off-diagonal 1/(4n), diagonal 1/(2n)
    RP:  H₀ diagonal, uniform on a band of width W = 2π (spacing D_N = W/n),
         plus α_N·H_GUE with rms coupling α_N·⟨|H_ij|²⟩^½ = (π/2)·λ·D_N
    GOE→GUE: H_S + i·ξ·(π/√n)·H_A, H_A real antisymmetric, off-diagonal 1/(4n)

Hermiticity is exact by construction: every matrix is formed as (A + A†)/2.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import linalg

from ..infrastructure.exceptions import ContractViolationError, ValidationError
from ..infrastructure.parallel import realization_rng, run_realizations
from .models import EnsembleKind, EnsembleSpec, HermitianMatrix

HERMITICITY_TOL = 1e-12
RP_BAND_WIDTH = 2.0 * math.pi

logger = logging.getLogger(__name__)


def _check_dim(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValidationError("dim", "matrix dimension must be at least 2", n)


def _check_nonnegative(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValidationError(name, "must be a finite non-negative number", value)


def _gue_entries(n: int, rng: np.random.Generator) -> np.ndarray:
    sigma = math.sqrt(1.0 / (2.0 * n))
    a = sigma * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return (a + a.conj().T) / 2.0


def _goe_entries(n: int, rng: np.random.Generator) -> np.ndarray:
    m = math.sqrt(1.0 / (2.0 * n)) * rng.standard_normal((n, n))
    return (m + m.T) / 2.0


def _antisymmetric_entries(n: int, rng: np.random.Generator) -> np.ndarray:
    b = math.sqrt(1.0 / (2.0 * n)) * rng.standard_normal((n, n))
    return (b - b.T) / 2.0


def sample_gue(n: int, rng: np.random.Generator) -> HermitianMatrix:
    """Draw one GUE matrix."""
    _check_dim(n)
    return HermitianMatrix(_gue_entries(n, rng))


def sample_goe(n: int, rng: np.random.Generator) -> HermitianMatrix:
    """Draw one real symmetric GOE matrix."""
    _check_dim(n)
    return HermitianMatrix(_goe_entries(n, rng))


def rp_spacing(n: int) -> float:
    """D_N = W/n, the mean spacing of the diagonal H₀ inside its band."""
    return RP_BAND_WIDTH / n


def rp_coupling(n: int, lam: float) -> float:
    """
    α_N, the GUE admixture of the RP Hamiltonian.

    The rms off-diagonal coupling in units of D_N equals πλ/2. On this scale
    the analytic curves take α̃ = πλ/√2: to first order both give
    b(τ) = πα̃²τ·exp(−α̃²τ²/2).
    """
    rms_gue = math.sqrt(1.0 / (2.0 * n))
    return 0.5 * math.pi * lam * rp_spacing(n) / rms_gue


def sample_rp(n: int, lam: float, rng: np.random.Generator) -> HermitianMatrix:
    """
    Draw H = H₀ + α_N·H_GUE.

    H₀ is drawn first so that, at fixed stream, changing λ only rescales
    the GUE part. λ = 0 yields an exactly diagonal real matrix.
    """
    _check_dim(n)
    _check_nonnegative("lambda", lam)
    half = 0.5 * RP_BAND_WIDTH
    h0 = rng.uniform(-half, half, n)
    if lam == 0.0:
        return HermitianMatrix(np.diag(h0))
    h = rp_coupling(n, lam) * _gue_entries(n, rng)
    h[np.diag_indices(n)] += h0
    return HermitianMatrix(h)


def sample_poisson(n: int, rng: np.random.Generator) -> HermitianMatrix:
    """Poisson limit: the diagonal H₀ of the RP model."""
    return sample_rp(n, 0.0, rng)


def sample_goe_to_gue(n: int, xi: float, rng: np.random.Generator) -> HermitianMatrix:
    """
    Draw H = H_S + i·ξ·(π/√n)·H_A.

    ξ equals the rms T-breaking matrix element in units of the mean level
    spacing at the band centre. ξ = 0 yields an exactly real matrix.
    """
    _check_dim(n)
    _check_nonnegative("xi", xi)
    h_s = _goe_entries(n, rng)
    if xi == 0.0:
        return HermitianMatrix(h_s)
    h_a = _antisymmetric_entries(n, rng)
    return HermitianMatrix(h_s + 1j * (xi * math.pi / math.sqrt(n)) * h_a)


def eigenvalues(h: HermitianMatrix | np.ndarray) -> np.ndarray:
    """
    Ascending real eigenvalues.

    Raises:
        ContractViolationError: if the input departs from Hermiticity by more than 1e-12
    """
    entries = h.entries if isinstance(h, HermitianMatrix) else np.asarray(h)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ContractViolationError("matrix must be square", {"shape": entries.shape})
    asym = float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0
    if asym > HERMITICITY_TOL:
        raise ContractViolationError(
            "matrix is not Hermitian", {"max_asymmetry": asym, "tolerance": HERMITICITY_TOL}
        )
    return linalg.eigvalsh(entries, check_finite=False)


def sample_matrix(spec: EnsembleSpec, index: int) -> HermitianMatrix:
    """Matrix of realization ``index``; a pure function of (spec, index)."""
    rng = realization_rng(spec.master_seed, index)
    if spec.kind is EnsembleKind.GUE:
        return sample_gue(spec.dim, rng)
    if spec.kind is EnsembleKind.GOE:
        return sample_goe(spec.dim, rng)
    if spec.kind is EnsembleKind.POISSON:
        return sample_poisson(spec.dim, rng)
    if spec.kind is EnsembleKind.RP:
        return sample_rp(spec.dim, spec.lam, rng)
    if spec.kind is EnsembleKind.GOE_TO_GUE:
        return sample_goe_to_gue(spec.dim, spec.xi, rng)
    raise ValidationError("kind", "unknown ensemble kind", spec.kind)


def sample_spectrum(spec: EnsembleSpec, index: int) -> np.ndarray:
    """Eigenvalues of realization ``index``."""
    h = sample_matrix(spec, index)
    if spec.kind is EnsembleKind.POISSON or (spec.kind is EnsembleKind.RP and spec.lam == 0.0):
        return np.sort(np.diag(h.entries).real)
    return eigenvalues(h)


def sample_ensemble(
    spec: EnsembleSpec, threads: int = 1, progress: bool = False
) -> list[np.ndarray]:
    """
    Spectra of every realization of ``spec`` in index order.

    Example:
        >>> spec = EnsembleSpec(EnsembleKind.GUE, dim=50, master_seed=1, realizations=3)
        >>> [s.size for s in sample_ensemble(spec)]
        [50, 50, 50]
    """
    _check_dim(spec.dim)
    if spec.realizations < 1:
        raise ValidationError("realizations", "must be at least 1", spec.realizations)
    logger.debug(
        "Sampling %d %s spectra of dimension %d", spec.realizations, spec.kind.value, spec.dim
    )
    return run_realizations(
        lambda i: sample_spectrum(spec, i),
        spec.realizations,
        threads=threads,
        progress=progress,
        desc=f"{spec.kind.value} spectra",
    )
