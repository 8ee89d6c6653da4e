"""Spectral decomposition of the Laplacian and the heat semigroup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DomainError, as_matrix
from .geometry import KERNEL_RTOL, GeometryContext, laplacian_apply, unvec, vec


class SpectrumError(RuntimeError):
    """The Laplacian spectrum could not be computed or is unusable."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and HS-orthonormal eigenmatrices of Delta.

    ``vectors[:, j]`` is ``vec(phi_j)``. Eigenvalues classified as kernel
    (below ``1e-8 lambda_max``) are treated as exactly zero by the
    semigroup, heat trace and Poisson solver.
    """

    ctx: GeometryContext
    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.ctx.n

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def kernel_tol(self) -> float:
        return KERNEL_RTOL * max(self.lambda_max, 0.0)

    @property
    def kernel_mask(self) -> np.ndarray:
        return self.eigenvalues <= self.kernel_tol

    @property
    def kernel_dimension(self) -> int:
        return int(np.sum(self.kernel_mask))

    def eigenmatrix(self, j: int) -> np.ndarray:
        return unvec(self.vectors[:, j], self.n)

    @property
    def eigenmatrices(self) -> list[np.ndarray]:
        return [self.eigenmatrix(j) for j in range(self.eigenvalues.size)]

    def snapped_eigenvalues(self) -> np.ndarray:
        return np.where(self.kernel_mask, 0.0, self.eigenvalues)

    def coefficients(self, a) -> np.ndarray:
        """``<phi_j, a>`` for every j."""
        return self.vectors.conj().T @ vec(as_matrix(a))

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return unvec(self.vectors @ coeffs, self.n)


def spectrum(ctx: GeometryContext) -> Spectrum:
    """Full eigendecomposition of the Laplacian superoperator."""
    entries = ctx.superoperator().entries
    try:
        lam, vecs = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed for n={ctx.n}: {exc}") from exc
    return Spectrum(ctx, lam, vecs)


def lambda1(s: Spectrum) -> float:
    """Spectral gap: smallest eigenvalue above the kernel tolerance."""
    nonzero = s.eigenvalues[~s.kernel_mask]
    if nonzero.size == 0:
        raise SpectrumError("every eigenvalue lies in the kernel tolerance; the geometry is degenerate")
    return float(nonzero[0])


def rayleigh_quotient(ctx: GeometryContext, a) -> float:
    a = as_matrix(a)
    return float(np.real(np.vdot(a, laplacian_apply(ctx, a))) / np.real(np.vdot(a, a)))


def _check_time(t: float) -> float:
    t = float(t)
    if not t >= 0:
        raise DomainError(f"time must be >= 0, got {t!r}")
    return t


def heat_semigroup_apply(s: Spectrum, t: float, a) -> np.ndarray:
    """``exp(-t Delta) a = sum_j exp(-lambda_j t) <phi_j, a> phi_j``."""
    t = _check_time(t)
    a = as_matrix(a)
    if a.shape != (s.n, s.n):
        raise DomainError(f"matrix of shape {a.shape} for a spectrum of dimension {s.n}")
    if t == 0:
        return a.copy()
    return s.synthesize(np.exp(-t * s.snapped_eigenvalues()) * s.coefficients(a))


def heat_trace(s: Spectrum, t: float) -> float:
    """``sum_j exp(-lambda_j t)``."""
    t = _check_time(t)
    return float(np.sum(np.exp(-t * s.snapped_eigenvalues())))
