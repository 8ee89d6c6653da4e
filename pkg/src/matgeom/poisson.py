"""Poisson equation ``Delta a = b`` on the quotient M_n / C I."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DimensionMismatchError, as_matrix, hs_norm, mean_part, random_hermitian
from .geometry import GeometryContext, laplacian_apply
from .spectral import Spectrum, SpectrumError

SOLVABILITY_TOL = 1e-10


class NotSolvableError(ValueError):
    """The source term has nonzero trace."""

    def __init__(self, trace: complex):
        self.trace = trace
        super().__init__(f"not solvable: trace = {_fmt_trace(trace)}")


class DegenerateGeometryError(SpectrumError):
    """ker Delta is larger than the scalars, so the quotient argument fails."""


def _fmt_trace(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}i"


@dataclass(frozen=True)
class PoissonSolution:
    solution: np.ndarray
    residual: float
    projected_source_norm: float


def is_solvable(b, tol: float = SOLVABILITY_TOL) -> bool:
    """True iff ``|tau(b)| <= tol max(1, ||b||)``."""
    b = as_matrix(b)
    return abs(np.trace(b)) <= tol * max(1.0, hs_norm(b))


def solve_poisson(s: Spectrum, b, tol: float = SOLVABILITY_TOL) -> PoissonSolution:
    """Trace-free solution of ``Delta a = b`` via the spectral pseudo-inverse.

    Raises
    ------
    NotSolvableError
        If ``b`` is not trace-free (within ``tol``).
    DegenerateGeometryError
        If the kernel of Delta has dimension greater than one.
    """
    b = as_matrix(b)
    if b.shape != (s.n, s.n):
        raise DimensionMismatchError(f"source of shape {b.shape} for dimension {s.n}")
    if not is_solvable(b, tol):
        raise NotSolvableError(complex(np.trace(b)))
    if s.kernel_dimension != 1:
        raise DegenerateGeometryError(f"kernel of Delta has dimension {s.kernel_dimension}, expected 1")
    lam = s.eigenvalues
    inv = np.zeros_like(lam)
    live = ~s.kernel_mask
    inv[live] = 1.0 / lam[live]
    a = s.synthesize(inv * s.coefficients(b))
    a = a - mean_part(a)
    residual = hs_norm(laplacian_apply(s.ctx, a) - b) / max(1.0, hs_norm(b))
    return PoissonSolution(a, residual, hs_norm(b - mean_part(b)))


def poisson_roundtrip_check(ctx: GeometryContext, s: Spectrum, seed: int, samples: int) -> float:
    """Worst ``||solve(Delta a) - (a - mean(a))|| / ||a||`` over random Hermitian ``a``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    worst = 0.0
    for k in range(samples):
        a = random_hermitian(seed + k, ctx.n)
        a = a - mean_part(a)
        sol = solve_poisson(s, laplacian_apply(ctx, a)).solution
        worst = max(worst, hs_norm(sol - (a - mean_part(a))) / hs_norm(a))
    return worst
