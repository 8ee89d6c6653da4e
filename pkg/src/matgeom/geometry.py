"""Derivations, Laplacian and its superoperator on the matrix algebra M_n.

The two derivations are ``delta1 = [y, .]`` and ``delta2 = -[x, .]`` for a
pair of Hermitian generators ``x, y``. The Laplacian is used in its
positive, sign-normalized form

    Delta a = [y, [y, a]] + [x, [x, a]] = delta1(delta1 a) + delta2(delta2 a),

which equals ``delta1* delta1 + delta2* delta2`` for the Hilbert-Schmidt
adjoints and is positive semidefinite with kernel ``C I`` for a generic
generator pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DimensionMismatchError,
    NotPositiveError,
    as_matrix,
    check_hermitian,
    dagger,
    hermitian_eig,
    hs_norm,
)

KERNEL_RTOL = 1e-8


@dataclass(frozen=True)
class GeometryContext:
    """Dimension, Hermitian generators ``x, y`` and the unitaries ``U, V``."""

    n: int
    x: np.ndarray
    y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    generators: str = "clock_shift"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def superoperator(self) -> "Superoperator":
        if "superop" not in self._cache:
            self._cache["superop"] = assemble_superoperator(self)
        return self._cache["superop"]

    def kernel_dimension(self) -> int:
        """Number of eigenvalues of Delta below ``1e-8 lambda_max``."""
        lam = np.linalg.eigvalsh(self.superoperator().entries)
        return int(np.sum(lam <= KERNEL_RTOL * max(lam[-1], np.finfo(float).tiny)))

    def has_trivial_commutant(self) -> bool:
        return self.kernel_dimension() == 1


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix ``F[j, k] = exp(2 pi i j k / n) / sqrt(n)``."""
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def _unitary_from_generator(w: np.ndarray, n: int) -> np.ndarray:
    dec = hermitian_eig(w)
    return dec.reconstruct(np.exp(2j * np.pi * dec.eigenvalues / n))


def make_context(n: int, generators: str = "clock_shift", x=None, y=None) -> GeometryContext:
    """Build a geometry on M_n.

    Parameters
    ----------
    n : int
        Matrix dimension, at least 2.
    generators : {'clock_shift', 'custom'}
        ``clock_shift`` uses ``x = diag(0, ..., n-1)`` and ``y = F x F*``
        with ``F`` the unitary DFT, so ``U`` is the clock matrix and ``V``
        a cyclic shift. ``custom`` takes ``x`` and ``y`` as given.

    Notes
    -----
    Custom generator pairs are accepted even when they commute; call
    :meth:`GeometryContext.kernel_dimension` to detect a degenerate pair.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if generators == "clock_shift":
        xm = np.diag(np.arange(n, dtype=float)).astype(np.complex128)
        f = dft_matrix(n)
        ym = f @ xm @ dagger(f)
        ym = 0.5 * (ym + dagger(ym))
    elif generators == "custom":
        if x is None or y is None:
            raise ValueError("custom generators need both x and y")
        xm = check_hermitian(x, 1e-12)
        ym = check_hermitian(y, 1e-12)
        for name, w in (("x", xm), ("y", ym)):
            if w.shape != (n, n):
                raise DimensionMismatchError(f"generator {name} has shape {w.shape}, expected ({n}, {n})")
    else:
        raise ValueError(f"unknown generator spec {generators!r}")
    return GeometryContext(
        n=n,
        x=xm,
        y=ym,
        U=_unitary_from_generator(xm, n),
        V=_unitary_from_generator(ym, n),
        generators=generators,
    )


def _operand(ctx: GeometryContext, a) -> np.ndarray:
    a = as_matrix(a)
    if a.shape != (ctx.n, ctx.n):
        raise DimensionMismatchError(f"matrix of shape {a.shape} in a geometry of dimension {ctx.n}")
    return a


def commutator(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    return w @ a - a @ w


def delta1(ctx: GeometryContext, a) -> np.ndarray:
    """``[y, a]``."""
    return commutator(ctx.y, _operand(ctx, a))


def delta2(ctx: GeometryContext, a) -> np.ndarray:
    """``-[x, a]``."""
    return -commutator(ctx.x, _operand(ctx, a))


def laplacian_apply(ctx: GeometryContext, a) -> np.ndarray:
    """``[y, [y, a]] + [x, [x, a]]``."""
    a = _operand(ctx, a)
    return commutator(ctx.y, commutator(ctx.y, a)) + commutator(ctx.x, commutator(ctx.x, a))


# --- superoperator representation -------------------------------------------


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def commutator_superop(w: np.ndarray) -> np.ndarray:
    """Matrix of ``a -> [w, a]`` acting on ``vec(a)``: ``I (x) w - w^T (x) I``."""
    eye = np.eye(w.shape[0], dtype=np.complex128)
    return np.kron(eye, w) - np.kron(w.T, eye)


@dataclass(frozen=True)
class Superoperator:
    """An ``n^2 x n^2`` matrix acting on column-stacked ``n x n`` matrices."""

    n: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.n * self.n

    def apply(self, a) -> np.ndarray:
        return unvec(self.entries @ vec(as_matrix(a)), self.n)

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.entries, 2))


def assemble_superoperator(ctx: GeometryContext) -> Superoperator:
    cy = commutator_superop(ctx.y)
    cx = commutator_superop(ctx.x)
    entries = cy @ cy + cx @ cx
    entries = 0.5 * (entries + dagger(entries))
    return Superoperator(ctx.n, entries)


def derivation_superop(ctx: GeometryContext) -> np.ndarray:
    """Stacked matrix of ``a -> (delta1 a, delta2 a)``, shape ``(2 n^2, n^2)``."""
    return np.vstack([commutator_superop(ctx.y), -commutator_superop(ctx.x)])


def dirichlet_power_form(ctx: GeometryContext, a, m: int) -> float:
    """``tau(a^m Delta a)`` for positive definite ``a`` and integer ``m >= 0``.

    Nonnegative, and zero exactly for scalar ``a`` when ``m >= 1``
    (for ``m = 0`` it is ``tau(Delta a) = 0`` identically).
    """
    a = check_hermitian(_operand(ctx, a))
    m = int(m)
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    lam = hermitian_eig(a).eigenvalues
    if lam[0] <= 0:
        raise NotPositiveError(float(lam[0]))
    am = np.linalg.matrix_power(a, m)
    return float(np.real(np.trace(am @ laplacian_apply(ctx, a))))


def dirichlet_form(ctx: GeometryContext, a) -> float:
    """``<a, Delta a> = ||delta1 a||^2 + ||delta2 a||^2``."""
    return hs_norm(delta1(ctx, a)) ** 2 + hs_norm(delta2(ctx, a)) ** 2
