"""Dense matrix algebra on M_n.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` and
shape ``(n, n)``. This module provides the Hilbert-Schmidt geometry,
Hermitian spectral calculus, entropy and distance functionals, seeded
random generation and the JSON matrix file format shared by the rest of
the package.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class NotHermitianError(ValueError):
    """A Hermitian matrix was required."""

    def __init__(self, violation: float):
        super().__init__(f"matrix is not Hermitian: ||a - a*|| = {violation:.3e}")
        self.violation = violation


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class NotPositiveError(DomainError):
    """A positive (semi)definite matrix was required."""

    def __init__(self, eigenvalue: float, message: str | None = None):
        super().__init__(message or f"matrix is not positive: eigenvalue {eigenvalue:.6e}")
        self.eigenvalue = eigenvalue


def as_matrix(a) -> np.ndarray:
    """Validate ``a`` as a finite square matrix and return it as complex128."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatchError(f"expected a square n x n matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"incompatible operands: {a.shape} vs {b.shape}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``tau(a* b)``, conjugate-linear in ``a``."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b)
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    a = as_matrix(a)
    return float(np.linalg.norm(a))


def mean_part(a) -> np.ndarray:
    """Scalar part ``(tau(a)/n) I`` of ``a``."""
    a = as_matrix(a)
    n = a.shape[0]
    return (np.trace(a) / n) * np.eye(n, dtype=np.complex128)


def hermiticity_violation(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - dagger(a)))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    return hermiticity_violation(a) <= tol * max(1.0, hs_norm(a))


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(a)
    violation = hermiticity_violation(a)
    if violation > tol * max(1.0, float(np.linalg.norm(a))):
        raise NotHermitianError(violation)
    return a


@dataclass(frozen=True)
class HermitianDecomposition:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values: np.ndarray | None = None) -> np.ndarray:
        lam = self.eigenvalues if values is None else values
        v = self.eigenvectors
        return (v * lam) @ dagger(v)


def hermitian_eig(a) -> HermitianDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    LAPACK ``zheevd`` through :func:`numpy.linalg.eigh`; the input is
    symmetrized first so that both triangles contribute.

    Raises
    ------
    NotHermitianError
        If ``||a - a*|| > 1e-10 max(1, ||a||)``.
    """
    a = check_hermitian(a)
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    return HermitianDecomposition(w, v)


def eigvalsh(a) -> np.ndarray:
    a = check_hermitian(a)
    return np.linalg.eigvalsh(0.5 * (a + dagger(a)))


MatrixFunctionTag = Union[str, tuple]


def _scalar_function(f: MatrixFunctionTag) -> tuple[str, Callable[[np.ndarray], np.ndarray]]:
    if f == "log":
        return "log", np.log
    if f == "exp":
        return "exp", np.exp
    if isinstance(f, tuple) and len(f) == 2 and f[0] == "power":
        p = float(f[1])
        return "power", lambda lam: np.power(lam, p)
    raise ValueError(f"unknown matrix function {f!r}; expected 'log', 'exp' or ('power', p)")


def matrix_function(a, f: MatrixFunctionTag) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    a : array_like
        Hermitian matrix.
    f : {'log', 'exp'} or ('power', p)
        The scalar function. ``log`` requires every eigenvalue to be
        strictly positive; non-integer powers require eigenvalues >= 0.

    Returns
    -------
    numpy.ndarray
        ``V diag(f(lambda)) V*``.
    """
    kind, fn = _scalar_function(f)
    dec = hermitian_eig(a)
    lam = dec.eigenvalues
    if kind == "log" and lam[0] <= 0:
        raise NotPositiveError(float(lam[0]), f"log undefined: eigenvalue {lam[0]:.6e} <= 0")
    if kind == "power":
        p = float(f[1])
        if p != int(p) and lam[0] < 0:
            raise NotPositiveError(float(lam[0]), f"fractional power undefined: eigenvalue {lam[0]:.6e} < 0")
        if p < 0 and np.any(lam == 0):
            raise NotPositiveError(0.0, "negative power of a singular matrix")
    return dec.reconstruct(fn(lam).astype(np.complex128))


def _psd_eigenvalues(u: np.ndarray) -> np.ndarray:
    lam = eigvalsh(u)
    tol = PSD_TOL * max(1.0, hs_norm(u))
    if lam[0] < -tol:
        raise NotPositiveError(float(lam[0]))
    return np.clip(lam, 0.0, None)


def _entropy_of_spectrum(lam: np.ndarray) -> float:
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def von_neumann_entropy(u) -> float:
    """``S(u) = -tau(u log u)`` in nats, with ``0 log 0 = 0``.

    Eigenvalues in ``[-1e-12 max(1, ||u||), 0]`` are clamped to zero.
    """
    return _entropy_of_spectrum(_psd_eigenvalues(as_matrix(u)))


def trace_distance(a, b) -> float:
    """Trace norm ``||a - b||_1`` of a Hermitian difference (no factor 1/2)."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b)
    return float(np.sum(np.abs(eigvalsh(a - b))))


def eigenvalue_l1_gap(a, b) -> float:
    """Sum of absolute differences of the ascending spectra of ``a`` and ``b``."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b)
    return float(np.sum(np.abs(eigvalsh(a) - eigvalsh(b))))


def eta(s: float) -> float:
    """``-s log s`` on ``[0, 1]`` with ``eta(0) = 0``."""
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"eta is defined on [0, 1], got {s!r}")
    return 0.0 if s == 0.0 else -s * math.log(s)


def fannes_bound(gap: float, d: int) -> float:
    """Fannes continuity bound ``gap log d + eta(gap)``."""
    return float(gap) * math.log(d) + eta(gap)


def random_hermitian(seed: int, n: int, scale: float = 1.0) -> np.ndarray:
    """Seeded random Hermitian matrix with complex Gaussian entries of std ``scale``.

    The result is Hermitian exactly, entry for entry.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    g *= scale / math.sqrt(2.0)
    return 0.5 * (g + dagger(g))


def random_pd(seed: int, n: int, min_eig: float = 0.1, scale: float = 1.0) -> np.ndarray:
    """Seeded random positive definite matrix ``exp(h)``.

    ``h`` is a random Hermitian matrix rescaled to spectral norm ``scale``,
    so the spectrum of ``exp(h)`` lies in ``[exp(-scale), exp(scale)]`` and
    the condition number is at most ``exp(2 scale)``. If the smallest
    eigenvalue is below ``min_eig`` the matrix is shifted up by the
    difference.
    """
    if not min_eig > 0:
        raise ValueError(f"min_eig must be > 0, got {min_eig}")
    h = random_hermitian(seed, n, 1.0)
    dec = hermitian_eig(h)
    lam = dec.eigenvalues
    spread = np.max(np.abs(lam))
    if spread > 0:
        lam = lam * (scale / spread)
    mu = np.exp(lam)
    if mu[0] < min_eig:
        mu = mu + (min_eig - mu[0])
    u = dec.reconstruct(mu.astype(np.complex128))
    return 0.5 * (u + dagger(u))


def unit_trace(u) -> np.ndarray:
    u = as_matrix(u)
    return u / np.trace(u).real


# --- Matrix JSON file format -------------------------------------------------


def matrix_to_dict(a) -> dict:
    a = as_matrix(a)
    return {
        "n": int(a.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in a],
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    try:
        n = int(d["n"])
        rows = d["entries"]
    except (KeyError, TypeError) as exc:
        raise ValueError("matrix JSON needs keys 'n' and 'entries'") from exc
    if n < 1 or len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"matrix JSON entries are not {n} x {n}")
    a = np.empty((n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        for j, z in enumerate(row):
            if len(z) != 2:
                raise ValueError(f"entry ({i}, {j}) must be a [re, im] pair")
            a[i, j] = complex(float(z[0]), float(z[1]))
    return as_matrix(a)


def dumps_matrix(a) -> str:
    # json emits repr(float): shortest string that round-trips the double exactly
    return json.dumps(matrix_to_dict(a))


def loads_matrix(text: str) -> np.ndarray:
    return matrix_from_dict(json.loads(text))


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, a) -> None:
    atomic_write_text(path, dumps_matrix(a) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return loads_matrix(fh.read())
