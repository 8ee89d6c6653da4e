"""Executable checks of the structural properties of delta1, delta2 and Delta.

Each property is sampled on seeded random inputs and summarized by its
worst relative violation. Failures are data in the report, never
exceptions.

Property ids:

* ``a``  common kernel of the derivations is ``C I`` (and scalars are killed)
* ``b``  ``tau(a delta b) = -tau(b delta a)``; ``delta`` maps Hermitian to anti-Hermitian
* ``c``  ``lambda1 |a - abar|^2 <= <a - abar, Delta(a - abar)> <= lambda_max |a - abar|^2``
* ``d``  ``<a, Delta a> = sum ||delta_mu a||^2 >= 0``
* ``e``  ``<a, Delta a> = 0`` forces ``delta_mu a = 0``
* ``f``  ``ker Delta = C I``
* ``g``  ``tau(Delta a) = 0``
* ``power``  ``tau(a^m Delta a) >= 0`` for positive definite ``a``, ``m = 0..5``,
  zero for scalar ``a``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import dagger, hs_norm, mean_part, random_hermitian, random_pd
from .geometry import (
    KERNEL_RTOL,
    GeometryContext,
    delta1,
    delta2,
    derivation_superop,
    dirichlet_power_form,
    laplacian_apply,
    unvec,
)
from .spectral import Spectrum, SpectrumError, lambda1, spectrum

EQUALITY_TOL = 1e-12
INEQUALITY_TOL = 1e-10
POWER_RANGE = range(0, 6)
# spread of log-eigenvalues; condition number exp(2 * 3.0) ~ 403 <= 1e3
PD_LOG_SPREAD = 3.0


@dataclass
class PropertyRecord:
    property: str
    samples: int
    worst_violation: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.worst_violation = float(self.worst_violation)
        self.passed = bool(np.isfinite(self.worst_violation) and self.worst_violation <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "samples": self.samples,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class PropertyReport:
    n: int
    generators: str
    seed: int
    records: list[PropertyRecord]
    lambda1: float | None
    lambda_max: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failing(self) -> list[str]:
        return [r.property for r in self.records if not r.passed]

    def __getitem__(self, prop: str) -> PropertyRecord:
        for r in self.records:
            if r.property == prop:
                return r
        raise KeyError(prop)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "generators": self.generators,
            "seed": self.seed,
            "lambda1": self.lambda1,
            "lambda_max": self.lambda_max,
            "pass": self.passed,
            "properties": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def _nullspace(mat: np.ndarray, rtol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space."""
    _, sv, vh = np.linalg.svd(mat)
    tol = rtol * max(sv[0], np.finfo(float).tiny)
    rank = int(np.sum(sv > tol))
    return vh[rank:].conj().T


def _distance_from_scalars(basis: np.ndarray, n: int) -> float:
    """Largest distance of a unit null vector from span(vec I); 1 per extra dimension."""
    if basis.shape[1] == 0:
        return 1.0
    ident = np.eye(n, dtype=np.complex128).reshape(-1, order="F") / np.sqrt(n)
    resid = basis - np.outer(ident, ident.conj() @ basis)
    return float(np.linalg.norm(resid, 2))


def _kernel_checks(ctx: GeometryContext, rng, samples: int, superop_norm: float) -> tuple[float, float]:
    """Worst violations for the derivation kernel and the Laplacian kernel."""
    n = ctx.n
    scalar_hits = 0.0
    lap_scalar_hits = 0.0
    for _ in range(samples):
        c = complex(rng.standard_normal(), rng.standard_normal())
        ci = c * np.eye(n, dtype=np.complex128)
        gen = max(hs_norm(ctx.x), hs_norm(ctx.y), 1.0)
        scalar_hits = max(
            scalar_hits, (hs_norm(delta1(ctx, ci)) + hs_norm(delta2(ctx, ci))) / (abs(c) * gen)
        )
        lap_scalar_hits = max(lap_scalar_hits, hs_norm(laplacian_apply(ctx, ci)) / (abs(c) * max(superop_norm, 1.0)))
    # singular values of the stacked derivations are square roots of eigenvalues of Delta
    deriv_null = _nullspace(derivation_superop(ctx), np.sqrt(KERNEL_RTOL))
    lap_null = _nullspace(ctx.superoperator().entries, KERNEL_RTOL)
    a_viol = max(scalar_hits, _distance_from_scalars(deriv_null, n))
    f_viol = max(lap_scalar_hits, _distance_from_scalars(lap_null, n))
    return a_viol, f_viol


def check_properties(ctx: GeometryContext, seed: int, samples: int, spec: Spectrum | None = None) -> PropertyReport:
    """Sample every property on ``samples`` seeded random inputs.

    Tolerances are relative: ``1e-12`` for equality claims and ``1e-10``
    for inequality claims. Scale factors are the natural ones for each
    quantity (products of HS norms and the spectral norm of Delta).
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    n = ctx.n
    rng = np.random.default_rng(seed)
    s = spec if spec is not None else spectrum(ctx)
    lam_max = max(s.lambda_max, 0.0)
    scale = max(lam_max, 1.0)
    try:
        lam1 = lambda1(s)
    except SpectrumError:
        lam1 = None
    gen_norm = max(np.linalg.norm(ctx.x, 2), np.linalg.norm(ctx.y, 2), 1.0)

    records: list[PropertyRecord] = []

    a_viol, f_viol = _kernel_checks(ctx, rng, samples, lam_max)

    b_viol = 0.0
    c_viol = 0.0
    d_viol = 0.0
    g_viol = 0.0
    for _ in range(samples):
        a = _random_complex(rng, n)
        b = _random_complex(rng, n)
        h = random_hermitian(int(rng.integers(2**31)), n)
        na, nb = hs_norm(a), hs_norm(b)
        for delta in (delta1, delta2):
            lhs = np.trace(a @ delta(ctx, b))
            rhs = -np.trace(b @ delta(ctx, a))
            b_viol = max(b_viol, abs(lhs - rhs) / (na * nb * gen_norm))
            dh = delta(ctx, h)
            b_viol = max(b_viol, hs_norm(dagger(dh) + dh) / (hs_norm(h) * gen_norm))

        a0 = a - mean_part(a)
        q = np.vdot(a0, laplacian_apply(ctx, a0))
        norm2 = hs_norm(a0) ** 2
        if lam1 is None:
            c_viol = np.inf
        else:
            low = max(lam1 * norm2 - q.real, 0.0)
            high = max(q.real - lam_max * norm2, 0.0)
            c_viol = max(c_viol, (low + high) / (scale * norm2))

        form = np.vdot(a, laplacian_apply(ctx, a))
        parts = hs_norm(delta1(ctx, a)) ** 2 + hs_norm(delta2(ctx, a)) ** 2
        rel = scale * na**2
        d_viol = max(d_viol, max(-form.real, 0.0) / rel, abs(form.imag) / rel, abs(form.real - parts) / rel)

        g_viol = max(g_viol, abs(np.trace(laplacian_apply(ctx, a))) / (scale * na))

    # (e): elements of the numerical kernel of Delta are killed by each derivation,
    # and each ||delta_mu a||^2 is dominated by the Dirichlet form.
    e_viol = 0.0
    lap_null = _nullspace(ctx.superoperator().entries, KERNEL_RTOL)
    for _ in range(samples):
        if lap_null.shape[1]:
            coeff = rng.standard_normal(lap_null.shape[1]) + 1j * rng.standard_normal(lap_null.shape[1])
            k = unvec(lap_null @ coeff, n)
            for delta in (delta1, delta2):
                e_viol = max(e_viol, hs_norm(delta(ctx, k)) / (hs_norm(k) * gen_norm))
        a = _random_complex(rng, n)
        form = np.vdot(a, laplacian_apply(ctx, a)).real
        for delta in (delta1, delta2):
            e_viol = max(e_viol, max(hs_norm(delta(ctx, a)) ** 2 - form, 0.0) / (scale * hs_norm(a) ** 2))

    power_viol = 0.0
    for _ in range(samples):
        pd = random_pd(int(rng.integers(2**31)), n, min_eig=1e-3, scale=PD_LOG_SPREAD)
        c = float(rng.uniform(0.5, 2.0))
        for m in POWER_RANGE:
            ref = np.linalg.norm(pd, 2) ** (m + 1) * scale
            val = dirichlet_power_form(ctx, pd, m)
            power_viol = max(power_viol, max(-val, 0.0) / ref)
            scalar = dirichlet_power_form(ctx, c * np.eye(n), m)
            power_viol = max(power_viol, abs(scalar) / (c ** (m + 1) * scale))

    records.append(PropertyRecord("a", samples, a_viol, EQUALITY_TOL))
    records.append(PropertyRecord("b", samples, b_viol, EQUALITY_TOL))
    records.append(PropertyRecord("c", samples, c_viol, INEQUALITY_TOL))
    records.append(PropertyRecord("d", samples, d_viol, INEQUALITY_TOL))
    records.append(PropertyRecord("e", samples, e_viol, INEQUALITY_TOL))
    records.append(PropertyRecord("f", samples, f_viol, EQUALITY_TOL))
    records.append(PropertyRecord("g", samples, g_viol, EQUALITY_TOL))
    records.append(PropertyRecord("power", samples, power_viol, INEQUALITY_TOL))
    return PropertyReport(n, ctx.generators, seed, records, lam1, lam_max)
