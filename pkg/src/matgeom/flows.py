"""Heat flow ``u' = -Delta u``, the log-Laplacian flow ``c' = -Delta log c``,
per-state diagnostics and the two-trajectory stability experiment."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    PSD_TOL,
    DimensionMismatchError,
    NotPositiveError,
    as_matrix,
    eigenvalue_l1_gap,
    eigvalsh,
    fannes_bound,
    hs_norm,
    matrix_function,
    mean_part,
    trace_distance,
    von_neumann_entropy,
)
from .geometry import GeometryContext, laplacian_apply
from .spectral import Spectrum, lambda1

# real-axis stability limit of classical RK4: |1 - z + z^2/2 - z^3/6 + z^4/24| <= 1 for z <= 2.785
RK4_STABILITY_LIMIT = 2.785
DEFAULT_STEP_FRACTION = 0.1
DEFAULT_RECORD_STRIDE = 10
MONOTONE_TOL = 1e-9


class IntegrationError(RuntimeError):
    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


class PositivityError(IntegrationError):
    """The state left the positive definite cone."""


@dataclass(frozen=True)
class FlowDiagnostics:
    trace: complex
    min_eigenvalue: float
    log_det: float | None
    entropy: float | None
    dist_to_mean: float


def flow_diagnostics(u, u0_mean) -> FlowDiagnostics:
    """Trace, smallest eigenvalue, log-determinant, entropy and ``||u - u0_mean||``.

    ``log_det`` is ``None`` unless ``u`` is positive definite; ``entropy``
    is ``None`` unless ``u`` is positive semidefinite (up to the clamping
    tolerance of :func:`matgeom.algebra.von_neumann_entropy`).
    """
    u = as_matrix(u)
    lam = eigvalsh(u)
    min_eig = float(lam[0])
    log_det = float(np.sum(np.log(lam))) if min_eig > 0 else None
    entropy = None
    if min_eig >= -PSD_TOL * max(1.0, hs_norm(u)):
        entropy = von_neumann_entropy(u)
    return FlowDiagnostics(
        trace=complex(np.trace(u)),
        min_eigenvalue=min_eig,
        log_det=log_det,
        entropy=entropy,
        dist_to_mean=hs_norm(u - as_matrix(u0_mean)),
    )


def _cell(value) -> str:
    if value is None:
        return ""
    value = float(value)
    return "" if math.isnan(value) else repr(value)


TRAJECTORY_COLUMNS = ("t", "trace_re", "trace_im", "min_eig", "log_det", "entropy", "dist_to_mean")


@dataclass
class FlowTrajectory:
    times: np.ndarray
    states: list[np.ndarray]
    diagnostics: list[FlowDiagnostics]
    stability_warning: bool = False
    notes: list[str] = field(default_factory=list)

    def field(self, name: str) -> np.ndarray:
        """Diagnostic column as a float array, NaN where absent."""
        out = []
        for d in self.diagnostics:
            v = getattr(d, name)
            out.append(np.nan if v is None else v)
        return np.array(out, dtype=complex if name == "trace" else float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for t, d in zip(self.times, self.diagnostics):
            w.writerow(
                [
                    _cell(t),
                    _cell(d.trace.real),
                    _cell(d.trace.imag),
                    _cell(d.min_eigenvalue),
                    _cell(d.log_det),
                    _cell(d.entropy),
                    _cell(d.dist_to_mean),
                ]
            )
        return buf.getvalue()


def read_csv_columns(text: str) -> dict[str, np.ndarray]:
    """Parse a CSV written by this package into float columns (NaN for empty cells)."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        cols[name] = np.array([float(r[j]) if r[j] != "" else np.nan for r in body])
    return cols


def _trajectory(times, states, u0, **kw) -> FlowTrajectory:
    target = mean_part(u0)
    diags = [flow_diagnostics(u, target) for u in states]
    return FlowTrajectory(np.asarray(times, dtype=float), states, diags, **kw)


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty list")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("times must be finite and nonnegative")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly ascending")
    return t


def heat_flow_exact(s: Spectrum, u0, times: Sequence[float]) -> FlowTrajectory:
    """Heat flow evaluated with the exact semigroup at each requested time."""
    t = _check_times(times)
    u0 = as_matrix(u0)
    if u0.shape != (s.n, s.n):
        raise DimensionMismatchError(f"u0 has shape {u0.shape}, expected ({s.n}, {s.n})")
    coeffs = s.coefficients(u0)
    lam = s.snapped_eigenvalues()
    states = [u0.copy() if tk == 0 else s.synthesize(np.exp(-tk * lam) * coeffs) for tk in t]
    traj = _trajectory(t, states, u0)
    # u(t) - mean(u0) = exp(-t Delta)(u0 - mean(u0)); evolving the deviation
    # keeps its relative accuracy long after it drops below roundoff of u(t).
    dist = _deviation_norms(s, u0, t)
    traj.diagnostics = [replace(dg, dist_to_mean=float(r)) for dg, r in zip(traj.diagnostics, dist)]
    return traj


def _deviation_norms(s: Spectrum, a: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``||exp(-t Delta)(a - mean(a))||`` at each time, free of cancellation against the mean."""
    dev = a - mean_part(a)
    coeffs = s.coefficients(dev)
    lam = s.snapped_eigenvalues()
    out = np.empty(len(times))
    for k, tk in enumerate(times):
        w = dev if tk == 0 else s.synthesize(np.exp(-tk * lam) * coeffs)
        out[k] = hs_norm(w - mean_part(w))
    return out


def _rk4(
    rhs: Callable[[np.ndarray, int], np.ndarray],
    u0: np.ndarray,
    step: float,
    steps: int,
    record_stride: int,
) -> tuple[list[float], list[np.ndarray]]:
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    if steps < 0 or record_stride < 1:
        raise ValueError("steps must be >= 0 and record_stride >= 1")
    u = u0.copy()
    times, states = [0.0], [u.copy()]
    h = float(step)

    def stage(v: np.ndarray, k: int) -> np.ndarray:
        if not np.all(np.isfinite(v)):
            raise IntegrationError(k, "non-finite state (overflow or NaN)")
        return rhs(v, k)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps + 1):
            k1 = stage(u, k)
            k2 = stage(u + (0.5 * h) * k1, k)
            k3 = stage(u + (0.5 * h) * k2, k)
            k4 = stage(u + h * k3, k)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(u)):
                raise IntegrationError(k, "non-finite state (overflow or NaN)")
            if k % record_stride == 0 or k == steps:
                times.append(k * h)
                states.append(u.copy())
    return times, states


def superoperator_lambda_max(ctx: GeometryContext) -> float:
    return float(np.linalg.eigvalsh(ctx.superoperator().entries)[-1])


def heat_flow_rk4(
    ctx: GeometryContext,
    u0,
    step: float | None = None,
    steps: int = 100,
    record_stride: int = DEFAULT_RECORD_STRIDE,
    lambda_max: float | None = None,
) -> FlowTrajectory:
    """Classical RK4 on ``u' = -Delta u``.

    The default step is ``0.1 / lambda_max``. Steps beyond the RK4
    real-axis stability limit ``2.785 / lambda_max`` set
    ``stability_warning`` on the returned trajectory.
    """
    u0 = as_matrix(u0)
    lam_max = superoperator_lambda_max(ctx) if lambda_max is None else float(lambda_max)
    if step is None:
        step = DEFAULT_STEP_FRACTION / lam_max
    times, states = _rk4(lambda u, k: -laplacian_apply(ctx, u), u0, step, int(steps), int(record_stride))
    warn = step * lam_max > RK4_STABILITY_LIMIT
    notes = [f"step {step:g} exceeds RK4 stability limit {RK4_STABILITY_LIMIT / lam_max:g}"] if warn else []
    return _trajectory(times, states, u0, stability_warning=warn, notes=notes)


def log_laplacian_flow(
    ctx: GeometryContext,
    c0,
    step: float | None = None,
    steps: int = 100,
    record_stride: int = DEFAULT_RECORD_STRIDE,
    lambda_max: float | None = None,
) -> FlowTrajectory:
    """RK4 on ``c' = -Delta log c`` for positive definite ``c0``.

    Linearized at ``c`` the right-hand side has stiffness up to
    ``lambda_max / lambda_min(c)``, so the default step is
    ``0.1 lambda_min(c0) / lambda_max`` and the stability warning uses the
    same scaling.

    Raises
    ------
    PositivityError
        If any Runge-Kutta stage loses positive definiteness.
    """
    c0 = as_matrix(c0)
    lam0 = eigvalsh(c0)
    if lam0[0] <= 0:
        raise NotPositiveError(float(lam0[0]))
    lam_max = superoperator_lambda_max(ctx) if lambda_max is None else float(lambda_max)
    stiff = lam_max / float(lam0[0])
    if step is None:
        step = DEFAULT_STEP_FRACTION / stiff

    def rhs(c: np.ndarray, k: int) -> np.ndarray:
        try:
            return -laplacian_apply(ctx, matrix_function(c, "log"))
        except NotPositiveError as exc:
            raise PositivityError(k, f"lost positive definiteness: eigenvalue {exc.eigenvalue:.3e}") from exc

    times, states = _rk4(rhs, c0, step, int(steps), int(record_stride))
    warn = step * stiff > RK4_STABILITY_LIMIT
    notes = [f"step {step:g} exceeds estimated stability limit {RK4_STABILITY_LIMIT / stiff:g}"] if warn else []
    return _trajectory(times, states, c0, stability_warning=warn, notes=notes)


@dataclass(frozen=True)
class MonotonicityResult:
    worst_increment: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_increment >= -self.tolerance


def _monotonicity(values: np.ndarray, what: str) -> MonotonicityResult:
    if np.any(np.isnan(values)):
        bad = int(np.flatnonzero(np.isnan(values))[0])
        raise NotPositiveError(float("nan"), f"{what} undefined at recorded state {bad}: state not positive")
    tol = MONOTONE_TOL * max(1.0, float(np.max(np.abs(values))))
    worst = float(np.min(np.diff(values))) if values.size > 1 else 0.0
    return MonotonicityResult(worst, tol)


def entropy_monotonicity_check(traj: FlowTrajectory) -> MonotonicityResult:
    """Smallest entropy increment between consecutive recorded states."""
    return _monotonicity(traj.field("entropy"), "entropy")


def log_det_monotonicity_check(traj: FlowTrajectory) -> MonotonicityResult:
    """Smallest log-determinant increment between consecutive recorded states."""
    return _monotonicity(traj.field("log_det"), "log-determinant")


# --- stability experiment ----------------------------------------------------

STABILITY_COLUMNS = (
    "t",
    "hs_dist",
    "trace_dist",
    "eig_l1_gap",
    "entropy_u",
    "entropy_v",
    "entropy_gap",
    "fannes_bound",
    "contraction_envelope",
)
CONTRACTION_RTOL = 1e-8
UNIT_TRACE_TOL = 1e-10
FANNES_SLACK = 1e-12


@dataclass
class StabilityReport:
    times: np.ndarray
    hs_distance: np.ndarray
    trace_distance: np.ndarray
    entropy_u: np.ndarray
    entropy_v: np.ndarray
    eigenvalue_l1_gap: np.ndarray
    fannes_bound: float
    fannes_bound_dim_n: float
    fannes_dim: int
    contraction_envelope: np.ndarray
    lambda1: float
    trace_matched: bool
    fannes_applicable: bool
    contraction_violation: float
    trace_distance_increase: float
    fannes_violation: float

    @property
    def entropy_gap(self) -> np.ndarray:
        return np.abs(self.entropy_u - self.entropy_v)

    @property
    def contraction_ok(self) -> bool:
        return self.contraction_violation <= 0.0

    @property
    def trace_distance_monotone(self) -> bool:
        return self.trace_distance_increase <= MONOTONE_TOL

    @property
    def fannes_ok(self) -> bool | None:
        if not self.fannes_applicable:
            return None
        return self.fannes_violation <= FANNES_SLACK

    @property
    def passed(self) -> bool:
        return self.contraction_ok and self.trace_distance_monotone and self.fannes_ok is not False

    def summary(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "fannes_dim": self.fannes_dim,
            "fannes_bound": _json_float(self.fannes_bound),
            "fannes_bound_dim_n": _json_float(self.fannes_bound_dim_n),
            "trace_matched": self.trace_matched,
            "fannes_applicable": self.fannes_applicable,
            "contraction_violation": self.contraction_violation,
            "contraction_ok": self.contraction_ok,
            "trace_distance_increase": self.trace_distance_increase,
            "trace_distance_monotone": self.trace_distance_monotone,
            "fannes_violation": _json_float(self.fannes_violation),
            "fannes_ok": self.fannes_ok,
            "pass": self.passed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STABILITY_COLUMNS)
        gap = self.entropy_gap
        for k, t in enumerate(self.times):
            w.writerow(
                [
                    _cell(t),
                    _cell(self.hs_distance[k]),
                    _cell(self.trace_distance[k]),
                    _cell(self.eigenvalue_l1_gap[k]),
                    _cell(self.entropy_u[k]),
                    _cell(self.entropy_v[k]),
                    _cell(gap[k]),
                    _cell(self.fannes_bound),
                    _cell(self.contraction_envelope[k]),
                ]
            )
        return buf.getvalue()


def _json_float(x: float) -> float | None:
    return None if x is None or math.isnan(x) else float(x)


def _require_pd(a: np.ndarray, name: str) -> None:
    lam = eigvalsh(a)
    if lam[0] <= 0:
        raise NotPositiveError(float(lam[0]), f"{name} is not positive definite: eigenvalue {lam[0]:.6e}")


def stability_experiment(
    s: Spectrum,
    u0,
    v0,
    times: Sequence[float],
    fannes_dim: int | None = None,
) -> StabilityReport:
    """Evolve ``u0`` and ``v0`` by the exact heat semigroup and compare them.

    Checks, at every recorded time:

    * ``||u - v|| <= ||u0 - v0|| exp(-lambda1 t) (1 + 1e-8)`` when the
      traces agree; otherwise the same bound for the trace-free part of
      ``u - v`` (the scalar part is conserved, not damped);
    * the trace distance never increases;
    * ``|S(u) - S(v)| <= g log d + eta(g)`` with ``g`` the eigenvalue l1
      gap of the initial pair, when both states have unit trace and
      ``g <= 1/e``. ``d`` defaults to ``n^2``; the bound with ``d = n`` is
      reported alongside.
    """
    u0, v0 = as_matrix(u0), as_matrix(v0)
    if u0.shape != v0.shape or u0.shape != (s.n, s.n):
        raise DimensionMismatchError(f"u0 {u0.shape}, v0 {v0.shape}, geometry dimension {s.n}")
    _require_pd(u0, "u0")
    _require_pd(v0, "v0")
    n = s.n
    d = n * n if fannes_dim is None else int(fannes_dim)
    if d < 1:
        raise ValueError("fannes_dim must be >= 1")
    lam1 = lambda1(s)

    tu = heat_flow_exact(s, u0, times)
    tv = heat_flow_exact(s, v0, times)
    t = tu.times
    diff0 = u0 - v0
    trace_matched = abs(np.trace(diff0)) <= UNIT_TRACE_TOL * max(1.0, abs(np.trace(u0)))
    hs = np.array([hs_norm(a - b) for a, b in zip(tu.states, tv.states)])
    td = np.array([trace_distance(a, b) for a, b in zip(tu.states, tv.states)])
    gaps = np.array([eigenvalue_l1_gap(a, b) for a, b in zip(tu.states, tv.states)])
    su = np.array([von_neumann_entropy(a) for a in tu.states])
    sv = np.array([von_neumann_entropy(b) for b in tv.states])
    decay = np.exp(-lam1 * t)
    envelope = hs_norm(diff0) * decay

    # u(t) - v(t) - mean(u0 - v0) = exp(-t Delta)(trace-free part of u0 - v0)
    measured = _deviation_norms(s, diff0, t)
    if trace_matched:
        bound = envelope
    else:
        bound = hs_norm(diff0 - mean_part(diff0)) * decay
    contraction_violation = float(np.max(measured - bound * (1.0 + CONTRACTION_RTOL)))

    if t.size > 1:
        td_increase = float(max(np.max(np.diff(td)), np.max(td - td[0])))
    else:
        td_increase = 0.0

    gap0 = eigenvalue_l1_gap(u0, v0)
    unit = all(abs(np.trace(w) - 1.0) <= UNIT_TRACE_TOL for w in (u0, v0))
    applicable = bool(unit and gap0 <= 1.0 / math.e)
    fb = fannes_bound(gap0, d) if gap0 <= 1.0 else float("nan")
    fb_n = fannes_bound(gap0, n) if gap0 <= 1.0 else float("nan")
    fannes_violation = float(np.max(np.abs(su - sv) - fb)) if not math.isnan(fb) else float("nan")

    return StabilityReport(
        times=t,
        hs_distance=hs,
        trace_distance=td,
        entropy_u=su,
        entropy_v=sv,
        eigenvalue_l1_gap=gaps,
        fannes_bound=fb,
        fannes_bound_dim_n=fb_n,
        fannes_dim=d,
        contraction_envelope=envelope,
        lambda1=lam1,
        trace_matched=bool(trace_matched),
        fannes_applicable=applicable,
        contraction_violation=contraction_violation,
        trace_distance_increase=td_increase,
        fannes_violation=fannes_violation,
    )
