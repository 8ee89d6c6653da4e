"""Command-line front end.

One JSON config per invocation::

    matgeom heat --config experiment.json [--seed 3] [--output out/]

Exit status: 0 success, 1 mathematical/domain failure (a falsified
property, a non-solvable source, loss of positivity), 2 usage, config or
I/O failure. Errors are written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import algebra
from .algebra import (
    NotHermitianError,
    atomic_write_text,
    matrix_from_dict,
    random_hermitian,
    random_pd,
    read_matrix,
    unit_trace,
    write_matrix,
)
from .flows import (
    DEFAULT_RECORD_STRIDE,
    DEFAULT_STEP_FRACTION,
    IntegrationError,
    heat_flow_exact,
    heat_flow_rk4,
    log_laplacian_flow,
    stability_experiment,
)
from .geometry import GeometryContext, make_context
from .poisson import NotSolvableError, solve_poisson
from .properties import check_properties
from .spectral import SpectrumError, lambda1, spectrum

EXIT_OK = 0
EXIT_MATH = 1
EXIT_USAGE = 2

COMMANDS = ("props", "spectrum", "poisson", "heat", "stability", "ricci")


class ConfigError(ValueError):
    """Invalid, incomplete or unreadable configuration."""


class MathFailure(RuntimeError):
    """A checked mathematical property did not hold."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


@dataclass
class ExperimentConfig:
    n: int
    generators: Any
    seed: int
    output_dir: str
    blocks: dict
    base_dir: str

    @classmethod
    def load(cls, path: str, seed: int | None = None, output: str | None = None) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, os.path.dirname(os.path.abspath(path)), seed, output)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".", seed: int | None = None, output: str | None = None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        try:
            n = int(raw["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("config needs an integer 'n'") from exc
        if n < 2:
            raise ConfigError(f"n must be >= 2, got {n}")
        unknown = sorted(set(raw) - set(COMMANDS) - {"n", "generators", "seed", "output_dir"})
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        blocks = {k: v for k, v in raw.items() if k in COMMANDS}
        for name, block in blocks.items():
            if not isinstance(block, dict):
                raise ConfigError(f"block '{name}' must be an object")
            if "n" in block and int(block["n"]) != n:
                raise ConfigError(f"block '{name}' has n={block['n']} but config n={n}")
        return cls(
            n=n,
            generators=raw.get("generators", "clock_shift"),
            seed=int(raw.get("seed", 0) if seed is None else seed),
            output_dir=output if output is not None else os.path.join(base_dir, raw.get("output_dir", "output")),
            blocks=blocks,
            base_dir=base_dir,
        )

    def block(self, name: str) -> dict:
        return self.blocks.get(name, {})

    def matrix(self, ref, what: str) -> np.ndarray:
        """Resolve a matrix reference: path, inline Matrix JSON, or a seeded random spec."""
        if ref is None:
            raise ConfigError(f"missing matrix '{what}'")
        try:
            if isinstance(ref, str):
                a = read_matrix(os.path.join(self.base_dir, ref))
            elif isinstance(ref, dict) and "entries" in ref:
                a = matrix_from_dict(ref)
            elif isinstance(ref, dict) and ("random_pd" in ref or "random_hermitian" in ref):
                kind = "random_pd" if "random_pd" in ref else "random_hermitian"
                opts = dict(ref[kind] or {})
                seed = self.seed + int(opts.pop("seed_offset", 0))
                normalize = bool(opts.pop("unit_trace", False))
                if kind == "random_pd":
                    a = random_pd(seed, self.n, float(opts.get("min_eig", 0.1)), float(opts.get("scale", 1.0)))
                else:
                    a = random_hermitian(seed, self.n, float(opts.get("scale", 1.0)))
                if normalize:
                    a = unit_trace(a)
            else:
                raise ConfigError(f"matrix '{what}': unrecognized reference {ref!r}")
        except (OSError, ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"matrix '{what}': {exc}") from exc
        if a.shape != (self.n, self.n):
            raise ConfigError(f"matrix '{what}' has dimension {a.shape[0]}, config n={self.n}")
        return a

    def context(self) -> GeometryContext:
        gen = self.generators
        if gen == "clock_shift":
            return make_context(self.n)
        if isinstance(gen, dict) and "x" in gen and "y" in gen:
            x = self.matrix(gen["x"], "generators.x")
            y = self.matrix(gen["y"], "generators.y")
            try:
                return make_context(self.n, "custom", x, y)
            except NotHermitianError as exc:
                raise ConfigError(f"custom generator: {exc}") from exc
        raise ConfigError(f"unknown generators {gen!r}")

    def out(self, name: str) -> str:
        return os.path.join(self.output_dir, name)


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _pos_float(block: dict, key: str, default=None) -> float | None:
    value = block.get(key, default)
    if value is None:
        return None
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise ConfigError(f"'{key}' must be a positive number, got {value}")
    return value


def _pos_int(block: dict, key: str, default: int) -> int:
    value = block.get(key, default)
    try:
        value = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{key}' must be an integer") from exc
    if value < 1:
        raise ConfigError(f"'{key}' must be >= 1, got {value}")
    return value


# --- subcommands ---------------------------------------------------------------


def cmd_props(cfg: ExperimentConfig) -> int:
    samples = _pos_int(cfg.block("props"), "samples", 100)
    report = check_properties(cfg.context(), cfg.seed, samples)
    atomic_write_text(cfg.out("props.json"), report.to_json() + "\n")
    if not report.passed:
        raise MathFailure("properties failed: " + ", ".join(report.failing()), failing=report.failing())
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    ctx = cfg.context()
    s = spectrum(ctx)
    lam1 = lambda1(s)
    buf = io.StringIO()
    buf.write(f"# n={ctx.n} generators={ctx.generators} lambda1={lam1!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue"])
    for j, lam in enumerate(s.eigenvalues):
        w.writerow([j, repr(float(lam))])
    atomic_write_text(cfg.out("spectrum.csv"), buf.getvalue())
    if cfg.block("spectrum").get("dump_eigenmatrices", False):
        for j in range(s.eigenvalues.size):
            write_matrix(cfg.out(f"eigenmatrix_{j:04d}.json"), s.eigenmatrix(j))
    if s.kernel_dimension > 1:
        print(
            f"warning: kernel of Delta has dimension {s.kernel_dimension} (expected 1); generators are degenerate",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_poisson(cfg: ExperimentConfig) -> int:
    block = cfg.block("poisson")
    b = cfg.matrix(block.get("b"), "poisson.b")
    tol = float(block.get("tol", 1e-10))
    sol = solve_poisson(spectrum(cfg.context()), b, tol)
    payload = {
        "solution": algebra.matrix_to_dict(sol.solution),
        "residual": sol.residual,
        "projected_source_norm": sol.projected_source_norm,
    }
    atomic_write_text(cfg.out("poisson.json"), _json_dump(payload))
    return EXIT_OK


def _grid(block: dict, default_step: float) -> tuple[float, int, int]:
    t_max = _pos_float(block, "t_max")
    if t_max is None:
        raise ConfigError("'t_max' is required")
    step = _pos_float(block, "step") or default_step
    steps = max(1, int(round(t_max / step)))
    step = t_max / steps
    stride = _pos_int(block, "record_stride", DEFAULT_RECORD_STRIDE)
    return step, steps, stride


def _dump_states(cfg: ExperimentConfig, block: dict, traj, prefix: str) -> None:
    for t_req in block.get("dump_times", []):
        k = int(np.argmin(np.abs(traj.times - float(t_req))))
        write_matrix(cfg.out(f"{prefix}_state_t{k:05d}.json"), traj.states[k])


def _check_trajectory(traj, u0) -> None:
    tr0 = np.trace(u0)
    drift = float(np.max(np.abs(traj.field("trace") - tr0)))
    if drift > 1e-10 * max(1.0, abs(tr0)):
        raise MathFailure(f"trace not conserved: drift {drift:.3e}", trace_drift=drift)
    dist = traj.field("dist_to_mean")
    rise = float(np.max(np.diff(dist))) if dist.size > 1 else 0.0
    if rise > 1e-9:
        raise MathFailure(f"distance to mean increased by {rise:.3e}", dist_increase=rise)


def cmd_heat(cfg: ExperimentConfig) -> int:
    block = cfg.block("heat")
    ctx = cfg.context()
    u0 = cfg.matrix(block.get("u0"), "heat.u0")
    s = spectrum(ctx)
    step, steps, stride = _grid(block, DEFAULT_STEP_FRACTION / s.lambda_max)
    integrator = block.get("integrator", "exact")
    if integrator == "rk4":
        traj = heat_flow_rk4(ctx, u0, step, steps, stride, lambda_max=s.lambda_max)
    elif integrator == "exact":
        ks = list(range(0, steps + 1, stride))
        if ks[-1] != steps:
            ks.append(steps)
        traj = heat_flow_exact(s, u0, [k * step for k in ks])
    else:
        raise ConfigError(f"unknown integrator {integrator!r}")
    atomic_write_text(cfg.out("trajectory.csv"), traj.to_csv())
    _dump_states(cfg, block, traj, "heat")
    if traj.stability_warning:
        print("warning: " + "; ".join(traj.notes), file=sys.stderr)
    _check_trajectory(traj, u0)
    return EXIT_OK


def cmd_stability(cfg: ExperimentConfig) -> int:
    block = cfg.block("stability")
    u0 = cfg.matrix(block.get("u0"), "stability.u0")
    v0 = cfg.matrix(block.get("v0"), "stability.v0")
    times = block.get("times")
    if not times:
        raise ConfigError("'times' is required")
    try:
        report = stability_experiment(spectrum(cfg.context()), u0, v0, times, block.get("fannes_dim"))
    except ValueError as exc:
        if isinstance(exc, algebra.DomainError):
            raise
        raise ConfigError(str(exc)) from exc
    atomic_write_text(cfg.out("stability.csv"), report.to_csv())
    atomic_write_text(cfg.out("stability.json"), _json_dump(report.summary()))
    if not report.passed:
        raise MathFailure("stability assertions failed", **report.summary())
    return EXIT_OK


def cmd_ricci(cfg: ExperimentConfig) -> int:
    block = cfg.block("ricci")
    ctx = cfg.context()
    c0 = cfg.matrix(block.get("c0"), "ricci.c0")
    lam = np.linalg.eigvalsh(c0)
    if lam[0] <= 0:
        raise algebra.NotPositiveError(float(lam[0]))
    lam_max = float(np.linalg.eigvalsh(ctx.superoperator().entries)[-1])
    step, steps, stride = _grid(block, DEFAULT_STEP_FRACTION * lam[0] / lam_max)
    traj = log_laplacian_flow(ctx, c0, step, steps, stride, lambda_max=lam_max)
    atomic_write_text(cfg.out("ricci_trajectory.csv"), traj.to_csv())
    _dump_states(cfg, block, traj, "ricci")
    if traj.stability_warning:
        print("warning: " + "; ".join(traj.notes), file=sys.stderr)
    return EXIT_OK


HANDLERS = {
    "props": cmd_props,
    "spectrum": cmd_spectrum,
    "poisson": cmd_poisson,
    "heat": cmd_heat,
    "stability": cmd_stability,
    "ricci": cmd_ricci,
}


def _error(kind: str, message: str, **details) -> None:
    payload = {"error": message, "kind": kind}
    for k, v in details.items():
        if isinstance(v, complex):
            v = [v.real, v.imag]
        payload[k] = v
    print(json.dumps(payload), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matgeom", description="Heat and Poisson equations on a matrix geometry.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--output", default=None, help="output directory (overrides config output_dir)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = ExperimentConfig.load(args.config, args.seed, args.output)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        _error("config", str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _error("io", str(exc))
        return EXIT_USAGE
    except NotSolvableError as exc:
        _error("not_solvable", str(exc), trace=exc.trace)
        return EXIT_MATH
    except MathFailure as exc:
        _error("property_failure", str(exc), **exc.details)
        return EXIT_MATH
    except (algebra.DomainError, IntegrationError, SpectrumError, NotHermitianError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
