"""Command-line front end.

Exit status: 0 on success, 2 on invalid input, 3 on numerical failure. Errors
are reported as a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from .dynamics import Contour, Kernel, fit_rotation, integrate
from .functional import Problem, gateaux_fd
from .linearized import (
    bifurcation_ratio,
    disk_threshold,
    kernel_generator,
    kernel_truncation,
    omega_m,
    apply_DF,
    tri_coeffs,
)
from .series import CosineSeries
from .solver import BranchPoint, ContinuationConfig, StepFailureError, read_jsonl, trace_branch, write_jsonl

COMMANDS = (
    "bifurcation-points",
    "omega-table",
    "linearize",
    "kernel",
    "trace",
    "verify-rotation",
    "selftest-integrals",
    "curvature",
)

DEFAULTS = {
    "family": "ellipse",
    "m": 3,
    "m_max": 12,
    "alpha": 0.0,
    "alphas": "0,0.5,1,1.5",
    "r": None,
    "n_modes": 64,
    "n_quad": 1024,
    "epsilon_step": 2e-3,
    "steps": 10,
    "tol": 1e-11,
    "k_max": 24,
    "fd_step": 1e-5,
    "t_final": 0.05,
    "dt": 2.5e-3,
    "n_nodes": 256,
    "input": None,
    "out": None,
    "seed": 0,
}

INT_KEYS = {"m", "m_max", "n_modes", "n_quad", "steps", "k_max", "n_nodes", "seed"}
FLOAT_KEYS = {"alpha", "r", "epsilon_step", "tol", "fd_step", "t_final", "dt"}


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        unknown = set(self.params) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown keys: {sorted(unknown)}")
        merged = dict(DEFAULTS)
        merged.update(self.params)
        for key in INT_KEYS:
            if merged[key] is not None:
                merged[key] = _coerce(key, merged[key], int)
        for key in FLOAT_KEYS:
            if merged[key] is not None:
                merged[key] = _coerce(key, merged[key], float)
        self.params = merged
        self._validate()

    def _validate(self):
        p = self.params
        if p["family"] not in ("ellipse", "disk"):
            raise ValidationError("family must be 'ellipse' or 'disk'")
        if not 0.0 <= p["alpha"] < 2.0:
            raise ValidationError("alpha must lie in [0, 2)")
        if p["family"] == "ellipse" and p["alpha"] != 0.0:
            raise ValidationError("the ellipse family needs alpha = 0")
        min_m = 3 if p["family"] == "ellipse" else 2
        if p["m"] < min_m:
            raise ValidationError(f"m must be >= {min_m} for the {p['family']} family")
        if p["m_max"] < 3:
            raise ValidationError("m-max must be >= 3")
        if p["r"] is not None and not 0.0 < p["r"] < 1.0:
            raise ValidationError("r must lie in (0, 1)")
        if p["n_modes"] < 4:
            raise ValidationError("n-modes must be >= 4")
        if p["n_quad"] < 8 or p["n_quad"] % 8:
            raise ValidationError("n-quad must be a multiple of 8")
        for key in ("epsilon_step", "tol", "fd_step", "t_final", "dt"):
            if not (p[key] > 0 and math.isfinite(p[key])):
                raise ValidationError(f"{key.replace('_', '-')} must be positive")
        if p["steps"] < 0 or p["k_max"] < 1:
            raise ValidationError("steps must be >= 0 and k-max >= 1")
        if p["n_nodes"] < 16 or p["n_nodes"] % 2:
            raise ValidationError("n-nodes must be even and >= 16")
        threads = os.environ.get("VSTATE_THREADS")
        if threads is not None and not (threads.isdigit() and int(threads) >= 1):
            raise ValidationError("VSTATE_THREADS must be a positive integer")


def _coerce(key, value, kind):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{key.replace('_', '-')}: cannot parse {value!r}") from None
    if kind is int and isinstance(value, float) and value != out:
        raise ValidationError(f"{key.replace('_', '-')} must be an integer")
    return out


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; dashes and underscores are interchangeable."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


class NumericalFailure(ArithmeticError):
    pass


def _cfg(p) -> ContinuationConfig:
    return ContinuationConfig(
        newton_tol=p["tol"],
        epsilon_step=p["epsilon_step"],
        n_steps=p["steps"],
        n_modes=p["n_modes"],
        alpha=p["alpha"],
        n_quad=p["n_quad"],
    )


def cmd_bifurcation_points(p) -> str:
    return _csv([(m, _fmt(bifurcation_ratio(m))) for m in range(3, p["m_max"] + 1)], ["m", "r"])


def cmd_omega_table(p) -> str:
    try:
        alphas = [float(a) for a in str(p["alphas"]).split(",") if a.strip()]
    except ValueError:
        raise ValidationError("alphas must be a comma-separated list of numbers") from None
    if any(not 0.0 <= a < 2.0 for a in alphas):
        raise ValidationError("every alpha must lie in [0, 2)")
    rows = []
    for a in alphas:
        for m in range(2, p["m_max"] + 1):
            rows.append((m, _fmt(a), _fmt(omega_m(m, a)), _fmt(disk_threshold(m, a))))
    return _csv(rows, ["m", "alpha", "omega_m", "threshold"])


def cmd_linearize(p) -> str:
    r = p["r"] if p["r"] is not None else bifurcation_ratio(p["m"])
    N = max(p["k_max"] + 4, 8)
    t = tri_coeffs(r, N)
    prob = Problem.ellipse(r, rule=cf.QuadratureRule(p["n_quad"], "log-split"))
    zero = CosineSeries.zeros(N)
    checks = []
    for k in range(1, p["k_max"] + 1):
        h = CosineSeries.mode(k, N)
        fd = gateaux_fd(prob, zero, h, p["fd_step"]).coeffs
        exact = apply_DF(r, h).coeffs
        checks.append({"k": k, "max_abs_diff": float(np.abs(fd - exact).max())})
    worst = max(c["max_abs_diff"] for c in checks)
    out = {
        "r": r,
        "tri": [
            {"k": k + 1, "x": float(t.x[k]), "y": float(t.y[k]), "z": float(t.zc[k])} for k in range(N)
        ],
        "fd_check": checks,
        "max_abs_diff": worst,
    }
    if worst > 1e-6:
        raise NumericalFailure(f"FD derivative disagrees with DF by {worst:.3e}")
    return json.dumps(out, indent=1) + "\n"


def cmd_kernel(p) -> str:
    m = p["m"]
    if m < 3:
        raise ValidationError("kernel needs m >= 3")
    r = bifurcation_ratio(m)
    N = max(p["n_modes"], kernel_truncation(m, r))
    gen = kernel_generator(m, r, N)
    series = gen.as_series(N)
    out = p["out"]
    if out and str(out).endswith(".csv"):
        return series.to_csv()
    d = series.to_dict()
    d.update(m=m, r=r, lambda_minus=gen.lambda_minus, tail_ratio=gen.tail_ratio)
    return json.dumps(d) + "\n"


def _trace(p) -> list[BranchPoint]:
    try:
        return trace_branch(p["m"], p["family"], _cfg(p))
    except StepFailureError as exc:
        raise NumericalFailure(str(exc)) from exc


def cmd_trace(p) -> str:
    buf = io.StringIO()
    write_jsonl(_trace(p), buf)
    return buf.getvalue()


def cmd_verify_rotation(p) -> str:
    """Integrate a rotating state and compare the fitted angular velocity."""
    kernel = Kernel.for_alpha(p["alpha"], p["n_quad"])
    if p["r"] is not None and p["family"] == "ellipse":
        r = p["r"]
        before = Contour.ellipse(r, p["n_nodes"])
        predicted, epsilon = r / (1.0 + r) ** 2, 0.0
    else:
        point = _trace(p)[-1]
        before = Contour.from_shape(point.shape, point.base, p["n_nodes"], point.family)
        predicted, epsilon = point.omega, point.epsilon
    n_steps = max(1, round(p["t_final"] / p["dt"]))
    elapsed = n_steps * p["dt"]
    after = integrate(before, kernel, -1.0, p["dt"], n_steps)
    fit = fit_rotation(before, after, elapsed)
    a0 = before.area()
    out = {
        "family": p["family"],
        "epsilon": epsilon,
        "elapsed": elapsed,
        "omega_predicted": predicted,
        "omega_fit": fit.omega_fit,
        "omega_error": abs(fit.omega_fit - predicted),
        "shape_error": fit.shape_error,
        "area_drift": abs(after.area() - a0) / a0,
    }
    return json.dumps(out) + "\n"


def cmd_selftest_integrals(p) -> str:
    rule_trap = cf.QuadratureRule(p["n_quad"], "periodic-trapezoid")
    rule_log = cf.QuadratureRule(p["n_quad"], "log-split")
    rows, worst = [], 0.0
    for k in range(-8, 9):
        q = cf.integrate_periodic(lambda y: np.cos(k * y), rule_log) - 2.0 * math.log(2.0) * cf.integrate_periodic(
            lambda y: np.cos(k * y), rule_trap
        )
        exact = cf.log_sin_integral(k)
        rows.append(("log_sin", k, "", _fmt(q), _fmt(exact), _fmt(abs(q - exact))))
        worst = max(worst, abs(q - exact))
        for r in np.round(np.arange(0.1, 1.0, 0.1), 10):
            q = cf.integrate_periodic(lambda y: np.cos(k * y) / ((1 + r * r) + (r * r - 1) * np.cos(y)), rule_trap)
            exact = cf.poisson_kernel_integral(k, r)
            rows.append(("poisson", k, _fmt(r), _fmt(q), _fmt(exact), _fmt(abs(q - exact))))
            worst = max(worst, abs(q - exact))
            q = cf.integrate_periodic(
                lambda y: np.cos(k * y) * np.log((1 + r * r) / (1 - r * r) - np.cos(y)), rule_trap
            )
            exact = cf.log_shifted_cos_integral(k, r)
            rows.append(("log_shifted_cos", k, _fmt(r), _fmt(q), _fmt(exact), _fmt(abs(q - exact))))
            worst = max(worst, abs(q - exact))
    text = _csv(rows, ["integral", "k", "r", "quadrature", "closed_form", "delta"])
    if worst >= 1e-10:
        raise NumericalFailure(f"quadrature misses a closed form by {worst:.3e}")
    return text


def cmd_curvature(p) -> str:
    if p["input"]:
        try:
            points = read_jsonl(Path(p["input"]).read_text())
        except (OSError, KeyError, ValueError) as exc:
            raise ValidationError(f"cannot read branch file: {exc}") from None
    else:
        points = _trace(p)
    rows = [(_fmt(pt.epsilon), _fmt(pt.param), _fmt(pt.min_curvature), int(pt.min_curvature > 0)) for pt in points]
    return _csv(rows, ["epsilon", "param", "min_curvature", "convex"])


HANDLERS = {
    "bifurcation-points": cmd_bifurcation_points,
    "omega-table": cmd_omega_table,
    "linearize": cmd_linearize,
    "kernel": cmd_kernel,
    "trace": cmd_trace,
    "verify-rotation": cmd_verify_rotation,
    "selftest-integrals": cmd_selftest_integrals,
    "curvature": cmd_curvature,
}


def execute(config: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        text = HANDLERS[config.command](config.params)
    except ValidationError as exc:
        _report("validation", exc)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        _report("numerical", exc)
        return 3
    except ValueError as exc:
        _report("validation", exc)
        return 2
    out = config.params.get("out")
    if out:
        Path(out).write_text(text)
    else:
        stdout.write(text)
    return 0


def _report(kind: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vstates", description="Rotating patch toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--family", choices=["ellipse", "disk"])
        for key in sorted(INT_KEYS | FLOAT_KEYS | {"alphas", "input", "out"}):
            sp.add_argument("--" + key.replace("_", "-"), dest=key)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    params = {}
    try:
        if args.config:
            params.update(read_config_file(args.config))
        params.update({k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")})
        config = RunConfig(args.command, params)
    except ValidationError as exc:
        _report("validation", exc)
        return 2
    return execute(config)


if __name__ == "__main__":
    sys.exit(main())
