"""Branch switching and amplitude continuation of rotating patches.

Unknowns are the branch parameter (r for ellipses, Omega for disks) and the
cosine coefficients in the branch's symmetry class. The square system is

    F(param, R) projected on the class sine modes = 0,
    <R, h0> = epsilon,

with h0 the unit kernel direction. Newton uses a dense central-difference
Jacobian.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal

import numpy as np
import scipy.linalg

from .closed_forms import QuadratureRule
from .functional import ChordDegeneracyError, Problem, RadiusPositivityError, curvature_min, default_rule
from .linearized import bifurcation_ratio, disk_threshold, kernel_generator
from .series import CosineSeries, InsufficientDataError, fit_decay_rate, symmetry_mask

Family = Literal["ellipse", "disk"]


class NewtonDivergenceError(ArithmeticError):
    pass


class SingularJacobianError(ArithmeticError):
    pass


class AdmissibilityError(ValueError):
    pass


class StepFailureError(RuntimeError):
    """A continuation step failed; ``points`` holds every accepted point so far."""

    def __init__(self, message: str, points: list):
        super().__init__(message)
        self.points = points


@dataclass(frozen=True)
class ContinuationConfig:
    newton_tol: float = 1e-11
    max_newton_iters: int = 12
    epsilon_step: float = 5e-3
    n_steps: int = 10
    jacobian: Literal["finite-difference"] = "finite-difference"
    n_modes: int = 48
    alpha: float = 0.0
    n_quad: int = 1024
    fd_rel_step: float = 1e-6
    symmetry_tol: float = 1e-13

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be > 0")
        if not self.epsilon_step > 0:
            raise ValueError("epsilon_step must be > 0")
        if self.n_steps < 0 or self.max_newton_iters < 1:
            raise ValueError("n_steps must be >= 0 and max_newton_iters >= 1")
        if self.jacobian != "finite-difference":
            raise ValueError("only the finite-difference Jacobian is available")
        if self.n_modes < 2:
            raise ValueError("n_modes must be >= 2")
        if not 0.0 <= self.alpha < 2.0:
            raise ValueError("alpha must lie in [0, 2)")

    def rule(self) -> QuadratureRule:
        return default_rule(self.alpha, self.n_quad)


@dataclass(frozen=True, eq=False)
class BranchPoint:
    family: Family
    m: int
    param: float
    epsilon: float
    shape: CosineSeries
    residual_norm: float
    decay_rate: float
    min_curvature: float
    alpha: float = 0.0
    newton_iters: int = 0
    history: tuple = field(default=(), repr=False)

    @property
    def omega(self) -> float:
        """Angular velocity of the rotating frame."""
        if self.family == "ellipse":
            return self.param / (1.0 + self.param) ** 2
        return self.param

    @property
    def base(self) -> float:
        return self.param if self.family == "ellipse" else 1.0

    def to_dict(self) -> dict:
        d = {"family": self.family, "m": self.m}
        if self.family == "disk":
            d["alpha"] = self.alpha
        d.update(
            param=self.param,
            epsilon=self.epsilon,
            coeffs=self.shape.coeffs.tolist(),
            residual=self.residual_norm,
            decay_rate=self.decay_rate if math.isfinite(self.decay_rate) else None,
            min_curvature=self.min_curvature,
        )
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "BranchPoint":
        decay = d.get("decay_rate")
        return cls(
            family=d["family"],
            m=int(d["m"]),
            param=float(d["param"]),
            epsilon=float(d["epsilon"]),
            shape=CosineSeries(d["coeffs"]),
            residual_norm=float(d["residual"]),
            decay_rate=math.inf if decay is None else float(decay),
            min_curvature=float(d["min_curvature"]),
            alpha=float(d.get("alpha", 0.0)),
        )


def write_jsonl(points: Iterable[BranchPoint], fh) -> None:
    for p in points:
        fh.write(p.to_json() + "\n")


def read_jsonl(text: str) -> list[BranchPoint]:
    return [BranchPoint.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def _check_fold(m: int, family: str) -> None:
    if family == "ellipse" and m <= 2:
        raise ValueError("ellipse branches need m > 2")
    if family == "disk" and m < 2:
        raise ValueError("disk branches need m >= 2")
    if family not in ("ellipse", "disk"):
        raise ValueError(f"unknown family {family!r}")


def class_mask(family: str, m: int, N: int) -> np.ndarray:
    """Frequencies 1..N carried by the branch: multiples of m for disks,
    even frequencies for ellipse branches with even m, all otherwise."""
    if family == "disk":
        return symmetry_mask(N, "multiples-of-m", m)
    if m % 2 == 0:
        return symmetry_mask(N, "even-frequencies")
    return np.ones(N, dtype=bool)


def kernel_direction(family: str, m: int, N: int, alpha: float = 0.0) -> CosineSeries:
    """Unit l2 kernel direction h0 with positive lowest-frequency coefficient."""
    _check_fold(m, family)
    if family == "disk":
        if N < m:
            raise ValueError(f"n_modes must be >= m = {m}")
        return CosineSeries.mode(m, N)
    gen = kernel_generator(m, bifurcation_ratio(m), max(N, 2 * m))
    h = gen.as_series(N).coeffs
    lead = h[np.flatnonzero(np.abs(h) > 0)[0]]
    return CosineSeries(np.sign(lead) * h / np.linalg.norm(h))


def threshold(family: str, m: int, alpha: float = 0.0) -> float:
    return bifurcation_ratio(m) if family == "ellipse" else disk_threshold(m, alpha)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("VSTATE_THREADS", "1")))
    except ValueError:
        return 1


class _System:
    """The augmented square system for one branch."""

    def __init__(self, family: str, m: int, cfg: ContinuationConfig):
        _check_fold(m, family)
        self.family, self.m, self.cfg = family, m, cfg
        self.N = cfg.n_modes
        self.mask = class_mask(family, m, self.N)
        self.h0 = kernel_direction(family, m, self.N, cfg.alpha).coeffs
        self.rule = cfg.rule()
        self.problem = Problem(family, 0.0, cfg.alpha if family == "disk" else 0.0, rule=self.rule)
        self._lu = None

    def pack(self, param: float, shape: CosineSeries) -> np.ndarray:
        return np.concatenate([[param], shape.resize(self.N).coeffs[self.mask]])

    def shape_of(self, u: np.ndarray) -> CosineSeries:
        a = np.zeros(self.N)
        a[self.mask] = u[1:]
        return CosineSeries(a)

    def evaluate(self, u: np.ndarray, epsilon: float):
        shape = self.shape_of(u)
        res = self.problem.with_param(float(u[0])).residual(shape)
        b = res.sine_coeffs.coeffs
        leak = np.abs(b[~self.mask]).max(initial=0.0)
        G = np.concatenate([b[self.mask], [shape.coeffs @ self.h0 - epsilon]])
        return G, res, leak

    def jacobian(self, u: np.ndarray, epsilon: float) -> np.ndarray:
        steps = self.cfg.fd_rel_step * np.maximum(1.0, np.abs(u))

        def column(i):
            up, um = u.copy(), u.copy()
            up[i] += steps[i]
            um[i] -= steps[i]
            return (self.evaluate(up, epsilon)[0] - self.evaluate(um, epsilon)[0]) / (2.0 * steps[i])

        n = u.size
        workers = _workers()
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                cols = list(pool.map(column, range(n)))
        else:
            cols = [column(i) for i in range(n)]
        return np.column_stack(cols)

    def point(self, u: np.ndarray, epsilon: float, res_norm: float, iters: int, history=()) -> BranchPoint:
        shape = self.shape_of(u)
        try:
            decay = fit_decay_rate(shape) if shape.l2() > 0 else math.inf
        except InsufficientDataError:
            decay = math.nan
        return BranchPoint(
            family=self.family,
            m=self.m,
            param=float(u[0]),
            epsilon=float(epsilon),
            shape=shape,
            residual_norm=float(res_norm),
            decay_rate=float(decay),
            min_curvature=curvature_min(shape, float(u[0]) if self.family == "ellipse" else 1.0),
            alpha=self.cfg.alpha if self.family == "disk" else 0.0,
            newton_iters=iters,
            history=tuple(history),
        )

    def _factor(self, u: np.ndarray, epsilon: float):
        J = self.jacobian(u, epsilon)
        try:
            lu = scipy.linalg.lu_factor(J, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularJacobianError(str(exc)) from exc
        if np.min(np.abs(np.diag(lu[0]))) < 1e-14 * np.abs(J).max():
            raise SingularJacobianError("Jacobian is numerically singular")
        return lu

    def newton(self, u: np.ndarray, epsilon: float, reuse: bool = False) -> BranchPoint:
        """Newton on the augmented system.

        Without ``reuse`` the Jacobian is rebuilt every iteration (quadratic
        convergence). With ``reuse`` the last factorized Jacobian is kept,
        across calls too, and rebuilt only when the residual fails to drop 4x.
        """
        cfg = self.cfg
        history = []
        lu = self._lu if reuse else None
        fresh = False
        for it in range(cfg.max_newton_iters + 1):
            try:
                G, res, leak = self.evaluate(u, epsilon)
            except (ChordDegeneracyError, RadiusPositivityError) as exc:
                raise AdmissibilityError(str(exc)) from exc
            if leak > cfg.symmetry_tol * max(1.0, np.abs(res.samples).max()):
                raise AssertionError(f"residual left the symmetry class: {leak:.3e}")
            norm = max(res.sup_norm, abs(G[-1]))
            history.append(norm)
            if norm < cfg.newton_tol:
                return self.point(u, epsilon, res.sup_norm, it, history)
            if it == cfg.max_newton_iters or not np.all(np.isfinite(G)):
                break
            if len(history) > 1 and norm > 0.25 * history[-2]:
                if fresh and norm > 0.9 * history[-2]:
                    break
                lu = None
            if not reuse:
                lu = None
            if lu is None:
                lu = self._factor(u, epsilon)
                fresh = True
            else:
                fresh = False
            self._lu = lu
            u = u - scipy.linalg.lu_solve(lu, G)
        raise NewtonDivergenceError(
            f"Newton did not reach {cfg.newton_tol:g} at epsilon={epsilon:g}; residual history "
            + ", ".join(f"{h:.2e}" for h in history)
        )


def trivial_point(m: int, family: Family, cfg: ContinuationConfig) -> BranchPoint:
    sys_ = _System(family, m, cfg)
    u = sys_.pack(threshold(family, m, cfg.alpha), CosineSeries.zeros(cfg.n_modes))
    return sys_.point(u, 0.0, 0.0, 0)


def branch_switch(m: int, family: Family, cfg: ContinuationConfig, epsilon0: float | None = None) -> BranchPoint:
    """First point of the branch at amplitude epsilon0 (default: one epsilon_step)."""
    eps = cfg.epsilon_step if epsilon0 is None else float(epsilon0)
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    if eps < 1e-12:
        return trivial_point(m, family, cfg)
    sys_ = _System(family, m, cfg)
    u0 = sys_.pack(threshold(family, m, cfg.alpha), eps * CosineSeries(sys_.h0))
    return sys_.newton(u0, eps)


def newton_correct(point: BranchPoint, cfg: ContinuationConfig) -> BranchPoint:
    """Re-solve the augmented system starting from ``point`` at its own amplitude."""
    cfg = replace(cfg, alpha=point.alpha, n_modes=point.shape.N)
    sys_ = _System(point.family, point.m, cfg)
    if point.epsilon < 1e-12 and point.shape.l2() == 0:
        return point
    u = sys_.pack(point.param, point.shape)
    return sys_.newton(u, point.epsilon)


def trace_branch(m: int, family: Family, cfg: ContinuationConfig) -> list[BranchPoint]:
    """Trivial point followed by n_steps corrected points at epsilon = k * epsilon_step."""
    sys_ = _System(family, m, cfg)
    points = [trivial_point(m, family, cfg)]
    us = [sys_.pack(points[0].param, points[0].shape)]
    h0 = np.concatenate([[0.0], sys_.h0[sys_.mask]])
    for k in range(1, cfg.n_steps + 1):
        eps = k * cfg.epsilon_step
        if len(us) >= 2 and k >= 3:
            guess = 2 * us[-1] - us[-2]
        else:
            guess = us[-1] + cfg.epsilon_step * h0
        try:
            p = sys_.newton(guess, eps, reuse=True)
        except (NewtonDivergenceError, SingularJacobianError) as exc:
            raise StepFailureError(f"step {k} (epsilon={eps:g}) failed: {exc}", points) from exc
        except AdmissibilityError:
            break
        if not p.decay_rate > 0:
            raise StepFailureError(f"step {k}: no exponential coefficient decay", points)
        points.append(p)
        us.append(sys_.pack(p.param, p.shape))
    return points
