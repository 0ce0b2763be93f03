"""Nonlinear rotating-patch functionals and their finite-difference derivative.

Both families share one boundary parametrization

    z(x) = (1 + R(x)) cos x + i (b + R(x)) sin x,

with b = r for the ellipse family and b = 1 for the disk family. The
functional is the rotating-frame normal-velocity balance

    F = Omega <z, z_x> - <u(z), z_x^perp>,     u(x) = int G(|z(x) - z(y)|^2) z_y dy

(divided by 1 + R for the disk family), with G = jump/(4 pi) log for Euler
and G = -jump C(alpha) d^-alpha for gSQG. jump = -1 makes a patch of unit
positive vorticity rotate counterclockwise; for the ellipse this reproduces
F_0 + (F_1 + F_2)/(4 pi) with Omega = r/(1 + r)^2, and for the disk at
alpha = 0 it reproduces Omega R' - (F_1 + F_2 + F_3).

Chord differences are never formed by subtraction: every difference
quotient (f(x) - f(x - s)) / (2 sin(s/2)) is expanded mode by mode with
sin(j s/2)/sin(s/2), so graded nodes arbitrarily close to s = 0 stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .closed_forms import QuadratureRule, kress_weights, trapezoid_nodes
from .series import CosineSeries, SineSeries
from .special import calpha

Family = Literal["ellipse", "disk"]


class ChordDegeneracyError(ArithmeticError):
    """The normalized squared chord A(x, y) is not positive at some node."""


class RadiusPositivityError(ValueError):
    pass


class DegenerateParametrizationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PatchConfig:
    family: Family = "ellipse"
    jump: float = -1.0
    alpha: float = 0.0
    Calpha: float = field(init=False)

    def __post_init__(self):
        if self.family not in ("ellipse", "disk"):
            raise ValueError(f"unknown family {self.family!r}")
        if not 0.0 <= self.alpha < 2.0:
            raise ValueError("alpha must lie in [0, 2)")
        if self.family == "ellipse" and self.alpha != 0.0:
            raise ValueError("the ellipse family is an Euler (alpha = 0) problem")
        c = calpha(self.alpha) if self.alpha > 0 else 1.0 / (4.0 * math.pi)
        object.__setattr__(self, "Calpha", c)


@dataclass(frozen=True, eq=False)
class ResidualVector:
    sine_coeffs: SineSeries
    sup_norm: float
    collocation_n: int
    x: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.sine_coeffs.to_dict()
        d.update(sup_norm=self.sup_norm, collocation_n=self.collocation_n, **self.meta)
        return d


def default_rule(alpha: float = 0.0, n_nodes: int = 1024) -> QuadratureRule:
    if alpha == 0.0:
        return QuadratureRule(n_nodes, "log-split")
    return QuadratureRule.graded_for(alpha, n_nodes)


def collocation_size(N: int) -> int:
    """2N samples padded by 3/2 against aliasing of nonlinear content."""
    n = 3 * N
    return n + n % 2


class _Geometry:
    """Boundary z(x) and chord quotients at the pairs (x_i, x_i - s_j)."""

    def __init__(self, a: np.ndarray, b: float, x: np.ndarray, s: np.ndarray):
        a = np.asarray(a, dtype=float)
        j = np.arange(1, a.size + 1, dtype=float)
        ja = j * a
        jx = np.multiply.outer(x, j)
        Cx, Sx = np.cos(jx), np.sin(jx)
        js = np.multiply.outer(s, j)
        Cs, Ss = np.cos(js), np.sin(js)
        Ch, Sh = np.cos(0.5 * js), np.sin(0.5 * js)
        half_s = np.sin(0.5 * s)
        small = np.abs(half_s) < 1e-300
        U = np.where(small[:, None], j, Sh / np.where(small, 1.0, half_s)[:, None])

        self.x, self.s, self.b = x, s, b
        R = Cx @ a
        Rp = -(Sx @ ja)
        Rpp = -(Cx @ (j * ja))
        self.R, self.Rp, self.Rpp = R, Rp, Rpp
        e = np.exp(1j * x)
        self.e = e
        self.z = R * e + (np.cos(x) + 1j * b * np.sin(x))
        self.zx = Rp * e + 1j * R * e + (-np.sin(x) + 1j * b * np.cos(x))

        Ry = (Cx * a) @ Cs.T + (Sx * a) @ Ss.T
        Rpy = -((Sx * ja) @ Cs.T - (Cx * ja) @ Ss.T)
        DR = -((Sx * a) @ (Ch * U).T - (Cx * a) @ (Sh * U).T)
        DRp = -((Cx * ja) @ (Ch * U).T + (Sx * ja) @ (Sh * U).T)
        mid = np.subtract.outer(x, 0.5 * s)
        half = np.exp(1j * mid)
        E_q = -np.sin(mid) + 1j * b * np.cos(mid)
        Ep_q = -np.cos(mid) - 1j * b * np.sin(mid)
        ecol = e[:, None]
        # Q = (z(x) - z(x-s)) / (2 sin(s/2)),  P = (z_x(x) - z_x(x-s)) / (2 sin(s/2))
        self.Q = DR * ecol + 1j * Ry * half + E_q
        self.P = DRp * ecol + 1j * Rpy * half + 1j * DR * ecol - Ry * half + Ep_q
        self.half_s = half_s

    @property
    def A(self) -> np.ndarray:
        return np.abs(self.Q) ** 2

    def tangent_term(self) -> np.ndarray:
        """Im(P conj z_x(x)); the integrand factor <z_y, z_x^perp> equals -2 sin(s/2) times this."""
        return (self.P * np.conj(self.zx)[:, None]).imag


@dataclass(frozen=True, eq=False)
class IntegrandParts:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D1: np.ndarray
    D2: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return self.D1 + self.D2


def integrand_parts(R: CosineSeries, b: float, x, s) -> IntegrandParts:
    """Normalized chord kernels: A = |dz|^2/(4 sin^2(s/2)), B, C = 2 dz/(2 sin(s/2)),
    D = <z_y, z_x^perp>/(2 sin(s/2)) split into its two tangent products."""
    g = _Geometry(R.coeffs, b, np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(s, float)))
    zx = g.zx[:, None]
    return IntegrandParts(
        A=g.A, B=2 * g.Q.real, C=2 * g.Q.imag, D1=zx.imag * g.P.real, D2=-zx.real * g.P.imag
    )


def normal_velocity(a: np.ndarray, b: float, x: np.ndarray, cfg: PatchConfig, rule: QuadratureRule) -> np.ndarray:
    """<u(z(x)), z_x^perp(x)> at the points ``x``."""
    if cfg.alpha == 0.0:
        if rule.scheme != "log-split":
            raise ValueError("the log kernel needs a log-split rule")
        s = trapezoid_nodes(rule.n_nodes)
        g = _Geometry(a, b, x, s)
        A = g.A
        if not np.all(A > 0):
            raise ChordDegeneracyError(f"min A = {A.min():.3e} <= 0")
        gfac = -2.0 * g.half_s * g.tangent_term()
        smooth = (np.log(A) * gfac).sum(axis=1) * (2.0 * math.pi / s.size)
        singular = gfac @ kress_weights(rule.n_nodes)
        return cfg.jump / (4.0 * math.pi) * (smooth + singular)
    if rule.scheme != "power-graded":
        raise ValueError("the power kernel needs a power-graded rule")
    s, w = rule.nodes_weights()
    g = _Geometry(a, b, x, s)
    A = g.A
    if not np.all(A > 0):
        raise ChordDegeneracyError(f"min A = {A.min():.3e} <= 0")
    hs = g.half_s
    weight = np.sign(hs) * np.abs(2.0 * hs) ** (1.0 - cfg.alpha)
    vals = weight * A ** (-0.5 * cfg.alpha) * g.tangent_term()
    return cfg.jump * cfg.Calpha * (vals @ w)


def _project(samples: np.ndarray, x: np.ndarray, N: int) -> SineSeries:
    j = np.arange(1, N + 1)
    return SineSeries((2.0 / x.size) * (np.sin(np.multiply.outer(j, x)) @ samples))


def _residual(samples: np.ndarray, x: np.ndarray, N: int, meta: dict) -> ResidualVector:
    return ResidualVector(_project(samples, x, N), float(np.abs(samples).max()), x.size, x, samples, meta)


def eval_F_ellipse(
    r: float,
    R: CosineSeries,
    rule: QuadratureRule | None = None,
    n_x: int | None = None,
    jump: float = -1.0,
) -> ResidualVector:
    """F(r, R) for the perturbed ellipse with semiaxes 1 and r, Omega = r/(1+r)^2."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    rule = rule or default_rule(0.0)
    cfg = PatchConfig("ellipse", jump)
    n_x = n_x or collocation_size(R.N)
    x = trapezoid_nodes(n_x)
    a = R.coeffs
    geo_z, geo_zx = _boundary(a, r, x)
    omega = r / (1.0 + r) ** 2
    vals = omega * (geo_z * np.conj(geo_zx)).real - normal_velocity(a, r, x, cfg, rule)
    return _residual(vals, x, R.N, {"family": "ellipse", "r": r, "n_quad": rule.n_nodes})


def eval_F_disk(
    Omega: float,
    R: CosineSeries,
    alpha: float = 0.0,
    rule: QuadratureRule | None = None,
    n_x: int | None = None,
    jump: float = -1.0,
) -> ResidualVector:
    """Omega R_t' - <u, z_x^perp>/R_t for the boundary radius R_t = 1 + R."""
    rule = rule or default_rule(alpha)
    cfg = PatchConfig("disk", jump, alpha)
    n_x = n_x or collocation_size(R.N)
    x = trapezoid_nodes(n_x)
    a = R.coeffs
    Rt = 1.0 + R(x)
    if not np.all(Rt > 0):
        raise RadiusPositivityError(f"radius 1 + R reaches {Rt.min():.3e}")
    Rtp = R.derivative()(x)
    vals = (Omega * Rt * Rtp - normal_velocity(a, 1.0, x, cfg, rule)) / Rt
    return _residual(vals, x, R.N, {"family": "disk", "Omega": Omega, "alpha": alpha, "n_quad": rule.n_nodes})


def _boundary(a: np.ndarray, b: float, x: np.ndarray):
    j = np.arange(1, a.size + 1)
    jx = np.multiply.outer(x, j)
    R = np.cos(jx) @ a
    Rp = -(np.sin(jx) @ (j * a))
    e = np.exp(1j * x)
    z = R * e + np.cos(x) + 1j * b * np.sin(x)
    zx = Rp * e + 1j * R * e - np.sin(x) + 1j * b * np.cos(x)
    return z, zx


@dataclass(frozen=True)
class Problem:
    """One residual map R -> F(param, R) with everything else fixed."""

    family: Family
    param: float
    alpha: float = 0.0
    jump: float = -1.0
    rule: QuadratureRule | None = None
    n_x: int | None = None

    @classmethod
    def ellipse(cls, r: float, **kw) -> "Problem":
        return cls("ellipse", r, **kw)

    @classmethod
    def disk(cls, Omega: float, alpha: float = 0.0, **kw) -> "Problem":
        return cls("disk", Omega, alpha, **kw)

    def with_param(self, value: float) -> "Problem":
        return replace(self, param=value)

    def base_b(self) -> float:
        return self.param if self.family == "ellipse" else 1.0

    def residual(self, R: CosineSeries) -> ResidualVector:
        if self.family == "ellipse":
            return eval_F_ellipse(self.param, R, self.rule, self.n_x, self.jump)
        return eval_F_disk(self.param, R, self.alpha, self.rule, self.n_x, self.jump)


def gateaux_fd(which: Problem, R: CosineSeries, h: CosineSeries, step: float = 1e-5) -> SineSeries:
    """Central difference (F(R + step h) - F(R - step h)) / (2 step)."""
    if not step > 0:
        raise ValueError("step must be positive")
    n = max(R.N, h.N)
    R, h = R.resize(n), h.resize(n)
    fp = which.residual(R + step * h).sine_coeffs
    fm = which.residual(R - step * h).sine_coeffs
    return (1.0 / (2.0 * step)) * (fp - fm)


def disk_kernel_omega(m: int, alpha: float = 0.0, N: int | None = None, rule: QuadratureRule | None = None, step: float = 1e-4) -> float:
    """Omega at which the m-th sine mode of the disk linearization on cos(m x) vanishes.

    The linearization is affine in Omega, so two Gateaux evaluations fix the root.
    """
    N = N or 2 * m + 2
    h = CosineSeries.mode(m, N)
    zero = CosineSeries.zeros(N)
    d0 = gateaux_fd(Problem.disk(0.0, alpha, rule=rule), zero, h, step).coeffs[m - 1]
    d1 = gateaux_fd(Problem.disk(1.0, alpha, rule=rule), zero, h, step).coeffs[m - 1]
    return float(d0 / (d0 - d1))


def curvature_min(R: CosineSeries, base: float = 1.0, n: int = 4096) -> float:
    """Minimum signed curvature of z(x) = (1+R) cos x + i (base+R) sin x; positive means convex."""
    x = trapezoid_nodes(n)
    j = np.arange(1, R.N + 1)
    jx = np.multiply.outer(x, j)
    a = R.coeffs
    Rv = np.cos(jx) @ a
    Rp = -(np.sin(jx) @ (j * a))
    Rpp = -(np.cos(jx) @ (j * j * a))
    e = np.exp(1j * x)
    E = np.cos(x) + 1j * base * np.sin(x)
    zx = Rp * e + 1j * Rv * e - np.sin(x) + 1j * base * np.cos(x)
    zxx = Rpp * e + 2j * Rp * e - Rv * e - E
    speed = np.abs(zx)
    if speed.min() < 1e-8:
        raise DegenerateParametrizationError(f"|z_x| = {speed.min():.3e}")
    kappa = (np.conj(zx) * zxx).imag / speed**3
    return float(kappa.min())
