"""Closed-form periodic integrals and the quadrature engine they check.

The three closed forms are the Poisson-kernel integral and the two
logarithmic integrals that appear when linearizing around an ellipse. Each
one is an oracle for the quadrature rules below, and the rules are an
oracle for them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np

Scheme = Literal["periodic-trapezoid", "log-split", "power-graded"]

TWO_PI = 2.0 * math.pi


class NonFiniteIntegrandError(ArithmeticError):
    pass


def _check_ratio(r: float) -> None:
    if not 0.0 < r < 1.0:
        raise ValueError(f"ratio r must lie in (0, 1), got {r}")


def poisson_kernel_integral(k: int, r: float) -> float:
    """int_0^{2pi} cos(k y) / ((1 + r^2) + (r^2 - 1) cos y) dy."""
    _check_ratio(r)
    return math.pi / r * ((1.0 - r) / (1.0 + r)) ** abs(k)


def log_sin_integral(k: int) -> float:
    """int_0^{2pi} cos(k y) log(sin^2(y/2)) dy."""
    if k == 0:
        return -4.0 * math.pi * math.log(2.0)
    return -TWO_PI / abs(k)


def log_shifted_cos_integral(k: int, r: float) -> float:
    """int_0^{2pi} cos(k y) log((1 + r^2)/(1 - r^2) - cos y) dy."""
    _check_ratio(r)
    rho = (1.0 - r) / (1.0 + r)
    if k == 0:
        return -TWO_PI * math.log(2.0 * rho)
    return -TWO_PI / abs(k) * rho ** abs(k)


@dataclass(frozen=True)
class QuadratureRule:
    """A quadrature rule on one period.

    ``power-graded`` places composite Gauss-Legendre panels of ``panel_order``
    points on a mesh graded towards y = 0 like |t|^grading, symmetric about
    0; ``n_nodes`` counts the nodes on both sides.
    """

    n_nodes: int = 1024
    scheme: Scheme = "periodic-trapezoid"
    grading: float = 1.0
    panel_order: int = 4

    def __post_init__(self):
        if self.n_nodes < 8 or self.n_nodes % 2:
            raise ValueError("n_nodes must be even and >= 8")
        if self.scheme not in ("periodic-trapezoid", "log-split", "power-graded"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "power-graded":
            if not self.grading > 0:
                raise ValueError("grading exponent must be > 0")
            if self.n_nodes % (2 * self.panel_order):
                raise ValueError("power-graded n_nodes must be a multiple of 2 * panel_order")

    @classmethod
    def graded_for(cls, alpha: float, n_nodes: int = 1024, panel_order: int = 4) -> "QuadratureRule":
        """Graded rule for integrands behaving like |y|^(1 - alpha) at 0.

        Grading 6/(2 - alpha) makes the first panel small enough that the
        bare power |y|^(1 - alpha) integrates to ~1e-14 with 1024 nodes.
        """
        return cls(n_nodes, "power-graded", 6.0 / (2.0 - alpha), panel_order)

    def nodes_weights(self) -> tuple[np.ndarray, np.ndarray]:
        if self.scheme == "power-graded":
            return graded_nodes(self.n_nodes, self.grading, self.panel_order)
        y = trapezoid_nodes(self.n_nodes)
        if self.scheme == "log-split":
            return y, kress_weights(self.n_nodes)
        return y, np.full(self.n_nodes, TWO_PI / self.n_nodes)


def trapezoid_nodes(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


@lru_cache(maxsize=32)
def _kress(n: int) -> np.ndarray:
    m = n // 2
    y = trapezoid_nodes(n)
    k = np.arange(1, m)
    w = -(4.0 * math.pi / n) * (np.cos(np.multiply.outer(y, k)) / k).sum(axis=1)
    w -= (4.0 * math.pi / n**2) * np.cos(m * y)
    w.setflags(write=False)
    return w


def kress_weights(n: int) -> np.ndarray:
    """Weights R_j with sum_j R_j f(y_j) = int f(y) log(4 sin^2(y/2)) dy.

    Exact for trigonometric interpolants of degree n/2 on the n equispaced
    nodes; uses log(4 sin^2(y/2)) = -2 sum_{j>=1} cos(j y)/j.
    """
    if n % 2:
        raise ValueError("Kress weights need an even node count")
    return _kress(n)


@lru_cache(maxsize=32)
def _graded(n: int, q: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    panels = n // (2 * order)
    t = np.linspace(0.0, 1.0, panels + 1)
    edges = math.pi * t**q
    g, gw = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    s = (0.5 * (b - a) * g + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * gw).ravel()
    nodes = np.concatenate([-s[::-1], s])
    weights = np.concatenate([w[::-1], w])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def graded_nodes(n: int, grading: float, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Nodes in (-pi, pi) excluding 0, graded towards 0, and their weights."""
    return _graded(int(n), float(grading), int(order))


def integrate_periodic(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> float:
    """Integrate over one period.

    periodic-trapezoid and power-graded return int f dy (power-graded allows
    an integrable singularity at y = 0). log-split returns
    int f(y) log(4 sin^2(y/2)) dy for a smooth periodic f: the log weight is
    applied through its Fourier multipliers, not sampled.
    """
    y, w = rule.nodes_weights()
    vals = np.asarray(f(np.array(y)), dtype=float)
    if vals.shape != y.shape:
        vals = np.broadcast_to(vals, y.shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrandError("integrand is not finite at some node")
    return float(np.dot(w, vals))
