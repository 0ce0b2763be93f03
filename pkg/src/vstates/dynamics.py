"""Contour dynamics for patches and a rigid-rotation fit.

The boundary velocity used here is

    Euler:  dz/dt = jump/(4 pi) int (z_x(x-s) - z_x(x)) log|z(x) - z(x-s)|^2 ds
    gSQG:   dz/dt = -jump C(alpha) int (z_x(x-s) - z_x(x)) |z(x) - z(x-s)|^-alpha ds

The subtracted z_x(x) term only adds tangential motion. With jump = -1 a
patch of unit positive vorticity turns counterclockwise, the same
convention as the rotating-frame functionals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .closed_forms import QuadratureRule, kress_weights, trapezoid_nodes
from .series import CosineSeries
from .special import calpha

ARC_CHORD_MIN = 1e-3


class ArcChordError(ArithmeticError):
    """The contour came too close to self-intersection; ``last`` is the last valid state."""

    def __init__(self, message: str, last: "Contour | None" = None):
        super().__init__(message)
        self.last = last


class TimeStepError(ValueError):
    pass


@dataclass(frozen=True)
class Kernel:
    name: Literal["euler", "gsqg"] = "euler"
    alpha: float = 0.0
    n_quad: int = 1024

    def __post_init__(self):
        if self.name == "euler" and self.alpha != 0.0:
            raise ValueError("euler kernel has alpha = 0")
        if self.name == "gsqg" and not 0.0 < self.alpha < 2.0:
            raise ValueError("gsqg needs alpha in (0, 2)")

    @classmethod
    def for_alpha(cls, alpha: float, n_quad: int = 1024) -> "Kernel":
        return cls("euler", 0.0, n_quad) if alpha == 0 else cls("gsqg", alpha, n_quad)


@dataclass(frozen=True, eq=False)
class Contour:
    nodes: np.ndarray
    family: str = "free"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        z = np.array(self.nodes, dtype=complex).ravel()
        if z.size < 8 or z.size % 2:
            raise ValueError("a contour needs an even number (>= 8) of nodes")
        z.setflags(write=False)
        object.__setattr__(self, "nodes", z)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def x(self) -> np.ndarray:
        return trapezoid_nodes(self.n)

    @classmethod
    def from_shape(cls, R: CosineSeries, base: float = 1.0, n: int = 256, family: str = "ellipse") -> "Contour":
        """Sample z(x) = (1 + R) cos x + i (base + R) sin x."""
        x = trapezoid_nodes(n)
        Rv = R(x)
        return cls((1.0 + Rv) * np.cos(x) + 1j * (base + Rv) * np.sin(x), family, {"base": base})

    @classmethod
    def ellipse(cls, r: float, n: int = 256) -> "Contour":
        return cls.from_shape(CosineSeries.zeros(1), r, n, "ellipse")

    @classmethod
    def circle(cls, n: int = 256) -> "Contour":
        return cls.from_shape(CosineSeries.zeros(1), 1.0, n, "disk")

    def with_nodes(self, z: np.ndarray) -> "Contour":
        return Contour(z, self.family, self.params)

    def rotated(self, theta: float) -> "Contour":
        return self.with_nodes(self.nodes * np.exp(1j * theta))

    def spectrum(self) -> np.ndarray:
        """FFT coefficients with the Nyquist mode removed."""
        c = np.fft.fft(self.nodes) / self.n
        c[self.n // 2] = 0.0
        return c

    def derivative(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        return np.fft.ifft(1j * k * self.spectrum()) * self.n

    def interpolate(self, x: np.ndarray) -> np.ndarray:
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        return np.exp(1j * np.multiply.outer(np.asarray(x, float), k)) @ self.spectrum()

    def area(self) -> float:
        """Enclosed area 1/2 int Im(conj z z_x) dx with a spectral derivative."""
        return float(0.5 * np.mean((np.conj(self.nodes) * self.derivative()).imag) * 2.0 * math.pi)

    def shoelace_area(self) -> float:
        z = self.nodes
        return float(0.5 * (np.conj(z) * np.roll(z, -1)).imag.sum())

    def arc_chord(self) -> float:
        """min over i != j of |z_i - z_j| / periodic parameter distance."""
        z = self.nodes
        n = self.n
        idx = np.arange(n)
        d = np.abs(np.subtract.outer(idx, idx))
        d = np.minimum(d, n - d).astype(float) * (2.0 * math.pi / n)
        np.fill_diagonal(d, 1.0)
        ratio = np.abs(np.subtract.outer(z, z)) / d
        np.fill_diagonal(ratio, np.inf)
        return float(ratio.min())

    def check_arc_chord(self) -> None:
        ac = self.arc_chord()
        if ac < ARC_CHORD_MIN:
            raise ArcChordError(f"arc-chord ratio {ac:.3e} below {ARC_CHORD_MIN:g}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "z1", "z2"])
        for xi, zi in zip(self.x, self.nodes):
            w.writerow([repr(float(xi)), repr(float(zi.real)), repr(float(zi.imag))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "z1": self.nodes.real.tolist(),
            "z2": self.nodes.imag.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Contour":
        d = json.loads(text)
        return cls(np.array(d["z1"]) + 1j * np.array(d["z2"]), d.get("family", "free"), d.get("params", {}))

    @classmethod
    def from_csv(cls, text: str) -> "Contour":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and r[0] != "x"]
        return cls([float(r[1]) + 1j * float(r[2]) for r in rows])


def _euler_velocity(c: Contour, jump: float) -> np.ndarray:
    n = c.n
    z, zx = c.nodes, c.derivative()
    i = np.arange(n)
    shift = (i[:, None] - i[None, :]) % n  # column j holds x_i - s_j
    s = trapezoid_nodes(n)
    dz = z[:, None] - z[shift]
    four_sin2 = 4.0 * np.sin(0.5 * s) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.log(np.abs(dz) ** 2 / four_sin2)
    logq[:, 0] = np.log(np.abs(zx) ** 2)
    diff = zx[shift] - zx[:, None]
    smooth = (diff * logq).sum(axis=1) * (2.0 * math.pi / n)
    singular = diff @ kress_weights(n)
    return jump / (4.0 * math.pi) * (smooth + singular)


def _gsqg_velocity(c: Contour, jump: float, alpha: float, n_quad: int) -> np.ndarray:
    rule = QuadratureRule.graded_for(alpha, n_quad)
    s, w = rule.nodes_weights()
    n = c.n
    k = np.fft.fftfreq(n, 1.0 / n)
    coef = c.spectrum()
    ex = np.exp(1j * np.multiply.outer(c.x, k)) * coef  # (n, modes)
    half = np.sin(0.5 * s)
    # U_k(s) = sin(k s/2)/sin(s/2), exact chord quotients with no cancellation
    U = np.sin(0.5 * np.multiply.outer(k, s)) / half
    phase = np.exp(-0.5j * np.multiply.outer(k, s)) * U
    Q = 1j * (ex @ phase)  # (z(x) - z(x-s)) / (2 sin(s/2))
    P = 1j * ((ex * (1j * k)) @ phase)  # (z_x(x) - z_x(x-s)) / (2 sin(s/2))
    weight = np.sign(half) * np.abs(2.0 * half) ** (1.0 - alpha)
    vals = weight * np.abs(Q) ** (-alpha) * P
    return jump * calpha(alpha) * (vals @ w)


def boundary_velocity(contour: Contour, kernel: Kernel = Kernel(), jump: float = -1.0) -> np.ndarray:
    """dz/dt at every node as complex numbers."""
    contour.check_arc_chord()
    if kernel.name == "euler":
        return _euler_velocity(contour, jump)
    return _gsqg_velocity(contour, jump, kernel.alpha, kernel.n_quad)


def normal_velocity(contour: Contour, v: np.ndarray) -> np.ndarray:
    """Outward normal component <v, -z_x^perp>/|z_x| for a counterclockwise contour."""
    zx = contour.derivative()
    return (v * np.conj(zx)).imag * -1.0 / np.abs(zx)


def min_spacing(contour: Contour) -> float:
    return float(np.abs(np.diff(np.append(contour.nodes, contour.nodes[0]))).min())


def integrate(
    contour: Contour,
    kernel: Kernel = Kernel(),
    jump: float = -1.0,
    dt: float = 2.5e-3,
    n_steps: int = 40,
    diagnostics: Callable[[dict], None] | None = None,
) -> Contour:
    """Classical RK4 advance of every node."""
    if not dt > 0:
        raise TimeStepError("dt must be positive")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")

    def rhs(z):
        return boundary_velocity(contour.with_nodes(z), kernel, jump)

    c = contour
    c.check_arc_chord()
    for step in range(n_steps):
        z = c.nodes
        try:
            k1 = rhs(z)
            if dt * np.abs(k1).max() >= 0.25 * min_spacing(c):
                raise TimeStepError(f"dt={dt:g} violates the CFL bound at step {step}")
            k2 = rhs(z + 0.5 * dt * k1)
            k3 = rhs(z + 0.5 * dt * k2)
            k4 = rhs(z + dt * k3)
            new = c.with_nodes(z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
            new.check_arc_chord()
        except ArcChordError as exc:
            raise ArcChordError(str(exc), c) from exc
        c = new
        if diagnostics is not None:
            diagnostics({"step": step + 1, "t": (step + 1) * dt, "area": c.area(), "arc_chord": c.arc_chord()})
    return c


@dataclass(frozen=True)
class RotationFit:
    omega_fit: float
    shape_error: float
    theta: float

    def __post_init__(self):
        if self.shape_error < 0:
            raise ValueError("shape_error must be >= 0")


def polar_profile(contour: Contour, n_angles: int | None = None, tol: float = 1e-14) -> np.ndarray:
    """Radius rho(phi) on equispaced polar angles, for a contour star-shaped about 0.

    Each angle is located on the spectral interpolant by Newton's method on
    arg z(x), so the result does not depend on how nodes slid along the curve.
    """
    n_angles = n_angles or contour.n
    phi = trapezoid_nodes(n_angles)
    z = contour.nodes
    ang = np.unwrap(np.angle(z))
    if not np.all(np.diff(np.append(ang, ang[0] + 2 * math.pi)) > 0):
        raise ValueError("contour is not star-shaped about the origin")
    x_nodes = contour.x
    # initial guess: linear interpolation of the node angles
    x = np.interp(phi, ang - 2 * math.pi * np.floor(ang[0] / (2 * math.pi)), x_nodes, period=2 * math.pi)
    k = np.fft.fftfreq(contour.n, 1.0 / contour.n)
    coef = contour.spectrum()
    for _ in range(30):
        E = np.exp(1j * np.multiply.outer(x, k))
        zz = E @ coef
        dz = E @ (1j * k * coef)
        f = np.angle(zz * np.exp(-1j * phi))
        x = x - f / (dz / zz).imag
        if np.abs(f).max() < tol:
            break
    return np.abs(np.exp(1j * np.multiply.outer(x, k)) @ coef)


def fit_rotation(before: Contour, after: Contour, elapsed: float) -> RotationFit:
    """Best rotation taking ``before`` onto ``after``; ties go to the smallest |theta|."""
    if before.n != after.n:
        raise ValueError("contours must have the same node count")
    rb, ra = polar_profile(before), polar_profile(after)
    n = rb.size
    cb, ca = np.fft.fft(rb) / n, np.fft.fft(ra) / n
    k = np.fft.fftfreq(n, 1.0 / n)

    # maximizing the correlation Re sum conj(ca) cb e^{-ik theta} minimizes the L2 misfit
    cross = np.conj(ca) * cb

    def corr(theta, order=0):
        phase = np.exp(-1j * np.multiply.outer(theta, k))
        return np.real(phase @ (cross * (-1j * k) ** order))

    grid = np.linspace(-math.pi, math.pi, 8 * n, endpoint=False)
    vals = corr(grid)
    scale = max(float(np.sum(np.abs(cb) ** 2)), 1e-300)
    theta = 0.0
    if vals.max() - vals.min() > 1e-10 * scale:
        near = np.flatnonzero(vals >= vals.max() - 1e-10 * scale)
        theta = float(grid[near[np.argmin(np.abs(grid[near]))]])
        for _ in range(20):
            step = corr(theta, 1) / corr(theta, 2)
            theta -= step
            if abs(step) < 1e-15:
                break
    phi = trapezoid_nodes(n)
    rotated = np.real(np.exp(1j * np.multiply.outer(phi, k)) @ (cb * np.exp(-1j * k * theta)))
    err = float(np.abs(ra - rotated).max())
    theta = float(theta)
    omega = theta / elapsed if elapsed > 0 else 0.0
    return RotationFit(omega, err, theta)


def diagnostics_jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r) + "\n" for r in records)
