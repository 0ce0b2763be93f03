"""Truncated Fourier series on the 2*pi-periodic circle.

Cosine series carry shape perturbations R(x); sine series carry residuals.
Neither representation has a constant mode: index 0 of ``coeffs`` is the
amplitude of frequency 1.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Literal

import numpy as np

DEFAULT_N = 256

Parity = Literal["even-frequencies", "odd-frequencies", "multiples-of-m"]


class InsufficientDataError(ValueError):
    pass


def _as_coeffs(coeffs) -> np.ndarray:
    a = np.array(coeffs, dtype=float).ravel()
    if a.size < 1:
        raise ValueError("a series needs at least one mode (N >= 1)")
    if not np.all(np.isfinite(a)):
        raise ValueError("series coefficients must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class _Series:
    coeffs: np.ndarray

    kind = "base"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))

    @classmethod
    def zeros(cls, n: int = DEFAULT_N):
        return cls(np.zeros(n))

    @classmethod
    def mode(cls, j: int, n: int, amplitude: float = 1.0):
        """Single mode ``amplitude * basis(j x)`` truncated at ``n``."""
        if not 1 <= j <= n:
            raise ValueError(f"mode {j} outside 1..{n}")
        a = np.zeros(n)
        a[j - 1] = amplitude
        return cls(a)

    @property
    def N(self) -> int:
        return self.coeffs.size

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def resize(self, n: int):
        a = np.zeros(n)
        k = min(n, self.N)
        a[:k] = self.coeffs[:k]
        return type(self)(a)

    def __add__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        n = max(self.N, other.N)
        return type(self)(self.resize(n).coeffs + other.resize(n).coeffs)

    def __sub__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, scalar: float):
        return type(self)(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __eq__(self, other):
        return type(other) is type(self) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.kind, self.coeffs.tobytes()))

    def l2(self) -> float:
        """Coefficient l2 norm (not the L2 norm of the function)."""
        return float(np.linalg.norm(self.coeffs))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {"type": self.kind, "coeffs": self.coeffs.tolist()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "amplitude"])
        for j, a in zip(self.freqs, self.coeffs):
            w.writerow([int(j), repr(float(a))])
        return buf.getvalue()


class CosineSeries(_Series):
    """sum_j a_j cos(j x), j = 1..N."""

    kind = "cos"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.cos(np.multiply.outer(x, self.freqs)) @ self.coeffs

    def derivative(self) -> "SineSeries":
        return SineSeries(-self.freqs * self.coeffs)


class SineSeries(_Series):
    """sum_j b_j sin(j x), j = 1..N."""

    kind = "sin"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.sin(np.multiply.outer(x, self.freqs)) @ self.coeffs

    def derivative(self) -> CosineSeries:
        return CosineSeries(self.freqs * self.coeffs)


def eval_series(series: _Series, x):
    return series(x)


def derivative(series: CosineSeries) -> SineSeries:
    return series.derivative()


def series_from_dict(d: dict) -> _Series:
    kinds = {"cos": CosineSeries, "sin": SineSeries}
    if d.get("type") not in kinds:
        raise ValueError(f"unknown series type {d.get('type')!r}")
    return kinds[d["type"]](d["coeffs"])


def series_from_json(text: str) -> _Series:
    return series_from_dict(json.loads(text))


def series_from_csv(text: str, kind: str = "cos") -> _Series:
    rows = list(csv.reader(io.StringIO(text)))
    if rows and rows[0] and rows[0][0] == "index":
        rows = rows[1:]
    idx = [int(r[0]) for r in rows if r]
    vals = [float(r[1]) for r in rows if r]
    if not idx or min(idx) < 1:
        raise ValueError("CSV series indices must start at 1")
    a = np.zeros(max(idx))
    a[np.array(idx) - 1] = vals
    return series_from_dict({"type": kind, "coeffs": a})


@dataclass(frozen=True)
class StripNormSpec:
    c: float = 0.0
    k: int = 0

    def __post_init__(self):
        if not (self.c >= 0 and np.isfinite(self.c)):
            raise ValueError("strip half-width c must be finite and >= 0")
        if int(self.k) != self.k or self.k < 0:
            raise ValueError("derivative order k must be a non-negative integer")


def strip_norm(series: _Series, spec: StripNormSpec) -> float:
    """Norm of the analytic strip space |Im x| <= c, evaluated by Parseval.

    sqrt(2 pi sum_j a_j^2 (1 + j^{2k}) cosh(2 j c)); the two terms are the
    function and its k-th derivative on both strip edges.
    """
    j = series.freqs.astype(float)
    a2 = series.coeffs**2
    nz = a2 > 0
    if not nz.any():
        return 0.0
    arg = 2.0 * j[nz] * spec.c
    if arg.max() > 709.0:
        raise OverflowError(f"cosh(2 j c) overflows for j c = {arg.max() / 2:g}")
    total = np.sum(a2[nz] * (1.0 + j[nz] ** (2 * spec.k)) * np.cosh(arg))
    if not np.isfinite(total):
        raise OverflowError("strip norm overflows")
    return float(np.sqrt(2.0 * np.pi * total))


def fit_decay_rate(series: _Series, rel_floor: float = 1e-13) -> float:
    """Exponential decay rate of |a_j|, a numerical analyticity-strip estimate.

    Least-squares slope of -log|a_j| against j over the usable coefficients:
    those that are nonzero and above ``rel_floor * max|a|`` (roundoff noise
    would flatten the fit). Structural zeros from a symmetry class are skipped.
    """
    a = np.abs(series.coeffs)
    amax = a.max(initial=0.0)
    usable = (a > 0) & (a > rel_floor * amax)
    j = series.freqs[usable].astype(float)
    if j.size < 4:
        raise InsufficientDataError(f"need at least 4 usable coefficients, got {j.size}")
    slope, _ = np.polyfit(j, -np.log(a[usable]), 1)
    return float(slope)


def symmetry_mask(n: int, parity: Parity, m: int = 1) -> np.ndarray:
    if m < 1:
        raise ValueError("fold m must be >= 1")
    j = np.arange(1, n + 1)
    if parity == "even-frequencies":
        return j % 2 == 0
    if parity == "odd-frequencies":
        return j % 2 == 1
    if parity == "multiples-of-m":
        return j % m == 0
    raise ValueError(f"unknown parity class {parity!r}")


def project_symmetry(series: _Series, m: int = 1, parity: Parity = "multiples-of-m"):
    """Zero every coefficient outside the selected frequency class."""
    mask = symmetry_mask(series.N, parity, m)
    return type(series)(np.where(mask, series.coeffs, 0.0))
