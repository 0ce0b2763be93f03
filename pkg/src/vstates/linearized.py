"""Exact linear theory around the ellipse family and the disk thresholds.

Linearizing the ellipse functional at R = 0 gives a tridiagonal operator on
cosine coefficients that couples frequencies k - 2, k, k + 2. Everything
here is closed form except the odd-m kernel vector, which is computed as
the null vector of the truncated odd-frequency block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg

from .series import CosineSeries, SineSeries
from .special import gamma, gamma_ratio

ModeClass = Literal["even-frequencies", "odd-frequencies"]


class RootNotFoundError(ArithmeticError):
    pass


class NotARootError(ValueError):
    pass


class RangeConstraintError(ValueError):
    pass


class DegenerateTransversalityError(ArithmeticError):
    pass


def _check_ratio(r: float) -> None:
    if not 0.0 < r < 1.0:
        raise ValueError(f"aspect ratio must lie in (0, 1), got {r}")


def bracket(m: float, r: float) -> float:
    """-1 - 2r + 2mr - r^2 - (1-r)^m / (1+r)^(m-2)."""
    _check_ratio(r)
    return -1.0 - 2.0 * r + 2.0 * m * r - r * r - (1.0 - r) ** m / (1.0 + r) ** (m - 2)


def bracket_dr(m: float, r: float) -> float:
    """Symbolic r-derivative of :func:`bracket` (cross-check for the FD path)."""
    _check_ratio(r)
    return (
        -2.0
        + 2.0 * m
        - 2.0 * r
        + m * (1.0 - r) ** (m - 1) / (1.0 + r) ** (m - 2)
        + (m - 2) * (1.0 - r) ** m / (1.0 + r) ** (m - 1)
    )


def bifurcation_ratio(m: int, tol: float = 1e-14, max_iter: int = 200) -> float:
    """The unique root r(m) in (0, 1) of the bracket, m > 2.

    bracket(m, 0+) = -2 and bracket(m, 1-) = 2m - 4 > 0, so bisection always
    converges; a few Newton steps then polish the simple root.
    """
    if m <= 2:
        raise ValueError("ellipse bifurcations need m > 2")
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    f = lambda r: -1.0 - 2.0 * r + 2.0 * m * r - r * r - (1.0 - r) ** m / (1.0 + r) ** (m - 2)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < max(tol, 4e-16):
            break
    else:
        raise RootNotFoundError(f"bisection for r({m}) did not converge")
    r = 0.5 * (lo + hi)
    for _ in range(3):
        step = f(r) / bracket_dr(m, r)
        if not lo - tol <= r - step <= hi + tol:
            break
        r -= step
    return r


def K(k, r: float):
    """K_k(r) = -(1 - r)/(8 (1 + r)^2) * bracket(k, r); vectorized in k."""
    _check_ratio(r)
    k = np.asarray(k, dtype=float)
    br = -1.0 - 2.0 * r + 2.0 * k * r - r * r - (1.0 - r) ** k / (1.0 + r) ** (k - 2)
    return -(1.0 - r) / (8.0 * (1.0 + r) ** 2) * br


@dataclass(frozen=True, eq=False)
class TriDiagonalDF:
    r: float
    K: np.ndarray
    x: np.ndarray
    y: np.ndarray
    zc: np.ndarray
    zparam: float

    @property
    def N(self) -> int:
        return self.K.size


def tri_coeffs(r: float, N: int) -> TriDiagonalDF:
    """Coefficients of DF(0, r): row k is x_k a_{k-2} + y_k a_k + z_k a_{k+2}."""
    _check_ratio(r)
    if N < 4:
        raise ValueError("need N >= 4")
    k = np.arange(1, N + 1)
    Kk = K(k, r)
    z = (1.0 + r) / (1.0 - r)
    y = -2.0 * z * Kk
    y[0] = -(3.0 * r + 1.0) / (4.0 * (1.0 + r) ** 2)
    return TriDiagonalDF(r, Kk, Kk.copy(), y, Kk.copy(), z)


def apply_DF(r: float, h: CosineSeries, coeffs: TriDiagonalDF | None = None) -> SineSeries:
    N = h.N
    t = coeffs if coeffs is not None and coeffs.N >= N else tri_coeffs(r, max(N, 4))
    a = np.zeros(N + 4)
    a[2 : N + 2] = h.coeffs  # a[i + 1] holds a_i; a_{-1} = a_0 = 0
    b = t.x[:N] * a[0:N] + t.y[:N] * a[2 : N + 2] + t.zc[:N] * a[4 : N + 4]
    return SineSeries(b)


def _lambdas(r: float) -> tuple[float, float, float]:
    z = (1.0 + r) / (1.0 - r)
    s = math.sqrt(z * z - 1.0)
    return z, z + s, z - s


@dataclass(frozen=True, eq=False)
class KernelGenerator:
    """Generator h0 of the one-dimensional kernel of DF(0, r(m)).

    ``cp[p-1]`` is the amplitude of frequency 2p (even m) or 2p - 1 (odd m);
    ``k_index`` is the class index p of the bifurcating frequency m.
    """

    m: int
    r: float
    N: int
    lambda_plus: float
    lambda_minus: float
    cp: np.ndarray
    w: np.ndarray
    mode_class: ModeClass
    k_index: int
    tail_ratio: float = field(default=float("nan"))

    @property
    def zparam(self) -> float:
        return 0.5 * (self.lambda_plus + self.lambda_minus)

    def freqs(self) -> np.ndarray:
        p = np.arange(1, self.cp.size + 1)
        return 2 * p if self.mode_class == "even-frequencies" else 2 * p - 1

    def as_series(self, N: int | None = None) -> CosineSeries:
        N = self.N if N is None else N
        a = np.zeros(N)
        f = self.freqs()
        keep = f <= N
        a[f[keep] - 1] = self.cp[keep]
        return CosineSeries(a)

    def row_defect(self) -> float:
        """c_{k-1} - 2 z c_k + c_{k+1}: the one recurrence row that h0 does not satisfy."""
        c = np.concatenate([[0.0], self.cp, [0.0]])
        k = self.k_index
        return float(c[k - 1] - 2.0 * self.zparam * c[k] + c[k + 1])


def _odd_block(r: float, N: int) -> np.ndarray:
    t = tri_coeffs(r, N + 2)
    f = np.arange(1, N + 1, 2)
    n = f.size
    M = np.zeros((n, n))
    for i, j in enumerate(f):
        if i > 0:
            M[i, i - 1] = t.x[j - 1]
        M[i, i] = t.y[j - 1]
        if i + 1 < n:
            M[i, i + 1] = t.zc[j - 1]
    return M


def _null_vector(M: np.ndarray, iters: int = 4) -> np.ndarray:
    # inverse iteration with a tiny shift; the block has an (almost) exact zero row
    n = M.shape[0]
    shift = 1e-12 * max(1.0, np.abs(M).max())
    lu = scipy.linalg.lu_factor(M - shift * np.eye(n), check_finite=False)
    v = np.ones(n) / math.sqrt(n)
    for _ in range(iters):
        v = scipy.linalg.lu_solve(lu, v, check_finite=False)
        v /= np.linalg.norm(v)
    return v


def kernel_truncation(m: int, r_m: float, tail: float = 1e-16) -> int:
    """Smallest even N >= 2m whose truncated h0 tail is below ``tail`` relative."""
    _, _, lm = _lambdas(r_m)
    extra = math.ceil(math.log(tail) / math.log(lm))
    n = max(2 * m, m + 2 * extra + 2)
    return n + n % 2


def kernel_generator(m: int, r_m: float, N: int) -> KernelGenerator:
    if m <= 2:
        raise ValueError("ellipse kernels need m > 2")
    if abs(bracket(m, r_m)) >= 1e-10:
        raise NotARootError(f"r = {r_m} is not the bifurcation ratio for m = {m}")
    if N < 2 * m:
        raise ValueError("need N >= 2m")
    z, lp, lm = _lambdas(r_m)
    if m % 2 == 0:
        k = m // 2
        p = np.arange(1, N // 2 + 1)
        head = lp**p - lm**p
        tail = (lp**k - lm**k) * lm ** np.maximum(p - k, 0)
        cp = np.where(p <= k, head, tail)
        mode_class: ModeClass = "even-frequencies"
    else:
        k = (m + 1) // 2
        v = _null_vector(_odd_block(r_m, N))
        cp = v * (lp - lm) / v[0]
        mode_class = "odd-frequencies"
    j = np.arange(1, cp.size + 1)
    w = (lp**j - lm**j) / (lp - lm)
    # ratio of consecutive class coefficients inside the tail, away from the truncation edge
    i = min(k + 2, cp.size // 2)
    tail_ratio = float(cp[i] / cp[i - 1]) if k < i < cp.size else float("nan")
    return KernelGenerator(m, r_m, N, lp, lm, cp, w, mode_class, k, tail_ratio)


def _green_tail(ct: np.ndarray, lp: float, lm: float, n_out: int) -> np.ndarray:
    """Decaying solution of a_{p-1} - 2z a_p + a_{p+1} = ct_p for p >= 1 with a_0 = 0.

    ``ct[j-1]`` is the source at offset j past the bifurcating index;
    returns a at offsets 1..n_out.
    """
    d = lp - lm
    J = ct.size
    out = np.zeros(n_out)
    for n in range(1, n_out + 1):
        j1 = np.arange(1, min(n - 1, J) + 1)
        # w_j / lp^n, written to avoid overflow (lm = 1/lp)
        s1 = np.sum(ct[j1 - 1] * (lp ** (j1 - n) - lm ** (j1 + n))) if j1.size else 0.0
        j2 = np.arange(n, J + 1)
        s2 = np.sum(ct[j2 - 1] * (lm ** (j2 - n) - lm ** (j2 + n))) if j2.size else 0.0
        out[n - 1] = -(s1 + s2) / d
    return out


def preimage(r_m: float, target: SineSeries, N: int | None = None, m: int | None = None, atol: float = 1e-10) -> CosineSeries:
    """Solve DF(0, r_m) h = target with the kernel component fixed by a_m = 0.

    ``m`` defaults to the fold whose bifurcation ratio is r_m. The target's
    nonzero frequencies must share one parity class.
    """
    N = target.N if N is None else N
    if m is None:
        m = _fold_of(r_m)
    b = target.resize(N).coeffs
    f = np.arange(1, N + 1)
    if abs(b[m - 1]) > atol * max(1.0, np.abs(b).max()) if m <= N else False:
        raise RangeConstraintError(f"target has a component {b[m - 1]:.3e} on the bifurcating mode {m}")
    cls_even = f % 2 == 0
    if np.any(b[cls_even] != 0) and np.any(b[~cls_even] != 0):
        raise ValueError("target mixes even and odd frequencies")
    out = np.zeros(N)
    for parity in (0, 1):
        sel = (f % 2 == parity)
        if not np.any(b[sel]):
            continue
        out[sel] = _preimage_class(r_m, b, N, m, parity)
    return CosineSeries(out)


def _fold_of(r_m: float) -> int:
    for m in range(3, 400):
        if abs(bracket(m, r_m)) < 1e-10:
            return m
    raise NotARootError(f"r = {r_m} is not a bifurcation ratio")


def _preimage_class(r_m: float, b: np.ndarray, N: int, m: int, parity: int) -> np.ndarray:
    z, lp, lm = _lambdas(r_m)
    f = np.arange(2 - parity, N + 1, 2)  # frequencies in the class
    Kf = K(f, r_m)
    t = b[f - 1]
    n = f.size
    if m % 2 == parity:
        # class containing the bifurcating mode: head solve + Green tail
        k = int(np.searchsorted(f, m)) + 1
        ct = np.where(f == m, 0.0, t / np.where(f == m, 1.0, Kf))
    else:
        # the other class has no zero row; the Green tail starts at index 0
        k = 0
        ct = t / Kf
    a = np.zeros(n)
    if k > 1:
        h = k - 1
        diag = np.full(h, -2.0 * z)
        rhs = ct[: h].copy()
        if parity == 1:
            # row of frequency 1: y_1 a_1 + K_1 a_3, scaled by K_1
            y1 = -(3.0 * r_m + 1.0) / (4.0 * (1.0 + r_m) ** 2)
            diag[0] = y1 / Kf[0]
        ab = np.zeros((3, h))
        ab[0, 1:] = 1.0
        ab[1] = diag
        ab[2, :-1] = 1.0
        a[:h] = scipy.linalg.solve_banded((1, 1), ab, rhs)
    if k == 0:
        # class without a zero row: the truncated tridiagonal system is invertible
        ab = np.zeros((3, n))
        ab[0, 1:] = 1.0
        ab[1] = -2.0 * z
        ab[2, :-1] = 1.0
        if parity == 1:
            ab[1, 0] = -(3.0 * r_m + 1.0) / (4.0 * (1.0 + r_m) ** 2) / Kf[0]
        return scipy.linalg.solve_banded((1, 1), ab, ct)
    if k < n:
        a[k:] = _green_tail(ct[k:], lp, lm, n - k)
    return a


def omega_m(m: int, alpha: float) -> float:
    """Angular velocity at which m-fold V-states leave the disk (displayed form).

    For alpha not in {0, 1} the displayed Gamma expression is returned as is;
    it carries the opposite sign to the alpha = 0 and alpha = 1 entries.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if not 0.0 <= alpha < 2.0:
        raise ValueError("alpha must lie in [0, 2)")
    if alpha == 0.0:
        return (m - 1) / (2.0 * m)
    if alpha == 1.0:
        return 2.0 / math.pi * sum(1.0 / (2 * k - 1) for k in range(2, m + 1))
    pre = -(2.0 ** (alpha - 1.0)) * gamma(1.0 - alpha) / gamma(1.0 - alpha / 2.0) ** 2
    return pre * (gamma_ratio(1.0 + alpha / 2.0, 2.0 - alpha / 2.0) - gamma_ratio(m + alpha / 2.0, 1.0 + m - alpha / 2.0))


def disk_threshold(m: int, alpha: float) -> float:
    """Rotation speed of the bifurcation with the physical sign (jump = -1)."""
    return abs(omega_m(m, alpha))


def K_prime(k: int, r: float, step: float = 1e-6, richardson: bool = True) -> float:
    d1 = (K(k, r + step) - K(k, r - step)) / (2.0 * step)
    if not richardson:
        return float(d1)
    d2 = (K(k, r + 2 * step) - K(k, r - 2 * step)) / (4.0 * step)
    return float((4.0 * d1 - d2) / 3.0)


def transversality_index(m: int, r_m: float, step: float = 1e-6, N: int | None = None) -> float:
    """K_m'(r_m) times the defective recurrence row of h0; nonzero at a simple bifurcation."""
    gen = kernel_generator(m, r_m, N or max(8 * m, 32))
    val = K_prime(m, r_m, step) * gen.row_defect()
    if abs(val) < 1e-8:
        raise DegenerateTransversalityError(f"transversality index {val:.3e} for m = {m}")
    return val


def k_growth_ratio(m: int, r_m: float, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(abs(K(n, r_m)) / n)


def k_growth_limit(r: float) -> float:
    return r * (1.0 - r) / (4.0 * (1.0 + r) ** 2)
