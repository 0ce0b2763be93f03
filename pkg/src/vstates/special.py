"""Lanczos gamma function (g = 7, 9 coefficients) with reflection."""

import math

_G = 7.0
_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _series(z: float) -> float:
    # z already shifted by -1
    s = _P[0]
    for i in range(1, len(_P)):
        s += _P[i] / (z + i)
    return s


def gamma(x: float) -> float:
    x = float(x)
    if x == math.floor(x) and x <= 0:
        raise ValueError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    t = z + _G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _series(z)


def lgamma(x: float) -> float:
    """log|Gamma(x)|, safe for large positive x."""
    x = float(x)
    if x < 0.5:
        return math.log(abs(gamma(x)))
    z = x - 1.0
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_series(z))


def gamma_ratio(a: float, b: float) -> float:
    """Gamma(a) / Gamma(b) for positive a, b without overflow."""
    if a > 0 and b > 0:
        return math.exp(lgamma(a) - lgamma(b))
    return gamma(a) / gamma(b)


def calpha(alpha: float) -> float:
    """Normalizing constant C(alpha) of the gSQG contour equation, alpha in (0, 2)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("C(alpha) is defined for alpha in (0, 2)")
    return gamma(alpha / 2.0) / (2.0 * math.pi * 2.0 ** (1.0 - alpha) * gamma((2.0 - alpha) / 2.0))
