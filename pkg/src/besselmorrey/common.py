"""Geometric constants and small value types used across modules.

Unit-sphere and unit-ball measures are computed as

    sphere_area(n) = 2 * pi**(n/2) / Gamma(n/2)        (n = 1 gives 2)
    ball_volume(n) = pi**(n/2) / Gamma(n/2 + 1)        (= sphere_area(n) / n)

using ``math.gamma``; both are exact up to double rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def dual_exponent(x: float) -> float:
    """Hölder conjugate x/(x-1); 1 maps to inf and inf maps to 1."""
    if x < 1:
        raise ValueError(f"exponent must be >= 1, got {x}")
    if x == 1:
        return math.inf
    if math.isinf(x):
        return 1.0
    return x / (x - 1.0)


@dataclass
class NormEstimate:
    """A computed norm together with how it was obtained.

    ``method`` is one of "closed-form", "ball-search", "quadrature".
    ``argmax_ball`` is ``(center, radius)`` for ball searches and None otherwise.
    """

    value: float
    method: str
    argmax_ball: tuple | None = None
    discretization: dict[str, Any] = field(default_factory=dict)
    error_indicator: float = 0.0

    def __post_init__(self):
        if not (self.value >= 0):
            raise ValueError(f"norm value must be nonnegative, got {self.value}")
        if self.method not in ("closed-form", "ball-search", "quadrature"):
            raise ValueError(f"unknown method {self.method!r}")
        if (self.argmax_ball is not None) != (self.method == "ball-search"):
            raise ValueError("argmax_ball is present iff method is ball-search")

    def __float__(self):
        return float(self.value)
