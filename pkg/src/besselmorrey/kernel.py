"""Bessel-Riesz kernels |x|^(alpha-n) (1+|x|)^(-gamma) and their norms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .common import NormEstimate, ball_volume, sphere_area
from .errors import DivergenceError, SingularityError
from .fields import RadialField, RadialSpec


@dataclass(frozen=True)
class KernelParams:
    """Exponents of the kernel K(x) = |x|^(alpha-n) (1+|x|)^(-gamma) on R^n."""

    alpha: float
    gamma: float
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not 0 < self.alpha < self.dim:
            raise ValueError(f"need 0 < alpha < n, got alpha={self.alpha}, n={self.dim}")
        if self.gamma < 0:
            raise ValueError(f"need gamma >= 0, got {self.gamma}")

    @property
    def riesz(self) -> "KernelParams":
        """Same alpha and n with gamma = 0."""
        return KernelParams(self.alpha, 0.0, self.dim)

    @property
    def critical_t(self) -> float:
        """n/(n-alpha): upper end of the admissible exponent range."""
        return self.dim / (self.dim - self.alpha)

    @property
    def lower_t(self) -> float:
        """n/(n+gamma-alpha): lower end of the Lebesgue range (gamma > 0)."""
        return self.dim / (self.dim + self.gamma - self.alpha)


@dataclass(frozen=True)
class ExponentPair:
    """Integrability exponent p and Morrey exponent q with 1 <= p <= q."""

    p: float
    q: float

    def __post_init__(self):
        if not 1 <= self.p <= self.q:
            raise ValueError(f"need 1 <= p <= q, got p={self.p}, q={self.q}")


def kernel_radial(r, k: KernelParams):
    """Vectorised kernel profile as a function of |x| (r > 0)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return r ** (k.alpha - k.dim) * (1.0 + r) ** (-k.gamma)


def eval_kernel(x, k: KernelParams) -> float:
    """Kernel value at a point x of R^n (a scalar is accepted when n = 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (k.dim,):
        raise ValueError(f"expected a point of R^{k.dim}, got shape {x.shape}")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise SingularityError(
            "kernel is singular at the origin; integrate the origin cell "
            "with singular_cell_mass instead"
        )
    return float(kernel_radial(r, k))


def _check_lebesgue_range(k: KernelParams, t: float):
    if k.gamma == 0:
        raise DivergenceError(
            "gamma = 0: no t admits L^t membership of the Riesz kernel", endpoint="both"
        )
    if t >= k.critical_t:
        raise DivergenceError(
            f"t = {t} >= n/(n-alpha) = {k.critical_t}: integral diverges at 0",
            endpoint="0",
        )
    if t <= k.lower_t:
        raise DivergenceError(
            f"t = {t} <= n/(n+gamma-alpha) = {k.lower_t}: integral diverges at infinity",
            endpoint="infinity",
        )


def _lebesgue_power_integral(k: KernelParams, t: float, rtol: float) -> float:
    # int_0^inf r^a (1+r)^(-gamma t) dr, split at r = 1; the tail is mapped to
    # (0, 1] by r = 1/u so both pieces carry an algebraic endpoint weight.
    a = (k.alpha - k.dim) * t + k.dim - 1
    c = k.gamma * t
    b = c - a - 2
    opts = dict(epsabs=0.0, epsrel=rtol, limit=200)
    head, _ = integrate.quad(lambda r: (1.0 + r) ** (-c), 0.0, 1.0, weight="alg", wvar=(a, 0.0), **opts)
    tail, _ = integrate.quad(lambda u: (1.0 + u) ** (-c), 0.0, 1.0, weight="alg", wvar=(b, 0.0), **opts)
    return head + tail


def kernel_lebesgue_norm(k: KernelParams, t: float, rtol: float = 1e-8) -> NormEstimate:
    """L^t norm of the Bessel-Riesz kernel by 1-D radial quadrature.

    Finite only for gamma > 0 and n/(n+gamma-alpha) < t < n/(n-alpha).
    The error indicator is the relative change when ``rtol`` is tightened 10x.
    """
    _check_lebesgue_range(k, t)
    if t < 1:
        raise ValueError(f"t must be >= 1 for a norm, got {t}")
    omega = sphere_area(k.dim)
    value = (omega * _lebesgue_power_integral(k, t, rtol)) ** (1.0 / t)
    finer = (omega * _lebesgue_power_integral(k, t, rtol / 10)) ** (1.0 / t)
    return NormEstimate(
        value=value,
        method="quadrature",
        discretization={"rtol": rtol, "split": 1.0},
        error_indicator=abs(finer - value) / finer,
    )


def _check_riesz_s(alpha: float, s: float, dim: int) -> float:
    if not 0 < alpha < dim:
        raise ValueError(f"need 0 < alpha < n, got alpha={alpha}, n={dim}")
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    t = dim / (dim - alpha)
    if s >= t:
        raise DivergenceError(
            f"s = {s} >= t = n/(n-alpha) = {t}: |x|^((alpha-n)s) is not integrable at 0",
            endpoint="0",
        )
    return t


def riesz_centered_ball_value(alpha: float, s: float, dim: int, radius: float) -> float:
    """|B|^(1/t - 1/s) (int_B |x|^((alpha-n)s) dx)^(1/s) for B = B(0, radius).

    Evaluated from the antiderivative of r^((alpha-n)s + n - 1) with
    t = n/(n-alpha); the result does not depend on ``radius``.
    """
    t = _check_riesz_s(alpha, s, dim)
    e = (alpha - dim) * s + dim
    vol = ball_volume(dim) * radius**dim
    mass = sphere_area(dim) * radius**e / e
    return (vol ** (s / t - 1.0) * mass) ** (1.0 / s)


def riesz_morrey_closed_form(alpha: float, s: float, dim: int) -> float:
    """Morrey norm of |x|^(alpha-n) in L^{s,t}, t = n/(n-alpha), on centered balls.

    Returns (C_n^(s/t-1) * omega_{n-1} / ((alpha-n)s + n))^(1/s) with C_n the
    unit-ball volume. Centered balls are assumed to attain the supremum; the
    ball-search in ``spaces.morrey_norm`` checks this numerically.
    """
    t = _check_riesz_s(alpha, s, dim)
    e = (alpha - dim) * s + dim
    return (ball_volume(dim) ** (s / t - 1.0) * sphere_area(dim) / e) ** (1.0 / s)


def sampled_kernel(k: KernelParams, spec: RadialSpec | None = None) -> RadialField:
    """The kernel as a radial field (exact profile, power-law head and tail)."""
    spec = spec or RadialSpec(k.dim)
    r = spec.radii()
    return RadialField(
        k.dim, r, kernel_radial(r, k), func=lambda x: kernel_radial(x, k),
        head_slope=k.alpha - k.dim, tail_slope=k.alpha - k.dim - k.gamma,
        meta={"family": "kernel", "params": {"alpha": k.alpha, "gamma": k.gamma}},
    )
