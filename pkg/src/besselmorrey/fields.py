"""Sampled functions on R^n: uniform cell-centred grids (n <= 3) and radial profiles.

Grid fields hold one sample per cell centre of the box [-L, L]^n, with an odd
number of cells per axis so that one cell is centred on the origin; integrals
are midpoint sums. Radial fields hold a profile on log-spaced radii and are
extended analytically below the first and beyond the last radius by power laws
(the head and tail slopes), which is how unbounded tails are completed.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from .common import ball_volume, sphere_area
from .errors import ConfigError, DivergenceError, EmptyIntersectionError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_CAP_NODES = 64
_CAP_U, _CAP_W = np.polynomial.legendre.leggauss(_CAP_NODES)


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_width: float
    n_points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"grid fields support n in {{1, 2, 3}}, got {self.dim}")
        if self.n_points < 16 or self.n_points % 2 == 0:
            raise ConfigError(f"points per axis must be odd and >= 16, got {self.n_points}")
        if self.half_width <= 0:
            raise ConfigError("half-width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def center_index(self) -> int:
        return self.n_points // 2

    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis; the middle entry is exactly 0."""
        i = np.arange(self.n_points) - self.center_index
        return i * self.spacing

    def mesh(self) -> list[np.ndarray]:
        ax = self.axis()
        return np.meshgrid(*([ax] * self.dim), indexing="ij")

    def radius_array(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.mesh()))

    def refined(self, factor: int) -> "GridSpec":
        return GridSpec(self.dim, self.half_width, factor * (self.n_points - 1) + 1)


@dataclass(frozen=True)
class RadialSpec:
    dim: int
    r_min: float = 1e-4
    r_max: float = 1e4
    per_decade: int = 512

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("dimension must be >= 1")
        if not 0 < self.r_min < self.r_max:
            raise ConfigError("need 0 < r_min < r_max")
        if self.per_decade < 1:
            raise ConfigError("per_decade must be >= 1")

    def radii(self) -> np.ndarray:
        decades = math.log10(self.r_max / self.r_min)
        return np.geomspace(self.r_min, self.r_max, int(round(decades * self.per_decade)) + 1)

    def refined(self, factor: int) -> "RadialSpec":
        return replace(self, per_decade=self.per_decade * factor)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    @property
    def dim(self) -> int:
        return len(self.center)

    def volume(self) -> float:
        return ball_volume(self.dim) * self.radius**self.dim


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(eq=False)
class GridField:
    spec: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    representation = "grid"

    def __post_init__(self):
        self.values = _frozen(self.values)
        if self.values.shape != (self.spec.n_points,) * self.spec.dim:
            raise ValueError(f"sample array has shape {self.values.shape}, expected {(self.spec.n_points,) * self.spec.dim}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid samples must be finite")

    @property
    def dim(self) -> int:
        return self.spec.dim

    def scaled(self, c: float) -> "GridField":
        return GridField(self.spec, c * self.values, dict(self.meta))

    def dilate(self, lam: float) -> "GridField":
        """f(lam x) on the matched grid of half-width L/lam (identical samples)."""
        spec = GridSpec(self.spec.dim, self.spec.half_width / lam, self.spec.n_points)
        return GridField(spec, self.values, dict(self.meta, dilation=lam))

    def total_integral(self) -> float:
        return float(self.values.sum() * self.spec.spacing**self.dim)


@dataclass(eq=False)
class RadialField:
    """Radial profile f(x) = g(|x|) in R^n.

    ``func`` is the exact profile when the field comes from a closed-form
    family; integrals then evaluate it instead of the interpolant. ``breaks``
    are radii where the profile may jump (always present among ``radii``).
    ``support`` is a radius beyond which the profile vanishes.
    """

    dim: int
    radii: np.ndarray
    values: np.ndarray
    func: Callable | None = None
    breaks: tuple = ()
    support: float | None = None
    head_slope: float | None = None
    tail_slope: float | None = None
    meta: dict = field(default_factory=dict)

    representation = "radial"

    def __post_init__(self):
        self.radii = _frozen(self.radii)
        self.values = _frozen(self.values)
        if self.radii.ndim != 1 or self.radii.shape != self.values.shape:
            raise ValueError("radii and values must be 1-D arrays of equal length")
        if len(self.radii) < 2 or self.radii[0] <= 0 or np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("radial samples must be finite")
        if self.head_slope is None:
            self.head_slope = _end_slope(self.radii[:2], self.values[:2])
        if self.tail_slope is None:
            self.tail_slope = _end_slope(self.radii[-2:], self.values[-2:])

    @classmethod
    def from_samples(cls, dim, radii, values, support=None, meta=None) -> "RadialField":
        return cls(dim, radii, values, support=support, meta=dict(meta or {}))

    # -- evaluation ---------------------------------------------------------
    @property
    def head_value(self) -> float:
        return float(self.values[0])

    @property
    def tail_vanishes(self) -> bool:
        return (self.support is not None and self.support <= self.radii[-1]) or self.values[-1] == 0

    def at(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        if self.func is not None:
            out = np.asarray(self.func(np.maximum(rho, 1e-300)), dtype=float) * np.ones_like(rho)
            if self.support is not None:
                out = np.where(rho > self.support, 0.0, out)
            return out
        return self._interp(rho)

    def _interp(self, rho: np.ndarray) -> np.ndarray:
        r, v = self.radii, self.values
        out = np.empty_like(rho)
        lo = rho < r[0]
        hi = rho > r[-1]
        mid = ~(lo | hi)
        out[lo] = v[0] * (rho[lo] / r[0]) ** self.head_slope
        if self.tail_vanishes:
            out[hi] = 0.0
        else:
            out[hi] = v[-1] * (rho[hi] / r[-1]) ** self.tail_slope
        x = rho[mid]
        k = np.clip(np.searchsorted(r, x, side="right") - 1, 0, len(r) - 2)
        r0, r1, v0, v1 = r[k], r[k + 1], v[k], v[k + 1]
        lin = v0 + (v1 - v0) * (x - r0) / (r1 - r0)
        pos = (v0 > 0) & (v1 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.log(np.where(pos, v1 / v0, 1.0)) / np.log(r1 / r0)
            loglog = v0 * (x / r0) ** m
        out[mid] = np.where(pos, loglog, lin)
        return out

    # -- transforms ---------------------------------------------------------
    def scaled(self, c: float) -> "RadialField":
        func = None if self.func is None else (lambda r, g=self.func: c * g(r))
        return replace(self, values=c * self.values, func=func, meta=dict(self.meta))

    def dilate(self, lam: float) -> "RadialField":
        """The field x -> f(lam x)."""
        func = None if self.func is None else (lambda r, g=self.func: g(lam * r))
        return RadialField(
            self.dim,
            self.radii / lam,
            self.values,
            func=func,
            breaks=tuple(b / lam for b in self.breaks),
            support=None if self.support is None else self.support / lam,
            head_slope=self.head_slope,
            tail_slope=self.tail_slope,
            meta=dict(self.meta, dilation=lam * self.meta.get("dilation", 1.0)),
        )

    # -- integration --------------------------------------------------------
    def _density(self, rho, p):
        return np.abs(self.at(rho)) ** p * sphere_area(self.dim) * rho ** (self.dim - 1)

    def _head_integral(self, radius, p):
        radius = np.asarray(radius, dtype=float)
        a = abs(self.head_value)
        if a == 0:
            return np.zeros_like(radius)
        e = self.head_slope * p + self.dim
        if e <= 0:
            return np.full_like(radius, np.inf)
        r0 = self.radii[0]
        return sphere_area(self.dim) * a**p * r0 ** (-self.head_slope * p) * radius**e / e

    def _tail_integral(self, radius, p):
        # mass of the power-law extension on (r_max, radius]
        radius = np.asarray(radius, dtype=float)
        if self.tail_vanishes:
            return np.zeros_like(radius)
        r1 = self.radii[-1]
        b = abs(self.values[-1])
        e = self.tail_slope * p + self.dim
        c = sphere_area(self.dim) * b**p * r1 ** (-self.tail_slope * p)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if abs(e) < 1e-12:
                return c * np.log(radius / r1)
            if np.all(np.isinf(radius)):
                return np.full_like(radius, np.inf if e > 0 else -c * r1**e / e)
            return c * (radius**e - r1**e) / e

    def _cumulative(self, p):
        key = ("cumulative", p)
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            r = self.radii
            half = 0.5 * (r[1:] - r[:-1])
            mid = 0.5 * (r[1:] + r[:-1])
            x = mid[:, None] + half[:, None] * _GL_X[None, :]
            seg = (self._density(x, p) * _GL_W[None, :]).sum(axis=1) * half
            head = float(self._head_integral(r[0], p))
            cache[key] = head + np.concatenate([[0.0], np.cumsum(seg)])
        return cache[key]

    def centered_integral(self, radius, p: float = 1.0):
        """int_{B(0,R)} |f|^p dx for each R in ``radius`` (vectorised)."""
        radius = np.atleast_1d(np.asarray(radius, dtype=float))
        r = self.radii
        cum = self._cumulative(p)
        out = np.empty_like(radius)
        lo = radius <= r[0]
        hi = radius > r[-1]
        mid = ~(lo | hi)
        out[lo] = self._head_integral(radius[lo], p)
        out[hi] = cum[-1] + self._tail_integral(radius[hi], p)
        R = radius[mid]
        k = np.clip(np.searchsorted(r, R, side="right") - 1, 0, len(r) - 2)
        a = r[k]
        half = 0.5 * (R - a)
        x = (a + half)[:, None] + half[:, None] * _GL_X[None, :]
        part = (self._density(x, p) * _GL_W[None, :]).sum(axis=1) * half
        out[mid] = cum[k] + part
        return out

    def total_integral(self, p: float = 1.0) -> float:
        return float(self.centered_integral([np.inf], p)[0])

    def shell_integral(self, center_norm, radius, p: float = 1.0):
        """int over B(a, r) minus the centred ball B(0, max(r - |a|, 0)) of |f|^p.

        Vectorised over matching arrays; uses the spherical-cap measure of each
        sphere |x| = rho inside the ball and a cosine-clustered Gauss rule.
        """
        a = np.atleast_1d(np.asarray(center_norm, dtype=float))
        r = np.atleast_1d(np.asarray(radius, dtype=float))
        lo = np.abs(a - r)
        hi = a + r
        cuts = [b for b in self.breaks]
        total = np.zeros_like(a)
        # split at breaks so jumps sit on sub-interval ends
        edges = [lo]
        for b in sorted(cuts):
            edges.append(np.clip(b, lo, hi))
        edges.append(hi)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            width = e1 - e0
            ok = width > 0
            if not np.any(ok):
                continue
            u = 0.5 * np.pi * (_CAP_U + 1.0)
            s = 0.5 * (1.0 - np.cos(u))
            rho = e0[ok, None] + width[ok, None] * s[None, :]
            jac = 0.5 * width[ok, None] * np.sin(u)[None, :] * 0.5 * np.pi
            frac = cap_fraction(rho, a[ok, None], r[ok, None], self.dim)
            val = self._density(rho, p) * frac * jac * _CAP_W[None, :]
            total[ok] += val.sum(axis=1)
        return total


def cap_fraction(rho, a, r, n):
    """Fraction of the sphere |x| = rho lying inside B(a, r), |a| = a > 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (rho**2 + a**2 - r**2) / (2.0 * rho * a)
    c = np.clip(np.nan_to_num(c, nan=1.0), -1.0, 1.0)
    if n == 1:
        return 0.5 * ((c < 1.0).astype(float) + (c < -1.0).astype(float))
    half = 0.5 * special.betainc((n - 1) / 2.0, 0.5, 1.0 - c**2)
    return np.where(c >= 0.0, half, 1.0 - half)


def _end_slope(r, v) -> float:
    if v[0] > 0 and v[1] > 0:
        return float(math.log(v[1] / v[0]) / math.log(r[1] / r[0]))
    if v[0] < 0 and v[1] < 0:
        return float(math.log(v[1] / v[0]) / math.log(r[1] / r[0]))
    return 0.0


# -- families ---------------------------------------------------------------
@dataclass(frozen=True)
class BallIndicator:
    center: tuple = (0.0,)
    radius: float = 1.0
    name = "ball-indicator"


@dataclass(frozen=True)
class PhiProfile:
    phi: object  # spaces.ShapeFunction
    name = "phi-profile"


@dataclass(frozen=True)
class Gaussian:
    sigma: float = 1.0
    name = "gaussian"


@dataclass(frozen=True)
class PowerBump:
    beta: float
    radius: float = 1.0
    name = "power-bump"


@dataclass(frozen=True)
class CustomTable:
    r: tuple
    values: tuple
    name = "custom-table"


def _family_profile(family, dim):
    """(func, breaks, support, head_slope, tail_slope) of a radial family."""
    if isinstance(family, BallIndicator):
        R = float(family.radius)
        return (lambda r: (r <= R).astype(float)), (R,), R, 0.0, 0.0
    if isinstance(family, Gaussian):
        s = float(family.sigma)
        return (lambda r: np.exp(-0.5 * (r / s) ** 2)), (), None, 0.0, 0.0
    if isinstance(family, PowerBump):
        if family.beta >= dim:
            raise DivergenceError(
                f"power bump |x|^-{family.beta} with beta >= n = {dim} has infinite mass near 0",
                endpoint="0",
            )
        b, R = float(family.beta), float(family.radius)
        return (lambda r: np.where(r <= R, r ** (-b), 0.0)), (R,), R, -b, 0.0
    if isinstance(family, PhiProfile):
        phi = family.phi
        return phi, (), None, phi.head_exponent, phi.tail_exponent
    raise TypeError(f"unsupported family {family!r}")


def build_field(family, spec) -> GridField | RadialField:
    """Sample a closed-form family on a grid (cell centres) or radial spec."""
    if isinstance(spec, RadialSpec):
        if isinstance(family, CustomTable):
            return RadialField(spec.dim, np.asarray(family.r), np.asarray(family.values),
                               meta={"family": family.name})
        if isinstance(family, BallIndicator) and any(c != 0 for c in family.center):
            raise ConfigError("radial fields need an origin-centred ball indicator")
        func, breaks, support, head, tail = _family_profile(family, spec.dim)
        radii = spec.radii()
        inside = [b for b in breaks if radii[0] < b < radii[-1]]
        radii = np.unique(np.concatenate([radii, inside]))
        return RadialField(
            spec.dim, radii, func(radii),
            func=func, breaks=tuple(inside), support=support,
            head_slope=head, tail_slope=tail,
            meta={"family": family.name, "params": _family_params(family)},
        )

    if not isinstance(spec, GridSpec):
        raise TypeError(f"unsupported spec {spec!r}")
    h = spec.spacing
    meta = {"family": family.name, "params": _family_params(family)}
    if isinstance(family, BallIndicator):
        c = np.zeros(spec.dim) if len(family.center) == 1 and spec.dim > 1 and family.center[0] == 0 else np.asarray(family.center, float)
        if c.shape != (spec.dim,):
            raise ConfigError(f"ball centre must have {spec.dim} coordinates")
        mesh = spec.mesh()
        dist = np.sqrt(sum((m - ci) ** 2 for m, ci in zip(mesh, c)))
        return GridField(spec, (dist <= family.radius).astype(float), meta)
    if isinstance(family, CustomTable):
        tab = RadialField(spec.dim, np.asarray(family.r), np.asarray(family.values))
        vals = tab.at(np.maximum(spec.radius_array(), 1e-300))
        return GridField(spec, vals, meta)
    func, _, support, head, _ = _family_profile(family, spec.dim)
    r = spec.radius_array()
    with np.errstate(divide="ignore"):
        vals = np.asarray(func(np.where(r == 0, 1.0, r)), dtype=float)
    if support is not None:
        vals = np.where(r > support, 0.0, vals)
    origin = (spec.center_index,) * spec.dim
    if head < 0:
        # singular profile: origin cell holds its average over B(0, h/2)
        e = head + spec.dim
        a = float(np.asarray(func(np.array([h / 2]))).ravel()[0])
        vals[origin] = a * spec.dim / e
    else:
        vals[origin] = float(np.asarray(func(np.array([1e-300]))).ravel()[0]) if head == 0 else 0.0
    return GridField(spec, vals, meta)


def _family_params(family) -> dict:
    if isinstance(family, PhiProfile):
        return {"phi": family.phi.to_dict()}
    if isinstance(family, CustomTable):
        return {}
    return {k: getattr(family, k) for k in family.__dataclass_fields__}


# -- ball integrals ---------------------------------------------------------
def grid_ball_weights(spec: GridSpec, ball: Ball):
    """Overlap fractions of the cells meeting ``ball``.

    Returns ``(slices, weights)``: a tuple of index slices into the sample
    array and the matching block of cell-overlap fractions. 1-D overlaps are
    exact; for n >= 2 boundary cells use 4 sub-samples per axis.
    """
    h = spec.spacing
    n = spec.dim
    ax = spec.axis()
    c = np.asarray(ball.center)
    r = ball.radius
    idx = []
    for d in range(n):
        i0 = max(int(math.floor((c[d] - r - ax[0]) / h)), 0)
        i1 = min(int(math.ceil((c[d] + r - ax[0]) / h)) + 1, spec.n_points)
        if i0 >= i1:
            raise EmptyIntersectionError(f"ball {ball} lies outside the grid domain")
        idx.append(slice(i0, i1))
    local = [ax[s] - c[d] for d, s in enumerate(idx)]
    w = overlap_weights(local, h, r)
    if not np.any(w > 0):
        raise EmptyIntersectionError(f"ball {ball} lies outside the grid domain")
    return tuple(idx), w


def overlap_weights(local_axes, h: float, r: float) -> np.ndarray:
    """Fraction of each cell (centres given relative to the ball centre) in B(0, r)."""
    n = len(local_axes)
    if n == 1:
        x = local_axes[0]
        return np.clip(np.minimum(x + h / 2, r) - np.maximum(x - h / 2, -r), 0.0, None) / h
    mesh = np.meshgrid(*local_axes, indexing="ij")
    dist = np.sqrt(sum(m**2 for m in mesh))
    reach = h * math.sqrt(n) / 2
    w = np.where(dist + reach <= r, 1.0, 0.0)
    edge = (dist + reach > r) & (dist - reach < r)
    if np.any(edge):
        sub = (np.arange(4) - 1.5) * h / 4
        pts = np.array(list(itertools.product(sub, repeat=n)))  # (4^n, n)
        centers = np.stack([m[edge] for m in mesh], axis=-1)  # (k, n)
        d2 = ((centers[:, None, :] + pts[None, :, :]) ** 2).sum(-1)
        w[edge] = (d2 < r * r).mean(axis=1)
    return w


def ball_integral(f, b: Ball, p: float = 1.0) -> float:
    """int_B |f|^p dx: overlap-weighted cell sums on grids, 1-D radial quadrature
    (plus spherical-cap shells for off-centre balls) on radial fields."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if b.dim != f.dim:
        if b.dim == 1 and b.center == (0.0,):
            b = Ball((0.0,) * f.dim, b.radius)
        else:
            raise ValueError(f"ball of dimension {b.dim} for a field in R^{f.dim}")
    if isinstance(f, GridField):
        sl, w = grid_ball_weights(f.spec, b)
        return float((np.abs(f.values[sl]) ** p * w).sum() * f.spec.spacing**f.dim)
    a = float(np.linalg.norm(b.center))
    inner = max(b.radius - a, 0.0)
    total = f.centered_integral([inner], p)[0] if inner > 0 else 0.0
    if a > 0:
        total += f.shell_integral([a], [b.radius], p)[0]
    return float(total)


def truncated_fraction(spec: GridSpec, b: Ball) -> float:
    """Fraction of the ball's volume lying outside the grid box."""
    try:
        _, w = grid_ball_weights(spec, b)
    except EmptyIntersectionError:
        return 1.0
    inside = w.sum() * spec.spacing**spec.dim
    return float(max(0.0, 1.0 - inside / b.volume()))


def lebesgue_norm(f, p: float) -> float:
    """||f||_{L^p}; infinite when the radial head or tail is not p-integrable."""
    if isinstance(f, GridField):
        return float((np.abs(f.values) ** p).sum() * f.spec.spacing**f.dim) ** (1.0 / p)
    return float(f.total_integral(p)) ** (1.0 / p)


# -- import / export --------------------------------------------------------
def save_field(f, path, fmt: str = "binary") -> Path:
    """Write ``<path>.json`` (header) plus ``<path>.bin`` or ``<path>.csv``.

    Binary payloads are little-endian float64 in C order; radial payloads hold
    the radii followed by the values.
    """
    path = Path(path)
    if fmt not in ("binary", "csv"):
        raise ValueError("fmt must be 'binary' or 'csv'")
    header = {"representation": f.representation, "dim": f.dim, "format": fmt,
              "byte_order": "little", "dtype": "float64"}
    if isinstance(f, GridField):
        header.update(half_width=f.spec.half_width, n_points=f.spec.n_points)
        payload = np.ascontiguousarray(f.values)
    else:
        header.update(n_radii=len(f.radii), support=f.support)
        payload = np.stack([f.radii, f.values])
    data = path.with_suffix(".bin" if fmt == "binary" else ".csv")
    header["data_file"] = data.name
    if fmt == "binary":
        data.write_bytes(payload.astype("<f8").tobytes(order="C"))
    else:
        rows = payload.reshape(-1, payload.shape[-1]) if payload.ndim > 1 else payload[None, :]
        if isinstance(f, RadialField):
            rows = payload.T
        np.savetxt(data, rows, delimiter=",", fmt="%.17g")
    head = path.with_suffix(".json")
    head.write_text(json.dumps(header, sort_keys=True, indent=2))
    return head


def load_field(header_path):
    header_path = Path(header_path)
    h = json.loads(header_path.read_text())
    data = header_path.parent / h["data_file"]
    if h["format"] == "binary":
        flat = np.frombuffer(data.read_bytes(), dtype="<f8")
    else:
        flat = np.loadtxt(data, delimiter=",", ndmin=2)
    if h["representation"] == "grid":
        spec = GridSpec(h["dim"], h["half_width"], h["n_points"])
        shape = (spec.n_points,) * spec.dim
        return GridField(spec, np.asarray(flat, dtype=float).reshape(shape))
    if h["format"] == "binary":
        arr = flat.reshape(2, h["n_radii"])
        radii, values = arr[0], arr[1]
    else:
        radii, values = flat[:, 0], flat[:, 1]
    return RadialField.from_samples(h["dim"], radii, values, support=h.get("support"))
