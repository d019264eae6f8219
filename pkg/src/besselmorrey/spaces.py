"""Morrey weights, their admissibility checks, exponent bookkeeping and
ball-search Morrey norms of sampled fields."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal

from .common import NormEstimate, ball_volume, dual_exponent
from .errors import ConfigError, DivergenceError, InfeasibleExponentError, InvalidShapeError
from .fields import Ball, GridField, RadialField, overlap_weights, truncated_fraction

_EXPONENT_TOL = 1e-3


@dataclass(frozen=True)
class ShapeFunction:
    """A Morrey weight phi: R+ -> R+.

    ``kind="power"`` is phi(r) = c * r^(-n/q) (q may be negative or inf for
    derived weights); ``kind="table"`` interpolates (r_i, phi_i) log-log and
    extends beyond the table by its end slopes.
    """

    kind: str
    dim: int
    q: float | None = None
    c: float = 1.0
    r: tuple | None = None
    phi: tuple | None = None

    def __post_init__(self):
        if self.kind == "power":
            if self.q is None or self.q == 0:
                raise InvalidShapeError("power-law weight needs a nonzero q")
            if not self.c > 0:
                raise InvalidShapeError("normalisation constant must be positive")
        elif self.kind == "table":
            r = np.asarray(self.r, dtype=float)
            v = np.asarray(self.phi, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
                raise InvalidShapeError("table needs matching 1-D radius and value lists")
            if np.any(r <= 0) or np.any(np.diff(r) <= 0):
                raise InvalidShapeError("tabulated radii must be positive and strictly increasing")
            if np.any(~(v > 0)) or not np.all(np.isfinite(v)):
                raise InvalidShapeError("tabulated phi must be finite and strictly positive")
            if r[-1] / r[0] < 1e4 * (1 - 1e-12):
                raise InvalidShapeError("tabulated radii must span at least four decades")
            object.__setattr__(self, "r", tuple(map(float, r)))
            object.__setattr__(self, "phi", tuple(map(float, v)))
        else:
            raise InvalidShapeError(f"unknown weight kind {self.kind!r}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def power(cls, q: float, dim: int, c: float = 1.0) -> "ShapeFunction":
        return cls("power", dim, q=float(q), c=float(c))

    @classmethod
    def classical(cls, q: float, dim: int) -> "ShapeFunction":
        """phi(r) = |B(0,r)|^(-1/q), which turns the weighted norm into the
        classical L^{p,q} norm sup |B|^(1/q - 1/p) ||f||_{L^p(B)}."""
        return cls.power(q, dim, c=ball_volume(dim) ** (-1.0 / q))

    @classmethod
    def table(cls, r, phi, dim: int) -> "ShapeFunction":
        return cls("table", dim, r=tuple(r), phi=tuple(phi))

    @classmethod
    def from_dict(cls, d: dict, dim: int) -> "ShapeFunction":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind == "power":
            q = d.pop("q")
            c = d.pop("c", 1.0)
            classical = d.pop("classical", False)
            if d:
                raise ConfigError(f"unknown keys in power weight: {sorted(d)}")
            q = math.inf if q in ("inf", "Infinity") else float(q)
            return cls.classical(q, dim) if classical else cls.power(q, dim, c)
        if kind == "table":
            r, phi = d.pop("r"), d.pop("phi")
            if d:
                raise ConfigError(f"unknown keys in table weight: {sorted(d)}")
            return cls.table(r, phi, dim)
        raise ConfigError(f"weight kind must be 'power' or 'table', got {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "q": "inf" if math.isinf(self.q) else self.q, "c": self.c}
        return {"kind": "table", "r": list(self.r), "phi": list(self.phi)}

    # -- evaluation ---------------------------------------------------------
    @property
    def exponent(self) -> float:
        """Power-law exponent -n/q (power kind only)."""
        return -self.dim / self.q

    @property
    def head_exponent(self) -> float:
        if self.kind == "power":
            return self.exponent
        r, v = self.r, self.phi
        return math.log(v[1] / v[0]) / math.log(r[1] / r[0])

    @property
    def tail_exponent(self) -> float:
        if self.kind == "power":
            return self.exponent
        r, v = self.r, self.phi
        return math.log(v[-1] / v[-2]) / math.log(r[-1] / r[-2])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return self.c * r**self.exponent
        lr = np.log(np.asarray(self.r))
        lv = np.log(np.asarray(self.phi))
        x = np.log(r)
        out = np.interp(x, lr, lv)
        out = np.where(x < lr[0], lv[0] + self.head_exponent * (x - lr[0]), out)
        out = np.where(x > lr[-1], lv[-1] + self.tail_exponent * (x - lr[-1]), out)
        return np.exp(out)

    def times_power(self, e: float) -> "ShapeFunction":
        """The weight r -> phi(r) r^e."""
        if self.kind == "power":
            new = self.exponent + e
            q = math.inf if abs(new) < 1e-15 else -self.dim / new
            return ShapeFunction.power(q, self.dim, self.c)
        r = np.asarray(self.r)
        return ShapeFunction.table(r, np.asarray(self.phi) * r**e, self.dim)

    def sample_range(self) -> tuple[float, float]:
        if self.kind == "table":
            return self.r[0], self.r[-1]
        return 1e-4, 1e4

    def describe(self) -> str:
        if self.kind == "power":
            q = "inf" if math.isinf(self.q) else f"{self.q:.6g}"
            return f"power(q={q},c={self.c:.6g})"
        return f"table({len(self.r)} pts,[{self.r[0]:.3g},{self.r[-1]:.3g}])"


# -- exponents --------------------------------------------------------------
@dataclass(frozen=True)
class ExponentSolution:
    p2: float
    q2: float | None
    t_dual: float
    s_dual: float


def solve_exponents(p1: float, s: float, q1: float | None, t: float) -> ExponentSolution:
    """Solve 1/p2 = 1/p1 - 1/s' and (when q1 is given) 1/q2 = 1/q1 - 1/t'."""
    if p1 < 1:
        raise InfeasibleExponentError(f"need p1 >= 1, got {p1}")
    if s < 1 or t < 1:
        raise InfeasibleExponentError(f"need s >= 1 and t >= 1, got s={s}, t={t}")
    s_dual = dual_exponent(s)
    t_dual = dual_exponent(t)
    inv_p2 = 1.0 / p1 - 1.0 / s_dual
    if inv_p2 <= 0:
        raise InfeasibleExponentError(
            f"1/p2 = 1/p1 - 1/s' = 1/{p1} - 1/{s_dual:.6g} <= 0: need p1 < s'"
        )
    q2 = None
    if q1 is not None:
        inv_q2 = 1.0 / q1 - 1.0 / t_dual
        if inv_q2 < -1e-14:
            raise InfeasibleExponentError(
                f"1/q2 = 1/q1 - 1/t' = 1/{q1} - 1/{t_dual:.6g} < 0: need q1 <= t'"
            )
        # q1 = t' is the endpoint with a constant target weight
        q2 = math.inf if inv_q2 <= 1e-14 else 1.0 / inv_q2
    return ExponentSolution(1.0 / inv_p2, q2, t_dual, s_dual)


# -- class G_p --------------------------------------------------------------
@dataclass
class ClassGpReport:
    almost_decreasing: float
    almost_increasing: float
    doubling: float
    passed: bool
    cap: float
    method: str


def check_class_gp(phi: ShapeFunction, p: float, cap: float = 100.0,
                   per_decade: int = 64, method: str = "auto") -> ClassGpReport:
    """Constants of the class-G_p conditions.

    ``almost_decreasing`` is sup_{r<=s} phi(s)/phi(r), ``almost_increasing`` is
    sup_{r<=s} g(r)/g(s) for g = phi^p r^n, ``doubling`` is the largest ratio
    phi(r)/phi(s) or its inverse with 1 <= r/s <= 2. For power laws the values
    are exact; otherwise suprema over a logarithmic lattice.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    n = phi.dim
    if method == "auto":
        method = "exact" if phi.kind == "power" else "lattice"
    if method == "exact":
        if phi.kind != "power":
            raise ValueError("exact constants need a power-law weight")
        e = phi.exponent
        ad = 1.0 if e <= 0 else math.inf
        ai = 1.0 if p * e + n >= 0 else math.inf
        db = 2.0 ** abs(e)
        return ClassGpReport(ad, ai, db, ad <= cap and ai <= cap, cap, method)

    lo, hi = phi.sample_range()
    m = int(round(math.log10(hi / lo) * per_decade)) + 1
    r = np.geomspace(lo, hi, m)
    v = phi(r)
    ad = float(np.max(v / np.minimum.accumulate(v)))
    g = v**p * r**n
    ai = float(np.max(g / np.minimum.accumulate(g[::-1])[::-1]))
    k = int(math.floor(math.log(2.0) / math.log(r[1] / r[0]) + 1e-9))
    db = 1.0
    for j in range(1, k + 1):
        ratio = v[j:] / v[:-j]
        db = max(db, float(ratio.max()), float((1.0 / ratio).max()))
    return ClassGpReport(ad, ai, db, ad <= cap and ai <= cap, cap, method)


# -- integral conditions ----------------------------------------------------
@dataclass
class IntegralConditionReport:
    which: str
    constant: float
    passed: bool
    method: str
    radii: tuple = ()


def _condition_powers(which, n, t_dual, p1, s_dual):
    # integrand phi^a r^b; comparison phi(R)^a R^(b+1)
    if which == "i":
        if t_dual is None:
            raise ValueError("condition (i) needs t_dual")
        return 1.0, (0.0 if math.isinf(t_dual) else n / t_dual) - 1.0, "upper"
    if which == "ii":
        if p1 is None:
            raise ValueError("condition (ii) needs p1")
        return float(p1), n - 1.0, "lower"
    if which == "iii":
        if s_dual is None:
            raise ValueError("condition (iii) needs s_dual")
        return -float(s_dual), n - 1.0 - n * s_dual, "lower"
    raise ValueError(f"condition must be 'i', 'ii' or 'iii', got {which!r}")


def check_integral_condition(which: str, phi: ShapeFunction, n: int | None = None,
                             t_dual: float | None = None, p1: float | None = None,
                             s_dual: float | None = None, method: str = "auto",
                             per_decade: int = 16) -> IntegralConditionReport:
    """Best constant C in one of the weight conditions

    (i)   int_R^inf phi(r) r^(n/t'-1) dr     <= C phi(R) R^(n/t')
    (ii)  int_0^R phi(r)^p1 r^(n-1) dr       <= C phi(R)^p1 R^n
    (iii) int_0^R phi(r)^-s' r^(n-1-ns') dr  <= C phi(R)^-s' R^(n-ns')

    as the supremum over sampled R of LHS/RHS. Power laws use the
    antiderivative unless ``method="quadrature"``; divergent integrals raise
    DivergenceError naming the endpoint.
    """
    n = phi.dim if n is None else n
    a, b, side = _condition_powers(which, n, t_dual, p1, s_dual)
    if method == "auto":
        method = "antiderivative" if phi.kind == "power" else "quadrature"

    head_k = a * phi.head_exponent + b + 1.0
    tail_k = a * phi.tail_exponent + b + 1.0
    if side == "upper" and tail_k >= 0:
        raise DivergenceError(f"condition ({which}): integral diverges at infinity", endpoint="infinity")
    if side == "lower" and head_k <= 0:
        raise DivergenceError(f"condition ({which}): integral diverges at 0", endpoint="0")

    if method == "antiderivative":
        if phi.kind != "power":
            raise ValueError("antiderivative constants need a power-law weight")
        k = head_k
        const = 1.0 / (-k) if side == "upper" else 1.0 / k
        return IntegralConditionReport(which, const, math.isfinite(const), method)

    lo, hi = phi.sample_range()
    m = int(round(math.log10(hi / lo) * per_decade)) + 1
    R = np.geomspace(lo, hi, m)

    def g(r):
        return phi(r) ** a * r**b

    # integrate in log r between lattice points; tails are pure powers
    pieces = np.array([
        integrate.quad(lambda u: float(g(math.exp(u))) * math.exp(u), math.log(R[i]), math.log(R[i + 1]),
                       epsabs=0.0, epsrel=1e-12)[0]
        for i in range(m - 1)
    ])
    if side == "upper":
        tail = float(g(R[-1])) * R[-1] / (-tail_k)
        lhs = tail + np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    else:
        head = float(g(R[0])) * R[0] / head_k
        lhs = head + np.concatenate([[0.0], np.cumsum(pieces)])
    rhs = phi(R) ** a * R ** (b + 1.0)
    const = float(np.max(lhs / rhs))
    return IntegralConditionReport(which, const, math.isfinite(const), "quadrature", (lo, hi))


def derive_shapes(phi: ShapeFunction, t_dual: float, n: int | None = None):
    """(psi, rho) with psi(r) = phi(r) r^(n/t') and rho(r) = phi(r) r^n."""
    n = phi.dim if n is None else n
    shift = 0.0 if math.isinf(t_dual) else n / t_dual
    return phi.times_power(shift), phi.times_power(float(n))


# -- Morrey norms -----------------------------------------------------------
@dataclass(frozen=True)
class BallLattice:
    """Ball-search lattice.

    Grid fields: centres on every ``center_stride``-th grid point (always
    including the origin cell), radii geometric with ``radius_ratio`` from one
    cell to the domain half-width. Radial fields: radii geometric over the
    profile range, plus centres at ``offsets`` x radius along one ray.
    """

    center_stride: int = 4
    radius_ratio: float = 2.0 ** 0.25
    offsets: tuple = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0)
    extend_octaves: int = 20

    def coarser(self) -> "BallLattice":
        return BallLattice(self.center_stride * 2, self.radius_ratio**2, self.offsets[1::2], self.extend_octaves)

    def finer(self) -> "BallLattice":
        extra = tuple(sorted(set(self.offsets) | {0.125, 0.375, 0.625, 0.875, 1.25, 1.75, 3.0, 6.0}))
        return BallLattice(max(self.center_stride // 2, 1), math.sqrt(self.radius_ratio), extra, self.extend_octaves)


def _geometric(lo, hi, ratio):
    m = int(math.floor(math.log(hi / lo) / math.log(ratio) + 1e-9)) + 1
    return lo * ratio ** np.arange(m)


def _stencil(spec, radius):
    m = int(math.ceil(radius / spec.spacing + 0.5))
    axis = (np.arange(2 * m + 1) - m) * spec.spacing
    return overlap_weights([axis] * spec.dim, spec.spacing, radius)


def _grid_search(f: GridField, p, phi, lattice: BallLattice):
    spec = f.spec
    h = spec.spacing
    n = spec.dim
    power = np.abs(f.values) ** p
    radii = _geometric(h, spec.half_width, lattice.radius_ratio)
    c = spec.center_index
    idx = np.arange(c % lattice.center_stride, spec.n_points, lattice.center_stride)
    sel = np.ix_(*([idx] * n))
    best, arg = 0.0, None
    for r in radii:
        st = _stencil(spec, r)
        mass = signal.fftconvolve(power, st, mode="same")[sel] * h**n
        mass = np.clip(mass, 0.0, None)
        vals = (mass / (ball_volume(n) * r**n)) ** (1.0 / p) / float(phi(r))
        k = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[k] > best:
            best = float(vals[k])
            arg = (tuple(float(spec.axis()[idx[i]]) for i in k), float(r))
    return best, arg, len(radii), len(idx) ** n


def _radial_asymptotic_divergence(f: RadialField, p, phi) -> str | None:
    # sign of the power of R governing the Morrey functional as R -> 0 / inf
    n = f.dim
    if f.head_value != 0:
        if f.head_slope * p + n <= 0:
            return "ball integral diverges at the origin"
        if f.head_slope - phi.head_exponent < -_EXPONENT_TOL:
            return "supremum blows up as R -> 0"
    if f.tail_vanishes:
        grow = -n / p - phi.tail_exponent
    else:
        e = f.tail_slope * p + n
        grow = f.tail_slope - phi.tail_exponent if e > _EXPONENT_TOL * p else -n / p - phi.tail_exponent
    if grow > _EXPONENT_TOL:
        return "supremum blows up as R -> infinity"
    return None


def _radial_search(f: RadialField, p, phi, lattice: BallLattice):
    n = f.dim
    r0, r1 = f.radii[0], f.radii[-1]
    main = _geometric(r0, r1, lattice.radius_ratio)
    main = np.unique(np.concatenate([main, [b for b in f.breaks if r0 < b < r1]]))
    k = np.arange(1, 4 * lattice.extend_octaves + 1)
    ext = np.concatenate([r0 * 2.0 ** (-k[::-1] / 4), main, r1 * 2.0 ** (k / 4)])
    vol = ball_volume(n)
    cent = f.centered_integral(ext, p)
    vals = (np.clip(cent, 0, None) / (vol * ext**n)) ** (1.0 / p) / phi(ext)
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), ((0.0,) * n, float(ext[i]))
    if lattice.offsets:
        rr, kk = np.meshgrid(main, np.asarray(lattice.offsets), indexing="ij")
        rr, aa = rr.ravel(), (rr * kk).ravel()
        inner = np.clip(rr - aa, 0.0, None)
        mass = np.where(inner > 0, f.centered_integral(np.where(inner > 0, inner, 1.0), p), 0.0)
        mass = mass + f.shell_integral(aa, rr, p)
        ov = (np.clip(mass, 0, None) / (vol * rr**n)) ** (1.0 / p) / phi(rr)
        j = int(np.argmax(ov))
        if ov[j] > best:
            best, arg = float(ov[j]), ((float(aa[j]),) + (0.0,) * (n - 1), float(rr[j]))
    return best, arg, len(ext), 1 + len(lattice.offsets)


def morrey_norm(f, p: float, phi: ShapeFunction, lattice: BallLattice | None = None,
                indicator: bool = True) -> NormEstimate:
    """sup over balls B(a, r) of phi(r)^-1 (|B|^-1 int_B |f|^p)^(1/p) by ball search.

    Weights that vanish at 0 (or any head/tail exponent imbalance making the
    functional grow without bound) give +inf with method "closed-form".
    The error indicator is the relative gap to a 2x coarser lattice.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if phi.dim != f.dim:
        raise ValueError(f"weight is for R^{phi.dim}, field lives in R^{f.dim}")
    lattice = lattice or BallLattice()
    if not np.any(f.values != 0) and (not isinstance(f, RadialField) or f.head_value == 0):
        return NormEstimate(0.0, "closed-form", discretization={"reason": "zero field"})
    if isinstance(f, RadialField):
        why = _radial_asymptotic_divergence(f, p, phi)
        if why:
            return NormEstimate(math.inf, "closed-form", discretization={"divergence": why})
        search = _radial_search
    elif isinstance(f, GridField):
        if phi.head_exponent > _EXPONENT_TOL:
            return NormEstimate(math.inf, "closed-form",
                                discretization={"divergence": "weight vanishes at 0: supremum blows up as R -> 0"})
        search = _grid_search
    else:
        raise TypeError(f"unsupported field {f!r}")
    best, arg, n_radii, n_centers = search(f, p, phi, lattice)
    if not n_radii or not n_centers:
        raise ConfigError("empty ball-search lattice")
    err = 0.0
    if indicator:
        coarse, *_ = search(f, p, phi, lattice.coarser())
        err = abs(best - coarse) / best if best > 0 else 0.0
    disc = {"representation": f.representation, "radius_ratio": lattice.radius_ratio,
            "n_radii": n_radii, "n_centers": n_centers}
    if isinstance(f, GridField):
        disc.update(center_stride=lattice.center_stride, grid=[f.spec.half_width, f.spec.n_points],
                    truncation=truncated_fraction(f.spec, Ball(arg[0], arg[1])))
    else:
        disc.update(offsets=list(lattice.offsets), radial=[float(f.radii[0]), float(f.radii[-1]), len(f.radii)])
    return NormEstimate(best, "ball-search", argmax_ball=arg, discretization=disc, error_indicator=err)


def classical_morrey_norm(f, p: float, q: float, **kw) -> NormEstimate:
    """||f||_{L^{p,q}} = sup |B|^(1/q - 1/p) ||f||_{L^p(B)}."""
    return morrey_norm(f, p, ShapeFunction.classical(q, f.dim), **kw)
