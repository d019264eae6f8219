"""Inequality checks for Bessel-Riesz operators between (generalized) Morrey spaces.

Every check extracts the best empirical constant over a finite corpus of test
functions rather than assuming a value for the constants in the inequalities.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .common import NormEstimate, dual_exponent
from .errors import DivergenceError, InfeasibleExponentError
from .fields import (BallIndicator, Gaussian, PhiProfile, PowerBump, RadialField, RadialSpec,
                     build_field, lebesgue_norm)
from .kernel import (KernelParams, kernel_lebesgue_norm, riesz_morrey_closed_form, sampled_kernel)
from .operator import potential
from .spaces import (BallLattice, ShapeFunction, check_class_gp, check_integral_condition,
                     classical_morrey_norm, derive_shapes, morrey_norm, solve_exponents)

DILATION_SCALES = (0.25, 1.0, 4.0)


@dataclass(frozen=True)
class Discretization:
    radial: RadialSpec
    eval_per_decade: int = 64
    lattice: BallLattice = field(default_factory=BallLattice)

    @classmethod
    def default(cls, dim: int, refine: int = 1) -> "Discretization":
        return cls(RadialSpec(dim, per_decade=512 * refine), 64 * refine)

    def refined(self, factor: int = 2) -> "Discretization":
        return Discretization(self.radial.refined(factor), self.eval_per_decade * factor, self.lattice)

    def describe(self) -> dict:
        r = self.radial
        return {"r_min": r.r_min, "r_max": r.r_max, "per_decade": r.per_decade,
                "eval_per_decade": self.eval_per_decade,
                "radius_ratio": self.lattice.radius_ratio, "offsets": list(self.lattice.offsets)}


@dataclass
class BoundReport:
    """One inequality instance: lhs <= constant * rhs, with per-function detail."""

    theorem: str
    params: dict
    lhs: float
    rhs: float
    constant: float
    verdict: str
    members: list = field(default_factory=list)
    hypotheses: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.lhs >= 0 and self.rhs >= 0):
            raise ValueError("lhs and rhs must be nonnegative")
        if self.verdict not in ("pass", "fail"):
            raise ValueError(f"verdict must be pass or fail, got {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


def _member(name, lhs, rhs, ratio, verdict, note=""):
    return {"test_function": name, "lhs": float(lhs), "rhs": float(rhs),
            "ratio": float(ratio), "verdict": verdict, "note": note}


def _params(k: KernelParams, **kw) -> dict:
    out = {"n": k.dim, "alpha": k.alpha, "gamma": k.gamma}
    for key in ("p1", "p2", "q1", "q2", "s", "t", "phi"):
        out[key] = kw.get(key)
    return out


# -- corpus ---------------------------------------------------------------
def default_corpus(dim: int, phi: ShapeFunction | None, spec: RadialSpec | None = None) -> list[RadialField]:
    """Ball indicators at three scales (the dilation subfamily), a Gaussian,
    a power bump |x|^(-n/4) on B(0,1), and f0 = phi(|x|) when phi is given."""
    spec = spec or RadialSpec(dim)
    out = []
    for lam in DILATION_SCALES:
        f = build_field(BallIndicator((0.0,), lam), spec)
        f.meta.update(name=f"ball-{lam:g}", dilation_family=True, scale=lam)
        out.append(f)
    g = build_field(Gaussian(1.0), spec)
    g.meta.update(name="gaussian-1")
    out.append(g)
    b = build_field(PowerBump(dim / 4.0, 1.0), spec)
    b.meta.update(name=f"power-bump-{dim / 4.0:g}")
    out.append(b)
    if phi is not None:
        out.append(f0_field(phi, spec))
    return out


def f0_field(phi: ShapeFunction, spec: RadialSpec) -> RadialField:
    f = build_field(PhiProfile(phi), spec)
    f.meta.update(name="f0")
    return f


def _name(f, i):
    return f.meta.get("name", f"field-{i}")


def _spread(values) -> float:
    v = [x for x in values if x > 0]
    if not v:
        return math.nan
    if any(math.isinf(x) for x in v):
        return math.inf
    return max(v) / min(v)


# -- kernel norms ---------------------------------------------------------
def kernel_morrey_norm(k: KernelParams, s: float, t: float,
                       disc: Discretization | None = None) -> NormEstimate:
    """||K||_{L^{s,t}} (classical normalisation): closed form for the Riesz
    kernel at t = n/(n-alpha), ball search on the sampled kernel otherwise."""
    if k.gamma == 0 and math.isclose(t, k.critical_t, rel_tol=1e-12) and s < t:
        return NormEstimate(riesz_morrey_closed_form(k.alpha, s, k.dim), "closed-form")
    disc = disc or Discretization.default(k.dim)
    return classical_morrey_norm(sampled_kernel(k, disc.radial), s, t, lattice=disc.lattice)


# -- Young ----------------------------------------------------------------
def young_ratio(f: RadialField, k: KernelParams, p: float, t: float, delta: float = 0.05,
                disc: Discretization | None = None, max_refine: int = 1) -> BoundReport:
    """||I f||_q <= ||K||_t ||f||_p with 1/q = 1/p - 1/t'.

    Passes iff lhs <= (1 + delta) rhs; a violation at the base level is
    re-checked on a 2x refined discretization before it counts.
    """
    if k.gamma <= 0:
        raise InfeasibleExponentError("Young's inequality needs gamma > 0 (K in some L^t)")
    t_dual = dual_exponent(t)
    if not 1 <= p < t_dual:
        raise InfeasibleExponentError(f"need 1 <= p < t' = {t_dual:.6g}, got p = {p}")
    q = 1.0 / (1.0 / p - 1.0 / t_dual)
    disc = disc or Discretization.default(k.dim)
    name = _name(f, 0)
    knorm = kernel_lebesgue_norm(k, t).value
    params = _params(k, p1=p, p2=q, t=t)
    fp = lebesgue_norm(f, p)
    rhs = knorm * fp
    hyp = {"admissible_t": k.lower_t < t < k.critical_t, "p_below_t_dual": True}
    if fp == 0:
        m = _member(name, 0.0, 0.0, 0.0, "pass", "zero field")
        return BoundReport("young", params, 0.0, 0.0, 0.0, "pass", [m], hyp)
    if math.isinf(fp):
        m = _member(name, math.inf, math.inf, 0.0, "pass", f"f not in L^{p:g}: inequality is vacuous")
        return BoundReport("young", params, 0.0, 0.0, 0.0, "pass", [m], hyp, {"vacuous": True})
    level, cur = 0, f
    while True:
        If = potential(cur, k, disc.eval_per_decade * 2**level)
        lhs = lebesgue_norm(If, q)
        ratio = lhs / rhs
        if ratio <= 1 + delta or level >= max_refine or cur.func is None:
            break
        level += 1
        cur = build_field_like(f, disc.radial.refined(2**level))
    verdict = "pass" if ratio <= 1 + delta else "fail"
    m = _member(name, lhs, rhs, ratio, verdict)
    return BoundReport("young", params, lhs, rhs, ratio, verdict, [m], hyp,
                       {"q": q, "kernel_Lt_norm": knorm, "f_Lp_norm": fp, "delta": delta, "refine_level": level})


def build_field_like(f: RadialField, spec: RadialSpec) -> RadialField:
    """Rebuild a closed-form radial field on another radial spec."""
    radii = spec.radii()
    inside = [b for b in f.breaks if radii[0] < b < radii[-1]]
    radii = np.unique(np.concatenate([radii, inside]))
    return RadialField(f.dim, radii, f.func(radii) * (1 if f.support is None else (radii <= f.support)),
                       func=f.func, breaks=f.breaks, support=f.support,
                       head_slope=f.head_slope, tail_slope=f.tail_slope, meta=dict(f.meta))


def young_corpus_report(corpus, k: KernelParams, p: float, t: float, delta: float = 0.05,
                        disc: Discretization | None = None) -> BoundReport:
    reps = [young_ratio(f, k, p, t, delta, disc) for f in corpus]
    members = []
    for i, (f, r) in enumerate(zip(corpus, reps)):
        m = dict(r.members[0], test_function=_name(f, i))
        members.append(m)
    worst = max(range(len(reps)), key=lambda i: reps[i].constant)
    verdict = "pass" if all(r.passed for r in reps) else "fail"
    w = reps[worst]
    return BoundReport("young", w.params, w.lhs, w.rhs, w.constant, verdict, members, w.hypotheses,
                       {"delta": delta, "q": w.params["p2"]})


# -- hypotheses -----------------------------------------------------------
def _condition(which, phi, **kw):
    try:
        rep = check_integral_condition(which, phi, **kw)
        return {"constant": rep.constant, "holds": bool(rep.passed)}
    except DivergenceError as exc:
        return {"constant": math.inf, "holds": False, "reason": str(exc)}


def _ranges(k, p1, s, t, strict_s: bool):
    crit = math.isclose(t, k.critical_t, rel_tol=1e-12)
    s_ok = (s > 1) if strict_s else (s >= 1)
    riesz_branch = crit and s_ok and s < t
    bessel_branch = k.gamma > 0 and s_ok and s <= t and k.lower_t < t < k.critical_t
    return {
        "p1_below_n_over_alpha": p1 < k.dim / k.alpha,
        "s_t_range": bool(riesz_branch or bessel_branch),
        "s_t_branch": "t = n/(n-alpha), s < t" if riesz_branch else ("gamma > 0, s <= t" if bessel_branch else "none"),
    }


# -- generalized Morrey upper bound ----------------------------------------
def _ratio_pair(f, k, p1, p2, phi, psi, disc):
    """(||I f||_{p2,psi}, ||f||_{p1,phi}, note)."""
    fn = morrey_norm(f, p1, phi, lattice=disc.lattice, indicator=False).value
    if fn == 0:
        return 0.0, 0.0, "zero field"
    try:
        If = potential(f, k, disc.eval_per_decade)
    except DivergenceError as exc:
        return math.inf, fn, f"I f is infinite: {exc}"
    In = morrey_norm(If, p2, psi, lattice=disc.lattice, indicator=False).value
    return In, fn, ""


def theorem_report(corpus, k: KernelParams, p1: float, s: float, t: float, phi: ShapeFunction,
                   q1: float | None = None, disc: Discretization | None = None) -> BoundReport:
    """Empirical constant of ||I f||_{L^{p2,psi}} <= C ||K||_{L^{s,t}} ||f||_{L^{p1,phi}}.

    psi(r) = phi(r) r^(n/t'), 1/p2 = 1/p1 - 1/s'. For a power-law phi this is the
    classical Morrey-to-Morrey bound with 1/q2 = 1/q1 - 1/t'. The hypotheses are
    evaluated and reported; the verdict asks for a finite maximum ratio that is
    stable (spread < 2) across the dilation subfamily.
    """
    if phi.kind == "power" and q1 is None and not math.isinf(phi.q):
        q1 = phi.q
    sol = solve_exponents(p1, s, q1, t)
    psi, _ = derive_shapes(phi, sol.t_dual)
    disc = disc or Discretization.default(k.dim)
    gp = check_class_gp(phi, p1)
    hyp = {"class_gp": gp.passed, "condition_i": _condition("i", phi, t_dual=sol.t_dual)}
    hyp.update(_ranges(k, p1, s, t, strict_s=False))
    knorm = kernel_morrey_norm(k, s, t, disc).value
    members, dil = [], []
    for i, f in enumerate(corpus):
        In, fn, note = _ratio_pair(f, k, p1, sol.p2, phi, psi, disc)
        rhs = knorm * fn
        ratio = 0.0 if fn == 0 else (In / rhs if rhs > 0 else math.inf)
        members.append(_member(_name(f, i), In, rhs, ratio, "pass" if math.isfinite(ratio) else "fail", note))
        if f.meta.get("dilation_family"):
            dil.append(ratio)
    j = max(range(len(members)), key=lambda i: members[i]["ratio"]) if members else None
    const = members[j]["ratio"] if members else 0.0
    spread = _spread(dil)
    stable = (not dil) or (math.isfinite(spread) and spread < 2.0)
    verdict = "pass" if math.isfinite(const) and stable else "fail"
    return BoundReport(
        "generalized-morrey",
        _params(k, p1=p1, p2=sol.p2, q1=q1, q2=sol.q2, s=s, t=t, phi=phi.describe()),
        members[j]["lhs"] if members else 0.0, members[j]["rhs"] if members else 0.0,
        const, verdict, members,
        hyp | {"all": bool(gp.passed and hyp["condition_i"]["holds"] and hyp["s_t_range"] and hyp["p1_below_n_over_alpha"])},
        {"kernel_st_norm": knorm, "dilation_spread": spread, "instance": "power-law" if phi.kind == "power" else "general",
         "psi": psi.describe(), "discretization": disc.describe()},
    )


# -- two-sided estimate ----------------------------------------------------
def _f0_bracket(phi, p1, n):
    gp = check_class_gp(phi, p1)
    c2 = _condition("ii", phi, p1=p1)["constant"]
    A, D = gp.almost_decreasing, gp.doubling
    kappa = max(A * A * D, A * 3.0 ** (n / p1) * (n * c2) ** (1.0 / p1))
    return 1.0 / kappa, kappa


def lower_bound_f0(phi: ShapeFunction, k: KernelParams, p1: float, p2: float, s: float, t: float,
                   disc: Discretization | None = None) -> BoundReport:
    """Operator-norm lower bound from the test function f0(x) = phi(|x|).

    Reports ratio0 = ||I f0||_{p2,psi} / ||f0||_{p1,phi}, the measured
    ||f0||_{p1,phi} with its class-G bracket, the pointwise constant c with
    I f0 >= c rho(|x|) K(x) on the sampled radii, ||rho K||_{p2,psi} and
    ||K||_{L^{p1,t}}.
    """
    n = k.dim
    sol = solve_exponents(p1, s, None, t)
    if not math.isclose(sol.p2, p2, rel_tol=1e-9):
        raise InfeasibleExponentError(f"p2 = {p2} does not satisfy 1/p2 = 1/p1 - 1/s' (expected {sol.p2:.12g})")
    c3 = check_integral_condition("iii", phi, s_dual=sol.s_dual)  # raises on divergence
    psi, rho = derive_shapes(phi, sol.t_dual)
    disc = disc or Discretization.default(n)
    f0 = f0_field(phi, disc.radial)
    f0n = morrey_norm(f0, p1, phi, lattice=disc.lattice)
    lo, hi = _f0_bracket(phi, p1, n)
    note = ""
    try:
        If0 = potential(f0, k, disc.eval_per_decade)
        In = morrey_norm(If0, p2, psi, lattice=disc.lattice, indicator=False).value
        rk = rho(If0.radii) * np.asarray([float(v) for v in sampled_kernel(k).at(If0.radii)])
        pointwise_c = float(np.min(If0.values / rk))
    except DivergenceError as exc:
        If0, In, pointwise_c, note = None, math.inf, math.inf, f"I f0 is infinite: {exc}"
    ratio0 = In / f0n.value
    rhoK = sampled_kernel(k, disc.radial)
    rhoK = RadialField(n, rhoK.radii, rho(rhoK.radii) * rhoK.values,
                       func=lambda r, g=rhoK.func: rho(r) * g(r),
                       head_slope=rhoK.head_slope + rho.head_exponent,
                       tail_slope=rhoK.tail_slope + rho.tail_exponent)
    rhoK_norm = morrey_norm(rhoK, p2, psi, lattice=disc.lattice, indicator=False).value
    k_p1t = kernel_morrey_norm(k, p1, t, disc).value
    chain_c = rhoK_norm / ratio0 if ratio0 > 0 and math.isfinite(ratio0) else math.nan
    hyp = {
        "condition_i": _condition("i", phi, t_dual=sol.t_dual),
        "condition_ii": _condition("ii", phi, p1=p1),
        "condition_iii": {"constant": c3.constant, "holds": c3.passed},
        "rho_almost_increasing": check_class_gp(phi, 1.0).almost_increasing < 100.0,
        "class_gp": check_class_gp(phi, p1).passed,
    }
    verdict = "pass" if (0 < ratio0 < math.inf and lo <= f0n.value <= hi) else "fail"
    return BoundReport(
        "f0-lower-bound",
        _params(k, p1=p1, p2=p2, s=s, t=t, phi=phi.describe()),
        In, f0n.value, ratio0, verdict,
        [_member("f0", In, f0n.value, ratio0, verdict, note)],
        hyp,
        {"f0_norm": f0n.value, "f0_bracket": [lo, hi], "pointwise_c": pointwise_c,
         "rhoK_norm": rhoK_norm, "chain_c": chain_c, "kernel_p1t_norm": k_p1t,
         "lower_ratio_over_kernel": ratio0 / k_p1t if k_p1t > 0 else math.nan,
         "potential": None if If0 is None else {"r": If0.radii.tolist(), "value": If0.values.tolist()}},
    )


def two_sided_report(phi: ShapeFunction, k: KernelParams, p1: float, s: float, t: float, corpus,
                     q1: float | None = None, disc: Discretization | None = None) -> BoundReport:
    """C4 ||K||_{L^{p1,t}} <= ||I||_{L^{p1,phi} -> L^{p2,psi}} <= C5 ||K||_{L^{s,t}}.

    The operator norm is estimated by the largest ratio over corpus and f0;
    C4 and C5 are that estimate divided by the two kernel norms.
    """
    if phi.kind == "power" and q1 is None and not math.isinf(phi.q):
        q1 = phi.q
    sol = solve_exponents(p1, s, q1, t)
    disc = disc or Discretization.default(k.dim)
    psi, _ = derive_shapes(phi, sol.t_dual)
    low = lower_bound_f0(phi, k, p1, sol.p2, s, t, disc)
    k_st = kernel_morrey_norm(k, s, t, disc).value
    k_p1t = low.extra["kernel_p1t_norm"]
    members, dil = [], []
    for i, f in enumerate(corpus):
        if f.meta.get("name") == "f0":
            continue
        In, fn, note = _ratio_pair(f, k, p1, sol.p2, phi, psi, disc)
        ratio = 0.0 if fn == 0 else In / fn
        members.append(_member(_name(f, i), In, fn, ratio, "pass" if math.isfinite(ratio) else "fail", note))
        if f.meta.get("dilation_family"):
            dil.append(ratio)  # C4 and C5 differ from these by fixed factors
    members.append(dict(low.members[0]))
    norm_est = max(m["ratio"] for m in members)
    c4 = norm_est / k_p1t if k_p1t > 0 else math.inf
    c5 = norm_est / k_st if k_st > 0 else math.inf
    spread = _spread(dil)
    stable = (not dil) or (math.isfinite(spread) and spread < 2.0)
    ok = all(math.isfinite(c) and c > 0 for c in (c4, c5)) and stable
    hyp = dict(low.hypotheses)
    hyp.update(_ranges(k, p1, s, t, strict_s=True))
    hyp["p1_le_t"] = p1 < t if k.gamma == 0 else p1 <= t
    hyp["all"] = bool(
        hyp["class_gp"] and hyp["rho_almost_increasing"] and hyp["s_t_range"] and hyp["p1_le_t"]
        and hyp["p1_below_n_over_alpha"] and all(hyp[c]["holds"] for c in ("condition_i", "condition_ii", "condition_iii"))
    )
    return BoundReport(
        "two-sided",
        _params(k, p1=p1, p2=sol.p2, q1=q1, q2=sol.q2, s=s, t=t, phi=phi.describe()),
        norm_est, k_st, c5, "pass" if ok else "fail", members, hyp,
        {"kernel_p1t_norm": k_p1t, "norm_estimate": norm_est, "kernel_st_norm": k_st,
         "C4": c4, "C5": c5, "ratio0": low.constant, "dilation_spread": spread,
         "f0": {key: low.extra[key] for key in ("f0_norm", "f0_bracket", "pointwise_c", "rhoK_norm", "chain_c")},
         "potential": low.extra["potential"], "psi": psi.describe(), "discretization": disc.describe()},
    )


# -- alpha sweep -----------------------------------------------------------
@dataclass
class SweepTable:
    p1: float
    dim: int
    gamma: float
    rows: list
    slope: float

    def to_dict(self) -> dict:
        return asdict(self)


def sweep_exponents(alpha: float, p1: float, n: int):
    """(t, q1, s) for the sweep: p1 < q1 < s < t with q1 < n/alpha."""
    t = n / (n - alpha)
    top = min(t, n / alpha)
    if p1 >= top:
        raise InfeasibleExponentError(f"alpha = {alpha}: need p1 < min(t, n/alpha) = {top:.6g}, got p1 = {p1}")
    q1 = p1 + (top - p1) / 3.0
    s = q1 + (t - q1) / 2.0
    return t, q1, s


def alpha_sweep(alphas, p1: float, n: int, gamma: float = 0.0, with_ratio: bool = True,
                disc: Discretization | None = None) -> SweepTable:
    """||K_alpha||_{L^{p1,t(alpha)}} (closed form and ball search) and the f0
    lower-bound ratio against alpha, with a log-log slope fit of the closed-form
    column."""
    disc = disc or Discretization.default(n)
    rows = []
    for a in alphas:
        k = KernelParams(float(a), gamma, n)
        t, q1, s = sweep_exponents(k.alpha, p1, n)
        closed = riesz_morrey_closed_form(k.alpha, p1, n) if gamma == 0 else math.nan
        numeric = classical_morrey_norm(sampled_kernel(k, disc.radial), p1, t, lattice=disc.lattice).value
        row = {"alpha": k.alpha, "t": t, "kernel_norm_closed": closed, "kernel_norm_search": numeric}
        if with_ratio:
            phi = ShapeFunction.power(q1, n)
            sol = solve_exponents(p1, s, None, t)
            low = lower_bound_f0(phi, k, p1, sol.p2, s, t, disc)
            row.update(q1=q1, s=s, ratio0=low.constant)
        rows.append(row)
    col = np.array([r["kernel_norm_closed"] if gamma == 0 else r["kernel_norm_search"] for r in rows])
    al = np.array([r["alpha"] for r in rows])
    slope = float(np.polyfit(np.log(al), np.log(col), 1)[0]) if len(rows) >= 2 else math.nan
    return SweepTable(p1, n, gamma, rows, slope)
