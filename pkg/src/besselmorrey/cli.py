"""Batch front-end.

    besselmorrey verify --theorem generalized-morrey --out runs/gm
    besselmorrey sweep --alphas 0.5,0.25,0.125
    besselmorrey --config exp.yaml --refine 2 --jobs 4

Exit status: 0 when every verdict passes, 1 on any fail, 2 on a configuration
or precondition error (the message names the violated relation).
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .bounds import (BoundReport, Discretization, alpha_sweep, default_corpus, kernel_morrey_norm,
                     theorem_report, two_sided_report, young_corpus_report, _member, _params)
from .config import COMMANDS, ExperimentConfig, resolve_theorem
from .errors import BesselMorreyError, ConfigError, DivergenceError, InfeasibleExponentError
from .fields import build_field
from .kernel import kernel_lebesgue_norm
from .operator import apply_grid, apply_radial, default_eval_radii
from .report import profile_csv, report_to_csv, report_to_json
from .spaces import morrey_norm, solve_exponents

log = logging.getLogger("besselmorrey")


def _disc(cfg: ExperimentConfig, dim: int) -> Discretization:
    ev = int(cfg.discretization.get("eval_per_decade", 64)) * cfg.refine
    return Discretization(cfg.radial_spec(dim), ev, cfg.lattice())


def _corpus(cfg, dim, phi, disc):
    if cfg.fields:
        out = []
        for i, fam in enumerate(cfg.families(dim)):
            f = build_field(fam, disc.radial)
            f.meta["name"] = cfg.fields[i].get("name", f"{fam.name}-{i}")
            out.append(f)
        if phi is not None:
            from .bounds import f0_field
            out.append(f0_field(phi, disc.radial))
        return out
    return default_corpus(dim, phi, disc.radial)


# -- jobs ------------------------------------------------------------------
def _instances(cfg: ExperimentConfig):
    if not cfg.instances:
        return [({}, {}, None)]
    return [(i.get("kernel", {}), i.get("exponents", {}), i.get("phi")) for i in cfg.instances]


def _job(payload):
    """Run one independent unit of work; returns (reports, profiles)."""
    cfg_dict, kind, arg = payload
    cfg = ExperimentConfig.from_dict(cfg_dict)
    if kind == "alpha":
        return _sweep_row(cfg, arg)
    kern, exps, phi_d = arg
    k = cfg.kernel_params(kern)
    exps = {**cfg.exponents, **exps}
    phi = cfg.shape(k.dim, phi_d)
    disc = _disc(cfg, k.dim)
    return _dispatch(cfg, k, exps, phi, disc)


def _dispatch(cfg, k, exps, phi, disc):
    ex = lambda name, req=True: cfg.exponent(name, exps, req)
    cmd = cfg.command
    if cmd == "kernel-norm":
        t, s = ex("t"), ex("s", False)
        if s is None:
            est = kernel_lebesgue_norm(k, t)
            label = f"K in L^{t:g}"
        else:
            est = kernel_morrey_norm(k, s, t, disc)
            label = f"K in L^({s:g},{t:g})"
        m = _member(label, est.value, est.value, 1.0, "pass" if math.isfinite(est.value) else "fail",
                    f"method={est.method}; error_indicator={est.error_indicator:.3g}")
        rep = BoundReport("kernel-norm", _params(k, s=s, t=t), est.value, est.value, 1.0, m["verdict"], [m],
                          {}, {"method": est.method, "error_indicator": est.error_indicator,
                               "discretization": est.discretization})
        return [rep], []
    if cmd == "morrey-norm":
        p = ex("p")
        if phi is None:
            raise ConfigError("morrey-norm needs a phi weight")
        members = []
        for f in _corpus(cfg, k.dim, None, disc):
            est = morrey_norm(f, p, phi, lattice=disc.lattice)
            members.append(_member(f.meta["name"], est.value, est.value, 1.0,
                                   "pass" if math.isfinite(est.value) else "fail",
                                   f"method={est.method}; error_indicator={est.error_indicator:.3g}"))
        worst = max(m["lhs"] for m in members) if members else 0.0
        verdict = "pass" if all(m["verdict"] == "pass" for m in members) else "fail"
        return [BoundReport("morrey-norm", _params(k, p1=p, phi=phi.describe()), worst, worst, 1.0, verdict,
                            members, {}, {"discretization": disc.describe()})], []
    if cmd == "apply":
        return _apply(cfg, k, disc)
    theorem = cfg.theorem
    if theorem == "young":
        reps = []
        corpus = _corpus(cfg, k.dim, phi, disc)
        tuples = [(ex("p"), ex("t"))] if "p" in exps and "t" in exps else [tuple(map(float, x)) for x in cfg.young_tuples]
        for p, t in tuples:
            reps.append(young_corpus_report(corpus, k, p, t, cfg.delta, disc))
        return reps, []
    p1, s, t = ex("p1"), ex("s"), ex("t")
    if phi is None:
        raise ConfigError(f"{theorem} needs a phi weight")
    q1 = phi.q if phi.kind == "power" and not math.isinf(phi.q) else None
    solve_exponents(p1, s, q1, t)  # names the violated relation
    corpus = _corpus(cfg, k.dim, phi, disc)
    if theorem in ("morrey", "generalized-morrey"):
        rep = theorem_report(corpus, k, p1, s, t, phi, q1, disc)
        if theorem == "morrey":
            rep.theorem = "morrey"
        return [rep], []
    rep = two_sided_report(phi, k, p1, s, t, corpus, q1, disc)
    pot = rep.extra.pop("potential", None)
    prof = [("I f0", pot["r"], pot["value"])] if pot else []
    return [rep], prof


def _apply(cfg, k, disc):
    members, profiles = [], []
    grid = cfg.grid_spec(k.dim)
    for i, fam in enumerate(cfg.families(k.dim)):
        name = cfg.fields[i].get("name", f"{fam.name}-{i}")
        f = build_field(fam, disc.radial)
        If = apply_radial(f, k, default_eval_radii(f, disc.eval_per_decade))
        profiles.append((f"{name} radial", If.radii, If.values))
        val = float(If.at([1.0])[0])
        note = "value at |x| = 1"
        if grid is not None:
            g = apply_grid(build_field(fam, grid), k, method=cfg.grid.get("method", "fast"),
                           weights=cfg.grid.get("weights", "cell"), padding=float(cfg.grid.get("padding", 2.0)))
            c = grid.center_index
            line = g.values[(slice(None),) + (c,) * (k.dim - 1)]
            ax = grid.axis()
            keep = ax > 0
            profiles.append((f"{name} grid", ax[keep], line[keep]))
        members.append(_member(name, val, val, 1.0, "pass", note))
    if not members:
        raise ConfigError("apply needs at least one entry in 'fields'")
    return [BoundReport("apply", _params(k), members[0]["lhs"], members[0]["rhs"], 1.0, "pass", members,
                        {}, {"discretization": disc.describe()})], profiles


def _sweep_row(cfg, alpha):
    k_d = dict(cfg.kernel)
    n, gamma = int(k_d.get("dim", 1)), float(k_d.get("gamma", 0.0))
    p1 = cfg.exponent("p1")
    disc = _disc(cfg, n)
    tab = alpha_sweep([alpha], p1, n, gamma, disc=disc)
    row = tab.rows[0]
    closed = row["kernel_norm_closed"]
    ref = closed if not math.isnan(closed) else row["kernel_norm_search"]
    ratio = row["ratio0"] / ref if ref > 0 else math.inf
    m = _member("f0", row["ratio0"], ref, ratio, "pass" if 0 < row["ratio0"] < math.inf else "fail")
    params = {"n": n, "alpha": float(alpha), "gamma": gamma, "p1": p1, "p2": None, "q1": row["q1"],
              "q2": None, "s": row["s"], "t": row["t"], "phi": f"power(q={row['q1']:.6g},c=1)"}
    rep = BoundReport("alpha-sweep", params, row["ratio0"], ref, ratio, m["verdict"], [m], {}, dict(row))
    return [rep], []


def run_config(cfg: ExperimentConfig, out_dir=None, profile: bool | None = None):
    """Run a resolved config; returns (exit status, reports)."""
    cfg = cfg.with_defaults()
    out_dir = Path(out_dir or cfg.output.get("dir", "out"))
    profile = cfg.output.get("profile", True) if profile is None else profile
    if cfg.command == "sweep":
        if not cfg.alphas:
            raise ConfigError("sweep needs a non-empty alphas list")
        payloads = [(cfg.to_dict(), "alpha", float(a)) for a in cfg.alphas]
    else:
        payloads = [(cfg.to_dict(), "instance", inst) for inst in _instances(cfg)]
    log.info("command=%s theorem=%s jobs=%d refine=%d", cfg.command, cfg.theorem, cfg.jobs, cfg.refine)
    dim = int(cfg.kernel.get("dim", 1))
    log.info("discretization: %s", _disc(cfg, dim).describe())
    if cfg.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_job, payloads))  # map keeps submission order
    else:
        results = [_job(p) for p in payloads]
    reports = [r for rs, _ in results for r in rs]
    profiles = [p for _, ps in results for p in ps]
    if cfg.command == "sweep":
        reports = _attach_slope(reports)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"config": cfg.to_dict(), "discretization": _disc(cfg, dim).describe()}
    (out_dir / "report.json").write_bytes(report_to_json(reports, meta))
    (out_dir / "table.csv").write_bytes(report_to_csv(reports))
    if profile and profiles:
        (out_dir / "profile.csv").write_bytes(profile_csv(profiles))
    status = 0 if all(r.passed for r in reports) else 1
    return status, reports


def _attach_slope(reports):
    import numpy as np

    al = np.array([r.params["alpha"] for r in reports])
    col = np.array([r.rhs for r in reports])
    slope = float(np.polyfit(np.log(al), np.log(col), 1)[0]) if len(reports) >= 2 else math.nan
    for r in reports:
        r.extra["loglog_slope"] = slope
    return reports


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besselmorrey", description=__doc__.split("\n")[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="overrides the config's command")
    ap.add_argument("--config", type=Path, help="YAML experiment config")
    ap.add_argument("--out", type=Path, help="output directory (default: out)")
    ap.add_argument("--refine", type=int, help="global discretization multiplier")
    ap.add_argument("--jobs", type=int, help="worker processes for independent jobs")
    ap.add_argument("--theorem", help="young | morrey | generalized-morrey | two-sided (aliases 2.2, 2.3, 3.1)")
    ap.add_argument("--alphas", help="comma-separated alpha list for sweep")
    ap.add_argument("--no-profile", action="store_true", help="skip profile.csv")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        d = ExperimentConfig.load(args.config).to_dict() if args.config else {}
        if args.command:
            d["command"] = args.command
        if args.theorem:
            d["theorem"] = resolve_theorem(args.theorem)
        if args.alphas:
            try:
                d["alphas"] = [float(a) for a in args.alphas.split(",") if a.strip()]
            except ValueError as exc:
                raise ConfigError(f"--alphas must be comma-separated numbers: {exc}") from exc
        if args.refine is not None:
            d["refine"] = args.refine
        if args.jobs is not None:
            d["jobs"] = args.jobs
        if "command" not in d:
            raise ConfigError("give a command or a --config with 'command'")
        cfg = ExperimentConfig.from_dict(d)
        status, reports = run_config(cfg, args.out, profile=False if args.no_profile else None)
    except (ConfigError, InfeasibleExponentError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BesselMorreyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for r in reports:
        c = "inf" if math.isinf(r.constant) else f"{r.constant:.6g}"
        print(f"{r.theorem}: {r.verdict} (constant {c}, {len(r.members)} test functions)")
    return status


if __name__ == "__main__":
    sys.exit(main())
