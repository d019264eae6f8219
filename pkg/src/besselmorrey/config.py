"""Experiment configuration: a YAML document with strict key checking."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .fields import BallIndicator, CustomTable, Gaussian, GridSpec, PowerBump, RadialSpec
from .kernel import KernelParams
from .spaces import BallLattice, ShapeFunction

COMMANDS = ("kernel-norm", "morrey-norm", "apply", "verify", "sweep")
THEOREMS = ("young", "morrey", "generalized-morrey", "two-sided")
THEOREM_ALIASES = {"2.2": "morrey", "2.3": "generalized-morrey", "3.1": "two-sided", "young": "young"}

_TOP = {"command", "theorem", "kernel", "exponents", "phi", "fields", "grid", "discretization",
        "alphas", "instances", "output", "refine", "jobs", "young_tuples", "delta"}
_KERNEL = {"alpha", "gamma", "dim"}
_EXPONENTS = {"p1", "q1", "s", "t", "p"}
_DISC = {"r_min", "r_max", "per_decade", "eval_per_decade", "radius_ratio", "offsets"}
_GRID = {"half_width", "n_points", "method", "weights", "padding"}
_OUTPUT = {"dir", "profile"}
_FIELD_KEYS = {
    "ball": {"radius", "center"},
    "gaussian": {"sigma"},
    "power-bump": {"beta", "radius"},
    "table": {"r", "values"},
}


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in {where}: {extra} (allowed: {sorted(allowed)})")


def _num(x):
    if isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return math.inf
    return float(x)


def resolve_theorem(name: str) -> str:
    key = str(name).strip().lower()
    if key in THEOREMS:
        return key
    if key in THEOREM_ALIASES:
        return THEOREM_ALIASES[key]
    raise ConfigError(f"unknown theorem {name!r}; choose from {list(THEOREMS)} or {sorted(THEOREM_ALIASES)}")


# defaults per theorem: one admissible instance each
DEFAULTS = {
    "young": {"kernel": {"alpha": 0.5, "gamma": 1.0, "dim": 1},
              "exponents": {}, "phi": {"kind": "power", "q": 1.5},
              "young_tuples": [[1.0, 1.0], [1.0, 1.5], [1.5, 1.5]]},
    "morrey": {"kernel": {"alpha": 0.5, "gamma": 0.0, "dim": 1},
               "exponents": {"p1": 1.0, "s": 1.5, "t": 2.0}, "phi": {"kind": "power", "q": 1.5, "classical": True}},
    "generalized-morrey": {"kernel": {"alpha": 0.5, "gamma": 0.0, "dim": 1},
                           "exponents": {"p1": 1.0, "s": 1.5, "t": 2.0}, "phi": {"kind": "power", "q": 1.5}},
    "two-sided": {"kernel": {"alpha": 0.5, "gamma": 0.0, "dim": 1},
                  "exponents": {"p1": 1.0, "s": 1.8, "t": 2.0}, "phi": {"kind": "power", "q": 1.5}},
    "sweep": {"kernel": {"gamma": 0.0, "dim": 1}, "exponents": {"p1": 1.0}, "alphas": [0.5, 0.25, 0.125]},
}


@dataclass
class ExperimentConfig:
    command: str
    theorem: str | None = None
    kernel: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    phi: dict | None = None
    fields: list | None = None
    grid: dict | None = None
    discretization: dict = field(default_factory=dict)
    alphas: list | None = None
    instances: list | None = None
    output: dict = field(default_factory=dict)
    refine: int = 1
    jobs: int = 1
    young_tuples: list | None = None
    delta: float = 0.05

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {list(COMMANDS)}, got {self.command!r}")
        if self.theorem is not None:
            self.theorem = resolve_theorem(self.theorem)
        if self.command == "verify" and self.theorem is None:
            raise ConfigError("verify needs a theorem (young, morrey, generalized-morrey, two-sided)")
        _check_keys(self.kernel, _KERNEL, "kernel")
        _check_keys(self.exponents, _EXPONENTS, "exponents")
        _check_keys(self.discretization, _DISC, "discretization")
        _check_keys(self.output, _OUTPUT, "output")
        if self.grid is not None:
            _check_keys(self.grid, _GRID, "grid")
        for i, f in enumerate(self.fields or []):
            _check_field(f, i)
        for i, inst in enumerate(self.instances or []):
            _check_keys(inst, {"kernel", "exponents", "phi"}, f"instances[{i}]")
            _check_keys(inst.get("kernel", {}), _KERNEL, f"instances[{i}].kernel")
            _check_keys(inst.get("exponents", {}), _EXPONENTS, f"instances[{i}].exponents")
        if int(self.refine) < 1 or int(self.jobs) < 1:
            raise ConfigError("refine and jobs must be positive integers")
        self.refine, self.jobs = int(self.refine), int(self.jobs)

    # -- serialization ------------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _check_keys(d, _TOP, "config")
        if "command" not in d:
            raise ConfigError("config needs a 'command'")
        return cls(**copy.deepcopy(d))

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            d = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def to_dict(self) -> dict:
        out = {}
        for key in sorted(_TOP):
            v = getattr(self, key)
            if v is None or v == {} or (key == "refine" and v == 1) or (key == "jobs" and v == 1) \
                    or (key == "delta" and v == 0.05):
                continue
            out[key] = copy.deepcopy(v)
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    # -- resolution ---------------------------------------------------------
    def with_defaults(self) -> "ExperimentConfig":
        """Fill kernel/exponents/phi from the per-theorem defaults; explicit keys win."""
        key = self.theorem if self.command == "verify" else ("sweep" if self.command == "sweep" else None)
        base = DEFAULTS.get(key, {})
        d = self.to_dict()
        for part in ("kernel", "exponents"):
            d[part] = {**base.get(part, {}), **d.get(part, {})}
        if "phi" not in d and "phi" in base:
            d["phi"] = dict(base["phi"])
        for part in ("alphas", "young_tuples"):
            if part not in d and part in base:
                d[part] = copy.deepcopy(base[part])
        return ExperimentConfig.from_dict(d)

    def kernel_params(self, overrides: dict | None = None) -> KernelParams:
        d = {**self.kernel, **(overrides or {})}
        missing = {"alpha", "dim"} - set(d)
        if missing:
            raise ConfigError(f"kernel is missing {sorted(missing)}")
        return KernelParams(float(d["alpha"]), float(d.get("gamma", 0.0)), int(d["dim"]))

    def exponent(self, name, exps=None, required=True):
        exps = self.exponents if exps is None else exps
        if name not in exps:
            if required:
                raise ConfigError(f"exponents.{name} is required for {self.command}")
            return None
        return _num(exps[name])

    def shape(self, dim: int, phi: dict | None = None) -> ShapeFunction | None:
        d = phi if phi is not None else self.phi
        if d is None:
            return None
        _check_keys(d, {"kind", "q", "c", "classical", "r", "phi"}, "phi")
        return ShapeFunction.from_dict({"kind": "power", **d} if "kind" not in d else d, dim)

    def radial_spec(self, dim: int) -> RadialSpec:
        d = self.discretization
        base = RadialSpec(dim, float(d.get("r_min", 1e-4)), float(d.get("r_max", 1e4)),
                          int(d.get("per_decade", 512)))
        return base.refined(self.refine) if self.refine > 1 else base

    def lattice(self) -> BallLattice:
        d = self.discretization
        kw = {}
        if "radius_ratio" in d:
            kw["radius_ratio"] = float(d["radius_ratio"])
        if "offsets" in d:
            kw["offsets"] = tuple(float(x) for x in d["offsets"])
        return BallLattice(**kw)

    def grid_spec(self, dim: int) -> GridSpec | None:
        if self.grid is None:
            return None
        g = GridSpec(dim, float(self.grid.get("half_width", 8.0)), int(self.grid.get("n_points", 513)))
        return g.refined(self.refine) if self.refine > 1 else g

    def families(self, dim: int):
        return [make_family(f) for f in (self.fields or [])]


def _check_field(f, i):
    if not isinstance(f, dict) or "family" not in f:
        raise ConfigError(f"fields[{i}] needs a 'family' key")
    fam = f["family"]
    if fam not in _FIELD_KEYS:
        raise ConfigError(f"fields[{i}].family must be one of {sorted(_FIELD_KEYS)}, got {fam!r}")
    _check_keys({k: v for k, v in f.items() if k not in ("family", "name")}, _FIELD_KEYS[fam], f"fields[{i}]")


def make_family(f: dict):
    fam = f["family"]
    if fam == "ball":
        return BallIndicator(tuple(float(c) for c in f.get("center", (0.0,))), float(f.get("radius", 1.0)))
    if fam == "gaussian":
        return Gaussian(float(f.get("sigma", 1.0)))
    if fam == "power-bump":
        if "beta" not in f:
            raise ConfigError("power-bump field needs 'beta'")
        return PowerBump(float(f["beta"]), float(f.get("radius", 1.0)))
    return CustomTable(tuple(map(float, f["r"])), tuple(map(float, f["values"])))
