"""
Experiment configuration files (TOML).

Schema (every key optional unless noted; unknown keys are errors)::

    [run]
    geometry = "wavetrain"        # or "pulse"
    estimates = ["bounded"]       # estimate keys and checks, see `singularpdo list`
    seed = 0
    oracle = "auto"               # "on", "off" or "auto"
    out = "runs/example"          # output directory (the --out flag wins)
    jobs = 1

    [grid]
    d = 1
    L = 3.141592653589793
    Nx = 16
    Kmax = 4                      # wavetrain
    Theta = 8.0                   # pulse
    Ntheta = 32                   # pulse

    [sweep]
    epsilons = [1.0, 0.5]
    gammas = [1.0, 2.0]
    beta = [1.0]

    [profiles]
    V = "cos-wave"
    W = "sin-wave"
    V_params = { r = 0.5 }
    W_params = {}

    [symbols.params]
    garding-positive = { c0 = 1.5 }
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from typing import Optional

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .sobolev import EPSILON_SWEEP, GAMMA_SWEEP
from .spectral_core import Geometry, GridSpec
from .symbols import builtin_profiles, builtin_symbols


class ConfigError(ValueError):
    """Malformed configuration (exit code 2)."""


class CatalogMiss(KeyError):
    """A configuration references an unknown catalog key (exit code 3)."""


#: checks that are not calculus estimates
CHECKS = {
    "parseval": "Parseval defect and round trip on seeded random fields",
    "multiplier-identities": "identity, multiplier path and singular derivative quantizations",
    "isometry": "bracket(m) composed with the inverse singular weight is an isometry",
    "ladder": "truncation ladder stabilizes below the lattice threshold",
    "decay:<symbol>": "decay constants of a base symbol (e.g. decay:exp-growth)",
}

_SCHEMA = {
    "run": {"geometry", "estimates", "seed", "oracle", "out", "jobs"},
    "grid": {"d", "L", "Nx", "Kmax", "Theta", "Ntheta"},
    "sweep": {"epsilons", "gammas", "beta"},
    "profiles": {"V", "W", "V_params", "W_params"},
    "symbols": {"params"},
}


@dataclasses.dataclass
class ExperimentConfig:
    geometry: Geometry = Geometry.WAVETRAIN
    grid: Optional[GridSpec] = None
    estimates: tuple = ()
    seed: int = 0
    oracle: str = "auto"
    out: Optional[str] = None
    jobs: Optional[int] = None
    epsilons: tuple = EPSILON_SWEEP
    gammas: tuple = GAMMA_SWEEP
    beta: tuple = (1.0,)
    V: Optional[str] = None
    W: Optional[str] = None
    V_params: dict = dataclasses.field(default_factory=dict)
    W_params: dict = dataclasses.field(default_factory=dict)
    symbol_params: dict = dataclasses.field(default_factory=dict)
    digest: str = ""
    raw: dict = dataclasses.field(default_factory=dict)


def _num_list(x, name):
    if not isinstance(x, list) or not x:
        raise ConfigError(f"{name} must be a nonempty list of numbers")
    try:
        out = tuple(float(v) for v in x)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must contain numbers") from exc
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must contain finite numbers")
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; raises ConfigError or CatalogMiss."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    return config_from_dict(data, hashlib.sha256(text.encode()).hexdigest())


def config_from_dict(data: dict, digest: str = "") -> ExperimentConfig:
    for section, body in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        unknown = set(body) - _SCHEMA[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    run = data.get("run", {})
    cfg = ExperimentConfig(digest=digest, raw=data)
    try:
        cfg.geometry = Geometry(run.get("geometry", "wavetrain"))
    except ValueError as exc:
        raise ConfigError(f"unknown geometry {run.get('geometry')!r}") from exc
    est = run.get("estimates", [])
    if not isinstance(est, list) or not all(isinstance(e, str) for e in est):
        raise ConfigError("run.estimates must be a list of strings")
    cfg.estimates = tuple(est)
    seed = run.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("run.seed must be a nonnegative integer")
    cfg.seed = seed
    cfg.oracle = run.get("oracle", "auto")
    if cfg.oracle not in ("on", "off", "auto"):
        raise ConfigError("run.oracle must be one of on, off, auto")
    cfg.out = run.get("out")
    jobs = run.get("jobs")
    if jobs is not None and (not isinstance(jobs, int) or jobs < 1):
        raise ConfigError("run.jobs must be a positive integer")
    cfg.jobs = jobs

    sweep = data.get("sweep", {})
    if "epsilons" in sweep:
        cfg.epsilons = _num_list(sweep["epsilons"], "sweep.epsilons")
        if not all(0 < e <= 1 for e in cfg.epsilons):
            raise ConfigError("sweep.epsilons must lie in (0, 1]")
    if "gammas" in sweep:
        cfg.gammas = _num_list(sweep["gammas"], "sweep.gammas")
        if not all(g >= 1 for g in cfg.gammas):
            raise ConfigError("sweep.gammas must be >= 1")
    if "beta" in sweep:
        cfg.beta = _num_list(sweep["beta"], "sweep.beta")

    from .suite import default_grid

    g = data.get("grid", {})
    base = default_grid(cfg.geometry, int(g.get("d", 1)))
    kw = {k: g[k] for k in ("d", "L", "Nx", "Kmax", "Theta", "Ntheta") if k in g}
    try:
        cfg.grid = dataclasses.replace(base, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc

    prof = data.get("profiles", {})
    symbols, profiles = builtin_symbols(), builtin_profiles()
    for slot in ("V", "W"):
        name = prof.get(slot)
        params = prof.get(f"{slot}_params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"profiles.{slot}_params must be a table")
        if name is not None:
            if name not in profiles:
                raise CatalogMiss(f"unknown profile {name!r}")
            bad = set(params) - set(profiles[name])
            if bad:
                raise CatalogMiss(f"profile {name!r} has no parameters {sorted(bad)}")
        setattr(cfg, slot, name)
        setattr(cfg, f"{slot}_params", dict(params))
    sp = data.get("symbols", {}).get("params", {})
    if not isinstance(sp, dict):
        raise ConfigError("symbols.params must be a table of tables")
    for name, params in sp.items():
        if name not in symbols:
            raise CatalogMiss(f"unknown symbol {name!r}")
        if not isinstance(params, dict):
            raise ConfigError(f"symbols.params.{name} must be a table")
        bad = set(params) - set(symbols[name])
        if bad:
            raise CatalogMiss(f"symbol {name!r} has no parameters {sorted(bad)}")
    cfg.symbol_params = {k: dict(v) for k, v in sp.items()}
    validate_selection(cfg.estimates)
    return cfg


def validate_selection(selection) -> None:
    from .suite import ESTIMATES

    symbols = builtin_symbols()
    for key in selection:
        if key.startswith("decay:"):
            if key[len("decay:"):] not in symbols:
                raise CatalogMiss(f"unknown symbol in {key!r}")
        elif key not in ESTIMATES and key not in CHECKS:
            raise CatalogMiss(f"unknown estimate or check {key!r}")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text)
