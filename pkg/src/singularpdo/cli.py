"""
Command-line front end.

Subcommands: ``run`` (verification suite from a config file), ``list``
(catalog), ``compare`` (two run directories), ``norms`` (norms of a stored
field) and ``apply`` (apply a catalog operator to a stored field).

Exit codes: 0 success, 1 a selected estimate failed (or ``compare`` found a
verdict change), 2 configuration or input error, 3 catalog miss, 4
numerical convergence failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import logging
import math
import os
import re
import sys
from pathlib import Path

from . import calculus
from .config import CHECKS, CatalogMiss, ConfigError, ExperimentConfig, load_config
from .operators import ConsistencyError, ConvergenceError, SizeError, apply_pseudo, oscillatory_operator
from .sobolev import NormParams, singular_norm, sobolev_norm
from .spectral_core import l2_norm, read_field, write_field
from .suite import ESTIMATES, SuiteContext, run_estimates
from .symbols import (
    CatalogError,
    builtin_profiles,
    builtin_symbols,
    get_profile,
    get_symbol,
    singular_amplitude,
    singular_symbol,
)

log = logging.getLogger("singularpdo")

JOBS_ENV = "SINGULARPDO_JOBS"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CATALOG, EXIT_NUMERIC = 0, 1, 2, 3, 4

__version__ = "0.1.0"


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def build_context(cfg: ExperimentConfig) -> SuiteContext:
    from .suite import default_grid  # noqa: F401

    pulse = cfg.grid.is_pulse
    vname = cfg.V or ("pulse-gauss" if pulse else "cos-wave")
    wname = cfg.W or ("pulse-gauss2" if pulse else "sin-wave")
    return SuiteContext(cfg.grid, get_profile(vname, **cfg.V_params), get_profile(wname, **cfg.W_params),
                        cfg.epsilons, cfg.gammas, cfg.beta, cfg.seed, cfg.symbol_params)


def _oracle_route(cfg: ExperimentConfig, oracle: str) -> str:
    if oracle == "on":
        return "oracle"
    if oracle == "off":
        return "fft"
    return "oracle" if cfg.grid.dof * 2 <= calculus_budget() else "fft"


def calculus_budget() -> int:
    from .operators import DOF_BUDGET

    return DOF_BUDGET


def _run_keys(cfg: ExperimentConfig, route: str, keys: list) -> list:
    prev = calculus.set_assembly(route)
    try:
        return run_estimates(build_context(cfg), keys)
    finally:
        calculus.set_assembly(prev)


def _worker(args):
    cfg, route, key = args
    return _run_keys(cfg, route, [key])


def _safe_name(estimate_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", estimate_id).strip("_")


def write_outputs(out: Path, reports: list, cfg: ExperimentConfig, route: str) -> dict:
    """Write one CSV per report, ``summary.json``, ``summary.txt`` and ``provenance.json``."""
    out.mkdir(parents=True, exist_ok=True)
    used = {}
    summary = {}
    files = {}
    for rep in reports:
        base = _safe_name(rep.estimate_id)
        n = used.get(base, 0)
        used[base] = n + 1
        name = f"{base}.csv" if n == 0 else f"{base}.{n}.csv"
        eid = rep.estimate_id if n == 0 else f"{rep.estimate_id}#{n}"
        rep.to_csv(out / name)
        summary[eid] = rep.verdict
        files[eid] = name
    counts = {v: sum(1 for x in summary.values() if x == v) for v in ("PASS", "FAIL", "REPORT")}
    doc = {"estimates": summary, "files": files, "counts": counts,
           "exit_code": EXIT_FAIL if counts["FAIL"] else EXIT_OK}
    (out / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    (out / "summary.txt").write_text("".join(r.summary() + "\n" for r in reports))
    prov = {
        "config_sha256": cfg.digest,
        "config": cfg.raw,
        "grid": cfg.grid.header(),
        "seed": cfg.seed,
        "epsilons": list(cfg.epsilons),
        "gammas": list(cfg.gammas),
        "beta": list(cfg.beta),
        "assembly": route,
        "version": __version__,
        "csv_columns": list(calculus.CSV_COLUMNS),
    }
    (out / "provenance.json").write_text(json.dumps(prov, indent=2, sort_keys=True, default=str) + "\n")
    return doc


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except CatalogMiss as exc:
        print(f"catalog miss: {exc}", file=sys.stderr)
        return EXIT_CATALOG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    oracle = args.oracle or cfg.oracle
    out = Path(args.out or cfg.out or "run-output")
    jobs = args.jobs or cfg.jobs or default_jobs()
    route = _oracle_route(cfg, oracle)
    keys = list(cfg.estimates)
    try:
        if jobs > 1 and len(keys) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(_worker, [(cfg, route, k) for k in keys]))
            reports = [r for part in parts for r in part]
        else:
            reports = _run_keys(cfg, route, keys)
    except (ConvergenceError, ConsistencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SizeError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CatalogError, KeyError) as exc:
        print(f"catalog miss: {exc}", file=sys.stderr)
        return EXIT_CATALOG
    doc = write_outputs(out, reports, cfg, route)
    for r in reports:
        print(f"{r.verdict:6s} {r.estimate_id}")
    c = doc["counts"]
    print(f"{len(reports)} reports: {c['PASS']} PASS, {c['FAIL']} FAIL, {c['REPORT']} REPORT -> {out}")
    return doc["exit_code"]


# ---------------------------------------------------------------------------
# list
# ---------------------------------------------------------------------------


def catalog_listing() -> dict:
    return {
        "symbols": {k: dict(v) for k, v in builtin_symbols().items()},
        "profiles": {k: dict(v) for k, v in builtin_profiles().items()},
        "estimates": {k: {"tags": {"wavetrain": e.tags[0], "pulse": e.tags[1]}, "description": e.description}
                      for k, e in ESTIMATES.items()},
        "checks": dict(CHECKS),
    }


def cmd_list(args) -> int:
    data = catalog_listing()
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=True))
        return EXIT_OK
    for section in ("symbols", "profiles"):
        print(f"{section}:")
        for k, schema in data[section].items():
            ps = ", ".join(f"{p}={v}" for p, v in schema.items())
            print(f"  {k}" + (f" ({ps})" if ps else ""))
    print("estimates:")
    for k, e in data["estimates"].items():
        print(f"  {k} [{e['tags']['wavetrain']} / {e['tags']['pulse']}]: {e['description']}")
    print("checks:")
    for k, d in data["checks"].items():
        print(f"  {k}: {d}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _load_run(path: Path):
    try:
        doc = json.loads((path / "summary.json").read_text())
        tables = {}
        for eid, name in doc["files"].items():
            with open(path / name, newline="") as fh:
                tables[eid] = list(csv.DictReader(fh))
        return doc, tables
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read run directory {path}: {exc}") from exc


def compare_runs(dir_a, dir_b) -> dict:
    """Per-estimate verdict changes, normalized-value ratios (B/A) and structural differences."""
    a_doc, a_tab = _load_run(Path(dir_a))
    b_doc, b_tab = _load_run(Path(dir_b))
    va, vb = a_doc["estimates"], b_doc["estimates"]
    out = {"verdict_changes": {}, "ratios": {}, "structural": [], "only_in_a": sorted(set(va) - set(vb)),
           "only_in_b": sorted(set(vb) - set(va))}
    for eid in sorted(set(va) & set(vb)):
        if va[eid] != vb[eid]:
            out["verdict_changes"][eid] = [va[eid], vb[eid]]
        ra, rb = a_tab[eid], b_tab[eid]
        keys_a = [(r["tag"], r["epsilon"], r["gamma"]) for r in ra]
        keys_b = [(r["tag"], r["epsilon"], r["gamma"]) for r in rb]
        if keys_a != keys_b:
            out["structural"].append(eid)
            continue
        ratios = []
        for x, y in zip(ra, rb):
            na, nb = float(x["normalized"]), float(y["normalized"])
            if na == nb:
                ratios.append(1.0)
            elif na != 0 and math.isfinite(na) and math.isfinite(nb):
                ratios.append(nb / na)
        if ratios:
            out["ratios"][eid] = [min(ratios), max(ratios)]
    return out


def cmd_compare(args) -> int:
    try:
        diff = compare_runs(args.dir_a, args.dir_b)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.json:
        print(json.dumps(diff, indent=2, sort_keys=True))
    else:
        for eid, (a, b) in diff["verdict_changes"].items():
            print(f"verdict {eid}: {a} -> {b}")
        for eid in diff["structural"]:
            print(f"structural {eid}: sweep rows differ")
        for eid in diff["only_in_a"]:
            print(f"missing in B: {eid}")
        for eid in diff["only_in_b"]:
            print(f"missing in A: {eid}")
        for eid, (lo, hi) in diff["ratios"].items():
            if lo != 1.0 or hi != 1.0:
                print(f"ratio {eid}: [{lo:.6g}, {hi:.6g}]")
    changed = diff["verdict_changes"] or diff["only_in_a"] or diff["only_in_b"]
    return EXIT_FAIL if changed else EXIT_OK


# ---------------------------------------------------------------------------
# norms and apply
# ---------------------------------------------------------------------------


def _read(path):
    try:
        return read_field(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field {path}: {exc}") from exc


def cmd_norms(args) -> int:
    try:
        u = _read(args.field)
        p = NormParams(args.s, args.gamma, args.epsilon, tuple(args.beta))
        res = {"L2": l2_norm(u), "sobolev": sobolev_norm(u, args.s, args.gamma), "singular": singular_norm(u, p),
               "s": args.s, "gamma": args.gamma, "epsilon": args.epsilon}
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(res, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_apply(args) -> int:
    try:
        u = _read(args.field)
        sigma = get_symbol(args.symbol, **dict(_kv(x) for x in args.param))
        V = get_profile(args.profile)
        if sigma.is_amplitude:
            W = get_profile(args.incoming_profile or args.profile)
            a = singular_amplitude(sigma, V, W, u.grid, args.epsilon, args.gamma, tuple(args.beta))
            v = oscillatory_operator(a, u.grid).apply(u)
        else:
            a = singular_symbol(sigma, V, u.grid, args.epsilon, args.gamma, tuple(args.beta))
            v = apply_pseudo(a, u)
        write_field(v, args.output)
    except (CatalogError, KeyError) as exc:
        print(f"catalog miss: {exc}", file=sys.stderr)
        return EXIT_CATALOG
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"output": str(args.output), "L2_in": l2_norm(u), "L2_out": l2_norm(v)}, sort_keys=True))
    return EXIT_OK


def _kv(text):
    if "=" not in text:
        raise ConfigError(f"parameter {text!r} must look like name=value")
    k, v = text.split("=", 1)
    return k, float(v)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="singularpdo", description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a verification suite")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
    r.add_argument("--oracle", choices=("on", "off", "auto"))
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="list catalog symbols, profiles, estimates and checks")
    ls.add_argument("--json", action="store_true", help="machine-readable listing")
    ls.set_defaults(func=cmd_list)

    c = sub.add_parser("compare", help="compare two run directories")
    c.add_argument("dir_a")
    c.add_argument("dir_b")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_compare)

    n = sub.add_parser("norms", help="norms of a stored field")
    n.add_argument("field")
    n.add_argument("--s", type=float, default=1.0)
    n.add_argument("--gamma", type=float, default=1.0)
    n.add_argument("--epsilon", type=float, default=1.0)
    n.add_argument("--beta", type=float, nargs="+", default=[1.0])
    n.set_defaults(func=cmd_norms)

    a = sub.add_parser("apply", help="apply a catalog operator to a stored field")
    a.add_argument("field")
    a.add_argument("output")
    a.add_argument("--symbol", required=True)
    a.add_argument("--profile", default="zero")
    a.add_argument("--incoming-profile")
    a.add_argument("--param", action="append", default=[], help="symbol parameter name=value")
    a.add_argument("--epsilon", type=float, default=1.0)
    a.add_argument("--gamma", type=float, default=1.0)
    a.add_argument("--beta", type=float, nargs="+", default=[1.0])
    a.set_defaults(func=cmd_apply)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
