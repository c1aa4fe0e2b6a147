"""Command-line driver: ``simplexqmc <subcommand> [options]``.

Settings are merged as defaults < command-line flags < ``--config`` file,
so a saved config reproduces a run exactly.  Results go to stdout as JSON
(or to ``--output``); tables go to ``--csv``.

Exit codes: 0 success, 1 ``verify`` found a violation, 2 invalid
configuration (an error JSON is written to stderr), 3 smoothness
precondition ``r > d + 1`` violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .errors import PreconditionError, require_smoothness

CSV_HELP = """\
CSV columns:
  wce/bounds --csv (per n):    d, r, m, n, seed, e2, upper, lower, expected
  bounds --curve-csv (per m):  m, sum_gamma, upper, lower
  rate --csv:                  n, best_e, best_e2, expected_e2, upper_e2, lower_e2
  tract --csv (per m):         m, sum_gamma, upper, upper_exp, lower, upper_eps2, m_exponent,
                               strong_polynomial, polynomial, weak
  search --points-out *.csv:   t{j}_x{i} (one row per node, m*d coordinates)
"""

SUBCOMMANDS = ("basis", "kernel", "constants", "wce", "bounds", "search", "rate", "tract", "verify")

DEFAULTS = {
    "d": 2, "r": 4.0, "L": None, "tail_tolerance": 1e-12, "series_tolerance": 1e-12,
    "gamma": 0.5, "gammas": None, "m": 2, "n": 16, "seed": 0,
    "restarts": 32, "exchange_iters": 0, "epsilon": 0.1,
    "n_values": [8, 16, 32, 64, 128, 256], "m_values": [1, 2, 4, 8, 16, 32, 64, 128],
    "family": None, "pitch": 1 / 32, "threads": 1,
    "x": None, "y": None, "points": None, "output": None, "csv": None, "curve_csv": None,
    "points_out": None, "cache_dir": None, "checks": None,
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}
_PATH = {"type": ["string", "null"]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "d": {"type": "integer", "minimum": 1, "maximum": 3},
        "r": _POS,
        "L": {"type": ["integer", "null"], "minimum": 1},
        "tail_tolerance": _POS,
        "series_tolerance": _POS,
        "gamma": _POS,
        "gammas": {"type": ["array", "null"], "items": _POS, "minItems": 1},
        "m": _POS_INT,
        "n": _POS_INT,
        "seed": {"type": "integer", "minimum": 0},
        "restarts": _POS_INT,
        "exchange_iters": {"type": "integer", "minimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "n_values": {"type": "array", "items": _POS_INT, "minItems": 1},
        "m_values": {"type": "array", "items": _POS_INT, "minItems": 1},
        "family": {
            "type": ["object", "null"],
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["power", "constant", "log", "custom"]},
                "c": _POS,
                "a": {"type": "number", "minimum": 0},
                "table": {"type": "array", "items": _POS, "minItems": 1},
            },
        },
        "pitch": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        "threads": _POS_INT,
        "x": {"type": ["array", "null"], "items": {"type": "number"}},
        "y": {"type": ["array", "null"], "items": {"type": "number"}},
        "points": _PATH, "output": _PATH, "csv": _PATH, "curve_csv": _PATH,
        "points_out": _PATH, "cache_dir": _PATH,
        "checks": {"type": ["array", "null"], "items": {"type": "string"}},
    },
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("shared settings")
    g.add_argument("--config", help="JSON config file (\"schema\": 1); its values override flags")
    g.add_argument("--d", type=int, help="simplex dimension (1..3, default 2)")
    g.add_argument("--r", type=float, help="smoothness, must exceed d+1 (default 4)")
    g.add_argument("--L", type=int, help="kernel truncation degree cap")
    g.add_argument("--tail-tolerance", type=float, dest="tail_tolerance")
    g.add_argument("--series-tolerance", type=float, dest="series_tolerance")
    g.add_argument("--gamma", type=float, help="constant weight for every coordinate (default 0.5)")
    g.add_argument("--gammas", type=_floats, help="comma-separated per-coordinate weights")
    g.add_argument("--m", type=int, help="number of simplex factors")
    g.add_argument("--n", type=int, help="number of nodes")
    g.add_argument("--seed", type=int)
    g.add_argument("--restarts", type=int)
    g.add_argument("--exchange-iters", type=int, dest="exchange_iters")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--n-values", type=_ints, dest="n_values")
    g.add_argument("--m-values", type=_ints, dest="m_values")
    g.add_argument("--family", help="power:c:a, constant:c or log:c")
    g.add_argument("--pitch", type=float, help="grid pitch for extremum estimates")
    g.add_argument("--threads", type=int, help="cap on worker threads")
    g.add_argument("--x", type=_floats, help="point in T^d (kernel); with m>1, m*d values")
    g.add_argument("--y", type=_floats)
    g.add_argument("--points", help="point-set file (.json or .csv)")
    g.add_argument("--output", "-o", help="write the JSON result here instead of stdout")
    g.add_argument("--csv", help="write the per-n table here")
    g.add_argument("--curve-csv", dest="curve_csv", help="write the per-m bound curve here")
    g.add_argument("--points-out", dest="points_out", help="write the found point set here")
    g.add_argument("--cache-dir", dest="cache_dir", help="basis cache directory")
    g.add_argument("--checks", type=lambda s: s.split(","), help="verify: comma-separated subset")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="simplexqmc", description=__doc__.split("\n\n")[0],
                     epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "basis": "build and cache the exact orthonormal basis tables",
        "kernel": "evaluate K_1 (or K_m) at --x, --y",
        "constants": "kernel constants for (d, r, gamma*)",
        "wce": "worst-case error report for --points",
        "bounds": "mean-square, existence and lower bounds per n; n(eps, m) curve per m",
        "search": "best-of-R random search, optionally followed by exchange descent",
        "rate": "best-of-R error over --n-values and its log-log slope",
        "tract": "tractability verdict and bound curve for a weight family",
        "verify": "run the invariant suite; exit 1 on any violation",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], epilog=CSV_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def _parse_family(text: str) -> dict:
    parts = text.split(":")
    kind = parts[0]
    try:
        nums = [float(v) for v in parts[1:]]
    except ValueError as exc:
        raise ConfigError(f"bad --family {text!r}") from exc
    if kind == "power" and len(nums) == 2:
        return {"kind": kind, "c": nums[0], "a": nums[1]}
    if kind in ("constant", "log") and len(nums) == 1:
        return {"kind": kind, "c": nums[0]}
    raise ConfigError(f"bad --family {text!r}; use power:c:a, constant:c or log:c")


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = _parse_family(val) if key == "family" else val
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        try:
            jsonschema.validate(cfg, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config {where}: {exc.message}") from exc
        settings.update({k: v for k, v in cfg.items() if k != "schema"})
    _validate(settings)
    return settings


def _validate(s: dict) -> None:
    if not isinstance(s["d"], int) or not 1 <= s["d"] <= 3:
        raise ConfigError("d must be 1, 2 or 3")
    for key in ("tail_tolerance", "series_tolerance", "gamma", "pitch"):
        if not s[key] > 0:
            raise ConfigError(f"{key} must be positive")
    for key in ("m", "n", "restarts", "threads"):
        if s[key] < 1:
            raise ConfigError(f"{key} must be at least 1")
    if s["exchange_iters"] < 0:
        raise ConfigError("exchange_iters must be non-negative")
    if not 0 < s["epsilon"] < 1:
        raise ConfigError("epsilon must lie in (0, 1)")
    if s["L"] is not None and s["L"] < 1:
        raise ConfigError("L must be at least 1")
    if s["gammas"] is not None:
        if any(not g > 0 for g in s["gammas"]):
            raise ConfigError("gammas must be positive")
        s["m"] = len(s["gammas"])
    require_smoothness(s["d"], s["r"])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _kernel(s):
    from .kernel import SimplexKernel, TruncationPolicy

    return SimplexKernel(s["d"], s["r"], TruncationPolicy(s["tail_tolerance"], s["L"]))


def _schedule(s):
    from .kernel import WeightSchedule

    if s["gammas"] is not None:
        return WeightSchedule(tuple(s["gammas"]))
    return WeightSchedule.constant(s["gamma"], s["m"])


def _constants(s, kernel, gamma_star):
    from .kernel import compute_constants

    return compute_constants(kernel, gamma_star, pitch=s["pitch"], series_tol=s["series_tolerance"])


def _write_csv(rows, path, columns):
    from .wce import write_csv

    write_csv(rows, path, columns)


def cmd_basis(s):
    from .orthopoly import cache_dir, cache_key, default_max_degree, dim_space, load_or_build_basis

    L = s["L"] or default_max_degree(s["d"])
    directory = Path(s["cache_dir"]) if s["cache_dir"] else cache_dir()
    basis = load_or_build_basis(s["d"], L, directory)
    return {
        "schema": 1, "kind": "basis-summary", "d": s["d"], "L": L,
        "sizes": [basis.size(ell) for ell in range(L + 1)],
        "expected_sizes": [dim_space(s["d"], ell) for ell in range(L + 1)],
        "cache_file": str(directory / f"basis-d{s['d']}-L{L}-{cache_key(s['d'], L)}.json"),
    }


def cmd_kernel(s):
    kernel = _kernel(s)
    d, sched = s["d"], _schedule(s)
    if s["x"] is None or s["y"] is None:
        raise ConfigError("kernel needs --x and --y")
    x, y = np.asarray(s["x"], float), np.asarray(s["y"], float)
    out = {"schema": 1, "kind": "kernel-values", "d": d, "r": s["r"], "L": kernel.L,
           "tail_bound": kernel.tail_bound}
    if x.size == d and y.size == d:
        g = float(kernel.g(x[None], y[None])[0, 0])
        out.update(g=g, k1=1.0 + sched.gammas[0] * g, gamma=sched.gammas[0])
    elif x.size == d * sched.m and y.size == d * sched.m:
        X, Y = x.reshape(1, sched.m, d), y.reshape(1, sched.m, d)
        out.update(km=float(kernel.km(X, Y, sched)[0, 0]), gammas=list(sched.gammas))
    else:
        raise ConfigError(f"--x/--y need d={d} or m*d={d * sched.m} values")
    return out


def cmd_constants(s):
    kernel = _kernel(s)
    return _constants(s, kernel, _schedule(s).gamma_star).to_dict()


def cmd_wce(s):
    from .wce import csv_row, error_report, load_point_set

    if not s["points"]:
        raise ConfigError("wce needs --points")
    kernel = _kernel(s)
    try:
        T = load_point_set(s["points"], d=s["d"])
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read point set {s['points']}: {exc}") from exc
    if s["gammas"] is None:
        s["m"] = T.shape[1]
    sched = _schedule(s)
    report = error_report(T, sched, kernel, _constants(s, kernel, sched.gamma_star))
    if s["csv"]:
        from .wce import CSV_COLUMNS

        _write_csv([csv_row(report, "")], s["csv"], CSV_COLUMNS)
    return report.to_dict()


def cmd_bounds(s):
    from .kernel import WeightSchedule
    from .wce import (CSV_COLUMNS, existence_upper_bound, expected_enm_sq, lower_bound, neps_lower,
                      neps_upper)

    kernel = _kernel(s)
    sched = _schedule(s)
    consts = _constants(s, kernel, sched.gamma_star)
    per_n = [{
        "d": s["d"], "r": s["r"], "m": sched.m, "n": n, "seed": "",
        "e2": "", "upper": existence_upper_bound(n, sched, kernel), "lower": lower_bound(n, sched, consts),
        "expected": expected_enm_sq(n, sched, kernel),
    } for n in s["n_values"]]
    curve = []
    for m in s["m_values"]:
        if s["gammas"] is not None:
            if m > sched.m:
                raise ConfigError(f"m_values entry {m} exceeds the {sched.m} given gammas")
            sm = WeightSchedule(sched.gammas[:m])
        else:
            sm = WeightSchedule.constant(s["gamma"], m)
        curve.append({"m": m, "sum_gamma": math.fsum(sm.gammas),
                      "upper": neps_upper(s["epsilon"], sm, consts.c_dr),
                      "lower": neps_lower(s["epsilon"], sm, consts)})
    if s["csv"]:
        _write_csv(per_n, s["csv"], CSV_COLUMNS)
    if s["curve_csv"]:
        _write_csv(curve, s["curve_csv"], ("m", "sum_gamma", "upper", "lower"))
    return {"schema": 1, "kind": "bounds", "epsilon": s["epsilon"], "constants": consts.to_dict(),
            "per_n": per_n, "n_eps_curve": curve}


def _search_config(s, n=None):
    from .search import SearchConfig

    sched = _schedule(s)
    return SearchConfig(n=n or s["n"], m=sched.m, d=s["d"], schedule=sched, restarts=s["restarts"],
                        exchange_iters=s["exchange_iters"], seed=s["seed"], workers=s["threads"])


def cmd_search(s):
    from .search import search
    from .wce import save_point_set

    kernel = _kernel(s)
    cfg = _search_config(s)
    T, report = search(cfg, kernel, _constants(s, kernel, cfg.schedule.gamma_star))
    if s["points_out"]:
        save_point_set(T, s["points_out"])
    out = report.to_dict()
    out.update(seed=s["seed"], restarts=s["restarts"], exchange_iters=s["exchange_iters"])
    return out


def cmd_rate(s):
    from .search import rate_study

    kernel = _kernel(s)
    cfg = _search_config(s, n=s["n_values"][0])
    rows, slope = rate_study(s["n_values"], cfg, kernel, _constants(s, kernel, cfg.schedule.gamma_star))
    if s["csv"]:
        _write_csv(rows, s["csv"], ("n", "best_e", "best_e2", "expected_e2", "upper_e2", "lower_e2"))
    return {"schema": 1, "kind": "rate-study", "restarts": s["restarts"], "seed": s["seed"],
            "slope": slope, "rows": rows}


def cmd_tract(s):
    from .tract import CURVE_COLUMNS, WeightFamily, bound_curve, classify, curve_with_flags, m_exponent_bounds

    fam_cfg = s["family"] or {"kind": "power", "c": s["gamma"], "a": 2.0}
    try:
        fam = WeightFamily(fam_cfg["kind"], c=fam_cfg.get("c", 1.0), a=fam_cfg.get("a", 0.0), table=fam_cfg.get("table"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    verdict = classify(fam)
    kernel = _kernel(s)
    consts = _constants(s, kernel, fam.gamma_star)
    m_values = [m for m in s["m_values"] if m <= fam.max_m]
    rows = curve_with_flags(bound_curve(fam, s["epsilon"], m_values, consts), verdict)
    if s["csv"] or s["curve_csv"]:
        _write_csv(rows, s["csv"] or s["curve_csv"], CURVE_COLUMNS)
    exps = m_exponent_bounds(verdict, s["d"], s["r"], consts.c_dr)
    return {"schema": 1, "kind": "tractability", "family": fam_cfg, "verdict": verdict.to_dict(),
            "m_exponent": {k: (v if math.isfinite(v) else "inf") for k, v in exps.items()},
            "epsilon": s["epsilon"], "curve": rows}


def cmd_verify(s):
    from .verify import CHECKS, run_checks

    if s["checks"]:
        unknown = sorted(set(s["checks"]) - set(CHECKS))
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(unknown)}")
    results = run_checks(s["d"], s["r"], s["L"] or 8, s["tail_tolerance"], s["seed"], only=s["checks"])
    return {"schema": 1, "kind": "verify", "passed": all(r.passed for r in results),
            "checks": [r.to_dict() for r in results]}


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def _emit(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        settings = resolve_settings(args)
        result = COMMANDS[args.command](settings)
    except ConfigError as exc:
        return _fail(2, "invalid-config", str(exc))
    except PreconditionError as exc:
        return _fail(3, "precondition", str(exc))
    _emit(result, settings["output"])
    if args.command == "verify" and not result["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
