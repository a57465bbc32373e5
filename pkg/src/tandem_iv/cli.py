"""Command-line interface: ``tandem-iv <subcommand> ...``.

Subcommands: simulate, bounds, converse, threshold-scan, lpp, compare.  All
tables are CSV files that start with a ``# tandem-iv schema v1`` line.
Configuration files are TOML; see README.md for the schema.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import bounds, converse, lpp, montecarlo
from .model import ErasureProfile, RandomnessSpec, StateMatrix
from .montecarlo import Experiment, ProfileSpec, Regime
from .schedule import Schedule, round_half_up
from .simnet import run_gsi_batch

log = logging.getLogger("tandem_iv")


class ConfigError(Exception):
    pass


# ------------------------------------------------------------ config schema


def _as_list(v, where):
    if isinstance(v, list):
        if not v:
            raise ConfigError(f"{where}: empty list")
        return v
    return [v]


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(repr, extra))}; "
                          f"allowed: {', '.join(sorted(allowed))}")


def _number(v, where, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if integer:
        if float(v) != int(v):
            raise ConfigError(f"{where}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _numbers(table, key, where, integer=False, default=None):
    if key not in table:
        return default
    return [_number(x, f"{where}.{key}", integer) for x in _as_list(table[key], f"{where}.{key}")]


PROFILE_KEYS = {"kind", "epsilon", "epsilons", "pattern", "k"}


def parse_profiles(table, where) -> list[ProfileSpec]:
    _check_keys(table, PROFILE_KEYS, where)
    kind = table.get("kind", "homogeneous")
    try:
        if kind == "homogeneous":
            if "epsilon" not in table:
                raise ConfigError(f"{where}: homogeneous profile needs 'epsilon'")
            eps = _numbers(table, "epsilon", where)
            return [ProfileSpec("homogeneous", epsilon=e) for e in eps]
        if kind == "periodic":
            pat = table.get("pattern")
            if not isinstance(pat, list):
                raise ConfigError(f"{where}: periodic profile needs a 'pattern' list")
            return [ProfileSpec("periodic", pattern=tuple(_number(x, f"{where}.pattern") for x in pat))]
        if kind == "explicit":
            eps = table.get("epsilons")
            if not isinstance(eps, list):
                raise ConfigError(f"{where}: explicit profile needs an 'epsilons' list")
            return [ProfileSpec("explicit", epsilons=tuple(_number(x, f"{where}.epsilons") for x in eps))]
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown profile kind {kind!r}")


def _profile_block(block, where):
    if "profile" in block and "profiles" in block:
        raise ConfigError(f"{where}: give either 'profile' or 'profiles'")
    if "profile" in block:
        return parse_profiles(block["profile"], f"{where}.profile")
    if "profiles" in block:
        out = []
        for n, p in enumerate(_as_list(block["profiles"], f"{where}.profiles")):
            out += parse_profiles(p, f"{where}.profiles[{n}]")
        return out
    raise ConfigError(f"{where}: missing 'profile'")


def _profile_k(block, where):
    """Hop count given inside the profile table, if any."""
    tables = [block["profile"]] if "profile" in block else list(block.get("profiles", []))
    ks = {t["k"] for t in tables if isinstance(t, dict) and "k" in t}
    if len(ks) > 1:
        raise ConfigError(f"{where}: profiles disagree on 'k'")
    return [_number(ks.pop(), f"{where}.profile.k", integer=True)] if ks else None


EXPERIMENT_KEYS = {"scheme", "profile", "profiles", "k", "m", "rho", "alpha", "c", "delta_sep",
                   "trials", "message", "network_trials", "deadline_factor", "name"}


def parse_experiment(block, where, seed) -> Experiment:
    _check_keys(block, EXPERIMENT_KEYS, where)
    scheme = block.get("scheme")
    if scheme not in montecarlo.SCHEMES:
        raise ConfigError(f"{where}.scheme: expected one of {montecarlo.SCHEMES}, got {scheme!r}")
    profiles = _profile_block(block, where)
    ks = _numbers(block, "k", where, integer=True) or _profile_k(block, where)
    if ks is None:
        fixed = {p.fixed_k for p in profiles}
        if len(fixed) == 1 and None not in fixed:
            ks = [fixed.pop()]
        else:
            raise ConfigError(f"{where}: missing 'k'")
    given = [key for key in ("m", "rho", "alpha") if key in block]
    if len(given) > 1:
        raise ConfigError(f"{where}: give only one of 'm', 'rho', 'alpha'")
    try:
        if not given:
            regimes = [Regime("const", 1)]
        elif given[0] == "m":
            regimes = [Regime("const", v) for v in _numbers(block, "m", where, integer=True)]
        elif given[0] == "rho":
            regimes = [Regime("poly", v) for v in _numbers(block, "rho", where)]
        else:
            regimes = [Regime("linear", v) for v in _numbers(block, "alpha", where)]
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    exp = Experiment(
        scheme=scheme, profiles=profiles, ks=ks, regimes=regimes,
        cs=_numbers(block, "c", where, default=[1.0]),
        deltas=_numbers(block, "delta_sep", where, default=[None]),
        trials=_number(block.get("trials", 100), f"{where}.trials", integer=True),
        master_seed=seed,
        message=block.get("message", "random"),
        network_trials=(None if "network_trials" not in block
                        else _number(block["network_trials"], f"{where}.network_trials", integer=True)),
        deadline_factor=_number(block.get("deadline_factor", 1.1), f"{where}.deadline_factor"),
        name=str(block.get("name", "")),
    )
    try:
        exp.validate()
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return exp


BOUNDS_KEYS = {"profile", "profiles", "k", "m", "c", "delta_sep"}
CONVERSE_KEYS = {"profile", "i_max", "n_max"}
SCAN_KEYS = {"profile", "alphas", "i_grid"}
LPP_KEYS = {"epsilon", "alpha", "k", "trials", "source"}
TOP_KEYS = {"master_seed", "out_dir", "threads", "experiment", "bounds", "converse",
            "threshold_scan", "lpp"}


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    _check_keys(raw, TOP_KEYS, "top level")
    seed = _number(raw.get("master_seed", 0), "master_seed", integer=True)
    cfg = {
        "master_seed": seed,
        "out_dir": raw.get("out_dir"),
        "threads": None if "threads" not in raw else _number(raw["threads"], "threads", integer=True),
        "experiments": [],
        "bounds": [],
        "converse": [],
        "threshold_scan": [],
        "lpp": [],
    }
    for n, block in enumerate(_as_list(raw.get("experiment", []), "experiment") if "experiment" in raw else []):
        cfg["experiments"].append(parse_experiment(block, f"experiment[{n}]", seed))
    for n, block in enumerate(raw.get("bounds", [])):
        where = f"bounds[{n}]"
        _check_keys(block, BOUNDS_KEYS, where)
        cfg["bounds"].append({
            "profiles": _profile_block(block, where),
            "k": (_numbers(block, "k", where, integer=True) or _profile_k(block, where)
                  or _missing(where, "k")),
            "m": _numbers(block, "m", where, integer=True, default=[1]),
            "c": _numbers(block, "c", where, default=[1.0]),
            "delta_sep": _numbers(block, "delta_sep", where, default=[0.25]),
        })
    for n, block in enumerate(raw.get("converse", [])):
        where = f"converse[{n}]"
        _check_keys(block, CONVERSE_KEYS, where)
        cfg["converse"].append({
            "profile": _profile_block(block, where)[0],
            "i_max": _number(block.get("i_max", 30), f"{where}.i_max", integer=True),
            "n_max": _number(block.get("n_max", 100), f"{where}.n_max", integer=True),
        })
    for n, block in enumerate(raw.get("threshold_scan", [])):
        where = f"threshold_scan[{n}]"
        _check_keys(block, SCAN_KEYS, where)
        cfg["threshold_scan"].append({
            "profile": _profile_block(block, where)[0],
            "alphas": _numbers(block, "alphas", where) or _missing(where, "alphas"),
            "i_grid": _numbers(block, "i_grid", where, integer=True) or _missing(where, "i_grid"),
        })
    for n, block in enumerate(raw.get("lpp", [])):
        where = f"lpp[{n}]"
        _check_keys(block, LPP_KEYS, where)
        source = block.get("source", "weights")
        if source not in ("weights", "gsi"):
            raise ConfigError(f"{where}.source: expected 'weights' or 'gsi', got {source!r}")
        if "epsilon" not in block:
            _missing(where, "epsilon")
        cfg["lpp"].append({
            "epsilon": _number(block["epsilon"], f"{where}.epsilon"),
            "alpha": _numbers(block, "alpha", where) or _missing(where, "alpha"),
            "k": _numbers(block, "k", where, integer=True) or _missing(where, "k"),
            "trials": _number(block.get("trials", 100), f"{where}.trials", integer=True),
            "source": source,
        })
    return cfg


def _missing(where, key):
    raise ConfigError(f"{where}: missing '{key}'")


# ------------------------------------------------------------ table builders


def bounds_rows(profiles, ks, ms, cs, deltas):
    rows = []
    for pspec in profiles:
        for k in ks:
            prof = pspec.build(k)
            for m in ms:
                for c in cs:
                    for d in deltas:
                        if prof.is_homogeneous:
                            e = prof.eps[0]
                            log_esc, _ = bounds.escape_bound_hom(k, e, c, d)
                            rep = bounds.success_bound_hom(k, m, e, c, d)
                            per_j = [log_esc] * m
                            form = "homogeneous"
                        else:
                            sched = Schedule.build(prof, m, c, d)
                            rep = bounds.success_bound_het(prof, sched)
                            per_j = list(rep.log_escape_bound)
                            form = rep.source
                        for j, le in enumerate(per_j):
                            rows.append([k, m, prof.spec_string(), c, d, j, le,
                                         rep.success_lower_bound, int(rep.vacuous), form])
    return rows


BOUNDS_HEADER = ["k", "m", "eps_spec", "c", "delta_sep", "j", "log_escape", "success_lb",
                 "vacuous_flag", "form"]


def converse_rows(profile, i_max, n_max):
    table = converse.g_table(profile, i_max, n_max)
    rows, worst = [], 0.0
    for i in range(1, i_max + 1):
        for n in range(n_max + 1):
            g = table(i, n)
            worst = max(worst, abs(g - converse.geometric_sum_cdf(profile, i, i + n)))
            floor = converse.binary_entropy_inverse(max(0.0, 1.0 - g))
            rows.append([i, n, g, floor])
    return rows, worst


def lpp_tables(eps, alphas, ks, trials, seed, source="weights"):
    trial_rows, summary_rows = [], []
    point = 0
    for alpha in alphas:
        pred, _ = lpp.linear_regime_prediction(eps, alpha)
        for k in ks:
            m = max(1, round_half_up(alpha * k))
            if source == "weights":
                rng = RandomnessSpec(seed, 0, point).generator()
                G = lpp.lpp_passage(lpp.geometric_weights(rng, eps, (trials, k, m)), full=False)
            else:
                prof = ErasureProfile.homogeneous(eps, k)
                sm = StateMatrix.batch(prof, k + m, seed, trials, point)
                G = run_gsi_batch(m, sm).completion
            for t, g in enumerate(G):
                trial_rows.append([k, m, eps, t, int(g)])
            summary_rows.append([k, alpha, eps, float(np.mean(G)) / k, pred])
            point += 1
    return trial_rows, summary_rows


def _int_list(text):
    out = []
    for x in str(text).split(","):
        if x.strip():
            v = float(x)
            if v != int(v):
                raise argparse.ArgumentTypeError(f"not an integer: {x}")
            out.append(int(v))
    return out


def _float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _profiles_from_args(args) -> list[ProfileSpec]:
    if args.eps_list is not None:
        return [ProfileSpec("periodic", pattern=tuple(args.eps_list))]
    if args.eps is None:
        raise ConfigError("give --eps or --eps-list")
    return [ProfileSpec("homogeneous", epsilon=e) for e in args.eps]


def _write_or_print(path, header, rows):
    if path is None or str(path) == "-":
        sys.stdout.write(montecarlo.SCHEMA_LINE + "\n")
        sys.stdout.write(",".join(header) + "\n")
        for r in rows:
            sys.stdout.write(",".join(montecarlo.fmt(v) for v in r) + "\n")
    else:
        montecarlo.write_csv(path, header, rows)


# ------------------------------------------------------------ subcommands


def cmd_simulate(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        experiments = cfg["experiments"]
        threads = args.threads if args.threads is not None else cfg["threads"]
        out = Path(args.out or cfg["out_dir"] or "out")
    else:
        if args.scheme is None or args.k is None:
            raise ConfigError("give --config or at least --scheme and --k")
        regimes = [Regime("const", 1)]
        try:
            if args.m is not None:
                regimes = [Regime("const", v) for v in args.m]
            elif args.rho is not None:
                regimes = [Regime("poly", v) for v in args.rho]
            elif args.alpha is not None:
                regimes = [Regime("linear", v) for v in args.alpha]
            exp = Experiment(
                scheme=args.scheme, profiles=_profiles_from_args(args), ks=args.k, regimes=regimes,
                cs=args.c or [1.0], deltas=args.delta_sep or [None], trials=args.trials,
                master_seed=args.seed, message=args.message, network_trials=args.network_trials)
            exp.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        cfg = {"bounds": [], "converse": [], "threshold_scan": [], "lpp": [], "master_seed": args.seed}
        experiments = [exp]
        threads = args.threads
        out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for exp in experiments:
        rows += montecarlo.run_experiment(exp, threads=threads, point_offset=len(rows))
    montecarlo.write_rows(out / "results.csv", rows)
    summary = montecarlo.summarize(rows)
    for n, b in enumerate(cfg["bounds"]):
        montecarlo.write_csv(out / f"bounds_{n}.csv", BOUNDS_HEADER,
                             bounds_rows(b["profiles"], b["k"], b["m"], b["c"], b["delta_sep"]))
    for n, b in enumerate(cfg["converse"]):
        prof = b["profile"].build(b["i_max"])
        crow, worst = converse_rows(prof, b["i_max"], b["n_max"])
        montecarlo.write_csv(out / f"converse_{n}.csv", ["i", "n", "g", "error_floor"], crow)
        summary += f"converse[{n}]: identity max deviation {worst!r}\n"
    for n, b in enumerate(cfg["threshold_scan"]):
        prof = b["profile"].build(max(b["i_grid"]))
        scan = converse.velocity_threshold_scan(prof, b["alphas"], b["i_grid"])
        montecarlo.write_csv(out / f"threshold_scan_{n}.csv", ["alpha", "i", "g"],
                             [(a, i, g) for a, i, _, g in scan.rows])
        summary += f"threshold_scan[{n}]: trends {scan.trend}\n"
    for n, b in enumerate(cfg["lpp"]):
        tr, sm = lpp_tables(b["epsilon"], b["alpha"], b["k"], b["trials"], cfg["master_seed"], b["source"])
        montecarlo.write_csv(out / f"lpp_trials_{n}.csv", ["k", "m", "eps", "trial", "G_km"], tr)
        montecarlo.write_csv(out / f"lpp_summary_{n}.csv",
                             ["k", "alpha", "eps", "mean_delay_per_hop", "prediction"], sm)
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    if args.tripwire and any(r.verdict == "fail" for r in rows):
        return 2
    return 0


def cmd_bounds(args) -> int:
    rows = bounds_rows(_profiles_from_args(args), args.k, args.m, args.c, args.delta_sep)
    _write_or_print(args.out, BOUNDS_HEADER, rows)
    seen = set()
    for r in rows:
        key = tuple(r[:5])
        if key not in seen:
            seen.add(key)
            sys.stderr.write(f"k={r[0]} m={r[1]} {r[2]} c={r[3]} delta_sep={r[4]}: "
                             f"success_lb={r[7]!r}{' (vacuous)' if r[8] else ''}\n")
    return 0


def cmd_converse(args) -> int:
    pspec = _profiles_from_args(args)[0]
    prof = pspec.build(args.k or args.i_max)
    rows, worst = converse_rows(prof, args.i_max, args.n_max)
    _write_or_print(args.out, ["i", "n", "g", "error_floor"], rows)
    ok = worst <= 1e-12
    sys.stderr.write(f"g table vs geometric-sum CDF: max deviation {worst!r} ({'ok' if ok else 'FAILED'})\n")
    return 0 if ok else 2


def cmd_threshold_scan(args) -> int:
    pspec = _profiles_from_args(args)[0]
    prof = pspec.build(args.k or max(args.i_grid))
    scan = converse.velocity_threshold_scan(prof, args.alphas, args.i_grid)
    _write_or_print(args.out, ["alpha", "i", "g"], [(a, i, g) for a, i, _, g in scan.rows])
    sys.stderr.write(f"1/zeta = {scan.inverse_zeta!r}; trends: {scan.trend}\n")
    return 0


def cmd_lpp(args) -> int:
    if args.eps is None or len(args.eps) != 1:
        raise ConfigError("lpp needs a single --eps")
    tr, sm = lpp_tables(args.eps[0], args.alpha, args.k, args.trials, args.seed, args.source)
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    montecarlo.write_csv(out / "lpp_trials.csv", ["k", "m", "eps", "trial", "G_km"], tr)
    montecarlo.write_csv(out / "lpp_summary.csv",
                         ["k", "alpha", "eps", "mean_delay_per_hop", "prediction"], sm)
    for k, alpha, eps, mean, pred in sm:
        sys.stdout.write(f"k={k} alpha={alpha!r} eps={eps!r}: mean delay/hop {mean:.6g}, "
                         f"prediction {pred:.6g}\n")
    return 0


COMPARE_HEADER = ["x", "empirical", "empirical_se", "bound_or_prediction", "source_tag"]
JOIN_KEYS = ("k", "m", "eps_spec", "c", "delta_sep")


def _key(row):
    out = []
    for name in JOIN_KEYS:
        v = row[name]
        try:
            out.append(repr(float(v)))
        except ValueError:
            out.append(v)
    return tuple(out)


def compare_rows(results, analytic=None, x="k"):
    """Join empirical rows with their analytic counterpart.

    Without an analytic table the bound/prediction stored with each result is
    used.  Returns (rows, unmatched result keys).
    """
    lookup = {}
    if analytic is not None:
        for r in analytic:
            lookup.setdefault(_key(r), float(r["success_lb"]))
    rows, unmatched = [], []
    for r in results:
        if x not in r:
            raise ConfigError(f"results have no column {x!r}")
        if analytic is not None:
            key = _key(r)
            if key not in lookup:
                unmatched.append(key)
                continue
            ref, tag = lookup[key], f"{r['scheme']}:bounds_table"
        elif r["bound_kind"] != "none":
            ref, tag = float(r["bound"]), f"{r['scheme']}:{r['bound_kind']}_{r['metric']}"
        else:
            ref, tag = float(r["prediction_per_hop"]), f"{r['scheme']}:prediction_delay_per_hop"
            rows.append([float(r[x]), float(r["delay_per_hop"]), math.nan, ref, tag])
            continue
        rows.append([float(r[x]), float(r["estimate"]), float(r["se"]), ref, tag])
    return rows, unmatched


def cmd_compare(args) -> int:
    results = montecarlo.read_csv(args.results)
    analytic = montecarlo.read_csv(args.analytic) if args.analytic else None
    rows, unmatched = compare_rows(results, analytic, args.x)
    for key in unmatched:
        sys.stderr.write(f"no analytic row for {dict(zip(JOIN_KEYS, key))}\n")
    _write_or_print(args.out, COMPARE_HEADER, rows)
    if unmatched and not rows:
        return 1
    return 0


# ------------------------------------------------------------ parser


def _add_profile_flags(p):
    p.add_argument("--eps", type=_float_list, help="erasure probability (comma list for a grid)")
    p.add_argument("--eps-list", type=_float_list,
                   help="periodic pattern of per-hop erasure probabilities, e.g. 0.2,0.4")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tandem-iv", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run Monte Carlo experiments")
    s.add_argument("--config", help="TOML configuration file")
    s.add_argument("--scheme", choices=montecarlo.SCHEMES)
    _add_profile_flags(s)
    s.add_argument("--k", type=_int_list)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--m", type=_int_list)
    g.add_argument("--rho", type=_float_list)
    g.add_argument("--alpha", type=_float_list)
    s.add_argument("--c", type=_float_list)
    s.add_argument("--delta-sep", type=_float_list)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--message", choices=("random", "alternating", "ones"), default="random")
    s.add_argument("--network-trials", type=int)
    s.add_argument("--threads", type=int, help=f"worker threads (default: ${montecarlo.THREADS_ENV} or all cores)")
    s.add_argument("--out", help="output directory")
    s.add_argument("--tripwire", action="store_true", help="exit 2 if any verdict fails")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="evaluate the achievability bounds")
    _add_profile_flags(b)
    b.add_argument("--k", type=_int_list, required=True)
    b.add_argument("--m", type=_int_list, default=[1])
    b.add_argument("--c", type=_float_list, default=[1.0])
    b.add_argument("--delta-sep", type=_float_list, default=[0.25])
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bounds)

    c = sub.add_parser("converse", help="g(i, n) table and Fano error floors")
    _add_profile_flags(c)
    c.add_argument("--k", type=int, help="hop count (default i-max)")
    c.add_argument("--i-max", type=int, default=30)
    c.add_argument("--n-max", type=int, default=100)
    c.add_argument("--out", help="CSV path (default stdout)")
    c.set_defaults(func=cmd_converse)

    t = sub.add_parser("threshold-scan", help="g along velocity lines n = (1-alpha)/alpha i")
    _add_profile_flags(t)
    t.add_argument("--k", type=int)
    t.add_argument("--alphas", type=_float_list, required=True)
    t.add_argument("--i-grid", type=_int_list, required=True)
    t.add_argument("--out", help="CSV path (default stdout)")
    t.set_defaults(func=cmd_threshold_scan)

    l = sub.add_parser("lpp", help="GSI delay through last-passage percolation")
    l.add_argument("--eps", type=_float_list, required=True)
    l.add_argument("--alpha", type=_float_list, required=True)
    l.add_argument("--k", type=_int_list, required=True)
    l.add_argument("--trials", type=int, default=100)
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--source", choices=("weights", "gsi"), default="weights",
                   help="i.i.d. geometric weights or full GSI network runs")
    l.add_argument("--out", help="output directory")
    l.set_defaults(func=cmd_lpp)

    p = sub.add_parser("compare", help="join empirical results with bounds or predictions")
    p.add_argument("--results", required=True)
    p.add_argument("--analytic", help="bounds CSV to join on (k, m, eps_spec, c, delta_sep)")
    p.add_argument("--x", default="k")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
