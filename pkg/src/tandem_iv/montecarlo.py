"""Monte Carlo experiments over parameter grids.

Trial t of grid point p always runs on the channel states keyed by
(master_seed, p, t), and trials are processed in fixed-size chunks whose
results are concatenated in order.  The output therefore does not depend on
the number of worker threads.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import bounds
from ._sweep import sweep
from .converse import geometric_sum_cdf
from .lpp import linear_regime_prediction
from .model import ErasureProfile, StateMatrix, message_bits
from .schedule import Schedule, round_half_up
from .simnet import ftlr_arrivals, run_gsi_batch

log = logging.getLogger(__name__)

SCHEMA_LINE = "# tandem-iv schema v1"
CHUNK = 256
THREADS_ENV = "TANDEM_IV_THREADS"
SCHEMES = ("ftlr", "bitsep", "gsi")


# ------------------------------------------------------------ grid pieces


@dataclass(frozen=True)
class ProfileSpec:
    """A profile family that can be instantiated at any k (explicit lists fix k)."""

    kind: str
    epsilon: float | None = None
    pattern: tuple[float, ...] | None = None
    epsilons: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == "homogeneous":
            if self.epsilon is None:
                raise ValueError("homogeneous profile needs 'epsilon'")
        elif self.kind == "periodic":
            if not self.pattern:
                raise ValueError("periodic profile needs a nonempty 'pattern'")
            object.__setattr__(self, "pattern", tuple(float(p) for p in self.pattern))
        elif self.kind == "explicit":
            if not self.epsilons:
                raise ValueError("explicit profile needs 'epsilons'")
            object.__setattr__(self, "epsilons", tuple(float(p) for p in self.epsilons))
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    def build(self, k: int | None) -> ErasureProfile:
        if self.kind == "homogeneous":
            return ErasureProfile.homogeneous(self.epsilon, k)
        if self.kind == "periodic":
            return ErasureProfile.periodic(self.pattern, k)
        if k is not None and k != len(self.epsilons):
            raise ValueError(f"explicit profile has {len(self.epsilons)} hops, grid asks for k={k}")
        return ErasureProfile.explicit(self.epsilons)

    @property
    def fixed_k(self) -> int | None:
        return len(self.epsilons) if self.kind == "explicit" else None

    @property
    def homogeneous(self) -> bool:
        return self.kind == "homogeneous" or len(set(self.epsilons or self.pattern or ())) == 1


@dataclass(frozen=True)
class Regime:
    """Message-size regime: constant m, m = k^rho, or m = alpha k."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("const", "poly", "linear"):
            raise ValueError(f"unknown regime {self.kind!r}")
        if self.kind == "const" and (self.value < 1 or self.value != int(self.value)):
            raise ValueError("constant regime needs a positive integer m")
        if self.kind != "const" and self.value <= 0:
            raise ValueError(f"{self.kind} regime needs a positive parameter")

    @property
    def label(self) -> str:
        name = {"const": "m", "poly": "rho", "linear": "alpha"}[self.kind]
        v = int(self.value) if self.kind == "const" else self.value
        return f"{name}={v!r}"

    @property
    def error_criterion(self) -> str:
        if self.kind == "const":
            return "exp(-o(k))"
        if self.kind == "poly":
            return "exp(-o(k^(1-2rho)))"
        return "n/a"


def regime_schedule(k: int, regime: Regime, scheme: str = "bitsep",
                    delta_sep: float | None = None) -> tuple[int, float | None]:
    """Message size for hop count k and, for bit separation, the exponent delta_sep.

    Polynomial regimes default to delta_sep = (1/2 - rho)/2, which keeps the
    decoding delay at sum 1/(1-eps_i) + o(k).
    """
    if regime.kind == "const":
        m = int(regime.value)
    elif regime.kind == "poly":
        m = max(1, round_half_up(k ** regime.value))
    else:
        m = max(1, round_half_up(regime.value * k))
    if scheme == "bitsep" and delta_sep is None:
        if regime.kind == "poly":
            delta_sep = (0.5 - regime.value) / 2
        else:
            delta_sep = 0.25
    if scheme == "bitsep" and regime.kind == "poly" and regime.value >= 0.5:
        warnings.warn(f"rho={regime.value} is outside the bit-separation achievability range (0, 1/2)")
        if delta_sep is not None and delta_sep <= 0:
            delta_sep = 0.05
    return m, delta_sep


@dataclass
class Experiment:
    scheme: str
    profiles: list[ProfileSpec]
    ks: list[int]
    regimes: list[Regime] = field(default_factory=lambda: [Regime("const", 1)])
    cs: list[float] = field(default_factory=lambda: [1.0])
    deltas: list[float | None] = field(default_factory=lambda: [None])
    trials: int = 100
    master_seed: int = 0
    message: str = "random"
    network_trials: int | None = None    # bitsep: full-network subsample size (None = all)
    deadline_factor: float = 1.1         # gsi: deadline = factor * k * predicted delay per hop
    name: str = ""

    def points(self):
        """Grid points in a fixed order: profile, k, regime, c, delta."""
        return list(itertools.product(self.profiles, self.ks, self.regimes, self.cs, self.deltas))

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not (self.profiles and self.ks and self.regimes and self.cs and self.deltas):
            raise ValueError("experiment grid is empty")
        if any(k < 1 for k in self.ks):
            raise ValueError("k must be positive")
        if any(c <= 0 for c in self.cs):
            raise ValueError("c must be positive")
        if any(d is not None and d <= 0 for d in self.deltas):
            raise ValueError("delta_sep must be positive")
        if self.message not in ("random", "alternating", "ones"):
            raise ValueError(f"unknown message mode {self.message!r}")
        for p in self.profiles:
            if p.fixed_k is not None and any(k != p.fixed_k for k in self.ks):
                raise ValueError("explicit profiles fix k; the k grid must match their length")
        if self.scheme == "ftlr" and any(r.kind != "const" or r.value != 1 for r in self.regimes):
            raise ValueError("ftlr carries a single bit; use regime m=1")
        if self.scheme == "bitsep" and any(r.kind == "linear" for r in self.regimes):
            raise ValueError("bit separation has no linear regime; use scheme gsi")
        if self.scheme == "gsi":
            if any(not p.homogeneous for p in self.profiles):
                raise ValueError("gsi experiments compare against the homogeneous delay law; "
                                 "heterogeneous profiles are not supported")
            if self.deadline_factor <= 0:
                raise ValueError("deadline_factor must be positive")


@dataclass
class EstimateRow:
    scheme: str
    point: int
    k: int
    m: int
    eps_spec: str
    regime: str
    c: float
    delta_sep: float
    trials: int
    metric: str                 # success | error | deadline_success
    estimate: float
    se: float
    bound: float                # analytic bound or prediction for ``metric``
    bound_kind: str             # lower | exact | upper | none
    verdict: str                # pass | fail | na
    error_criterion: str
    mean_delay: float
    p50_delay: float
    p90_delay: float
    delay_per_hop: float
    prediction_per_hop: float
    escape_rate_max: float = math.nan
    escape_verdict: str = "na"
    network_trials: int = 0
    network_success: float = math.nan
    collision_rate: float = math.nan
    soundness_violations: int = 0


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else math.nan


def _verdict(estimate: float, se: float, bound: float, kind: str, trials: int = 0) -> str:
    if kind == "none" or math.isnan(bound):
        return "na"
    if kind == "lower":
        return "pass" if estimate >= bound - 3 * se else "fail"
    if kind == "upper":
        return "pass" if estimate <= bound + 3 * se else "fail"
    # exact value: two-sided; the spread at the reference value covers p_hat = 0
    ref = max(se, binomial_se(bound, trials))
    return "pass" if abs(estimate - bound) <= max(3 * ref, 1e-12) else "fail"


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring %s=%r", THREADS_ENV, env)
    return os.cpu_count() or 1


def _chunks(n: int):
    return [(s, min(n, s + CHUNK)) for s in range(0, n, CHUNK)]


def _map_chunks(fn, n: int, threads: int):
    parts = _chunks(n)
    if threads <= 1 or len(parts) == 1:
        return [fn(a, b) for a, b in parts]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda ab: fn(*ab), parts))


def _delays(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan, math.nan
    return float(x.mean()), float(np.percentile(x, 50)), float(np.percentile(x, 90))


# ------------------------------------------------------------ per scheme


def _ftlr_point(exp, idx, prof, k, c, d, threads):
    d = 0.2 if d is None else d
    slack = c * k ** (0.5 + d)
    tau = math.ceil(float(prof.total_time_exact()) + slack)

    def run(a, b):
        sm = StateMatrix.batch(prof, tau, exp.master_seed, np.arange(a, b), idx)
        arr = ftlr_arrivals(prof, sm)
        b0 = message_bits(sm.keys, 1, exp.message)[:, 0]
        return arr, b0

    parts = _map_chunks(run, exp.trials, threads)
    arr = np.concatenate([p[0] for p in parts])
    b0 = np.concatenate([p[1] for p in parts])
    err = (b0 == 1) & (arr > tau)
    p_err = float(err.mean())
    se = binomial_se(p_err, exp.trials)
    tail = 1.0 - geometric_sum_cdf(prof, k, tau + 1)
    p_one = 0.5 if exp.message == "random" else 1.0
    exact = p_one * tail
    mean, p50, p90 = _delays(arr)
    return EstimateRow(
        scheme="ftlr", point=idx, k=k, m=1, eps_spec=prof.spec_string(), regime="m=1",
        c=c, delta_sep=d, trials=exp.trials, metric="error", estimate=p_err, se=se,
        bound=exact, bound_kind="exact", verdict=_verdict(p_err, se, exact, "exact", exp.trials),
        error_criterion="exp(-o(k))", mean_delay=mean, p50_delay=p50, p90_delay=p90,
        delay_per_hop=mean / k, prediction_per_hop=prof.zeta)


def _bitsep_point(exp, idx, prof, k, regime, c, d, threads):
    m, d = regime_schedule(k, regime, "bitsep", d)
    sched = Schedule.build(prof, m, c, d)
    horizon = sched.tau[-1]
    n_net = exp.trials if exp.network_trials is None else min(exp.trials, exp.network_trials)

    def run(a, b):
        sm = StateMatrix.batch(prof, horizon, exp.master_seed, np.arange(a, b), idx)
        net_hi = max(a, min(b, n_net))
        # fronts on every trial; the full network on the leading subsample
        if net_hi > a:
            sub = sm.subset(slice(0, net_hi - a))
            bits = message_bits(sub.keys, m, exp.message)
            r_net = sweep(sched, sub, bits, fronts=True, network=True)
        else:
            r_net = None
        if net_hi < b:
            rest = sm.subset(slice(net_hi - a, b - a))
            r_fr = sweep(sched, rest, None, fronts=True, network=False)
        else:
            r_fr = None
        return r_net, r_fr

    parts = _map_chunks(run, exp.trials, threads)
    A, E, ok, coll = [], [], [], []
    for r_net, r_fr in parts:
        for r in (r_net, r_fr):
            if r is not None:
                A.append(r.A.all(axis=1))
                E.append(r.E)
        if r_net is not None:
            ok.append(r_net.correct.all(axis=1))
            coll.append(r_net.collision)
    A = np.concatenate(A)
    E = np.concatenate(E)
    ok = np.concatenate(ok) if ok else np.zeros(0, bool)
    coll = np.concatenate(coll) if coll else np.zeros(0, bool)
    viol = int((A[:n_net] & ~ok).sum())

    p_succ = float(A.mean())
    se = binomial_se(p_succ, exp.trials)
    if sched.regime == "homogeneous":
        rep = bounds.success_bound_hom(k, m, prof.eps[0], c, d)
    else:
        rep = bounds.success_bound_het(prof, sched)
    bound = rep.success_lower_bound
    verdict = _verdict(p_succ, se, bound, "lower")

    esc_rate = E.mean(axis=0)
    esc_bound = np.exp(bounds.escape_bounds_on_schedule(sched))
    esc_ok = all(_verdict(float(r), binomial_se(float(r), exp.trials), float(b), "upper") == "pass"
                 for r, b in zip(esc_rate, esc_bound))
    if viol:
        verdict = "fail"
    if not esc_ok:
        verdict = "fail"
    tau_last = float(horizon)
    return EstimateRow(
        scheme="bitsep", point=idx, k=k, m=m, eps_spec=prof.spec_string(), regime=regime.label,
        c=c, delta_sep=d, trials=exp.trials, metric="success", estimate=p_succ, se=se,
        bound=bound, bound_kind="lower", verdict=verdict, error_criterion=regime.error_criterion,
        mean_delay=tau_last, p50_delay=tau_last, p90_delay=tau_last,
        delay_per_hop=tau_last / k, prediction_per_hop=prof.zeta,
        escape_rate_max=float(esc_rate.max()), escape_verdict="pass" if esc_ok else "fail",
        network_trials=n_net,
        network_success=float(ok.mean()) if n_net else math.nan,
        collision_rate=float(coll.mean()) if n_net else math.nan,
        soundness_violations=viol)


def _gsi_point(exp, idx, prof, k, regime, threads):
    m, _ = regime_schedule(k, regime, "gsi")
    eps = prof.eps[0]
    alpha = m / k if regime.kind != "linear" else regime.value
    pred, _ = linear_regime_prediction(eps, alpha)
    deadline = math.ceil(exp.deadline_factor * k * pred)

    def run(a, b):
        sm = StateMatrix.batch(prof, deadline, exp.master_seed, np.arange(a, b), idx)
        return run_gsi_batch(m, sm).completion

    comp = np.concatenate(_map_chunks(run, exp.trials, threads))
    done = comp >= 0
    succ = float((done & (comp <= deadline)).mean())
    mean, p50, p90 = _delays(comp[done])
    return EstimateRow(
        scheme="gsi", point=idx, k=k, m=m, eps_spec=prof.spec_string(), regime=regime.label,
        c=math.nan, delta_sep=math.nan, trials=exp.trials, metric="deadline_success",
        estimate=succ, se=binomial_se(succ, exp.trials), bound=math.nan, bound_kind="none",
        verdict="na", error_criterion=regime.error_criterion,
        mean_delay=mean, p50_delay=p50, p90_delay=p90,
        delay_per_hop=mean / k, prediction_per_hop=pred)


def run_experiment(exp: Experiment, threads: int | None = None, point_offset: int = 0) -> list[EstimateRow]:
    """One EstimateRow per grid point.

    Grid points are numbered from ``point_offset``; the number doubles as the
    seed stream, so experiments sharing a master seed should not overlap.
    """
    exp.validate()
    threads = thread_count(threads)
    rows = []
    for idx, (pspec, k, regime, c, d) in enumerate(exp.points(), start=point_offset):
        prof = pspec.build(k)
        if exp.scheme == "ftlr":
            rows.append(_ftlr_point(exp, idx, prof, k, c, d, threads))
        elif exp.scheme == "bitsep":
            rows.append(_bitsep_point(exp, idx, prof, k, regime, c, d, threads))
        else:
            rows.append(_gsi_point(exp, idx, prof, k, regime, threads))
        log.info("point %d done: %s", idx, rows[-1].verdict)
    return rows


# ------------------------------------------------------------ output


def fmt(v) -> str:
    """Round-trip text for CSV cells."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(SCHEMA_LINE + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


ROW_FIELDS = [f.name for f in fields(EstimateRow)]


def write_rows(path, rows: list[EstimateRow]) -> None:
    write_csv(path, ROW_FIELDS, [[getattr(r, f) for f in ROW_FIELDS] for r in rows])


def summarize(rows: list[EstimateRow]) -> str:
    out = []
    for r in rows:
        line = (f"[{r.scheme} #{r.point}] k={r.k} m={r.m} {r.eps_spec} {r.regime}: "
                f"{r.metric}={r.estimate:.6g} (se {r.se:.2g})")
        if r.bound_kind != "none":
            line += f" vs {r.bound_kind} {r.bound:.6g} -> {r.verdict}"
        line += f"; delay/hop {r.delay_per_hop:.6g} (ref {r.prediction_per_hop:.6g})"
        if r.scheme == "bitsep":
            line += (f"; escape max {r.escape_rate_max:.3g} ({r.escape_verdict})"
                     f"; network {r.network_success:.6g} on {r.network_trials}"
                     f"; soundness violations {r.soundness_violations}")
        out.append(line)
    n_fail = sum(r.verdict == "fail" for r in rows)
    out.append(f"{len(rows)} points, {n_fail} failing verdicts")
    return "\n".join(out) + "\n"


def rows_as_dicts(rows):
    return [asdict(r) for r in rows]
