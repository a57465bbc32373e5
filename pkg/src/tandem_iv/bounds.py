"""Closed-form achievability bounds for the bit-separation scheme.

Everything is evaluated in the natural-log domain.  A bound whose value is at
least 1 is reported as is, together with a ``vacuous`` flag, instead of being
clipped.

Homogeneous case: the front of bit j is compared with its mean position
kappa = (n - j*l)(1 - eps), and the escape event has probability at most

    2 exp(-(l(1-eps)/2)^2 / (2 (k/(1-eps) + l/2)))

by the maximal Azuma-Hoeffding inequality.  With l = c k^(1/2+delta) this is
the same number as 2 exp(-c' k^(2 delta) / (1 + (1-eps) c k^(delta-1/2) / 2)),
where c' = (1-eps)^3 c^2 / 8.

Heterogeneous case: the front is tracked through the time transform T, and
the escape bound uses v_min, v_max and the increment bound
M = max(1/v_min - 1, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ErasureProfile
from .schedule import Schedule


@dataclass
class BoundReport:
    log_escape_bound: np.ndarray       # per bit j
    log_failure_bound: float           # log of the union bound over the m bits
    success_lower_bound: float         # 1 - exp(log_failure_bound), clipped to [0, 1]
    vacuous: bool                      # failure bound >= 1
    constants: dict = field(default_factory=dict)
    source: str = "displayed"          # which form produced success_lower_bound
    alternatives: dict = field(default_factory=dict)
    lemma_regime: bool = True          # finite-k conditions behind the bound hold


def _success_from_log(log_fail: float) -> float:
    if log_fail == -math.inf:
        return 1.0
    return float(min(1.0, max(0.0, -math.expm1(log_fail))))


def _logsumexp(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -math.inf
    top = float(x.max())
    if top == -math.inf:
        return -math.inf
    return top + math.log(float(np.exp(x - top).sum()))


# ------------------------------------------------------------ centers


def time_transform(profile: ErasureProfile, i):
    """T(i) = sum_{l < i} 1/(1 - eps_l), with the virtual-hop extension past k."""
    return profile.time_transform(i)


def kappa(regime: str, profile: ErasureProfile, schedule: Schedule, j: int, n):
    """Center of front j at slot n."""
    n = np.asarray(n)
    elapsed = n - j * schedule.l_sep
    if np.any(elapsed < 0):
        raise ValueError("kappa is defined for n >= j * l_sep only")
    if regime == "homogeneous":
        if not profile.is_homogeneous:
            raise ValueError("homogeneous centers need equal erasure probabilities")
        out = elapsed * (1.0 - profile.eps[0])
        return float(out) if out.ndim == 0 else out
    if regime != "heterogeneous":
        raise ValueError(f"unknown regime {regime!r}")
    out = profile.time_quantile(elapsed)
    return int(out) if out.ndim == 0 else out


def kappa_linear_scan(profile: ErasureProfile, x: float) -> int:
    """sup{i : T(i) <= x} by walking up from 0 (reference for kappa)."""
    i = 0
    while profile.time_transform(i + 1) <= x:
        i += 1
    return i


@dataclass
class SeparationCheck:
    min_gap: float
    threshold: float
    satisfied: bool
    argmin_elapsed: int

    @property
    def message(self) -> str:
        if self.satisfied:
            return f"min gap {self.min_gap} > {self.threshold}"
        return f"threshold not met at this k: min gap {self.min_gap} <= {self.threshold}"


def check_kappa_separation(profile: ErasureProfile, schedule: Schedule, stride: int = 1) -> SeparationCheck:
    """Smallest |kappa_{j,n} - kappa_{j-1,n}| over 1 <= j < m, j*l < n <= tau_{m-1}.

    The gap only depends on x = n - j*l, so the scan runs over x in
    [1, tau_{m-1} - l] (every ``stride``-th value, plus the last one).
    """
    l = schedule.l_sep
    thr = 0.5 * profile.v_min * l
    if schedule.m < 2:
        return SeparationCheck(math.inf, thr, True, -1)
    x_max = schedule.tau[-1] - l
    xs = np.arange(1, x_max + 1, max(1, int(stride)), dtype=np.int64)
    if xs.size == 0 or xs[-1] != x_max:
        xs = np.append(xs, x_max)
    if schedule.regime == "homogeneous":
        gaps = np.full(xs.shape, l * (1.0 - profile.eps[0]))
    else:
        gaps = (profile.time_quantile(xs + l) - profile.time_quantile(xs)).astype(float)
    at = int(np.argmin(gaps))
    g = float(gaps[at])
    return SeparationCheck(g, thr, g > thr, int(xs[at]))


# ------------------------------------------------------------ homogeneous


def c_prime(eps: float, c: float) -> float:
    return (1.0 - eps) ** 3 * c ** 2 / 8.0


def separation_real(k: float, c: float, delta_sep: float) -> float:
    return c * k ** (0.5 + delta_sep)


def escape_bound_hom(k: float, eps: float, c: float, delta_sep: float, l: float | None = None,
                     steps: float | None = None):
    """(log bound, vacuous) for the escape probability of one front.

    ``l`` defaults to the unrounded c * k^(1/2 + delta_sep).  ``steps`` is the
    length of the observation window, k/(1-eps) + l/2 by default; pass
    tau_j - j*l_sep to evaluate on a concrete schedule.
    """
    if l is None:
        l = separation_real(k, c, delta_sep)
    v = 1.0 - eps
    if steps is None:
        steps = k / v + 0.5 * l
    num = (0.5 * l * v) ** 2
    den = 2.0 * steps
    log_b = math.log(2.0) - num / den
    return log_b, log_b >= 0.0


def success_bound_hom(k: float, m: int, eps: float, c: float, delta_sep: float) -> BoundReport:
    """1 - 2m exp(-c' k^(2 delta) / (1 + (1 - eps) c k^(delta - 1/2) / 2))."""
    cp = c_prime(eps, c)
    expo = cp * k ** (2 * delta_sep) / (1.0 + 0.5 * (1.0 - eps) * c * k ** (delta_sep - 0.5))
    log_esc = math.log(2.0) - expo
    log_fail = -math.inf if m == 0 else math.log(m) + log_esc
    return BoundReport(
        log_escape_bound=np.full(m, log_esc),
        log_failure_bound=log_fail,
        success_lower_bound=_success_from_log(log_fail),
        vacuous=log_fail >= 0.0,
        constants={"c_prime": cp, "v_min": 1.0 - eps, "v_max": 1.0 - eps,
                   "l_sep": separation_real(k, c, delta_sep)},
    )


# ------------------------------------------------------------ heterogeneous


def escape_bounds_on_schedule(schedule: Schedule) -> np.ndarray:
    """Per-bit log escape bounds evaluated with the schedule's integer l_sep and tau."""
    prof = schedule.profile
    if schedule.regime == "homogeneous":
        e = prof.eps[0]
        return np.array([escape_bound_hom(prof.hops, e, schedule.c, schedule.delta_sep,
                                          l=schedule.l_sep,
                                          steps=schedule.tau[j] - j * schedule.l_sep)[0]
                         for j in range(schedule.m)])
    return np.array([escape_bound_het(prof, schedule, j) for j in range(schedule.m)])


def increment_bound(profile: ErasureProfile) -> float:
    return max(1.0 / profile.v_min - 1.0, 1.0)


def c_double_prime(profile: ErasureProfile, c: float) -> float:
    return c ** 2 / 50.0 * profile.v_min ** 3 / profile.v_max ** 2


def escape_bound_het(profile: ErasureProfile, schedule: Schedule, j: int) -> float:
    """Log of 2 exp(-(v_min l / (5 v_max))^2 / (2 (tau_j - j l) M^2))."""
    if not 0 <= j < schedule.m:
        raise ValueError("bit index out of range")
    l = schedule.l_sep
    M = increment_bound(profile)
    num = (profile.v_min * l / (5.0 * profile.v_max)) ** 2
    den = 2.0 * (schedule.tau[j] - j * l) * M ** 2
    return math.log(2.0) - num / den


def het_lemma_regime(profile: ErasureProfile, l: float) -> bool:
    """Whether l is large enough for l v_min/(4 v_max) - 1/v_min >= l v_min/(5 v_max)."""
    return l >= 20.0 * profile.v_max / profile.v_min ** 2


def success_bound_het(profile: ErasureProfile, schedule: Schedule, m: int | None = None) -> BoundReport:
    """Heterogeneous success bound, in two forms.

    ``displayed``: 1 - 2m exp(-c'' k^(2 delta) / (1 + (c/4) v_min M^2 k^(delta-1/2))).
    ``union``: 1 - sum_j of the per-bit escape bounds on this schedule.
    The two differ in where M^2 enters; the larger lower bound is reported.
    """
    m = schedule.m if m is None else int(m)
    if m > schedule.m:
        raise ValueError("schedule has fewer bits than requested")
    k = profile.hops
    c, d = schedule.c, schedule.delta_sep
    M = increment_bound(profile)
    log_esc = np.array([escape_bound_het(profile, schedule, j) for j in range(m)])
    log_union = _logsumexp(log_esc)
    if math.isnan(c) or math.isnan(d):
        log_disp = math.nan
    else:
        cpp = c_double_prime(profile, c)
        expo = cpp * k ** (2 * d) / (1.0 + c / 4.0 * profile.v_min * M ** 2 * k ** (d - 0.5))
        log_disp = -math.inf if m == 0 else math.log(2.0 * m) - expo
    s_union = _success_from_log(log_union)
    s_disp = math.nan if math.isnan(log_disp) else _success_from_log(log_disp)
    if math.isnan(s_disp) or s_union >= s_disp:
        source, log_fail = "union", log_union
    else:
        source, log_fail = "displayed", log_disp
    return BoundReport(
        log_escape_bound=log_esc,
        log_failure_bound=log_fail,
        success_lower_bound=_success_from_log(log_fail),
        vacuous=log_fail >= 0.0,
        constants={"c_double_prime": c_double_prime(profile, c) if not math.isnan(c) else math.nan,
                   "v_min": profile.v_min, "v_max": profile.v_max,
                   "increment_bound": M, "l_sep": schedule.l_sep},
        source=source,
        alternatives={"displayed": s_disp, "union": s_union,
                      "log_displayed": log_disp, "log_union": log_union},
        lemma_regime=het_lemma_regime(profile, schedule.l_sep),
    )
