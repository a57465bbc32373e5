"""Converse side: the g(i, n) recursion and what follows from it.

g(i, n) upper-bounds the information about a one-bit message available at
node i after i + n - 1 slots.  It satisfies

    g(i, 0) = 0 (i >= 1),   g(0, n) = 1 (n >= 1),
    g(i, n) = (1 - eps_{i-1}) g(i-1, n) + eps_{i-1} g(i, n-1),

and equals P(G_0 + ... + G_{i-1} < i + n) for independent G_l ~ Geom(1 - eps_l)
on {1, 2, ...}.  Both sides are computed here by separate dynamic programs
(a CDF recursion and a pmf convolution) so each can check the other.

The mutual-information inequalities that lead to g are not evaluated; only
their consequence g and the Fano error floor it implies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import bisect
from scipy.signal import lfilter

from .model import ErasureProfile


@dataclass
class GTable:
    profile: ErasureProfile
    values: np.ndarray    # (I+1, N+1); values[0, 0] is NaN (outside the domain)

    def __call__(self, i: int, n: int) -> float:
        if i == 0 and n == 0:
            raise ValueError("g is not defined at (0, 0)")
        return float(self.values[i, n])

    @property
    def shape(self):
        return self.values.shape


def g_table(profile: ErasureProfile, I: int, N: int) -> GTable:
    """g(i, n) for 0 <= i <= I, 0 <= n <= N.  Each row is a first-order linear filter."""
    if I > profile.hops:
        raise ValueError(f"I={I} exceeds the number of hops {profile.hops}")
    if I < 0 or N < 0:
        raise ValueError("I and N must be non-negative")
    g = np.zeros((I + 1, N + 1))
    g[0, 1:] = 1.0
    eps = profile.eps_array()
    for i in range(1, I + 1):
        e = eps[i - 1]
        if N:
            # y[n] = (1 - e) g(i-1, n) + e y[n-1], y[0] = 0
            g[i, 1:] = lfilter([1.0 - e], [1.0, -e], g[i - 1, 1:])
    g[0, 0] = np.nan
    return GTable(profile, g)


@dataclass
class SumDistribution:
    hops: int
    cap: int
    pmf: np.ndarray     # pmf[t] = P(sum = t) for 0 <= t <= cap
    tail: float         # P(sum > cap)

    def cdf_below(self, t: int) -> float:
        """P(sum < t), exact for t <= cap + 1."""
        if t <= 0:
            return 0.0
        if t > self.cap + 1:
            raise ValueError("threshold beyond the tracked support")
        return float(self.pmf[:t].sum())


def sum_distribution(profile: ErasureProfile, i: int, cap: int) -> SumDistribution:
    """Law of G_0 + ... + G_{i-1} on [0, cap] plus the mass beyond cap."""
    if i < 1:
        raise ValueError("need at least one hop")
    if i > profile.hops:
        raise ValueError(f"i={i} exceeds the number of hops {profile.hops}")
    cap = int(cap)
    pmf = np.zeros(cap + 1)
    pmf[0] = 1.0
    tail = 0.0
    eps = profile.eps_array()
    t = np.arange(cap + 1)
    for l in range(i):
        e = float(eps[l])
        p = 1.0 - e
        # mass leaving the window: sum_t pmf[t] P(G > cap - t)
        tail += float(pmf @ (e ** (cap - t)))
        # q[t] = p pmf[t-1] + e q[t-1]
        shifted = np.concatenate([[0.0], pmf[:-1]])
        pmf = lfilter([p], [1.0, -e], shifted)
    return SumDistribution(i, cap, pmf, tail)


def geometric_sum_cdf(profile: ErasureProfile, i: int, t: int) -> float:
    """P(G_0 + ... + G_{i-1} < t)."""
    if i < 1:
        raise ValueError("need at least one hop")
    if t <= i:
        return 0.0
    mean = float(profile.time_transform(i))
    cap = max(int(t), int(math.ceil(20 * mean)))
    return sum_distribution(profile, i, cap).cdf_below(int(t))


# ------------------------------------------------------------ Fano


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def binary_entropy_inverse(h: float, xtol: float = 1e-12) -> float:
    """The p in [0, 1/2] with h2(p) = h."""
    if h <= 0.0:
        return 0.0
    if h >= 1.0:
        return 0.5
    return bisect(lambda p: binary_entropy(p) - h, 0.0, 0.5, xtol=xtol)


def slots_to_offset(i: int, n_total: int) -> int:
    """Node i observing slots 1..n_total corresponds to g(i, n) with n = n_total - i + 1."""
    return n_total - i + 1


def fano_error_floor(profile: ErasureProfile, i: int, n_total: int) -> float:
    """Lower bound on the one-bit error at node i after slot n_total.

    h2(Pe) >= 1 - g(i, n) with n = n_total - i + 1; when n <= 0 nothing has
    reached node i and g = 0.
    """
    if i < 1:
        raise ValueError("node index must be at least 1")
    n = slots_to_offset(i, n_total)
    g = 0.0 if n <= 0 else g_table(profile, i, n)(i, n)
    return binary_entropy_inverse(max(0.0, 1.0 - g))


# ------------------------------------------------------------ threshold scan


def scan_offset(alpha: float, i: int) -> int:
    """ceil((1 - alpha)/alpha * i) + 1, with alpha read as a decimal."""
    a = Fraction(str(alpha))
    return math.ceil((1 - a) / a * i) + 1


@dataclass
class ThresholdScan:
    rows: list            # (alpha, i, n, g)
    trend: dict           # alpha -> "decreasing" | "increasing" | "mixed"
    inverse_zeta: float


def velocity_threshold_scan(profile: ErasureProfile, alphas, i_grid) -> ThresholdScan:
    alphas = [float(a) for a in alphas]
    i_grid = sorted(int(i) for i in i_grid)
    if any(a <= 0 or a > 1 for a in alphas):
        raise ValueError("alpha must lie in (0, 1]")
    if not i_grid or i_grid[0] < 1:
        raise ValueError("i_grid needs positive node indices")
    I = i_grid[-1]
    N = max(scan_offset(a, i) for a in alphas for i in i_grid)
    table = g_table(profile, I, N)
    rows, trend = [], {}
    for a in alphas:
        vals = []
        for i in i_grid:
            n = scan_offset(a, i)
            v = table(i, n)
            vals.append(v)
            rows.append((a, i, n, v))
        d = np.diff(vals)
        if np.all(d <= 0):
            trend[a] = "decreasing"
        elif np.all(d >= 0):
            trend[a] = "increasing"
        else:
            trend[a] = "mixed"
    return ThresholdScan(rows, trend, 1.0 / profile.zeta)
