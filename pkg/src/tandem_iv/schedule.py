"""Source timing of the bit-separation scheme."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import ErasureProfile


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def separation_length(k: int, c: float, delta_sep: float) -> int:
    """Repetition length c * k**(0.5 + delta_sep), rounded half up, at least 1."""
    return max(1, round_half_up(c * k ** (0.5 + delta_sep)))


@dataclass(frozen=True)
class Schedule:
    """Repetition length and decoding deadlines for an m-bit message.

    The source sends bit j during slots (j*l_sep, (j+1)*l_sep] and keeps
    repeating the last bit afterwards; the destination reads bit j at tau[j].
    """

    profile: ErasureProfile
    m: int
    c: float
    delta_sep: float
    l_sep: int
    tau: tuple[int, ...]
    regime: str

    @property
    def k(self) -> int:
        return self.profile.hops

    @classmethod
    def build(cls, profile: ErasureProfile, m: int, c: float, delta_sep: float,
              regime: str | None = None, l_sep: int | None = None) -> "Schedule":
        if m < 1:
            raise ValueError("message needs at least one bit")
        if c <= 0 or delta_sep <= 0:
            raise ValueError("c and delta_sep must be positive")
        if regime is None:
            regime = "homogeneous" if profile.is_homogeneous else "heterogeneous"
        if regime == "homogeneous" and not profile.is_homogeneous:
            raise ValueError("homogeneous schedule needs equal erasure probabilities")
        if regime not in ("homogeneous", "heterogeneous"):
            raise ValueError(f"unknown regime {regime!r}")
        k = profile.hops
        l = separation_length(k, c, delta_sep) if l_sep is None else int(l_sep)
        if l < 1:
            raise ValueError("l_sep must be at least 1")
        total = profile.total_time_exact()
        offset = Fraction(1, 2) if regime == "homogeneous" else Fraction(1, 4)
        tau = tuple(math.ceil(total + (j + offset) * l) for j in range(m))
        return cls(profile, int(m), float(c), float(delta_sep), l, tau, regime)

    @classmethod
    def single_bit(cls, profile: ErasureProfile, tau: int) -> "Schedule":
        """One-bit schedule: the source repeats b_0 forever, decode at ``tau``."""
        if tau < 1:
            raise ValueError("decode time must be a positive slot")
        regime = "homogeneous" if profile.is_homogeneous else "heterogeneous"
        return cls(profile, 1, float("nan"), float("nan"), 1, (int(tau),), regime)

    @property
    def starts(self) -> tuple[int, ...]:
        return tuple(j * self.l_sep for j in range(self.m))

    @property
    def clip(self) -> int:
        """Front positions are clipped here; only positions <= k matter."""
        return self.k + self.l_sep

    def escape_threshold(self) -> float:
        if self.regime == "homogeneous":
            return 0.5 * self.l_sep * (1.0 - self.profile.eps[0])
        return 0.25 * self.profile.v_min * self.l_sep


def front_center(schedule: Schedule, elapsed):
    """Deterministic front center after ``elapsed`` slots since a bit's start.

    Homogeneous: elapsed * (1 - eps).  Heterogeneous: the largest position
    whose expected crossing time does not exceed ``elapsed``.
    """
    elapsed = np.asarray(elapsed)
    if schedule.regime == "homogeneous":
        return elapsed * (1.0 - schedule.profile.eps[0])
    return schedule.profile.time_quantile(elapsed)
