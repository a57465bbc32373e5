"""Erasure profiles, channel states and the randomness contract.

Channel states are produced by a counter-based hash: the state of hop ``i`` at
slot ``n`` in trial ``t`` is a pure function of ``(master_seed, stream, t, i,
n)``.  A :class:`StateMatrix` therefore never has to be materialized; every
simulator queries the cells it needs and two simulators run on the same
:class:`StateMatrix` see exactly the same channel realization, whatever order
they read it in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

INF = np.int64(2**60)

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_HOP_MULT = 0xD1B54A32D192ED03
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(_GOLDEN)
_U_HOP = np.uint64(_HOP_MULT)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))

# stream tags for non-channel randomness derived from a trial key
MESSAGE_STREAM = 1 << 40


def _splitmix(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (modified in place)."""
    z ^= z >> _S30
    z *= _U_MIX1
    z ^= z >> _S27
    z *= _U_MIX2
    z ^= z >> _S31
    return z


def _mix_array(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + _U_GOLDEN
    return _mix(z)


@dataclass(frozen=True)
class RandomnessSpec:
    """Identifies one trial's random stream.

    ``stream`` separates independent families of trials drawn from the same
    master seed (the Monte Carlo driver uses the grid point index).
    """

    master_seed: int
    trial_index: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.trial_index < 0 or self.stream < 0:
            raise ValueError("trial_index and stream must be non-negative")

    @property
    def key(self) -> int:
        return trial_keys(self.master_seed, [self.trial_index], self.stream)[0].item()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed & _MASK,
                                     spawn_key=(self.stream, self.trial_index))
        return np.random.default_rng(seq)


def trial_keys(master_seed: int, trials: Sequence[int] | np.ndarray, stream: int = 0) -> np.ndarray:
    """Per-trial 64-bit keys; a pure function of (master_seed, stream, trial)."""
    base = _splitmix(_splitmix(master_seed & _MASK) ^ (stream & _MASK))
    t = np.asarray(trials, dtype=np.uint64)
    return _mix_array(t ^ np.uint64(base))


def message_bits(keys: np.ndarray, m: int, mode: str = "random") -> np.ndarray:
    """Message bits for a batch of trials, shape (T, m), dtype uint8.

    ``alternating`` is 1,0,1,0,...: the first bit differs from the relay
    default 0 and every later bit differs from its predecessor.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    if mode == "alternating":
        row = (np.arange(m) + 1) % 2
        return np.broadcast_to(row.astype(np.uint8), (keys.size, m)).copy()
    if mode == "ones":
        return np.ones((keys.size, m), dtype=np.uint8)
    if mode != "random":
        raise ValueError(f"unknown message mode {mode!r}")
    j = np.arange(m, dtype=np.uint64) * _U_HOP + np.uint64(MESSAGE_STREAM)
    h = _mix(keys[:, None] + j[None, :])
    return (h >> np.uint64(63)).astype(np.uint8)


def _exact_fraction(x: float) -> Fraction:
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class ErasureProfile:
    """Per-hop erasure probabilities of a line network.

    Hop ``i`` connects node ``i`` to node ``i + 1``; node 0 is the source and
    node ``k`` the destination.  Positions past the last hop (used only by the
    wave-front bookkeeping) behave like the worst hop, ``1 - v_min``.
    """

    eps: tuple[float, ...]
    kind: str = "explicit"
    pattern: tuple[float, ...] | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        object.__setattr__(self, "eps", eps)
        if not eps:
            raise ValueError("profile needs at least one hop")
        for i, e in enumerate(eps):
            if not (0.0 <= e < 1.0) or math.isnan(e):
                raise ValueError(f"erasure probability of hop {i} must lie in [0, 1), got {e}")
        if self.kind not in ("homogeneous", "explicit", "periodic"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "homogeneous" and len(set(eps)) != 1:
            raise ValueError("homogeneous profile with unequal erasure probabilities")

    # constructors -----------------------------------------------------

    @classmethod
    def homogeneous(cls, eps: float, k: int) -> "ErasureProfile":
        if k < 1:
            raise ValueError("k must be positive")
        return cls((float(eps),) * int(k), kind="homogeneous")

    @classmethod
    def explicit(cls, eps: Sequence[float]) -> "ErasureProfile":
        return cls(tuple(eps), kind="explicit")

    @classmethod
    def periodic(cls, pattern: Sequence[float], k: int) -> "ErasureProfile":
        pattern = tuple(float(p) for p in pattern)
        if not pattern:
            raise ValueError("empty pattern")
        eps = tuple(pattern[i % len(pattern)] for i in range(int(k)))
        return cls(eps, kind="periodic", pattern=pattern)

    # basic quantities -------------------------------------------------

    @property
    def hops(self) -> int:
        return len(self.eps)

    k = hops

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.eps)) == 1

    @property
    def v_min(self) -> float:
        return 1.0 - max(self.eps)

    @property
    def v_max(self) -> float:
        return 1.0 - min(self.eps)

    @property
    def eps_virtual(self) -> float:
        return max(self.eps)

    @property
    def zeta(self) -> float:
        return float(self.total_time_exact()) / self.hops

    def eps_array(self) -> np.ndarray:
        if "eps" not in self._cache:
            self._cache["eps"] = np.asarray(self.eps, dtype=float)
        return self._cache["eps"]

    def eps_at(self, hops: np.ndarray) -> np.ndarray:
        """Erasure probability at (possibly virtual) positions."""
        hops = np.asarray(hops)
        inner = self.eps_array()[np.clip(hops, 0, self.hops - 1)]
        return np.where(hops < self.hops, inner, self.eps_virtual)

    def spec_string(self) -> str:
        if self.kind == "homogeneous":
            return f"homogeneous:{self.eps[0]!r}"
        if self.kind == "periodic":
            return "periodic:" + ";".join(repr(p) for p in self.pattern)
        if len(self.eps) <= 8:
            return "explicit:" + ";".join(repr(e) for e in self.eps)
        return f"explicit:k={self.hops};zeta={self.zeta!r}"

    def to_config(self) -> dict:
        if self.kind == "homogeneous":
            return {"kind": "homogeneous", "epsilon": self.eps[0], "k": self.hops}
        if self.kind == "periodic":
            return {"kind": "periodic", "pattern": list(self.pattern), "k": self.hops}
        return {"kind": "explicit", "epsilons": list(self.eps)}

    # time transform ---------------------------------------------------
    #
    # T(i) = sum_{l < i} 1/(1 - eps_l) is kept as an integer prefix array
    # scaled by a common denominator when the distinct erasure values are
    # short decimals, so comparisons against slot counts are exact.

    def _time_table(self):
        if "time" in self._cache:
            return self._cache["time"]
        distinct = sorted(set(self.eps))
        table = None
        if len(distinct) <= 64:
            recips = {e: 1 / (1 - _exact_fraction(e)) for e in distinct}
            worst = 1 / (1 - _exact_fraction(self.eps_virtual))
            scale = reduce(math.lcm, [r.denominator for r in recips.values()], worst.denominator)
            weights = {e: int(r * scale) for e, r in recips.items()}
            top = max(weights.values()) * (4 * self.hops + 16)
            if scale < 2**40 and top < 2**60:
                w = np.array([weights[e] for e in self.eps], dtype=np.int64)
                prefix = np.concatenate([[0], np.cumsum(w)]).astype(np.int64)
                table = ("exact", scale, prefix, int(worst * scale))
        if table is None:
            w = 1.0 / (1.0 - self.eps_array())
            prefix = np.concatenate([[0.0], np.cumsum(w)])
            table = ("float", 1, prefix, 1.0 / self.v_min)
        self._cache["time"] = table
        return table

    @property
    def time_is_exact(self) -> bool:
        return self._time_table()[0] == "exact"

    def total_time_exact(self) -> Fraction:
        """sum_{i<k} 1/(1 - eps_i), exact when possible."""
        mode, scale, prefix, _ = self._time_table()
        if mode == "exact":
            return Fraction(int(prefix[-1]), scale)
        return Fraction(float(prefix[-1]))

    def time_transform(self, i) -> np.ndarray | float:
        """Expected time for a single bit to cross the first ``i`` hops."""
        mode, scale, prefix, w_virt = self._time_table()
        i = np.asarray(i, dtype=np.int64)
        if np.any(i < 0):
            raise ValueError("position must be non-negative")
        k = self.hops
        inner = prefix[np.minimum(i, k)].astype(float)
        extra = np.maximum(i - k, 0) * float(w_virt)
        out = (inner + extra) / scale
        return float(out) if out.ndim == 0 else out

    def time_quantile(self, x) -> np.ndarray:
        """sup{i >= 0 : T(i) <= x} for x >= 0 (vectorized, integer result)."""
        mode, scale, prefix, w_virt = self._time_table()
        x = np.asarray(x)
        k = self.hops
        if mode == "exact":
            if x.dtype.kind in "iu":
                xs = x.astype(np.int64) * scale
            else:
                xs = np.floor(x.astype(float) * scale).astype(np.int64)
            idx = np.searchsorted(prefix, xs, side="right") - 1
            over = xs - prefix[k]
            beyond = k + np.floor_divide(np.maximum(over, 0), w_virt)
        else:
            xf = x.astype(float)
            tol = 1e-12 * np.maximum(1.0, np.abs(xf))
            idx = np.searchsorted(prefix, xf - tol, side="right") - 1
            beyond = k + np.floor(np.maximum(xf - tol - prefix[k], 0.0) / w_virt).astype(np.int64)
        out = np.where(idx >= k, beyond, idx)
        return out.astype(np.int64)

    # per-hop thresholds for the state hash ------------------------------

    def _thresholds(self):
        if "thr" not in self._cache:
            p = 1.0 - self.eps_array()
            thr = np.round(p * 2.0**53).astype(np.uint64)
            virt = np.uint64(round((1.0 - self.eps_virtual) * 2.0**53))
            self._cache["thr"] = (thr, virt)
        return self._cache["thr"]

    def clear_threshold(self, hops: np.ndarray) -> np.ndarray:
        thr, virt = self._thresholds()
        hops = np.asarray(hops, dtype=np.int64)
        return np.where(hops < self.hops, thr[np.clip(hops, 0, self.hops - 1)], virt)


def derived_velocities(profile: ErasureProfile) -> tuple[float, float, float]:
    """(v_min, v_max, zeta) of a profile."""
    return profile.v_min, profile.v_max, profile.zeta


class StateMatrix:
    """Channel states S_i[n] of one or more trials.

    Slots are numbered from 1.  Cells are computed on demand from the trial
    key; ``horizon`` is the nominal length used by :meth:`to_array` and by
    the simulators' precondition checks.  A matrix built with
    :meth:`from_array` instead reads an explicit boolean array and reports
    every slot past its horizon as erased.
    """

    def __init__(self, profile: ErasureProfile, horizon: int, keys, bits: np.ndarray | None = None):
        if horizon < 1:
            raise ValueError("horizon must be at least one slot")
        self.profile = profile
        self.horizon = int(horizon)
        self.keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
        self._bits = bits
        eps_max = profile.eps_virtual
        if eps_max <= 0.0:
            self._block = 1
        else:
            self._block = int(min(32, max(1, math.ceil(math.log(0.05) / math.log(eps_max)))))

    @classmethod
    def from_array(cls, profile: ErasureProfile, bits: np.ndarray) -> "StateMatrix":
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] < profile.hops:
            raise ValueError("state array must have shape (rows >= k, horizon)")
        return cls(profile, bits.shape[1], [0], bits=bits)

    @classmethod
    def batch(cls, profile: ErasureProfile, horizon: int, master_seed: int,
              trials: int | Sequence[int] | np.ndarray, stream: int = 0) -> "StateMatrix":
        """``trials`` is either a count (indices 0..trials-1) or explicit trial indices."""
        if isinstance(trials, (int, np.integer)):
            trials = np.arange(int(trials))
        return cls(profile, horizon, trial_keys(master_seed, trials, stream))

    @property
    def trials(self) -> int:
        return self.keys.size

    @property
    def explicit(self) -> bool:
        return self._bits is not None

    def subset(self, index) -> "StateMatrix":
        if self.explicit:
            raise ValueError("explicit state matrices hold a single trial")
        return StateMatrix(self.profile, self.horizon, self.keys[index])

    def with_horizon(self, horizon: int) -> "StateMatrix":
        return StateMatrix(self.profile, horizon, self.keys, bits=self._bits)

    def cells(self, hops, slots, trial_axis: bool = True) -> np.ndarray:
        """Clear indicator for (trial, hop, slot).

        ``hops`` and ``slots`` broadcast against each other; when
        ``trial_axis`` is true their leading axis is the trial axis (size T
        or 1), otherwise the result is for a single-trial matrix.
        """
        hops = np.asarray(hops, dtype=np.int64)
        slots = np.asarray(slots, dtype=np.int64)
        if hops.ndim == 0 and slots.ndim == 0:
            return self.cells(hops[None], slots[None], trial_axis)[..., 0]
        if self._bits is not None:
            rows = self._bits.shape[0]
            inside = (slots >= 1) & (slots <= self.horizon) & (hops >= 0) & (hops < rows)
            s = np.clip(slots, 1, self.horizon) - 1
            return self._bits[np.clip(hops, 0, rows - 1), s] & inside
        shape = np.broadcast_shapes(hops.shape, slots.shape)
        if trial_axis and len(shape) >= 1:
            key = self.keys.reshape((-1,) + (1,) * (len(shape) - 1))
        else:
            key = self.keys[0]
        h = key + hops.astype(np.uint64) * _U_HOP + slots.astype(np.uint64) * _U_GOLDEN
        h = _mix(np.asarray(h, dtype=np.uint64))
        return (h >> _S11) < self.profile.clear_threshold(hops)

    def next_clear(self, hops, after: np.ndarray) -> np.ndarray:
        """First clear slot of ``hops`` strictly after ``after``.

        ``after`` has the trial axis first.  For explicit matrices a result of
        ``horizon + 1`` means no clear slot within the horizon.
        """
        after = np.asarray(after, dtype=np.int64)
        shape = after.shape
        hops = np.broadcast_to(np.asarray(hops, dtype=np.int64), shape).ravel()
        if len(shape) == 0:
            trial = np.zeros(1, dtype=np.int64)
        else:
            trial = np.broadcast_to(
                np.arange(shape[0]).reshape((-1,) + (1,) * (len(shape) - 1)), shape).ravel()
            if self.trials not in (1, shape[0]):
                raise ValueError("leading axis does not match the number of trials")
            if self.trials == 1:
                trial = np.zeros_like(trial)
        return self.next_clear_flat(hops, after.ravel(), trial).reshape(shape)

    def next_clear_flat(self, hops: np.ndarray, after: np.ndarray, trial: np.ndarray) -> np.ndarray:
        """Flat form of :meth:`next_clear` with an explicit trial index per query."""
        hops = np.asarray(hops, dtype=np.int64)
        out = np.empty(after.size, dtype=np.int64)
        pending = np.arange(after.size)
        base = np.asarray(after, dtype=np.int64).copy()
        explicit = self._bits is not None
        if not explicit:
            tkey = self.keys[trial]
            thr = self.profile.clear_threshold(hops)
            hmul = hops.astype(np.uint64) * _U_HOP
        w = self._block
        offs = np.arange(1, w + 1, dtype=np.int64)
        while pending.size:
            slots = base[:, None] + offs[None, :]
            if explicit:
                clear = self.cells(hops[pending][:, None], slots)
                clear |= slots > self.horizon
            else:
                h = (tkey[pending] + hmul[pending])[:, None] + slots.astype(np.uint64) * _U_GOLDEN
                clear = (_mix(h) >> _S11) < thr[pending][:, None]
            found = clear.any(axis=1)
            first = clear.argmax(axis=1)
            hit = np.nonzero(found)[0]
            res = slots[hit, first[hit]]
            if explicit:
                res = np.minimum(res, self.horizon + 1)
            out[pending[hit]] = res
            miss = ~found
            pending = pending[miss]
            base = base[miss] + w
        return out

    def to_array(self, trial: int = 0, rows: int | None = None) -> np.ndarray:
        """Materialize the k x horizon clear indicator of one trial."""
        rows = self.profile.hops if rows is None else rows
        if self._bits is not None:
            return self._bits[:rows].copy()
        hops = np.arange(rows)[:, None]
        slots = np.arange(1, self.horizon + 1)[None, :]
        sub = StateMatrix(self.profile, self.horizon, self.keys[trial:trial + 1])
        return sub.cells(hops, slots, trial_axis=False)


def generate_states(profile: ErasureProfile, horizon: int, rng: RandomnessSpec) -> StateMatrix:
    """States of a single trial, fully determined by (profile, horizon, rng)."""
    if horizon < 1:
        raise ValueError("horizon must be at least one slot")
    return StateMatrix(profile, horizon, [rng.key])


def geometric_gap(rng: np.random.Generator, p: float, size=None):
    """Slots until the first success, counting the success slot (support 1, 2, ...)."""
    if not (0.0 < p <= 1.0):
        raise ValueError("success probability must lie in (0, 1]")
    return rng.geometric(p, size=size)
