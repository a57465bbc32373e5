"""Wave-front abstraction of the bit-separation scheme.

Front j is the furthest node reached by bit j.  It starts at position 0 at
slot j*l_sep and moves up one position in slot n exactly when the hop at its
current position is clear in slot n.  Fronts read the same StateMatrix as the
network simulation, so as long as no later bit catches up with an earlier
one the two coincide slot for slot.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from ._sweep import sweep
from .model import INF, ErasureProfile, StateMatrix
from .schedule import Schedule, front_center

log = logging.getLogger(__name__)


@dataclass
class FrontTrajectory:
    j: int
    start: int
    positions: np.ndarray   # positions[n - start] = I_{j,n} for start <= n <= end

    @property
    def end(self) -> int:
        return self.start + len(self.positions) - 1

    def at(self, n: int) -> int:
        """Position at slot n; -1 before the bit has started."""
        if n < self.start:
            return -1
        if n > self.end:
            raise IndexError(f"slot {n} beyond trajectory end {self.end}")
        return int(self.positions[n - self.start])


@dataclass
class SuccessEvents:
    A: np.ndarray
    E: np.ndarray

    @property
    def overall(self) -> bool:
        return bool(self.A.all())


def trajectories_from_hits(hits: np.ndarray, schedule: Schedule, cap: int | None = None) -> list[FrontTrajectory]:
    """Turn per-position hitting times (m, P) into slot-indexed trajectories up to tau_j."""
    out = []
    for j in range(schedule.m):
        start = j * schedule.l_sep
        n = np.arange(start, schedule.tau[j] + 1)
        h = hits[j, 1:]
        pos = np.searchsorted(h, n, side="right")
        if cap is not None:
            pos = np.minimum(pos, cap)
        out.append(FrontTrajectory(j, start, pos.astype(np.int64)))
    return out


def simulate_fronts_coupled(profile: ErasureProfile, schedule: Schedule, states: StateMatrix,
                            trial: int = 0) -> list[FrontTrajectory]:
    if states.explicit and schedule.tau[-1] > states.horizon:
        raise ValueError("states do not cover the last decoding time")
    st = states if states.trials == 1 else states.subset(slice(trial, trial + 1))
    res = sweep(schedule, st, fronts=True, network=False, keep_paths=True)
    return trajectories_from_hits(res.front_hits[0], schedule)


def simulate_fronts_slotwise(schedule: Schedule, states: StateMatrix, trial: int = 0) -> list[FrontTrajectory]:
    """Reference: step every front slot by slot through the transition rule."""
    st = states if states.trials == 1 else states.subset(slice(trial, trial + 1))
    out = []
    for j in range(schedule.m):
        start = j * schedule.l_sep
        pos = [0]
        cur = 0
        for n in range(start + 1, schedule.tau[j] + 1):
            if cur < schedule.clip and bool(st.cells(cur, n, trial_axis=False)):
                cur += 1
            pos.append(cur)
        out.append(FrontTrajectory(j, start, np.array(pos, dtype=np.int64)))
    return out


def detect_events(fronts: list[FrontTrajectory], schedule: Schedule) -> SuccessEvents:
    """Evaluate the A_j and E_j events slot by slot on explicit trajectories."""
    k, m = schedule.k, schedule.m
    thr = schedule.escape_threshold()
    A = np.ones(m, dtype=bool)
    E = np.zeros(m, dtype=bool)
    for j in range(m):
        tj = schedule.tau[j]
        fj = fronts[j]
        n = np.arange(fj.start + 1, tj + 1)
        pos = fj.positions[n - fj.start]
        dev = np.abs(pos - front_center(schedule, n - fj.start))
        E[j] = bool((dev >= thr).any())
        if fj.at(tj) < k:
            A[j] = False
        if j < m - 1:
            nxt = fronts[j + 1]
            behind = np.array([nxt.at(int(s)) for s in n[:-1]], dtype=np.int64)
            if (behind >= pos[:-1]).any():
                A[j] = False
            if nxt.at(tj) >= k:
                A[j] = False
    return SuccessEvents(A, E)


def extract_fronts_from_network(record) -> list[FrontTrajectory]:
    """Fronts of the tagged network run: largest node index that has held b_j."""
    if record.net_hits is None:
        raise ValueError("record was produced without instrumentation")
    sched = record.schedule
    hits = record.net_hits
    fronts = trajectories_from_hits(hits, sched)
    if record.collision_detected:
        coupled = trajectories_from_hits(record.front_hits, sched, cap=sched.k)
        for a, b in zip(fronts, coupled):
            if not np.array_equal(a.positions, b.positions):
                first = int(np.argmax(a.positions != b.positions)) + a.start
                log.info("bit %d: network front leaves the abstraction at slot %d", a.j, first)
    return fronts


def fronts_match(network: list[FrontTrajectory], coupled: list[FrontTrajectory], k: int) -> bool:
    return all(np.array_equal(a.positions, np.minimum(b.positions, k)) for a, b in zip(network, coupled))


# ------------------------------------------------------------ martingale steps


def martingale_increments(profile: ErasureProfile, position: int, regime: str):
    """One-step increments of the centered front process from ``position``.

    Returns ``(values, probs)``.  Homogeneous: Delta = I - kappa moves by
    +eps (advance) or -(1 - eps) (stay).  Heterogeneous: Delta = T(I) -
    elapsed moves by 1/(1 - eps_I) - 1 (advance across hop I) or -1 (stay).
    """
    eps = float(profile.eps_at(np.array([position]))[0])
    if regime == "homogeneous":
        return np.array([eps, -(1 - eps)]), np.array([1 - eps, eps])
    step = profile.time_transform(position + 1) - profile.time_transform(position)
    return np.array([step - 1.0, -1.0]), np.array([1 - eps, eps])


def martingale_check(profile: ErasureProfile, regime: str, positions=None) -> dict:
    """Largest |conditional mean| and |increment| over reachable positions."""
    if positions is None:
        positions = range(profile.hops + 2)
    worst_mean = 0.0
    worst_step = 0.0
    for i in positions:
        vals, probs = martingale_increments(profile, i, regime)
        worst_mean = max(worst_mean, abs(float(vals @ probs)))
        worst_step = max(worst_step, float(np.abs(vals).max()))
    if regime == "homogeneous":
        e = profile.eps[0]
        limit = max(1 - e, e)
    else:
        limit = max(1 / profile.v_min - 1, 1.0)
    return {"max_abs_mean": worst_mean, "max_abs_step": worst_step, "step_limit": limit}


def write_fronts_csv(path, fronts_by_trial: dict[int, list[FrontTrajectory]]) -> None:
    """Long-form (trial, j, n, I) table."""
    with open(path, "w", newline="") as fh:
        fh.write("# tandem-iv schema v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "j", "n", "I"])
        for t, fronts in fronts_by_trial.items():
            for f in fronts:
                for off, pos in enumerate(f.positions):
                    w.writerow([t, f.j, f.start + off, int(pos)])
