"""Exact simulation of the three relaying schemes on a realized StateMatrix.

* forward-the-last-received (FTLR) for one bit,
* bit separation: m bits pipelined from the source, FTLR relays,
* GSI control: FIFO queues at every node, relays ignore transmissions from
  an empty predecessor (they know its queue length from the global states).

The bit-separation and FTLR runs use the hop sweep in ``_sweep``; the
slot-by-slot simulator :func:`simulate_network_slotwise` is kept as an
independent reference for small networks.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._sweep import SweepResult, sweep
from .model import INF, ErasureProfile, StateMatrix
from .schedule import Schedule


@dataclass
class TrialRecord:
    decoded: np.ndarray            # m bools: bit j correct at tau_j
    delivery_time: np.ndarray      # m ints, -1 if b_j never reached node k
    success_event_held: bool       # intersection of the A_j events
    collision_detected: bool
    escape_events: np.ndarray      # m bools
    completion_time: int           # tau_{m-1}
    decoded_bits: np.ndarray = None
    bits: np.ndarray = None
    schedule: Schedule = None
    front_hits: np.ndarray = None  # (m, clip+1) abstraction hitting times
    net_hits: np.ndarray = None    # (m, k+1) tagged network hitting times
    divergence: bool = False


def _single_trial(states: StateMatrix, trial: int | None) -> StateMatrix:
    if states.trials == 1:
        return states
    if trial is None:
        raise ValueError("state batch holds several trials; pass trial=")
    return states.subset(slice(trial, trial + 1))


def _arrival_cap(states: StateMatrix) -> int:
    # a lone bit cannot be overwritten, so its arrival is tracked past tau
    return states.horizon if states.explicit else int(INF)


def run_ftlr_single_bit(profile: ErasureProfile, b0: int, tau: int, states: StateMatrix,
                        trial: int | None = None):
    """(decoded_bit, correct, arrival_time) of one FTLR run decoded at ``tau``.

    arrival_time is the slot the bit first reaches node k (-1 if it does not
    within an explicit matrix's horizon).
    """
    if tau > states.horizon:
        raise ValueError(f"decode time {tau} beyond state horizon {states.horizon}")
    st = _single_trial(states, trial)
    res = sweep(Schedule.single_bit(profile, tau), st, np.array([[b0]], dtype=np.uint8),
                fronts=False, net_cap=_arrival_cap(st))
    decoded = int(res.decoded[0, 0])
    return decoded, decoded == b0, int(res.delivery[0, 0])


def ftlr_arrivals(profile: ErasureProfile, states: StateMatrix) -> np.ndarray:
    """Arrival slot at node k of a single FTLR bit, for every trial in ``states``."""
    res = sweep(Schedule.single_bit(profile, 1), states, None, fronts=False,
                net_cap=_arrival_cap(states))
    return res.delivery[:, 0]


def run_bit_separation(profile: ErasureProfile, bits, schedule: Schedule, states: StateMatrix,
                       trial: int | None = None, instrument: bool = True) -> TrialRecord:
    """One bit-separation trial, with the wave-front events evaluated on the same states."""
    if schedule.profile != profile:
        raise ValueError("schedule was built for a different profile")
    bits = np.asarray(bits, dtype=np.uint8).reshape(1, -1)
    if bits.shape[1] != schedule.m:
        raise ValueError("message length does not match the schedule")
    if schedule.tau[-1] > states.horizon:
        raise ValueError("state horizon shorter than the last decoding time")
    st = _single_trial(states, trial)
    res = sweep(schedule, st, bits, fronts=True, network=True, keep_paths=instrument)
    return _record(res, 0, bits[0], schedule)


def _record(res: SweepResult, t: int, bits: np.ndarray, schedule: Schedule) -> TrialRecord:
    return TrialRecord(
        decoded=res.correct[t].copy(),
        delivery_time=res.delivery[t].copy(),
        success_event_held=bool(res.A[t].all()),
        collision_detected=bool(res.collision[t]),
        escape_events=res.E[t].copy(),
        completion_time=int(schedule.tau[-1]),
        decoded_bits=res.decoded[t].copy(),
        bits=np.asarray(bits).copy(),
        schedule=schedule,
        front_hits=None if res.front_hits is None else res.front_hits[t],
        net_hits=None if res.net_hits is None else res.net_hits[t],
        divergence=bool(res.divergence[t]),
    )


def run_bit_separation_batch(schedule: Schedule, states: StateMatrix, bits: np.ndarray,
                             fronts: bool = True, network: bool = True) -> SweepResult:
    if schedule.tau[-1] > states.horizon:
        raise ValueError("state horizon shorter than the last decoding time")
    return sweep(schedule, states, bits, fronts=fronts, network=network)


def source_tag(schedule: Schedule, n: int) -> int:
    """Index of the bit the source transmits in slot n (n >= 1)."""
    return min((n - 1) // schedule.l_sep, schedule.m - 1)


def simulate_network_slotwise(schedule: Schedule, states: StateMatrix, bits, trial: int = 0) -> dict:
    """Reference slot-by-slot FTLR network with provenance tags.

    Returns decoded values at each tau_j, per-node hitting times of every tag
    and the node-k delivery times.  Intended for small k and horizons.
    """
    k, m = schedule.k, schedule.m
    bits = np.asarray(bits, dtype=np.uint8)
    horizon = schedule.tau[-1]
    st = states if states.trials == 1 else states.subset(slice(trial, trial + 1))
    grid = st.to_array(rows=k) if st.explicit else StateMatrix(
        st.profile, horizon, st.keys).to_array()
    value = np.zeros(k + 1, dtype=np.uint8)
    tag = np.full(k + 1, -1)
    hits = np.full((m, k + 1), INF, dtype=np.int64)
    for j in range(m):
        hits[j, 0] = j * schedule.l_sep
    decoded = np.zeros(m, dtype=np.uint8)
    for n in range(1, horizon + 1):
        j_src = source_tag(schedule, n)
        tx_val = np.concatenate([[bits[j_src]], value[1:k]])
        tx_tag = np.concatenate([[j_src], tag[1:k]])
        clear = grid[:, n - 1]
        recv = np.nonzero(clear)[0] + 1
        value[recv] = tx_val[recv - 1]
        tag[recv] = tx_tag[recv - 1]
        for node in recv:
            t = tag[node]
            if t >= 0 and hits[t, node] == INF:
                hits[t, node] = n
        for j in range(m):
            if schedule.tau[j] == n:
                decoded[j] = value[k]
    delivery = np.where(hits[:, k] < INF, hits[:, k], -1)
    return {"decoded": decoded, "correct": decoded == bits, "hits": hits, "delivery": delivery}


# ---------------------------------------------------------------- GSI control


@dataclass
class GsiTrialRecord:
    departure: np.ndarray          # (k+1, m+1); D[i, j] for hops i=1..k, bits j=1..m
    completion_time: int           # D[k, m], -1 if incomplete
    complete: bool
    success: bool | None = None    # completion_time <= deadline, when a deadline is given
    counters_trace: np.ndarray | None = None   # (slots+1, k+1) queue lengths after each slot
    outside_theorem_scope: bool = False
    received: list = field(default_factory=list)


@dataclass
class GsiBatch:
    departure: np.ndarray          # (T, k+1, m+1)
    completion: np.ndarray         # (T,), -1 if incomplete
    complete: np.ndarray           # (T,)
    counters_trace: np.ndarray | None = None   # (T, slots+1, k+1)


def run_gsi_batch(m: int, states: StateMatrix, max_slots: int | None = None,
                  trace: bool = False) -> GsiBatch:
    """GSI-control dynamics for every trial in ``states``.

    Node i (0 <= i < k) transmits the head of its queue over hop i whenever
    the queue is nonempty; a clear hop moves the head to node i+1's queue.
    A bit arriving in slot n can leave in slot n+1 at the earliest.  Hash
    backed states extend past their horizon until every trial completes or
    ``max_slots`` is reached; explicit states stop at their horizon.
    """
    profile = states.profile
    k = profile.hops
    T = states.trials
    if m < 1:
        raise ValueError("message needs at least one bit")
    if max_slots is None:
        max_slots = states.horizon if states.explicit else max(
            states.horizon, 20 * math.ceil((k + m) / max(profile.v_min, 1e-9)) + 100)
    count = np.zeros((T, k + 1), dtype=np.int64)
    count[:, 0] = m
    served = np.zeros((T, k), dtype=np.int64)
    D = np.zeros((T, k + 1, m + 1), dtype=np.int64)
    hops = np.arange(k)
    rows = []
    if trace:
        rows.append(count.copy())
    n = 0
    done = count[:, k] == m
    while n < max_slots and not done.all():
        n += 1
        clear = states.cells(hops[None, :], np.full((1, k), n))
        if clear.shape[0] != T:
            clear = np.broadcast_to(clear, (T, k))
        deliver = (count[:, :k] > 0) & clear
        t_idx, h_idx = np.nonzero(deliver)
        served[t_idx, h_idx] += 1
        D[t_idx, h_idx + 1, served[t_idx, h_idx]] = n
        count[:, :k] -= deliver
        count[:, 1:] += deliver
        if trace:
            rows.append(count.copy())
        done = count[:, k] == m
    completion = np.where(done, D[:, k, m], -1)
    return GsiBatch(D, completion, done, np.stack(rows, axis=1) if trace else None)


def run_gsi_control(profile: ErasureProfile, m: int, states: StateMatrix,
                    deadline: int | None = None, trace: bool = False,
                    trial: int | None = None) -> GsiTrialRecord:
    if states.profile != profile:
        raise ValueError("states were generated for a different profile")
    st = _single_trial(states, trial)
    batch = run_gsi_batch(m, st, trace=trace)
    comp = int(batch.completion[0])
    rec = GsiTrialRecord(
        departure=batch.departure[0],
        completion_time=comp,
        complete=bool(batch.complete[0]),
        counters_trace=None if batch.counters_trace is None else batch.counters_trace[0],
        outside_theorem_scope=not profile.is_homogeneous,
    )
    if deadline is not None:
        rec.success = rec.complete and comp <= deadline
    return rec


def gsi_default_deadline(eps: float, k: int, alpha: float) -> int:
    """ceil(1.1 * k * (1 + 2 sqrt(alpha eps) + alpha) / (1 - eps))."""
    return math.ceil(1.1 * k * (1 + 2 * math.sqrt(alpha * eps) + alpha) / (1 - eps))


def check_departure_recursion(departure: np.ndarray, states: StateMatrix) -> bool:
    """D(i,j) == next clear slot of hop i-1 after max(D(i-1,j), D(i,j-1)), for all i, j.

    ``departure`` is (k+1, m+1) for one trial or (T, k+1, m+1) for a batch.
    """
    D = np.asarray(departure)
    if D.ndim == 2:
        D = D[None]
    T, k1, m1 = D.shape
    ready = np.maximum(D[:, :-1, 1:], D[:, 1:, :-1])
    hop = np.broadcast_to(np.arange(k1 - 1)[None, :, None], ready.shape)
    expect = states.next_clear(hop, ready) if states.trials == T else states.next_clear(hop[0], ready[0])[None]
    return bool(np.array_equal(expect, D[:, 1:, 1:]))


class _LocalRelay:
    """A GSI node that sees only its own queue, its predecessor's previous
    counter, the incoming symbol and its own hop's feedback."""

    def __init__(self, bits=None):
        self.queue = deque(bits or [])

    @property
    def count(self) -> int:
        return len(self.queue)

    def transmit(self) -> int:
        return self.queue[0] if self.queue else 0

    def update(self, incoming, pred_count_prev: int | None, own_hop_clear: bool | None):
        # own head leaves when the successor got it (one-bit feedback)
        if own_hop_clear and self.queue:
            self.queue.popleft()
        if incoming is not None and (pred_count_prev is None or pred_count_prev > 0):
            self.queue.append(incoming)


def run_gsi_local(profile: ErasureProfile, bits, states: StateMatrix, max_slots: int | None = None):
    """GSI control with information-restricted nodes; returns (counters_trace, received bits).

    The source is node 0; its ``incoming`` is always None.
    """
    k = profile.hops
    bits = [int(b) for b in bits]
    m = len(bits)
    st = states if states.trials == 1 else states.subset(slice(0, 1))
    if max_slots is None:
        max_slots = st.horizon if st.explicit else max(st.horizon, 20 * (k + m) * 10)
    nodes = [_LocalRelay(bits)] + [_LocalRelay() for _ in range(k)]
    trace = [[n.count for n in nodes]]
    n = 0
    while nodes[k].count < m and n < max_slots:
        n += 1
        prev_counts = [node.count for node in nodes]
        tx = [node.transmit() for node in nodes[:k]]
        clear = [bool(c) for c in st.cells(np.arange(k), np.full(k, n), trial_axis=False)]
        for i in range(k, -1, -1):
            incoming = tx[i - 1] if i >= 1 and clear[i - 1] else None
            pred = prev_counts[i - 1] if i >= 1 else None
            own = clear[i] if i < k else None
            nodes[i].update(incoming, pred, own)
        trace.append([node.count for node in nodes])
    return np.array(trace), list(nodes[k].queue)
