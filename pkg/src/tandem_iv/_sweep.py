"""Hop-by-hop sweep shared by the network simulator and the wave-front model.

Both processes are driven by one question per hop: given that a bit became
available at a node at slot ``a``, when is the next clear slot of the outgoing
hop?  Answering it hop by hop (instead of slot by slot) makes the cost
proportional to k * m per trial, independent of the number of slots.

Network: node i holds the tags it received in increasing order; tag j reaches
node i+1 at the first clear slot of hop i after its arrival at node i, unless
node i received a later tag by then (the earlier tag is overwritten and lost).

Fronts: front j reaches position i+1 at the first clear slot of hop i after it
reached position i, with no interaction between fronts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import INF, StateMatrix
from .schedule import Schedule, front_center


@dataclass
class SweepResult:
    # wave-front abstraction
    A: np.ndarray | None = None            # (T, m) success sub-events
    E: np.ndarray | None = None            # (T, m) escape events
    max_dev: np.ndarray | None = None      # (T, m) max |I - kappa| over the window
    front_hits: np.ndarray | None = None   # (T, m, clip+1) slot front j reaches position i
    # full network
    decoded: np.ndarray | None = None      # (T, m) value read at tau_j
    correct: np.ndarray | None = None      # (T, m)
    delivery: np.ndarray | None = None     # (T, m) arrival slot at node k, -1 if not by tau_{m-1}
    collision: np.ndarray | None = None    # (T,) some tag overwritten before node k
    divergence: np.ndarray | None = None   # (T,) network fronts differ from the abstraction
    net_hits: np.ndarray | None = None     # (T, m, k+1) slot tag j reaches node i

    @property
    def success_event(self) -> np.ndarray:
        return self.A.all(axis=1)


def _suffix_min_next(a: np.ndarray) -> np.ndarray:
    """out[:, j] = min(a[:, j+1:]), INF for the last column."""
    out = np.full_like(a, INF)
    if a.shape[1] > 1:
        out[:, :-1] = np.minimum.accumulate(a[:, :0:-1], axis=1)[:, ::-1]
    return out


def sweep(schedule: Schedule, states: StateMatrix, bits: np.ndarray | None = None,
          fronts: bool = True, network: bool = True, keep_paths: bool = False,
          net_cap: int | None = None) -> SweepResult:
    k, m, l = schedule.k, schedule.m, schedule.l_sep
    T = states.trials
    tau = np.asarray(schedule.tau, dtype=np.int64)
    start = np.arange(m, dtype=np.int64) * l
    K = schedule.clip
    # arrivals after the last decoding time cannot change any decoded bit
    cap = int(tau[-1]) if net_cap is None else int(net_cap)
    if states.explicit and tau[-1] > states.horizon:
        raise ValueError("state horizon shorter than the last decoding time")
    res = SweepResult()
    trial_of = np.broadcast_to(np.arange(T)[:, None], (T, m)) if T > 1 else np.zeros((1, m), np.int64)
    trial_of = np.ascontiguousarray(trial_of)

    fa = np.broadcast_to(start, (T, m)).copy()
    na = fa.copy()
    if fronts:
        thr = schedule.escape_threshold()
        A_ok = np.ones((T, m), dtype=bool)
        order_bad = np.zeros((T, max(m - 1, 0)), dtype=bool)
        max_dev = np.zeros((T, m))
        at_k = None
        if keep_paths:
            front_hits = np.full((T, m, K + 1), INF, dtype=np.int64)
    if network:
        collision = np.zeros(T, dtype=bool)
        divergence = np.zeros(T, dtype=bool)
        if keep_paths:
            net_hits = np.full((T, m, k + 1), INF, dtype=np.int64)

    def hop_query(hop, after, mask):
        out = np.full(after.shape, INF, dtype=np.int64)
        if mask.any():
            out[mask] = states.next_clear_flat(np.full(int(mask.sum()), hop), after[mask], trial_of[mask])
        return out

    def window_dev(pos, a, b):
        # front j sits at ``pos`` during slots [a, b-1]; restrict to (start_j, tau_j]
        lo = np.maximum(a, start + 1)
        hi = np.minimum(b - 1, tau)
        valid = (a < INF) & (lo <= hi)
        lo_c = np.where(valid, lo, start + 1)
        hi_c = np.where(valid, hi, start + 1)
        d = np.maximum(np.abs(pos - front_center(schedule, lo_c - start)),
                       np.abs(pos - front_center(schedule, hi_c - start)))
        return np.where(valid, d, 0.0)

    last = K if fronts else k
    for i in range(last + 1):
        if fronts:
            if keep_paths:
                front_hits[:, :, i] = fa
            if i == k:
                at_k = fa.copy()
            active = fa <= tau
            if i < K:
                nxt = hop_query(i, fa, active)
            else:
                nxt = np.full_like(fa, INF)
            max_dev = np.maximum(max_dev, window_dev(float(i), fa, nxt))
            if m > 1:
                order_bad |= (fa[:, 1:] < tau[:-1]) & (nxt[:, :-1] > fa[:, 1:])
        if network and i <= k:
            if keep_paths:
                net_hits[:, :, i] = na
            if i < k:
                held = na < INF
                nh = _suffix_min_next(na)
                if fronts:
                    cand = np.where(held & (na == fa) & active, nxt, INF)
                    rest = held & (cand == INF)
                    if rest.any():
                        cand[rest] = states.next_clear_flat(np.full(int(rest.sum()), i), na[rest], trial_of[rest])
                else:
                    cand = hop_query(i, na, held)
                overwritten = held & (cand > nh)
                collision |= overwritten.any(axis=1)
                new_na = np.where(held & ~overwritten & (cand <= cap), cand, INF)
                if fronts:
                    lim = tau + 1
                    divergence |= (np.minimum(new_na, lim) != np.minimum(nxt, lim)).any(axis=1)
                na = new_na
            else:
                at_node_k = na
        if fronts:
            fa = np.where(nxt <= tau, nxt, INF)
            if i >= k and not (fa < INF).any():
                if keep_paths:
                    front_hits[:, :, i + 1:] = INF
                break

    if fronts:
        A_ok = (at_k <= tau)
        if m > 1:
            A_ok[:, :-1] &= at_k[:, 1:] > tau[:-1]
            A_ok[:, :-1] &= ~order_bad
        res.A = A_ok
        res.E = max_dev >= thr
        res.max_dev = max_dev
        if keep_paths:
            res.front_hits = front_hits
    if network:
        if bits is None:
            bits = np.zeros((T, m), dtype=np.uint8)
        bits = np.broadcast_to(np.asarray(bits, dtype=np.uint8), (T, m))
        decoded = np.zeros((T, m), dtype=np.uint8)
        for j in range(m):
            got = at_node_k <= tau[j]
            anyg = got.any(axis=1)
            idx = m - 1 - np.argmax(got[:, ::-1], axis=1)
            val = bits[np.arange(T), idx]
            decoded[:, j] = np.where(anyg, val, 0)
        res.decoded = decoded
        res.correct = decoded == bits
        res.delivery = np.where(at_node_k < INF, at_node_k, -1)
        res.collision = collision
        res.divergence = divergence if fronts else None
        if keep_paths:
            res.net_hits = net_hits
    return res
