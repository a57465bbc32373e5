"""Last-passage percolation view of the GSI scheme.

With w(i, j) the number of slots bit j spends in service at hop i, the slot
in which bit j leaves hop i is

    G(i, j) = max(G(i-1, j), G(i, j-1)) + w(i, j),   G(0, .) = G(., 0) = 0,

which is the passage time of the heaviest up-right path from (1, 1) to
(i, j).  For i.i.d. Geom(1 - eps) weights on {1, 2, ...} and m = alpha k,
G(k, m) / k tends to (1 + 2 sqrt(alpha eps) + alpha) / (1 - eps).
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .model import StateMatrix


def _row_update(prev: np.ndarray, w: np.ndarray) -> np.ndarray:
    """One row of the recursion, vectorized along the last axis.

    G[j] = max_{j' <= j} (prev[j'] + w[j'] + ... + w[j]).
    """
    W = np.cumsum(w, axis=-1)
    W_before = W - w
    return W + np.maximum.accumulate(prev - W_before, axis=-1)


def lpp_passage(weights, full: bool = True) -> np.ndarray:
    """Passage times for a (k, m) weight grid, or a (T, k, m) batch.

    Returns the (k, m) [or (T, k, m)] matrix G(i, j) for i, j >= 1 when
    ``full``; otherwise only G(k, m), keeping one row in memory.
    """
    w = np.asarray(weights)
    if w.ndim not in (2, 3):
        raise ValueError("weights must be a (k, m) grid or a batch of grids")
    if not np.issubdtype(w.dtype, np.integer):
        if not np.all(w == np.round(w)):
            raise ValueError("weights must be integers")
        w = w.astype(np.int64)
    if w.size and w.min() < 1:
        raise ValueError("weights must be at least 1")
    w = w.astype(np.int64)
    k = w.shape[-2]
    row = np.zeros(w.shape[:-2] + w.shape[-1:], dtype=np.int64)
    out = np.empty_like(w) if full else None
    for i in range(k):
        row = _row_update(row, w[..., i, :])
        if full:
            out[..., i, :] = row
    return out if full else row[..., -1]


def queue_from_services(weights) -> np.ndarray:
    """Departure slots D(i, j) of m customers through k FIFO stations.

    Event-driven: a station starts its next customer when both the customer
    has left the previous station and the station has finished the previous
    customer; service of bit j at hop i lasts w(i, j) slots.
    Returns the (k, m) matrix with 1-indexed stations and customers.
    """
    w = np.asarray(weights, dtype=np.int64)
    k, m = w.shape
    D = np.zeros((k, m), dtype=np.int64)
    free_at = [0] * k          # station i idle from this time on
    next_cust = [0] * k        # next customer each station will serve
    arrivals = [[] for _ in range(k)]   # customers waiting at station i
    events = []                # (time, station, customer) departures
    for j in range(m):
        arrivals[0].append((0, j))

    def try_start(i, now):
        if next_cust[i] < m and arrivals[i] and arrivals[i][0][1] == next_cust[i]:
            t_arr, j = arrivals[i].pop(0)
            start = max(t_arr, free_at[i], now)
            done = start + int(w[i, j])
            free_at[i] = done
            next_cust[i] += 1
            heapq.heappush(events, (done, i, j))

    try_start(0, 0)
    while events:
        t, i, j = heapq.heappop(events)
        D[i, j] = t
        if i + 1 < k:
            arrivals[i + 1].append((t, j))
            if free_at[i + 1] <= t:
                try_start(i + 1, t)
        try_start(i, t)
    return D


def weights_from_departures(departure: np.ndarray) -> np.ndarray:
    """Service times realized in a GSI run: w(i, j) = D(i, j) - max(D(i-1, j), D(i, j-1)).

    ``departure`` is the (k+1, m+1) matrix of a GsiTrialRecord (or a batch).
    """
    D = np.asarray(departure, dtype=np.int64)
    ready = np.maximum(D[..., :-1, 1:], D[..., 1:, :-1])
    return D[..., 1:, 1:] - ready


def gsi_weights(states: StateMatrix, departure: np.ndarray) -> np.ndarray:
    """Next-clear-slot gaps of hop i-1 measured from the time bit j is ready there."""
    D = np.asarray(departure, dtype=np.int64)
    ready = np.maximum(D[..., :-1, 1:], D[..., 1:, :-1])
    hop = np.broadcast_to(np.arange(ready.shape[-2])[:, None], ready.shape[-2:])
    if ready.ndim == 2:
        nxt = states.next_clear(hop[None], ready[None])[0]
    else:
        nxt = states.next_clear(np.broadcast_to(hop, ready.shape), ready)
    return nxt - ready


def geometric_weights(rng: np.random.Generator, eps: float, shape) -> np.ndarray:
    return rng.geometric(1.0 - eps, size=shape).astype(np.int64)


def linear_regime_prediction(eps: float, alpha: float) -> tuple[float, float]:
    """(delay per hop, velocity) = ((1 + 2 sqrt(alpha eps) + alpha)/(1 - eps), reciprocal)."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    d = (1.0 + 2.0 * math.sqrt(alpha * eps) + alpha) / (1.0 - eps)
    return d, 1.0 / d
