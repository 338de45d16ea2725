"""Event-list simulation of the witness tier and the global blockchain queue.

Random numbers come from independent named substreams derived from one seed,
so runs are reproducible bit for bit:

* ``generation``: Poisson arrival epochs and the generating device
* ``channel``: witness order and per-attempt outage draws
* ``service``: witness processing times
* ``block``: block generation times

Retries are instantaneous and their outcome does not depend on queue state,
so delivery of every transaction is drawn before the event loop starts. The
loop then interleaves arrivals with pending witness service completions held
on a heap; at equal times a completion is handled before an arrival. Block
production never feeds back into the witnesses, so once the witness tier has
produced the chain's arrival stream the blocks are played out in a second
sequential pass.
"""
from __future__ import annotations

import csv
import heapq
import math
import warnings
from collections import deque

import numpy as np
from scipy import stats

from ..config import ScenarioConfig
from ..errors import InvalidHorizon
from ..radio import Deployment, LinkSuccessMatrix
from .events import EventKind
from .result import SimResult

_CHUNK = 1 << 16

WARMUP_FRACTION = 0.1
WARMUP_CONFIRMATIONS = 1000
N_BATCHES = 20
MIN_CONFIRMATIONS = 10_000
TRACE_COLUMNS = ["time_s", "kind", "tx_id", "device_id", "witness_id", "detail"]

_STREAMS = ("generation", "channel", "service", "block")


def substreams(seed) -> dict:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return {name: np.random.default_rng(child) for name, child in zip(_STREAMS, ss.spawn(len(_STREAMS)))}


def _check_horizon(horizon_s):
    if not (isinstance(horizon_s, (int, float)) and math.isfinite(horizon_s) and horizon_s > 0):
        raise InvalidHorizon(f"horizon must be a positive finite time, got {horizon_s!r}")


def _poisson_epochs(rate, horizon, rng):
    if rate <= 0:
        return np.empty(0)
    mean_n = rate * horizon
    chunk = int(mean_n + 10 * math.sqrt(mean_n) + 16)
    parts, last = [], 0.0
    while True:
        t = last + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        parts.append(t)
        last = t[-1]
        if last > horizon:
            break
    times = np.concatenate(parts)
    return times[: np.searchsorted(times, horizon, side="right")]


def _deliver(devices, ps, l, rng, chunk=1 << 16):
    """Retry procedure for each transaction: returns (witness or -1, attempts used)."""
    n = len(devices)
    v = ps.shape[1]
    witness = np.full(n, -1, dtype=np.int32)
    attempts = np.zeros(n, dtype=np.int16)
    for lo in range(0, n, chunk):
        dev = devices[lo:lo + chunk]
        m = len(dev)
        order = np.argsort(rng.random((m, v)), axis=1)[:, :l]
        ok = rng.random((m, l)) < ps[dev[:, None], order]
        hit = ok.any(axis=1)
        first = ok.argmax(axis=1)
        witness[lo:lo + m] = np.where(hit, order[np.arange(m), first], -1)
        attempts[lo:lo + m] = np.where(hit, first + 1, l)
    return witness, attempts


class _BlockClock:
    def __init__(self, rate, rng, chunk=4096):
        self.scale = 1.0 / rate
        self.rng = rng
        self.chunk = chunk
        self.buf = []

    def draw(self):
        if not self.buf:
            self.buf = self.rng.exponential(self.scale, size=self.chunk)[::-1].tolist()
        return self.buf.pop()


class _Trace:
    """Buffers trace rows and writes them in event order (time, kind rank, sequence)."""

    def __init__(self, path):
        self.path = path
        self.rows = []

    def add(self, t, kind: EventKind, tx, device, witness, detail):
        self.rows.append((t, int(kind), len(self.rows),
                          [repr(float(t)), kind.label, tx, device, witness, detail]))

    def write(self):
        self.rows.sort(key=lambda r: r[:3])
        with open(self.path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            writer.writerows(r[3] for r in self.rows)


def _serve_blocks(arrive, b, horizon, clock, trace=None):
    """Batch service of the chain queue for sorted arrival epochs ``arrive``.

    A block starts when a transaction finds the chain idle and the next one
    starts at once while transactions remain; each completion confirms
    ``min(present, b)`` in FCFS order. Returns ``(lo, hi, time)`` per block:
    transactions ``lo..hi-1`` are confirmed at ``time``.
    """
    n = len(arrive)
    blocks = []
    head = 0
    if n == 0:
        return blocks
    start = float(arrive[0])
    while True:
        end = start + clock.draw()
        if end > horizon:
            break
        # an arrival at exactly ``end`` is ordered after the completion
        present = int(np.searchsorted(arrive, end, side="left")) - head
        m = min(present, b)
        blocks.append((head, head + m, end))
        if trace is not None:
            trace.add(end, EventKind.BLOCK_COMPLETE, -1, -1, -1,
                      f"block={len(blocks) - 1} size={m}")
        head += m
        if present > m:
            start = end
        elif head < n:
            start = float(arrive[head])
        else:
            break
    return blocks



def _level_path(up_times, down_times, down_counts=None):
    """Change epochs and the count after each change.

    Each up time adds one; each down time removes ``down_counts`` (default 1),
    so a block completion is a single step. Departures go first on ties.
    """
    t = np.concatenate([down_times, up_times])
    down = np.ones(len(down_times)) if down_counts is None else np.asarray(down_counts, float)
    step = np.concatenate([-down, np.ones(len(up_times))])
    order = np.argsort(t, kind="stable")
    return t[order], np.cumsum(step[order])


def _integrate(times, levels, edges):
    """Integral of a right-continuous step path over consecutive ``edges`` intervals."""
    if len(times) == 0:
        return np.zeros(len(edges) - 1)
    widths = np.diff(times)
    cum = np.concatenate(([0.0], np.cumsum(levels[:-1] * widths)))
    idx = np.searchsorted(times, edges, side="right") - 1
    at = np.where(idx >= 0, cum[np.maximum(idx, 0)]
                  + levels[np.maximum(idx, 0)] * (edges - times[np.maximum(idx, 0)]), 0.0)
    return np.diff(at)


def _t_half(samples):
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 2:
        return math.nan
    return float(stats.t.ppf(0.975, len(x) - 1) * np.std(x, ddof=1) / math.sqrt(len(x)))


def _batch_sojourns(arrive, leave, edges):
    """Per-batch mean sojourn of transactions arriving in each batch, and overall mean."""
    done = np.isfinite(leave) & (arrive >= edges[0]) & (arrive < edges[-1])
    a, s = arrive[done], leave[done] - arrive[done]
    if len(a) == 0:
        return math.nan, np.full(len(edges) - 1, math.nan), 0
    which = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, len(edges) - 2)
    sums = np.bincount(which, weights=s, minlength=len(edges) - 1)
    cnt = np.bincount(which, minlength=len(edges) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per = sums / cnt
    return float(s.mean()), per, len(a)


def _trend_unstable(series):
    """Flag a sustained upward drift in per-batch mean queue lengths."""
    y = np.asarray(series, dtype=float)
    if len(y) < 4 or not np.all(np.isfinite(y)):
        return False
    x = np.arange(len(y), dtype=float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    dof = len(y) - 2
    se = math.sqrt(max(np.sum(resid**2) / dof, 1e-300) / np.sum((x - x.mean()) ** 2))
    rise = slope * (len(y) - 1)
    return bool(slope / se > 5.0 and rise > 0.5 * max(np.mean(y), 1e-12))


def _warmup(horizon, confirm_times):
    t = WARMUP_FRACTION * horizon
    if len(confirm_times) < WARMUP_CONFIRMATIONS:
        return horizon
    kth = np.partition(confirm_times, WARMUP_CONFIRMATIONS - 1)[WARMUP_CONFIRMATIONS - 1]
    return float(max(t, kth))


def _summarize(res: SimResult, *, gen_t, witness, is_global, w_end, gb_arrive, gb_end, gb_blocks,
               gb_tx, b, v, tiered):
    H = res.horizon_s
    local = (witness >= 0) & ~is_global
    confirm_local = w_end[local]
    confirm_local = confirm_local[np.isfinite(confirm_local)]
    confirm_gb = gb_end[np.isfinite(gb_end)]
    res.warmup_s = _warmup(H, np.concatenate([confirm_local, confirm_gb]))
    edges = np.linspace(res.warmup_s, H, N_BATCHES + 1)
    span = H - res.warmup_s
    ci = res.ci95
    if span <= 0:
        warnings.warn("fewer than 1e3 confirmations: no post-warm-up statistics", RuntimeWarning)
        return res
    lens = np.diff(edges)

    if tiered:
        delivered = witness >= 0
        q_len = np.zeros(v)
        batch_q = np.zeros((v, N_BATCHES))
        rates = np.zeros(v)
        for w in range(v):
            mine = witness == w
            a, d = gen_t[mine], w_end[mine]
            tt, lv = _level_path(a, d[np.isfinite(d)])
            area = _integrate(tt, lv, edges)
            batch_q[w] = area / lens
            q_len[w] = area.sum() / span
            rates[w] = np.count_nonzero((a >= edges[0]) & (a < edges[-1])) / span
        res.mean_witness_queue_len = q_len
        res.witness_arrival_rate = rates
        pooled = batch_q.mean(axis=0)
        ci["mean_witness_queue_len_pooled"] = _t_half(pooled)
        ci["mean_witness_queue_len"] = [_t_half(row) for row in batch_q]
        res.unstable.update({f"witness_{w}": _trend_unstable(batch_q[w]) for w in range(v)})
        mean, per, _ = _batch_sojourns(gen_t[delivered], w_end[delivered], edges)
        res.mean_witness_sojourn_s = mean
        ci["mean_witness_sojourn_s"] = _t_half(per)
        served = delivered & np.isfinite(w_end)
        if served.any():
            res.mu1_service_fraction = float(np.mean(is_global[served]))

    # chain tier
    if gb_blocks:
        bt = np.array([blk[2] for blk in gb_blocks])
        bn = np.array([blk[1] - blk[0] for blk in gb_blocks])
    else:
        bt, bn = np.empty(0), np.empty(0)
    tt, lv = _level_path(gb_arrive, bt, bn)
    del bt, bn
    area = _integrate(tt, lv, edges)
    area_in = _integrate(tt, np.minimum(lv, b), edges)
    res.gb_mean_queue_len = float(area.sum() / span)
    res.gb_mean_in_block = float(area_in.sum() / span)
    res.gb_mean_waiting = res.gb_mean_queue_len - res.gb_mean_in_block
    ci["gb_mean_queue_len"] = _t_half(area / lens)
    res.unstable["gb"] = _trend_unstable(area / lens)
    res.gb_arrival_rate = np.count_nonzero((gb_arrive >= edges[0]) & (gb_arrive < edges[-1])) / span
    mean, per, _ = _batch_sojourns(gb_arrive, gb_end, edges)
    res.mean_gb_sojourn_s = mean
    ci["mean_gb_sojourn_s"] = _t_half(per)

    # generation to confirmation, both transaction types
    done_t = np.full(len(gen_t), np.nan)
    if tiered:
        done_t[local] = w_end[local]
    done_t[gb_tx] = gb_end
    done_t[np.isnan(done_t)] = np.inf
    counted = np.isfinite(done_t) | (witness >= 0) if tiered else np.ones(len(gen_t), bool)
    mean, per, _ = _batch_sojourns(gen_t[counted], done_t[counted], edges)
    res.mean_end_to_end_s = mean
    ci["mean_end_to_end_s"] = _t_half(per)
    return res


# --------------------------------------------------------------------------
# runs

def _expect_enough(rate, horizon):
    if rate * horizon < MIN_CONFIRMATIONS:
        warnings.warn(f"horizon {horizon:g}s yields about {rate * horizon:.0f} confirmations "
                      f"(< {MIN_CONFIRMATIONS}); statistics will be noisy", RuntimeWarning)


def _block_ends(n, blocks):
    out = np.full(n, np.inf)
    for lo, hi, t in blocks:
        out[lo:hi] = t
    return out


def run_wiblock_sim(cfg: ScenarioConfig, dep: Deployment, ps: LinkSuccessMatrix,
                    horizon_s: float, seed, trace_path=None) -> SimResult:
    """Simulate generation, retry-based delivery, witness queues and the chain queue.

    Local transactions are confirmed when their witness finishes serving them;
    global ones when the block containing them completes.
    """
    _check_horizon(horizon_s)
    k, v = cfg.num_devices, cfg.num_witnesses
    if ps.p_s.shape != (k, v) or dep.num_devices != k or dep.num_witnesses != v:
        raise ValueError("deployment and link matrix must match the configuration sizes")
    lam = cfg.per_device_rate_tps
    q = cfg.queue
    b = q.block_size
    rng = substreams(seed)
    res = SimResult(horizon_s=float(horizon_s), warmup_s=float(horizon_s),
                    mean_witness_queue_len=np.zeros(v), witness_arrival_rate=np.zeros(v),
                    ledger_local=np.zeros(v, dtype=int))
    _expect_enough(k * lam, horizon_s)

    gen_t = _poisson_epochs(k * lam, horizon_s, rng["generation"])
    n = len(gen_t)
    res.generated = n
    if n == 0:
        return res
    devices = rng["generation"].integers(0, k, size=n, dtype=np.int32)
    witness, attempts = _deliver(devices, np.asarray(ps.p_s, float), cfg.retry_limit, rng["channel"])
    delivered = witness >= 0
    is_global = delivered & (witness != dep.registration[devices])
    service = rng["service"].standard_exponential(n) * np.where(
        is_global, 1.0 / q.mu1_tps, 1.0 / q.mu2_tps)
    clock = _BlockClock(q.block_rate_bps, rng["block"])
    trace = _Trace(trace_path) if trace_path is not None else None

    w_end = np.full(n, np.nan)
    busy = [False] * v
    waiting = [deque() for _ in range(v)]
    gb_tx, gb_t = [], []
    heap = []  # witness service completions only: (time, seq, witness, tx, is_global)
    seq = 0

    def finish(ev):
        nonlocal seq
        t, _, w, i, glob = ev
        w_end[i] = t
        if glob:
            gb_tx.append(i)
            gb_t.append(t)
        if trace is not None:
            trace.add(t, EventKind.WITNESS_SERVICE_END, i, int(devices[i]), w,
                      "global forwarded" if glob else "local confirmed")
        if waiting[w]:
            j, s, g = waiting[w].popleft()
            seq += 1
            heapq.heappush(heap, (t + s, seq, w, j, g))
        else:
            busy[w] = False

    for lo in range(0, n, _CHUNK):
        ts = gen_t[lo:lo + _CHUNK].tolist()
        ws = witness[lo:lo + _CHUNK].tolist()
        gs = is_global[lo:lo + _CHUNK].tolist()
        ss = service[lo:lo + _CHUNK].tolist()
        for j, t in enumerate(ts):
            while heap and heap[0][0] <= t:
                finish(heapq.heappop(heap))
            w = ws[j]
            if trace is not None:
                kind = "dropped" if w < 0 else ("global" if gs[j] else "local")
                trace.add(t, EventKind.ARRIVAL, lo + j, int(devices[lo + j]), w,
                          f"{kind} attempts={int(attempts[lo + j])}")
            if w < 0:
                continue
            if busy[w]:
                waiting[w].append((lo + j, ss[j], gs[j]))
            else:
                busy[w] = True
                seq += 1
                heapq.heappush(heap, (t + ss[j], seq, w, lo + j, gs[j]))
    while heap and heap[0][0] <= horizon_s:
        finish(heapq.heappop(heap))

    gb_tx = np.array(gb_tx, dtype=np.int64)
    gb_arrive = np.array(gb_t)
    blocks = _serve_blocks(gb_arrive, b, horizon_s, clock, trace)
    gb_end = _block_ends(len(gb_tx), blocks)
    if trace is not None:
        trace.write()

    local = delivered & ~is_global
    local_done = local & np.isfinite(w_end)
    res.delivered = int(delivered.sum())
    res.dropped = n - res.delivered
    res.classified_global = int(is_global.sum())
    res.classified_local = int(local.sum())
    res.local_count = int(local_done.sum())
    res.global_count = int(np.isfinite(gb_end).sum())
    res.confirmed_count = res.local_count + res.global_count
    res.block_count = len(blocks)
    res.ledger_gb = res.global_count
    res.ledger_local = np.bincount(witness[local_done], minlength=v).astype(int)
    return _summarize(res, gen_t=gen_t, witness=witness, is_global=is_global, w_end=w_end,
                      gb_arrive=gb_arrive, gb_end=gb_end, gb_blocks=blocks, gb_tx=gb_tx, b=b, v=v,
                      tiered=True)


def run_naive_sim(cfg: ScenarioConfig, horizon_s: float, seed, trace_path=None) -> SimResult:
    """Benchmark without witnesses: every transaction goes straight to the chain queue."""
    _check_horizon(horizon_s)
    k = cfg.num_devices
    lam = cfg.per_device_rate_tps
    q = cfg.queue
    b = q.block_size
    rng = substreams(seed)
    res = SimResult(horizon_s=float(horizon_s), warmup_s=float(horizon_s))
    _expect_enough(k * lam, horizon_s)
    gen_t = _poisson_epochs(k * lam, horizon_s, rng["generation"])
    n = len(gen_t)
    res.generated = n
    if n == 0:
        return res
    devices = rng["generation"].integers(0, k, size=n, dtype=np.int32)
    clock = _BlockClock(q.block_rate_bps, rng["block"])
    trace = _Trace(trace_path) if trace_path is not None else None
    if trace is not None:
        for i, (t, d) in enumerate(zip(gen_t.tolist(), devices.tolist())):
            trace.add(t, EventKind.ARRIVAL, i, d, -1, "direct")
    blocks = _serve_blocks(gen_t, b, horizon_s, clock, trace)
    if trace is not None:
        trace.write()
    gb_end = _block_ends(n, blocks)
    res.delivered = n
    res.classified_global = n
    res.global_count = int(np.isfinite(gb_end).sum())
    res.confirmed_count = res.global_count
    res.block_count = len(blocks)
    res.ledger_gb = res.global_count
    return _summarize(res, gen_t=gen_t, witness=np.full(n, -1, dtype=np.int32),
                      is_global=np.ones(n, bool), w_end=np.full(n, np.nan), gb_arrive=gen_t,
                      gb_end=gb_end, gb_blocks=blocks, gb_tx=np.arange(n), b=b, v=0, tiered=False)
