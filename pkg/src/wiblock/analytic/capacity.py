"""Stability-limited per-device load and ledger growth rates."""
from __future__ import annotations

from typing import NamedTuple

from ..config import ScenarioConfig
from ..errors import DomainError
from ..selection import global_fraction


class LedgerGrowth(NamedTuple):
    naive_tps: float
    gb_tps: float
    local_per_witness_tps: float
    gb_blocks_per_s: float


def max_load_naive(k: int, b: int, mu_B: float) -> float:
    """Largest per-device rate that keeps the global chain stable when every transaction goes to it."""
    if k <= 0 or b <= 0 or mu_B <= 0:
        raise DomainError("k, b and mu_B must be positive")
    return b * mu_B / k


def max_load_wiblock(k: int, v: int, b: int, mu_B: float) -> float:
    """Same bound when only the global fraction ``(v-1)/v`` reaches the chain (lossless links)."""
    if v < 2:
        raise DomainError("with a single witness no traffic is global; the bound is vacuous")
    return max_load_naive(k, b, mu_B) / global_fraction(v)


def ledger_growth(cfg: ScenarioConfig, delivered_rate: float) -> LedgerGrowth:
    """Ledger write rates for an aggregate confirmed rate ``delivered_rate`` (tx/s)."""
    if delivered_rate < 0:
        raise DomainError("delivered rate must be >= 0")
    v = cfg.num_witnesses
    p = global_fraction(v)
    gb = p * delivered_rate
    return LedgerGrowth(delivered_rate, gb, (1.0 - p) * delivered_rate / v,
                        gb / cfg.queue.block_size)
