from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

SCHEMA = "wiblock.SimResult/1"


@dataclass
class SimResult:
    """Measurements from one simulation run.

    Counts cover the whole horizon; means and their ``ci95`` half-widths cover
    the post-warm-up window ``[warmup_s, horizon_s]`` only. Queue lengths
    include the transaction(s) in service. Sojourns are averaged over
    transactions that arrived at the tier inside the window.
    """
    horizon_s: float
    warmup_s: float
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    classified_global: int = 0
    classified_local: int = 0
    confirmed_count: int = 0
    global_count: int = 0
    local_count: int = 0
    block_count: int = 0
    mean_witness_sojourn_s: float = math.nan
    mean_gb_sojourn_s: float = math.nan
    mean_end_to_end_s: float = math.nan
    mean_witness_queue_len: np.ndarray = field(default_factory=lambda: np.empty(0))
    witness_arrival_rate: np.ndarray = field(default_factory=lambda: np.empty(0))
    gb_arrival_rate: float = math.nan
    gb_mean_queue_len: float = math.nan
    gb_mean_in_block: float = math.nan
    gb_mean_waiting: float = math.nan
    ledger_gb: int = 0
    ledger_local: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    mu1_service_fraction: float = math.nan
    ci95: dict = field(default_factory=dict)
    unstable: dict = field(default_factory=dict)

    @property
    def in_flight(self) -> int:
        return self.generated - self.confirmed_count - self.dropped

    @property
    def dropped_count(self) -> int:
        return self.dropped

    @property
    def ledger_tx_counts(self) -> tuple:
        """(global ledger count, per-witness local ledger counts)."""
        return self.ledger_gb, self.ledger_local

    @property
    def global_fraction(self) -> float:
        """Share of delivered transactions classified as global."""
        n = self.classified_global + self.classified_local
        return self.classified_global / n if n else math.nan

    @property
    def mean_witness_queue_len_pooled(self) -> float:
        q = self.mean_witness_queue_len
        return float(np.mean(q)) if len(q) else math.nan

    @property
    def stable(self) -> bool:
        return not any(self.unstable.values())

    def scalars(self) -> dict:
        """Flat numeric summary used for replication averaging."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                out[f.name] = float(value)
        out["in_flight"] = float(self.in_flight)
        out["global_fraction"] = self.global_fraction
        out["mean_witness_queue_len_pooled"] = self.mean_witness_queue_len_pooled
        return out

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                value = value.tolist()
            out[f.name] = value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "SimResult":
        doc = json.loads(text)
        schema = doc.pop("schema", None)
        if schema != SCHEMA:
            raise ValueError(f"unsupported result schema {schema!r}")
        for key in ("mean_witness_queue_len", "witness_arrival_rate"):
            doc[key] = np.asarray(doc[key], dtype=float)
        doc["ledger_local"] = np.asarray(doc["ledger_local"], dtype=int)
        return cls(**doc)
