"""Discrete-event simulation of both tiers and the direct-to-chain benchmark."""
from .engine import run_naive_sim, run_wiblock_sim, substreams
from .events import EventKind, SimEvent
from .replicate import ReplicationSummary, SimSpec, replicate, t_interval
from .result import SCHEMA, SimResult

__all__ = ["EventKind", "ReplicationSummary", "SCHEMA", "SimEvent", "SimResult", "SimSpec",
           "replicate", "run_naive_sim", "run_wiblock_sim", "substreams", "t_interval"]
