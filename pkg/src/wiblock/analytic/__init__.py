"""Closed-form and numerically solved queueing results."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ScenarioConfig
from ..radio import LinkSuccessMatrix, sample_deployment, success_matrix
from ..selection import delivery_success_probability, global_fraction, selection_profiles, \
    witness_arrival_rates
from .blockchain import (GbQueueStats, Stability, completion_epoch_distribution,
                         completion_epoch_root, gb_alpha, gb_arrival_rate,
                         gb_mean_confirmation_time, gb_queue_stats, gb_stability, hazard_rate)
from .capacity import LedgerGrowth, ledger_growth, max_load_naive, max_load_wiblock
from .witness import (WitnessQueueStats, mean_service_rate, rate_matrix, service_variance_scv,
                      stationary_mean, witness_mean_queue, witness_stationary)

__all__ = [
    "GbQueueStats", "LedgerGrowth", "ScenarioAnalysis", "Stability", "WitnessQueueStats",
    "analyze_scenario", "completion_epoch_distribution", "completion_epoch_root",
    "gb_alpha", "gb_arrival_rate", "gb_mean_confirmation_time", "gb_queue_stats",
    "gb_stability", "hazard_rate", "ledger_growth", "max_load_naive", "max_load_wiblock",
    "mean_delivery_fraction", "mean_service_rate", "rate_matrix", "service_variance_scv",
    "stationary_mean", "witness_mean_queue", "witness_stationary",
]


@dataclass(frozen=True)
class ScenarioAnalysis:
    """Witness-tier and chain-tier results for one parameter point.

    ``witness`` holds ``None`` for witnesses whose queue is unstable.
    """
    lambda_tps: float
    p_global: float
    lambda_w: np.ndarray
    witness: list
    gb: GbQueueStats

    @property
    def end_to_end_s(self) -> float:
        """Mean witness sojourn plus chain confirmation for a global transaction (extension)."""
        rates = self.lambda_w
        sojourns = [s.mean_sojourn_s for s in self.witness if s is not None and s.lambda_w > 0]
        if len(sojourns) != int(np.count_nonzero(rates)):
            return float("inf")
        active = rates[rates > 0]
        w = float(np.dot(active, sojourns) / active.sum()) if active.size else 0.0
        return w + self.gb.mean_confirmation_s

    def to_dict(self) -> dict:
        return {
            "lambda_tps": self.lambda_tps,
            "p_global": self.p_global,
            "lambda_w": [float(x) for x in self.lambda_w],
            "witness": [None if s is None else s.to_dict() for s in self.witness],
            "gb": self.gb.to_dict(),
            "end_to_end_s": self.end_to_end_s,
        }


def mean_delivery_fraction(cfg: ScenarioConfig, replications: int | None = None,
                           seed: int | None = None) -> float:
    """Average over sampled deployments of the per-device delivery probability."""
    reps = cfg.deployment_replications if replications is None else replications
    seed = cfg.rng_seed if seed is None else seed
    seeds = np.random.SeedSequence(seed).spawn(reps)
    total = 0.0
    for ss in seeds:
        dep = sample_deployment(cfg, ss)
        links = success_matrix(dep, cfg.radio, cfg.distance_floor_m)
        total += float(np.mean(delivery_success_probability(links.p_s, cfg.retry_limit)))
    return total / reps


def analyze_scenario(cfg: ScenarioConfig, links: LinkSuccessMatrix | None = None,
                     delivery_fraction: float | None = None, tol: float | None = None
                     ) -> ScenarioAnalysis:
    """Evaluate both tiers for ``cfg``.

    With ``links`` the per-witness rates come from that link matrix. Otherwise
    witnesses are treated as exchangeable, each receiving ``k*lambda*delta/v``
    where ``delta`` is ``delivery_fraction`` (1 = lossless links).
    """
    lam = cfg.per_device_rate_tps
    v = cfg.num_witnesses
    p = global_fraction(v)
    if links is not None:
        profiles = selection_profiles(links, cfg.retry_limit)
        rates = witness_arrival_rates(profiles, links, lam)
    else:
        delta = 1.0 if delivery_fraction is None else delivery_fraction
        rates = np.full(v, cfg.num_devices * lam * delta / v)
    q = cfg.queue
    witness = []
    mu = mean_service_rate(p, q.mu1_tps, q.mu2_tps)
    for lw in rates:
        witness.append(witness_mean_queue(lw, p, q.mu1_tps, q.mu2_tps, tol) if lw < mu else None)
    lam_B = gb_arrival_rate(rates, p)
    gb = gb_queue_stats(lam_B, q.block_rate_bps, q.block_size)
    return ScenarioAnalysis(lam, p, rates, witness, gb)
