"""Independent replications with Student-t confidence intervals."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..config import ScenarioConfig
from ..errors import DomainError
from ..radio import Deployment, LinkSuccessMatrix
from .engine import run_naive_sim, run_wiblock_sim
from .result import SimResult


@dataclass(frozen=True)
class SimSpec:
    """Everything needed to rerun a simulation from a seed.

    ``engine`` is ``"wiblock"`` or ``"naive"``; the wiblock engine needs
    ``deployment`` and ``links``.
    """
    cfg: ScenarioConfig
    horizon_s: float
    engine: str = "wiblock"
    deployment: Deployment | None = None
    links: LinkSuccessMatrix | None = None

    def run(self, seed) -> SimResult:
        if self.engine == "naive":
            return run_naive_sim(self.cfg, self.horizon_s, seed)
        if self.engine != "wiblock":
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.deployment is None or self.links is None:
            raise ValueError("the wiblock engine needs a deployment and a link matrix")
        return run_wiblock_sim(self.cfg, self.deployment, self.links, self.horizon_s, seed)


@dataclass
class ReplicationSummary:
    """Across-replication mean and 95% half-width of every scalar output."""
    n_rep: int
    base_seed: int
    mean: dict
    half_width: dict
    runs: list = field(repr=False, default_factory=list)

    @property
    def unstable(self) -> bool:
        return any(not r.stable for r in self.runs)

    def interval(self, name):
        m, h = self.mean[name], self.half_width[name]
        return m - h, m + h

    def to_dict(self) -> dict:
        return {"n_rep": self.n_rep, "base_seed": self.base_seed, "mean": self.mean,
                "half_width": self.half_width, "unstable": self.unstable}


def replication_seed(base_seed: int, i: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base_seed, i])


def _run_one(args):
    spec, base_seed, i = args
    return spec.run(replication_seed(base_seed, i))


def t_interval(samples) -> tuple[float, float]:
    """Mean and 95% Student-t half-width, ignoring non-finite samples."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) == 0:
        return math.nan, math.nan
    if len(x) == 1:
        return float(x[0]), math.nan
    h = stats.t.ppf(0.975, len(x) - 1) * np.std(x, ddof=1) / math.sqrt(len(x))
    return float(np.mean(x)), float(h)


def replicate(spec: SimSpec, n_rep: int, base_seed: int = 0, workers: int | None = None
              ) -> ReplicationSummary:
    """Run ``n_rep`` independent replications of ``spec``.

    Replication ``i`` is seeded with ``SeedSequence([base_seed, i])``, so results
    do not depend on ``workers``.
    """
    if n_rep < 2:
        raise DomainError("at least two replications are needed for an interval")
    jobs = [(spec, base_seed, i) for i in range(n_rep)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    table = [r.scalars() for r in runs]
    mean, half = {}, {}
    for key in table[0]:
        mean[key], half[key] = t_interval([row[key] for row in table])
    return ReplicationSummary(n_rep, base_seed, mean, half, runs)
