"""
Confirmation time on the global chain
=====================================

Blocks of up to b transactions arrive after exponential times of mean
1/mu_B. Mean confirmation time for the naive design and for v = 2, 3, 4
witnesses, plus one simulated point.
"""

import warnings

import numpy as np

from wiblock.analytic import gb_queue_stats, max_load_naive
from wiblock.config import ScenarioConfig
from wiblock.des import run_naive_sim

cfg = ScenarioConfig(num_witnesses=2)
k, b, mu_B = cfg.num_devices, cfg.queue.block_size, cfg.queue.block_rate_bps

print(f"{'lambda':>9}  {'naive':>9}  {'v=2':>9}  {'v=3':>9}  {'v=4':>9}")
for lam in np.linspace(0.1, 0.95, 8) * max_load_naive(k, b, mu_B):
    cells = []
    for share in (1.0, 1 / 2, 2 / 3, 3 / 4):
        st = gb_queue_stats(k * lam * share, mu_B, b)
        cells.append(f"{st.mean_confirmation_s:9.1f}" if st.stable else f"{'-':>9}")
    print(f"{lam:9.2e}  " + "  ".join(cells))

# simulate the naive design at half of capacity
lam_B = 0.5 * b * mu_B
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    res = run_naive_sim(cfg.with_rate(lam_B / k), 5e6, seed=3)
exact = gb_queue_stats(lam_B, mu_B, b).mean_confirmation_s
print(f"\nat 50% load: analytic {exact:.1f} s, simulated {res.mean_gb_sojourn_s:.1f} "
      f"+/- {res.ci95['mean_gb_sojourn_s']:.1f} s over {res.global_count} transactions")
