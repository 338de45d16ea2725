"""
Capacity of the two-tier design
===============================

How much traffic the global chain can take with and without witnesses, and
how delivered transactions split between the global chain and the local
ledgers.
"""

import numpy as np

from wiblock.analytic import ledger_growth, max_load_naive, max_load_wiblock
from wiblock.config import ScenarioConfig

cfg = ScenarioConfig(num_witnesses=2)
k, b, mu_B = cfg.num_devices, cfg.queue.block_size, cfg.queue.block_rate_bps

# every transaction goes to the chain: k * lambda < b * mu_B
print(f"naive per-device bound: {max_load_naive(k, b, mu_B):.4g} tps")

# only a fraction (v-1)/v of the traffic needs the chain
for v in range(2, 11):
    bound = max_load_wiblock(k, v, b, mu_B)
    print(f"v={v:2d}  per-device bound {bound:.4g} tps  gain {bound / max_load_naive(k, b, mu_B):.3f}")

# ledger growth at 1.2 tps delivered, over one day
day = 24 * 3600
g = ledger_growth(cfg, 1.2)
print(f"\none day at 1.2 tps: naive ledger {g.naive_tps * day:.0f} tx, "
      f"global {g.gb_tps * day:.0f} tx, each local ledger {g.local_per_witness_tps * day:.0f} tx")

# more witnesses push more traffic onto the chain
fractions = np.array([(v - 1) / v for v in range(2, 11)])
print("global share for v = 2..10:", np.round(fractions, 3))
