"""
High-SNR slopes
===============

With equal transmit powers, the log-log slope of the outage is the number
of relays able to meet the deadline on compute alone, for both the
latency-best and the communication-only rule. Picking by CPU alone gives
slope 1.
"""

import numpy as np

from mecrelay.analytic import config_at_gamma, cors_asymptotic_outage, cors_outage_upper_bound, diversity_order
from mecrelay.model import RelayNode, SystemConfig, TaskSpec
from mecrelay.schemes import Scheme

task = TaskSpec(50e6, 10.0, 0.5)
gammas = np.logspace(3, 6, 8)

for freqs in ([25e9, 20e9, 15e9, 30e9], [25e9, 20e9, 30e9, 2e9], [25e9, 30e9, 2e9, 1e9]):
    cfg = SystemConfig.from_db(0.0, 0.0, [RelayNode(f) for f in freqs], task)
    slopes = {s.value: round(diversity_order(cfg, s, gammas).slope, 3) for s in Scheme}
    print(np.array(freqs) / 1e9, "GHz ->", slopes)

# the bound approaches its first-order expansion as gamma grows
cfg = SystemConfig.from_db(0.0, 0.0, [RelayNode(f) for f in (25e9, 20e9)], task)
for g in (1e3, 1e4, 1e5, 1e6):
    print(f"gamma={g:.0e}  bound/asymptote = {cors_outage_upper_bound(config_at_gamma(cfg, g)) / cors_asymptotic_outage(cfg, g):.5f}")
