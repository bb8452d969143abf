"""
Simulated and computed outage side by side
==========================================

Monte Carlo on shared channel draws against the closed-form outage of the
latency-best and computing-only rules, and the product bound for the
communication-only rule.
"""

from mecrelay.analytic import analytic_outage
from mecrelay.model import RelayNode, SystemConfig, TaskSpec
from mecrelay.montecarlo import estimate_all_schemes_shared_draws
from mecrelay.schemes import Scheme

task = TaskSpec(50e6, 10.0, 0.5)
relays = [RelayNode(f) for f in (25e9, 20e9, 15e9, 30e9)]

print(f"{'P_r dB':>6}  {'scheme':6}  {'MC':>9}  {'95% CI':>23}  {'analytic':>9}")
for pr in (5.0, 10.0, 15.0, 20.0, 25.0):
    cfg = SystemConfig.from_db(25.0, pr, relays, task)
    mc = estimate_all_schemes_shared_draws(cfg, 200_000, master_seed=2024)
    for s in Scheme:
        r = mc[s]
        print(f"{pr:6.1f}  {s.value:6}  {r.p_hat:9.3e}  [{r.ci_low:9.3e}, {r.ci_high:9.3e}]  {analytic_outage(cfg, s):9.3e}")

# the CORS column is an upper bound, and a loose one at low SNR
