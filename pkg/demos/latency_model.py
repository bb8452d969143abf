"""
Where the time goes in one offload
==================================

A task of 50 Mbit is sent to a relay, computed there, and the result is
forwarded to the destination. We look at one fading realization and at
which relay each selection rule would pick.
"""

import numpy as np

from mecrelay.channel import SeedSpec, draw
from mecrelay.model import RelayNode, SystemConfig, TaskSpec, eligibility, relay_delays
from mecrelay.schemes import Scheme, select_batch

task = TaskSpec(input_bits=50e6, cycles_per_bit=10.0, compute_ratio=0.5)
relays = [RelayNode(f) for f in (25e9, 20e9, 15e9, 30e9)]
cfg = SystemConfig.from_db(25.0, 20.0, relays, task)

# compute time alone must leave room before the 200 ms deadline
print("compute margins (s):", eligibility(cfg).phi_margins)

# one draw of |h|^2 and |g|^2 per relay
d = draw(SeedSpec(2024, 0), cfg.n_relays)
m = relay_delays(cfg, d.h2, d.g2)
np.set_printoptions(precision=4)
print("uplink   ", m.t_up)
print("compute  ", m.t_comp)
print("downlink ", m.t_down)
print("total    ", m.t_total)

for s in Scheme:
    idx, delay = select_batch(cfg, s, d)
    print(f"{s.value:6s} picks relay {int(idx)}  ->  {float(delay) * 1e3:.1f} ms")
