"""Monte Carlo estimation of the delay outage probability.

An outage is a trial whose selected relay needs ``t_total >= D_max``.
All schemes are evaluated on the same fading draws (common random
numbers), which turns the per-draw optimality of LBRS into an exact
inequality between outage counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .channel import iter_blocks
from .model import SystemConfig, relay_delays
from .schemes import Scheme, select_batch

__all__ = ["OutageResult", "wilson_interval", "estimate_outage", "estimate_all_schemes_shared_draws", "count_outages"]

MONTE_CARLO = "monte-carlo"
ANALYTIC = "analytic"
ANALYTIC_BOUND = "analytic-upper-bound"
ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class OutageResult:
    scheme_id: Scheme
    p_hat: float
    ci_low: float
    ci_high: float
    n_trials: int
    n_outages: int
    method: str
    master_seed: int | None = None
    converged: bool = True

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def contains(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high

    @classmethod
    def exact(cls, scheme, p: float, method: str = ANALYTIC, converged: bool = True) -> "OutageResult":
        """Wrap a deterministic value; its interval collapses to the point."""
        return cls(Scheme.parse(scheme), p, p, p, 0, 0, method, None, converged)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    p = successes / trials
    z2n = z * z / trials
    center = (p + z2n / 2.0) / (1.0 + z2n)
    margin = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    # rounding can push the bounds a hair past p at p in {0, 1}
    return max(0.0, min(center - margin, p)), min(1.0, max(center + margin, p))


def count_outages(cfg: SystemConfig, n_trials: int, master_seed: int, schemes=tuple(Scheme)) -> dict[Scheme, int]:
    """Outage counts per scheme over ``n_trials`` shared draws."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    schemes = tuple(Scheme.parse(s) for s in schemes)
    counts = dict.fromkeys(schemes, 0)
    for block in iter_blocks(master_seed, cfg.n_relays, n_trials):
        m = relay_delays(cfg, block.h2, block.g2)
        for s in schemes:
            _, delay = select_batch(cfg, s, block, metrics=m)
            counts[s] += int(np.count_nonzero(delay >= cfg.deadline))
    return counts


def _result(scheme: Scheme, k: int, n: int, seed: int) -> OutageResult:
    lo, hi = wilson_interval(k, n)
    return OutageResult(scheme, k / n, lo, hi, n, k, MONTE_CARLO, seed)


def estimate_outage(cfg: SystemConfig, scheme, n_trials: int, master_seed: int) -> OutageResult:
    scheme = Scheme.parse(scheme)
    k = count_outages(cfg, n_trials, master_seed, (scheme,))[scheme]
    return _result(scheme, k, n_trials, master_seed)


def estimate_all_schemes_shared_draws(cfg: SystemConfig, n_trials: int, master_seed: int) -> dict[Scheme, OutageResult]:
    counts = count_outages(cfg, n_trials, master_seed)
    return {s: _result(s, k, n_trials, master_seed) for s, k in counts.items()}
