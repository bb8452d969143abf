"""Domain types and deterministic latency formulas.

A source hands a task of ``L`` input bits to one of ``N`` relays over a
Rayleigh-faded link. The relay spends ``L*K/f`` seconds computing and then
forwards ``rho*L`` output bits to the destination over a second faded link.
Everything here is linear scale; dB conversion happens only through
:func:`db_to_linear` at the configuration boundary.

The latency helpers broadcast over numpy arrays so the same code serves a
single realization and a block of Monte Carlo trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "TaskSpec",
    "RelayNode",
    "SystemConfig",
    "LinkMetrics",
    "EligibilityView",
    "db_to_linear",
    "pathloss_gain",
    "link_rate",
    "compute_time",
    "total_delay",
    "relay_delays",
    "eligibility",
]


def db_to_linear(value_db):
    out = 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TaskSpec:
    """Computation task ``(L, K, rho)``.

    Parameters
    ----------
    input_bits : float
        Input size ``L`` in bits.
    cycles_per_bit : float
        CPU cycles needed per input bit ``K``.
    compute_ratio : float
        Output size divided by input size, ``rho``.
    """

    input_bits: float
    cycles_per_bit: float
    compute_ratio: float

    def __post_init__(self):
        if not self.input_bits > 0:
            raise ValueError(f"input_bits must be positive, got {self.input_bits}")
        # K = 0 is allowed by compute_time (zero-cost task) but not negative.
        if not self.cycles_per_bit >= 0:
            raise ValueError(f"cycles_per_bit must be non-negative, got {self.cycles_per_bit}")
        if not self.compute_ratio >= 0:
            raise ValueError(f"compute_ratio must be non-negative, got {self.compute_ratio}")

    @property
    def cycles(self) -> float:
        """Total CPU cycles ``L*K``."""
        return self.input_bits * self.cycles_per_bit


@dataclass(frozen=True)
class RelayNode:
    cpu_freq: float
    dist_src: float = 1.0
    dist_dst: float = 1.0

    def __post_init__(self):
        if not self.cpu_freq > 0:
            raise ValueError(f"cpu_freq must be positive, got {self.cpu_freq}")
        for name in ("dist_src", "dist_dst"):
            d = getattr(self, name)
            if not (math.isfinite(d) and d >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {d}")


@dataclass(frozen=True)
class SystemConfig:
    """Static description of the network at one operating point.

    Powers and noise are in watts; only ratios ``P/sigma2`` matter.
    ``relays`` is stored as a tuple so the config is hashable and immutable.
    """

    src_power: float
    relay_power: float
    noise: float
    bandwidth: float
    pathloss_exp: float
    deadline: float
    relays: tuple[RelayNode, ...]
    task: TaskSpec

    def __post_init__(self):
        object.__setattr__(self, "relays", tuple(self.relays))
        for name in ("src_power", "relay_power", "noise", "bandwidth", "deadline"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not self.pathloss_exp > 2:
            raise ValueError(f"pathloss_exp must exceed 2, got {self.pathloss_exp}")
        if len(self.relays) < 1:
            raise ValueError("at least one relay is required")

    @classmethod
    def from_db(
        cls,
        ps_db: float,
        pr_db: float,
        relays: Sequence[RelayNode],
        task: TaskSpec,
        *,
        bandwidth: float = 100e6,
        pathloss_exp: float = 3.0,
        deadline: float = 0.2,
        noise: float = 1.0,
    ) -> "SystemConfig":
        """Build a config from transmit SNRs ``P_s/sigma2`` and ``P_r/sigma2`` in dB."""
        return cls(
            src_power=noise * db_to_linear(ps_db),
            relay_power=noise * db_to_linear(pr_db),
            noise=noise,
            bandwidth=bandwidth,
            pathloss_exp=pathloss_exp,
            deadline=deadline,
            relays=tuple(relays),
            task=task,
        )

    @property
    def n_relays(self) -> int:
        return len(self.relays)

    @property
    def cpu_freqs(self) -> np.ndarray:
        return np.array([r.cpu_freq for r in self.relays], dtype=float)

    @property
    def dist_src(self) -> np.ndarray:
        return np.array([r.dist_src for r in self.relays], dtype=float)

    @property
    def dist_dst(self) -> np.ndarray:
        return np.array([r.dist_dst for r in self.relays], dtype=float)

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class LinkMetrics:
    """SNRs, rates and latency components for one relay (or a batch)."""

    snr_up: np.ndarray | float
    snr_down: np.ndarray | float
    rate_up: np.ndarray | float
    rate_down: np.ndarray | float
    t_up: np.ndarray | float
    t_comp: np.ndarray | float
    t_down: np.ndarray | float

    @property
    def t_total(self):
        return self.t_up + self.t_comp + self.t_down


@dataclass(frozen=True)
class EligibilityView:
    phi_margins: np.ndarray
    phi_set: tuple[int, ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.phi_set)

    def __contains__(self, index: int) -> bool:
        return index in self.phi_set


def pathloss_gain(d, alpha: float):
    """Large-scale power gain ``1 / (1 + d**alpha)``.

    The ``+1`` keeps the gain bounded at ``d = 0``, so no minimum-distance
    clamp is needed.
    """
    if not alpha > 2:
        raise ValueError(f"path-loss exponent must exceed 2, got {alpha}")
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ValueError("distance must be non-negative")
    out = 1.0 / (1.0 + d_arr**alpha)
    return float(out) if out.ndim == 0 else out


def _snr(power, gain2, d, cfg: SystemConfig):
    return power * np.asarray(gain2, dtype=float) / ((1.0 + np.asarray(d, dtype=float) ** cfg.pathloss_exp) * cfg.noise)


def _rate_from_snr(snr, bandwidth):
    return bandwidth * np.log1p(snr) / math.log(2.0)


def link_rate(power: float, gain2, d, cfg: SystemConfig):
    """Achievable rate ``W*log2(1 + P*|h|^2 / ((1+d^alpha)*sigma2))`` in bit/s."""
    if np.any(np.asarray(gain2) < 0):
        raise ValueError("fading power must be non-negative")
    rate = _rate_from_snr(_snr(power, gain2, d, cfg), cfg.bandwidth)
    return float(rate) if np.ndim(rate) == 0 else rate


def compute_time(task: TaskSpec, relay: RelayNode) -> float:
    return task.cycles / relay.cpu_freq


def _hop_time(bits, rate):
    # zero rate means the hop never completes; that is valid outage data
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(rate > 0, bits / np.where(rate > 0, rate, 1.0), np.inf)


def _metrics(cfg: SystemConfig, f, d_src, d_dst, h2, g2) -> LinkMetrics:
    task = cfg.task
    snr_up = _snr(cfg.src_power, h2, d_src, cfg)
    snr_down = _snr(cfg.relay_power, g2, d_dst, cfg)
    rate_up = _rate_from_snr(snr_up, cfg.bandwidth)
    rate_down = _rate_from_snr(snr_down, cfg.bandwidth)
    t_up = _hop_time(task.input_bits, rate_up)
    if task.compute_ratio == 0:
        t_down = np.zeros_like(rate_down)
    else:
        t_down = _hop_time(task.compute_ratio * task.input_bits, rate_down)
    t_comp = task.cycles / np.asarray(f, dtype=float) * np.ones_like(t_up)
    return LinkMetrics(snr_up, snr_down, rate_up, rate_down, t_up, t_comp, t_down)


def total_delay(task: TaskSpec, relay: RelayNode, cfg: SystemConfig, h2, g2) -> LinkMetrics:
    """Latency breakdown through ``relay`` for fading powers ``h2`` (uplink)
    and ``g2`` (downlink). ``h2``/``g2`` may be scalars or arrays of trials.
    """
    if np.any(np.asarray(h2) < 0) or np.any(np.asarray(g2) < 0):
        raise ValueError("fading powers must be non-negative")
    if task is not cfg.task:
        cfg = cfg.replace(task=task)
    m = _metrics(cfg, relay.cpu_freq, relay.dist_src, relay.dist_dst, h2, g2)
    if np.ndim(m.t_up) == 0:
        m = LinkMetrics(*(float(v) for v in (m.snr_up, m.snr_down, m.rate_up, m.rate_down, m.t_up, m.t_comp, m.t_down)))
    return m


def relay_delays(cfg: SystemConfig, h2, g2) -> LinkMetrics:
    """Metrics for every relay at once.

    ``h2`` and ``g2`` have shape ``(..., N)``; every field of the result has
    the same shape.
    """
    return _metrics(cfg, cfg.cpu_freqs, cfg.dist_src, cfg.dist_dst, h2, g2)


def eligibility(cfg: SystemConfig) -> EligibilityView:
    """Compute-time margins ``D_max - L*K/f_i`` and the strictly positive set."""
    margins = cfg.deadline - cfg.task.cycles / cfg.cpu_freqs
    phi_set = tuple(int(i) for i in np.flatnonzero(margins > 0))
    return EligibilityView(phi_margins=margins, phi_set=phi_set)
