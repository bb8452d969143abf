"""Relay-selection policies over one channel realization.

``LBRS`` picks the relay with the smallest end-to-end latency, ``CORS`` the
relay with the best bottleneck rate ``min(rate_up, rate_down)`` and
``CPORS`` the fastest CPU. Ties go to the lowest index (``np.argmax`` and
``np.argmin`` already return the first hit).

:func:`select_batch` is the vectorized core shared by the scalar selectors
and the Monte Carlo loop.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelDraw
from .model import SystemConfig, relay_delays

__all__ = [
    "Scheme",
    "SelectionOutcome",
    "select_cors",
    "select_cpors",
    "select_lbrs",
    "select",
    "select_batch",
]


class Scheme(str, enum.Enum):
    LBRS = "LBRS"
    CORS = "CORS"
    CPORS = "CPORS"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


@dataclass(frozen=True)
class SelectionOutcome:
    chosen_index: int | None
    scheme_id: Scheme
    realized_delay: float | None = None


def _cpors_index(cfg: SystemConfig) -> int:
    return int(np.argmax(cfg.cpu_freqs))


def select_batch(cfg: SystemConfig, scheme: Scheme, draw: ChannelDraw, metrics=None):
    """Chosen indices and realized delays for every trial in ``draw``.

    Returns ``(index, delay)`` arrays with the draw's leading shape.
    ``metrics`` may carry a precomputed :func:`relay_delays` result so
    several schemes can share one evaluation.
    """
    scheme = Scheme.parse(scheme)
    m = relay_delays(cfg, draw.h2, draw.g2) if metrics is None else metrics
    t = m.t_total
    if scheme is Scheme.LBRS:
        idx = np.argmin(t, axis=-1)
    elif scheme is Scheme.CORS:
        idx = np.argmax(np.minimum(m.rate_up, m.rate_down), axis=-1)
    else:
        idx = np.full(t.shape[:-1], _cpors_index(cfg), dtype=np.intp)
    delay = np.take_along_axis(t, np.expand_dims(idx, -1), axis=-1)[..., 0]
    return idx, delay


def _single(cfg: SystemConfig, scheme: Scheme, draw: ChannelDraw) -> SelectionOutcome:
    if draw.h2.shape != (cfg.n_relays,) or draw.g2.shape != (cfg.n_relays,):
        raise ValueError(f"expected a single draw over {cfg.n_relays} relays")
    idx, delay = select_batch(cfg, scheme, draw)
    return SelectionOutcome(int(idx), scheme, float(delay))


def select_cors(cfg: SystemConfig, draw: ChannelDraw) -> SelectionOutcome:
    """Best bottleneck rate, blind to compute ability."""
    return _single(cfg, Scheme.CORS, draw)


def select_cpors(cfg: SystemConfig, draw: ChannelDraw | None = None) -> SelectionOutcome:
    """Fastest CPU. The choice ignores the channel; ``draw`` only fills in
    the realized delay."""
    if draw is None:
        return SelectionOutcome(_cpors_index(cfg), Scheme.CPORS, None)
    return _single(cfg, Scheme.CPORS, draw)


def select_lbrs(cfg: SystemConfig, draw: ChannelDraw) -> SelectionOutcome:
    return _single(cfg, Scheme.LBRS, draw)


def select(cfg: SystemConfig, scheme, draw: ChannelDraw) -> SelectionOutcome:
    return _single(cfg, Scheme.parse(scheme), draw)
