"""Reproducible Rayleigh fading draws.

Every (trial block, relay, hop) triple owns an independent Philox stream
keyed by the master seed, so a draw depends only on its coordinates and
never on how many relays or trials were requested alongside it. This is
what makes sweeps over ``N`` and over trial counts reuse earlier draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BLOCK_SIZE",
    "SeedSpec",
    "ChannelDraw",
    "draw",
    "iter_blocks",
    "open_uniforms",
    "uniform_cpu_freqs",
]

#: trials per RNG stream; changing it changes every Monte Carlo result
BLOCK_SIZE = 1 << 16

_CHANNEL_TAG = 0
_CPU_TAG = 1
_UPLINK, _DOWNLINK = 0, 1


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")


@dataclass(frozen=True)
class ChannelDraw:
    """Fading powers ``|h_i|^2`` and ``|g_i|^2``.

    Shape is ``(N,)`` for a single realization or ``(n_trials, N)`` for a
    block of trials.
    """

    h2: np.ndarray
    g2: np.ndarray

    @property
    def n_relays(self) -> int:
        return self.h2.shape[-1]

    def __getitem__(self, idx) -> "ChannelDraw":
        return ChannelDraw(self.h2[idx], self.g2[idx])


def _stream(master_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k.astype(float) + 0.5) * (1.0 / (1 << 53))


def draw(seed: SeedSpec, n_relays: int, n_trials: int | None = None) -> ChannelDraw:
    """Exp(1) fading powers for trial block ``seed.stream_id``.

    With ``n_trials=None`` a single realization (the block's first trial) is
    returned. Otherwise the first ``n_trials`` trials of the block, which
    may not exceed :data:`BLOCK_SIZE`.
    """
    if n_relays < 1:
        raise ValueError("n_relays must be at least 1")
    size = 1 if n_trials is None else int(n_trials)
    if not 1 <= size <= BLOCK_SIZE:
        raise ValueError(f"n_trials must be in [1, {BLOCK_SIZE}]")
    h2 = np.empty((size, n_relays))
    g2 = np.empty((size, n_relays))
    for i in range(n_relays):
        for hop, out in ((_UPLINK, h2), (_DOWNLINK, g2)):
            rng = _stream(seed.master_seed, _CHANNEL_TAG, seed.stream_id, i, hop)
            out[:, i] = -np.log(open_uniforms(rng, size))
    if n_trials is None:
        return ChannelDraw(h2[0], g2[0])
    return ChannelDraw(h2, g2)


def iter_blocks(master_seed: int, n_relays: int, n_trials: int):
    """Yield ``ChannelDraw`` blocks covering ``n_trials`` trials in order."""
    done = 0
    block = 0
    while done < n_trials:
        size = min(BLOCK_SIZE, n_trials - done)
        yield draw(SeedSpec(master_seed, block), n_relays, size)
        done += size
        block += 1


def uniform_cpu_freqs(master_seed: int, n_relays: int, low: float, high: float) -> np.ndarray:
    """CPU frequencies drawn once, uniform on ``[low, high]``.

    Relay ``i`` always uses the same underlying uniform, so two calls with
    different ranges are monotonically coupled and a longer relay list
    extends a shorter one.
    """
    if not high >= low > 0:
        raise ValueError("need 0 < low <= high")
    u = np.array([open_uniforms(_stream(master_seed, _CPU_TAG, i), 1)[0] for i in range(n_relays)])
    return low + (high - low) * u
