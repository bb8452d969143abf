"""Analytic delay-outage probabilities and diversity orders.

Times are normalized by ``L/W``: a hop with fading power ``|h|^2`` and
payload ratio ``r`` (1 on the uplink, ``rho`` on the downlink) takes
``r / log2(1 + |h|^2 / c)`` units, where ``c = (1 + d^alpha) * sigma2 / P``.
Its CDF is ``exp(-c * (2**(r/t) - 1))``. A relay with compute margin
``phi`` then misses the deadline iff ``Y + X >= W*phi/L``.

All exponents of the form ``c * 2**(r/t)`` are formed in log space; once
``log(c) + r*ln2/t`` passes :data:`_LOG_OVERFLOW` the CDF is exactly 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import SystemConfig, eligibility
from .quadrature import (
    DEFAULT_INNER_TOL,
    DEFAULT_OUTER_TOL,
    ConvergenceError,
    QuadResult,
    integrate,
    integrate_semi_infinite,
)
from .schemes import Scheme

__all__ = [
    "HopTimeDistribution",
    "DiversityFit",
    "hop_time_cdf",
    "sum_tail_probability",
    "sum_tail_probability_nested",
    "sum_pdf",
    "relay_tail_probability",
    "cors_outage_upper_bound",
    "cpors_outage",
    "lbrs_outage",
    "analytic_outage",
    "limit_outage",
    "cors_asymptotic_outage",
    "config_at_gamma",
    "predicted_diversity",
    "diversity_order",
]

LN2 = math.log(2.0)
# exp(-e**_LOG_OVERFLOW) underflows to exactly 0.0 in double precision
_LOG_OVERFLOW = 7.0
# high-SNR hop-time densities concentrate on a few percent of the interval
_PANELS = 8
# geometric breakpoints stop this close (relative) to an endpoint; the
# integrands vanish super-exponentially well before that
_GRID_DEPTH = 1e-4


def _endpoint_grid(a: float, b: float) -> np.ndarray:
    """Panel edges on ``[a, b]`` halving toward both ends.

    Convolution kernels over a long interval are two narrow spikes at its
    ends; uniform starting panels would step straight over them.
    """
    half = 0.5 * (b - a)
    lo = min(half, _GRID_DEPTH)
    n = max(2, int(math.ceil(math.log2(half / lo))) + 1)
    offsets = np.geomspace(lo, half, n)
    return np.concatenate([a + offsets, b - offsets])


@dataclass(frozen=True)
class HopTimeDistribution:
    """Normalized transmission time of one hop.

    Parameters
    ----------
    scale : float
        ``c = (1 + d**alpha) * sigma2 / P``, the inverse mean SNR.
    payload_ratio : float
        Bits sent on the hop divided by ``L``.
    """

    scale: float
    payload_ratio: float = 1.0

    @classmethod
    def uplink(cls, cfg: SystemConfig, i: int) -> "HopTimeDistribution":
        d = cfg.relays[i].dist_src
        return cls((1.0 + d**cfg.pathloss_exp) * cfg.noise / cfg.src_power, 1.0)

    @classmethod
    def downlink(cls, cfg: SystemConfig, i: int) -> "HopTimeDistribution":
        d = cfg.relays[i].dist_dst
        return cls((1.0 + d**cfg.pathloss_exp) * cfg.noise / cfg.relay_power, cfg.task.compute_ratio)

    def _exponent(self, t):
        """``c * (2**(r/t) - 1)`` for ``t > 0``; ``inf`` past overflow."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            u = self.payload_ratio * LN2 / t
            big = math.log(self.scale) + u > _LOG_OVERFLOW
            e = self.scale * np.expm1(np.where(big, 0.0, u))
        return np.where(big, np.inf, e), u

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        pos = t > 0
        e, _ = self._exponent(np.where(pos, t, 1.0))
        out = np.where(pos, np.exp(-e), 0.0)
        return float(out) if out.ndim == 0 else out

    def sf(self, t):
        """``1 - cdf(t)`` without cancellation for small tails."""
        t = np.asarray(t, dtype=float)
        pos = t > 0
        e, _ = self._exponent(np.where(pos, t, 1.0))
        out = np.where(pos, -np.expm1(-e), 1.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        pos = t > 0
        tt = np.where(pos, t, 1.0)
        e, u = self._exponent(tt)
        if self.payload_ratio == 0:
            out = np.zeros_like(tt)
        else:
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                log_pdf = math.log(self.scale * self.payload_ratio * LN2) + u - 2.0 * np.log(tt) - e
            out = np.where(pos & np.isfinite(e), np.exp(np.where(np.isfinite(e), log_pdf, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out


def hop_time_cdf(dist: HopTimeDistribution, t):
    return dist.cdf(t)


def sum_tail_probability(
    up: HopTimeDistribution,
    down: HopTimeDistribution,
    threshold: float,
    tol: float = DEFAULT_INNER_TOL,
    *,
    full_output: bool = False,
):
    """``Pr{Y + X >= T}`` for independent uplink ``Y`` and downlink ``X``.

    Evaluated as ``Pr{Y >= T} + int_0^T f_Y(y) Pr{X > T - y} dy``. Both
    terms are non-negative, so tiny tails keep full relative accuracy. The
    quadrature tolerance is ``tol`` times a closed-form upper bound on the
    answer, i.e. effectively relative.

    Raises :class:`ConvergenceError` if the integral does not converge.
    """
    T = float(threshold)
    if T <= 0:
        return (1.0, None) if full_output else 1.0
    if math.isinf(T):
        return (0.0, None) if full_output else 0.0
    head = up.sf(T)
    if down.payload_ratio == 0 or up.payload_ratio == 0:
        # one hop is instantaneous
        p = head if down.payload_ratio == 0 else down.sf(T)
        return (p, None) if full_output else p
    bound = min(1.0, up.sf(0.5 * T) + down.sf(0.5 * T))
    if bound == 0.0:
        return (0.0, None) if full_output else 0.0

    def integrand(y):
        return up.pdf(y) * down.sf(T - y)

    res = integrate(integrand, 0.0, T, tol * bound, initial_panels=_PANELS, breakpoints=_endpoint_grid(0.0, T))
    p = min(1.0, head + res.value)
    if not res.converged:
        raise ConvergenceError(f"tail integral did not converge at T={T}", res, p)
    return (p, res) if full_output else p


def sum_pdf(up: HopTimeDistribution, down: HopTimeDistribution, z: float, tol: float = 1e-10) -> QuadResult:
    """Density of ``Z = X + Y`` at ``z`` as a constant prefactor times a
    convolution integral over the downlink time ``x`` in ``(0, z)``.

    The prefactor collects ``ln2**2 * rho * c_up * c_down * exp(c_up + c_down)``;
    the integrand carries the remaining ``x``-dependent factors.
    """
    z = float(z)
    if z <= 0:
        return QuadResult(0.0, 0.0, 0, True)
    c_s, c_r, rho = up.scale, down.scale, down.payload_ratio
    prefactor = LN2 * LN2 * rho * c_s * c_r * math.exp(c_s + c_r)
    log_cs, log_cr = math.log(c_s), math.log(c_r)

    def kernel(x):
        w = z - x
        a = rho / x
        b = 1.0 / w
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            decay = np.exp(log_cr + a * LN2) + np.exp(log_cs + b * LN2)
            log_k = -decay + (a + b) * LN2 - 2.0 * np.log(x) - 2.0 * np.log(w)
        return np.where(np.isfinite(decay), np.exp(np.where(np.isfinite(decay), log_k, 0.0)), 0.0)

    res = integrate(
        kernel, 0.0, z, tol / prefactor if prefactor > 0 else tol, initial_panels=_PANELS, breakpoints=_endpoint_grid(0.0, z)
    )
    return QuadResult(prefactor * res.value, prefactor * res.abs_error_estimate, res.n_evaluations, res.converged)


def sum_tail_probability_nested(
    up: HopTimeDistribution,
    down: HopTimeDistribution,
    threshold: float,
    inner_tol: float = 1e-10,
    outer_tol: float = DEFAULT_OUTER_TOL,
) -> float:
    """``Pr{Y + X >= T}`` by integrating the convolution density of ``Z``
    from ``T`` to infinity. Slow; kept as an independent check on
    :func:`sum_tail_probability`.
    """
    T = float(threshold)
    if T <= 0:
        return 1.0
    failed = []

    def density(zs):
        out = np.empty_like(zs)
        for k, z in enumerate(zs):
            r = sum_pdf(up, down, z, inner_tol)
            if not r.converged:
                failed.append(z)
            out[k] = r.value
        return out

    res = integrate_semi_infinite(density, T, outer_tol, initial_panels=_PANELS)
    if failed or not res.converged:
        raise ConvergenceError(f"nested tail integral did not converge at T={T}", res)
    return min(1.0, res.value)


def _threshold(cfg: SystemConfig, margin: float) -> float:
    return cfg.bandwidth * margin / cfg.task.input_bits


def relay_tail_probability(cfg: SystemConfig, i: int, tol: float = DEFAULT_INNER_TOL) -> float:
    """Probability that relay ``i`` alone misses the deadline."""
    margin = eligibility(cfg).phi_margins[i]
    if margin <= 0:
        return 1.0
    return sum_tail_probability(
        HopTimeDistribution.uplink(cfg, i), HopTimeDistribution.downlink(cfg, i), _threshold(cfg, margin), tol
    )


def _neg_expm1_pow2(bits_per_hz, coeff):
    """``1 - exp(-coeff * (2**bits_per_hz - 1))``, saturating at 1."""
    with np.errstate(over="ignore"):
        return -np.expm1(-coeff * np.expm1(bits_per_hz * LN2))


def cors_outage_upper_bound(cfg: SystemConfig) -> float:
    """Product over eligible relays of the probability that either hop
    rate falls below ``(1 + rho) * L / phi_i``."""
    elig = eligibility(cfg)
    if not elig.phi_set:
        return 1.0
    L, rho, W = cfg.task.input_bits, cfg.task.compute_ratio, cfg.bandwidth
    p = 1.0
    for i in elig.phi_set:
        up = HopTimeDistribution.uplink(cfg, i)
        down = HopTimeDistribution.downlink(cfg, i)
        s = (L + rho * L) / (W * elig.phi_margins[i])
        p *= float(_neg_expm1_pow2(s, up.scale + down.scale))
    return p


def cpors_outage(cfg: SystemConfig, tol: float = DEFAULT_INNER_TOL) -> float:
    i = int(np.argmax(cfg.cpu_freqs))
    return relay_tail_probability(cfg, i, tol)


def lbrs_outage(cfg: SystemConfig, tol: float = DEFAULT_INNER_TOL) -> float:
    """Probability that every relay misses the deadline.

    Relays outside the eligible set contribute a factor of exactly 1.
    """
    p = 1.0
    for i in eligibility(cfg).phi_set:
        p *= relay_tail_probability(cfg, i, tol)
    return p


def analytic_outage(cfg: SystemConfig, scheme, tol: float = DEFAULT_INNER_TOL) -> float:
    """Exact outage for LBRS and CPORS; the upper bound for CORS."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.LBRS:
        return lbrs_outage(cfg, tol)
    if scheme is Scheme.CPORS:
        return cpors_outage(cfg, tol)
    return cors_outage_upper_bound(cfg)


def _single_hop_failure(cfg: SystemConfig, i: int, margin: float, saturated_hop: str) -> float:
    L, W = cfg.task.input_bits, cfg.bandwidth
    if saturated_hop == "uplink":
        dist = HopTimeDistribution.downlink(cfg, i)
    elif saturated_hop == "downlink":
        dist = HopTimeDistribution.uplink(cfg, i)
    else:
        raise ValueError(f"saturated_hop must be 'uplink' or 'downlink', got {saturated_hop!r}")
    return float(_neg_expm1_pow2(dist.payload_ratio * L / (W * margin), dist.scale))


def limit_outage(cfg: SystemConfig, scheme, saturated_hop: str = "uplink") -> float:
    """Outage when one hop has unbounded SNR and its time drops out.

    ``saturated_hop="uplink"`` is the ``P_s -> inf`` limit; ``"downlink"``
    is ``P_r -> inf``. LBRS and CORS share the same expression.
    """
    scheme = Scheme.parse(scheme)
    elig = eligibility(cfg)
    if scheme is Scheme.CPORS:
        i = int(np.argmax(cfg.cpu_freqs))
        margin = elig.phi_margins[i]
        return 1.0 if margin <= 0 else _single_hop_failure(cfg, i, margin, saturated_hop)
    p = 1.0
    for i in elig.phi_set:
        p *= _single_hop_failure(cfg, i, elig.phi_margins[i], saturated_hop)
    return p


def cors_asymptotic_outage(cfg: SystemConfig, gamma: float) -> float:
    """First-order high-SNR expansion of the CORS bound with ``P_s = P_r``.

    ``gamma`` is the normalized SNR ``P_s / ((1 + d_si**alpha) * sigma2)``;
    the expansion is exact to first order when every relay shares the same
    source distance.
    """
    elig = eligibility(cfg)
    L, rho, W, a = cfg.task.input_bits, cfg.task.compute_ratio, cfg.bandwidth, cfg.pathloss_exp
    p = 1.0
    for i in elig.phi_set:
        r = cfg.relays[i]
        s = (L + rho * L) / (W * elig.phi_margins[i])
        p *= math.expm1(s * LN2) * (2.0 + r.dist_src**a + r.dist_dst**a) / (1.0 + r.dist_src**a)
    return p / gamma ** len(elig.phi_set)


def config_at_gamma(cfg: SystemConfig, gamma: float) -> SystemConfig:
    """Set ``P_s = P_r`` so that relay 0's normalized uplink SNR is ``gamma``."""
    p = gamma * (1.0 + cfg.relays[0].dist_src ** cfg.pathloss_exp) * cfg.noise
    return cfg.replace(src_power=p, relay_power=p)


def predicted_diversity(cfg: SystemConfig, scheme) -> int:
    scheme = Scheme.parse(scheme)
    elig = eligibility(cfg)
    if scheme is Scheme.CPORS:
        return int(elig.phi_margins[int(np.argmax(cfg.cpu_freqs))] > 0)
    return elig.size


@dataclass(frozen=True)
class DiversityFit:
    scheme_id: Scheme
    gamma_grid: tuple[float, ...]
    outage: tuple[float, ...]
    log_outage: tuple[float, ...]
    slope: float
    fit_residual: float
    degenerate: bool = False


def diversity_order(cfg: SystemConfig, scheme, gamma_grid: Sequence[float], tol: float = DEFAULT_INNER_TOL) -> DiversityFit:
    """Least-squares slope of ``-log P_out`` against ``log gamma``.

    Outages come from :func:`analytic_outage` at ``config_at_gamma`` for
    each grid point. A grid on which the outage is identically 1 has no
    SNR dependence; it is reported as slope 0 with ``degenerate=True``.
    """
    scheme = Scheme.parse(scheme)
    g = np.asarray(gamma_grid, dtype=float)
    if g.ndim != 1 or g.size < 4 or np.any(np.diff(g) <= 0) or np.any(g <= 0):
        raise ValueError("gamma_grid must be strictly increasing, positive, with at least 4 points")
    p = np.array([analytic_outage(config_at_gamma(cfg, x), scheme, tol) for x in g])
    if np.any(p <= 0):
        raise ValueError("outage underflowed to 0; choose a lower gamma range")
    log_p = np.log(p)
    if np.all(p == 1.0):
        return DiversityFit(scheme, tuple(g), tuple(p), tuple(log_p), 0.0, 0.0, True)
    x = np.log(g)
    coef, resid, *_ = np.polyfit(x, -log_p, 1, full=True)
    rms = math.sqrt(float(resid[0]) / g.size) if resid.size else 0.0
    return DiversityFit(scheme, tuple(g), tuple(p), tuple(log_p), float(coef[0]), rms)
