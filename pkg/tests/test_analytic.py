import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from mecrelay.analytic import (
    HopTimeDistribution,
    analytic_outage,
    config_at_gamma,
    cors_asymptotic_outage,
    cors_outage_upper_bound,
    cpors_outage,
    diversity_order,
    hop_time_cdf,
    lbrs_outage,
    limit_outage,
    predicted_diversity,
    relay_tail_probability,
    sum_pdf,
    sum_tail_probability,
    sum_tail_probability_nested,
)
from mecrelay.channel import open_uniforms
from mecrelay.model import RelayNode, SystemConfig, TaskSpec
from mecrelay.montecarlo import estimate_all_schemes_shared_draws
from mecrelay.quadrature import ConvergenceError, QuadResult, integrate_semi_infinite
from mecrelay.schemes import Scheme

TASK = TaskSpec(50e6, 10.0, 0.5)
GAMMAS = np.logspace(3, 6, 8)


def make(freqs, ps=25.0, pr=20.0, dists=None, task=TASK, **kw):
    dists = dists or [(1.0, 1.0)] * len(freqs)
    return SystemConfig.from_db(ps, pr, [RelayNode(f, *d) for f, d in zip(freqs, dists)], task, **kw)


# ---------------------------------------------------------------- hop times


def test_cdf_hand_values():
    d = HopTimeDistribution(1.0, 1.0)
    assert d.cdf(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    d = HopTimeDistribution(0.5, 2.0)
    # 2**(2/4) - 1 = sqrt(2) - 1
    assert d.cdf(4.0) == pytest.approx(math.exp(-0.5 * (math.sqrt(2) - 1)), rel=1e-15)
    assert hop_time_cdf(d, 4.0) == d.cdf(4.0)


def test_cdf_limits():
    d = HopTimeDistribution(0.01, 1.0)
    assert d.cdf(0.0) == 0.0 and d.sf(0.0) == 1.0
    assert d.cdf(-1.0) == 0.0
    assert d.cdf(1e-3) == 0.0  # 2**1000 saturates
    assert d.cdf(1e12) == pytest.approx(1.0, abs=1e-12)
    assert d.pdf(0.0) == 0.0 and d.pdf(1e-3) == 0.0


@given(
    c=st.floats(1e-4, 2.0),
    r=st.floats(0.1, 2.0),
    t=st.lists(st.floats(1e-3, 50.0), min_size=2, max_size=20),
)
def test_cdf_monotone_and_complementary(c, r, t):
    d = HopTimeDistribution(c, r)
    t = np.sort(np.array(t))
    F = d.cdf(t)
    assert np.all(np.diff(F) >= 0)
    assert np.all((F >= 0) & (F <= 1))
    assert np.allclose(F + d.sf(t), 1.0, atol=1e-15)


@pytest.mark.parametrize("c,r", [(0.01, 1.0), (0.3, 0.5), (1e-3, 1.0), (0.05, 2.0)])
def test_pdf_is_derivative_of_cdf(c, r):
    d = HopTimeDistribution(c, r)
    for t in np.linspace(0.05, 3.0, 13):
        h = 1e-5 * t
        fd = (d.cdf(t + h) - d.cdf(t - h)) / (2 * h)
        pdf = d.pdf(t)
        if pdf > 1e-8:
            assert fd == pytest.approx(pdf, rel=1e-6)


def test_hop_time_matches_sampling():
    # inverse transform of -log(u) through the rate formula
    c, rho = 0.02, 0.5
    u = open_uniforms(np.random.Generator(np.random.Philox(7)), 200_000)
    g2 = -np.log(u)
    x = rho / np.log2(1 + g2 / c)
    d = HopTimeDistribution(c, rho)
    for t in (0.05, 0.1, 0.2, 0.5):
        emp = np.mean(x <= t)
        assert abs(emp - d.cdf(t)) < 4 * math.sqrt(d.cdf(t) * d.sf(t) / x.size) + 1e-4


# ---------------------------------------------------------- sum of two hops


def test_sum_tail_edges():
    up, down = HopTimeDistribution(0.01), HopTimeDistribution(0.02, 0.5)
    assert sum_tail_probability(up, down, 0.0) == 1.0
    assert sum_tail_probability(up, down, -3.0) == 1.0
    assert sum_tail_probability(up, down, math.inf) == 0.0
    assert sum_tail_probability(up, down, 1e-3) == 1.0


def test_sum_tail_golden():
    up, down = HopTimeDistribution(0.01), HopTimeDistribution(0.02, 0.5)
    assert sum_tail_probability(up, down, 0.36) == pytest.approx(0.2105747702497507, rel=1e-9)


def test_zero_payload_reduces_to_one_hop():
    up, down = HopTimeDistribution(0.01), HopTimeDistribution(0.02, 0.0)
    for T in (0.1, 0.2, 0.4):
        assert sum_tail_probability(up, down, T) == up.sf(T)


def test_sum_tail_vs_scipy():
    up, down = HopTimeDistribution(0.05), HopTimeDistribution(0.1, 1.0)
    T = 0.5
    ref = up.sf(T) + sp_integrate.quad(lambda y: up.pdf(y) * down.sf(T - y), 0, T, epsabs=1e-13, limit=200)[0]
    assert sum_tail_probability(up, down, T) == pytest.approx(ref, rel=1e-9)


def test_sum_tail_vs_monte_carlo():
    c_up, c_down, rho, T = 0.01, 0.02, 0.5, 0.36
    gen = np.random.Generator(np.random.Philox(11))
    n = 10**6
    y = 1.0 / np.log2(1 - np.log(open_uniforms(gen, n)) / c_up)
    x = rho / np.log2(1 - np.log(open_uniforms(gen, n)) / c_down)
    p_mc = np.mean(x + y >= T)
    p = sum_tail_probability(HopTimeDistribution(c_up), HopTimeDistribution(c_down, rho), T)
    assert abs(p - p_mc) < 4 * math.sqrt(p * (1 - p) / n)


@given(
    c_up=st.floats(1e-3, 0.5),
    c_down=st.floats(1e-3, 0.5),
    rho=st.floats(0.1, 1.5),
    T=st.floats(0.05, 3.0),
    dT=st.floats(1e-3, 1.0),
)
@settings(max_examples=60, deadline=None)
def test_sum_tail_monotone_in_threshold_and_bounded(c_up, c_down, rho, T, dT):
    up, down = HopTimeDistribution(c_up), HopTimeDistribution(c_down, rho)
    a = sum_tail_probability(up, down, T)
    b = sum_tail_probability(up, down, T + dT)
    assert 0 <= b <= a + 1e-10 <= 1 + 1e-10
    # each hop alone is a lower bound on the sum exceeding T
    assert a >= max(up.sf(T), down.sf(T)) - 1e-12


@given(
    c=st.floats(1e-3, 0.3),
    scale=st.floats(1.01, 10.0),
    T=st.floats(0.05, 2.0),
)
@settings(max_examples=40, deadline=None)
def test_sum_tail_decreases_with_snr(c, scale, T):
    down = HopTimeDistribution(0.02, 0.5)
    worse = sum_tail_probability(HopTimeDistribution(c), down, T)
    better = sum_tail_probability(HopTimeDistribution(c / scale), down, T)
    assert better <= worse + 1e-10


def test_sum_tail_relative_accuracy_at_tiny_tail():
    up, down = HopTimeDistribution(1e-5), HopTimeDistribution(1e-5, 0.5)
    p, res = sum_tail_probability(up, down, 0.3, full_output=True)
    assert 0 < p < 1e-3
    assert res.abs_error_estimate <= 1e-9 * p * 10


def test_convergence_error_carries_value(monkeypatch):
    import mecrelay.analytic as an

    def fake(*args, **kwargs):
        return QuadResult(0.125, 1.0, 15, False)

    monkeypatch.setattr(an, "integrate", fake)
    with pytest.raises(ConvergenceError) as info:
        sum_tail_probability(HopTimeDistribution(0.01), HopTimeDistribution(0.02, 0.5), 0.3)
    assert info.value.value == pytest.approx(HopTimeDistribution(0.01).sf(0.3) + 0.125)


@pytest.mark.parametrize("c_up,c_down,rho", [(0.01, 0.02, 0.5), (0.3, 1e-3, 1.0), (1e-3, 0.3, 0.5)])
def test_density_normalized(c_up, c_down, rho):
    up, down = HopTimeDistribution(c_up), HopTimeDistribution(c_down, rho)

    def density(zs):
        return np.array([sum_pdf(up, down, z).value for z in zs])

    total = integrate_semi_infinite(density, 0.0, 1e-9, initial_panels=8).value
    assert abs(total - 1.0) < 1e-6


def test_density_matches_scipy_convolution():
    up, down = HopTimeDistribution(0.05), HopTimeDistribution(0.1, 0.5)
    for z in (0.1, 0.3, 1.0, 5.0):
        ref = sp_integrate.quad(lambda x: down.pdf(x) * up.pdf(z - x), 0, z, epsabs=1e-14, limit=200)[0]
        assert sum_pdf(up, down, z).value == pytest.approx(ref, rel=1e-7, abs=1e-14)


def test_nested_matches_closed_form_subset():
    for c_up, c_down, T in [(0.01, 0.3, 0.36), (0.3, 0.01, 1.0), (1e-3, 1e-3, 0.1)]:
        up, down = HopTimeDistribution(c_up), HopTimeDistribution(c_down, 0.5)
        a = sum_tail_probability(up, down, T)
        b = sum_tail_probability_nested(up, down, T)
        assert abs(a - b) < 1e-6


# ------------------------------------------------------------ scheme outages


def test_cors_bound_golden():
    # s = (1 + 0.5) * 50e6 / (100e6 * 0.1) = 7.5 bit/Hz, c_up = c_down = 2 / 10**2.5
    cfg = make([5e9], ps=25.0, pr=25.0)
    c = 2 / 10**2.5
    expect = 1 - math.exp(-2 * c * (2**7.5 - 1))
    assert cors_outage_upper_bound(cfg) == pytest.approx(expect, rel=1e-12)
    assert cors_outage_upper_bound(cfg) == pytest.approx(0.897417148369523, rel=1e-12)


def test_cors_bound_vanishes_at_huge_power():
    cfg = make([25e9, 20e9], ps=200.0, pr=200.0)
    assert cors_outage_upper_bound(cfg) < 1e-30


def test_default_golden_values(default_cfg):
    assert lbrs_outage(default_cfg) == pytest.approx(0.0009071861657152787, rel=1e-8)
    assert cpors_outage(default_cfg) == pytest.approx(0.15288547915624554, rel=1e-8)
    assert cors_outage_upper_bound(default_cfg) == pytest.approx(0.020761877475764398, rel=1e-12)


def test_cpors_uses_fastest_relay(default_cfg):
    assert cpors_outage(default_cfg) == relay_tail_probability(default_cfg, 3)


def test_cpors_ineligible_fastest_is_certain():
    cfg = make([2e9, 2.4e9])
    assert cpors_outage(cfg) == 1.0
    assert analytic_outage(cfg, "cpors") == 1.0


def test_ineligible_relays_contribute_one():
    fast = make([25e9, 20e9])
    mixed = make([25e9, 20e9, 2e9])
    assert lbrs_outage(mixed) == lbrs_outage(fast)
    assert cors_outage_upper_bound(mixed) == cors_outage_upper_bound(fast)


def test_single_relay_lbrs_equals_cpors():
    cfg = make([18e9])
    assert lbrs_outage(cfg) == cpors_outage(cfg)


def test_analytic_ordering(default_cfg):
    assert lbrs_outage(default_cfg) <= cpors_outage(default_cfg)
    assert lbrs_outage(default_cfg) <= cors_outage_upper_bound(default_cfg)


def test_analytic_dispatch(default_cfg):
    assert analytic_outage(default_cfg, Scheme.LBRS) == lbrs_outage(default_cfg)
    assert analytic_outage(default_cfg, "CPORS") == cpors_outage(default_cfg)
    assert analytic_outage(default_cfg, "cors") == cors_outage_upper_bound(default_cfg)


@given(f=st.lists(st.floats(5e9, 30e9), min_size=1, max_size=5), extra=st.floats(5e9, 30e9))
@settings(max_examples=25, deadline=None)
def test_lbrs_nonincreasing_when_adding_relay(f, extra):
    assert lbrs_outage(make(f + [extra])) <= lbrs_outage(make(f)) + 1e-12


@given(pr=st.floats(0.0, 30.0), step=st.floats(0.5, 10.0))
@settings(max_examples=25, deadline=None)
def test_outage_nonincreasing_in_relay_power(pr, step):
    f = [25e9, 20e9, 15e9, 30e9]
    for fn in (lbrs_outage, cpors_outage, cors_outage_upper_bound):
        assert fn(make(f, pr=pr + step)) <= fn(make(f, pr=pr)) + 1e-12


@pytest.mark.parametrize("pr", [5.0, 15.0, 25.0])
def test_bound_direction_against_monte_carlo(default_cfg, pr):
    cfg = default_cfg.replace(relay_power=10 ** (pr / 10))
    mc = estimate_all_schemes_shared_draws(cfg, 200_000, 5)[Scheme.CORS]
    assert cors_outage_upper_bound(cfg) >= mc.p_hat - mc.half_width


# ---------------------------------------------------------- high-SNR limits


def test_limit_lbrs_equals_cors_exactly(default_cfg):
    for hop in ("uplink", "downlink"):
        assert limit_outage(default_cfg, "lbrs", hop) == limit_outage(default_cfg, "cors", hop)


def test_limit_zero_payload_is_zero():
    cfg = make([25e9, 20e9], task=TaskSpec(50e6, 10.0, 0.0))
    assert limit_outage(cfg, "lbrs", "uplink") == 0.0


def test_limit_bad_hop(default_cfg):
    with pytest.raises(ValueError):
        limit_outage(default_cfg, "lbrs", "sideways")


def test_limit_approached_at_high_source_power(default_cfg):
    cfg = default_cfg.replace(src_power=1e6)
    assert abs(lbrs_outage(cfg) - limit_outage(cfg, "lbrs")) < 1e-3
    # the uplink time shrinks only like 1/log(P_s), so the approach is slow;
    # it is always from above since a finite uplink can only add delay
    gaps = [cpors_outage(default_cfg.replace(src_power=p)) - limit_outage(default_cfg, "cpors") for p in (1e4, 1e6, 1e9, 1e15)]
    assert all(g > 0 for g in gaps)
    assert np.all(np.diff(gaps) < 0)


def test_limit_cpors_ineligible():
    assert limit_outage(make([2e9]), "cpors") == 1.0


# ------------------------------------------------------------ diversity


def test_asymptote_tracks_bound():
    cfg = make([25e9, 20e9, 15e9, 30e9])
    ratios = [cors_outage_upper_bound(config_at_gamma(cfg, g)) / cors_asymptotic_outage(cfg, g) for g in (1e4, 1e5, 1e6)]
    assert all(r <= 1 for r in ratios)
    assert abs(1 - ratios[-1]) < abs(1 - ratios[0])
    assert ratios[-1] == pytest.approx(1.0, abs=1e-3)


def test_asymptote_scales_with_phi_size():
    cfg = make([25e9, 20e9, 15e9])
    assert cors_asymptotic_outage(cfg, 2e5) / cors_asymptotic_outage(cfg, 1e5) == pytest.approx(2.0**-3)


def test_config_at_gamma():
    cfg = config_at_gamma(make([25e9], dists=[(2.0, 1.0)]), 1e4)
    assert cfg.src_power == cfg.relay_power == pytest.approx(1e4 * 9)


@pytest.mark.parametrize(
    "freqs,phi",
    [
        ([25e9] * 4, 4),
        ([25e9, 20e9, 15e9, 30e9], 4),
        ([25e9, 20e9, 30e9, 2e9], 3),
        ([25e9, 30e9, 2e9, 1e9], 2),
    ],
)
def test_diversity_full_schemes(freqs, phi):
    cfg = make(freqs)
    for s in (Scheme.LBRS, Scheme.CORS):
        assert predicted_diversity(cfg, s) == phi
        fit = diversity_order(cfg, s, GAMMAS)
        assert abs(fit.slope - phi) <= 0.3


def test_diversity_cpors_is_one():
    fit = diversity_order(make([25e9, 20e9, 15e9, 30e9]), "cpors", GAMMAS)
    assert abs(fit.slope - 1.0) <= 0.1 and not fit.degenerate


def test_diversity_cpors_degenerate():
    cfg = make([2e9, 2.4e9])
    fit = diversity_order(cfg, "cpors", GAMMAS)
    assert fit.slope == 0.0 and fit.degenerate
    assert all(p == 1.0 for p in fit.outage)
    assert predicted_diversity(cfg, "cpors") == 0


@pytest.mark.parametrize("grid", [[1e3, 1e4, 1e5], [1e3, 1e5, 1e4, 1e6], [0, 1, 2, 3], [[1, 2], [3, 4]]])
def test_diversity_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        diversity_order(make([25e9]), "lbrs", grid)
