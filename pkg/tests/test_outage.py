"""Closed-form outage: per-hop CDFs, end-to-end combination, diversity."""

import math
from fractions import Fraction as F

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from scipy import integrate, special

from fdrelay.outage import (
    AntennaConfig,
    InvalidProbabilityError,
    LinkBudget,
    OutageQuery,
    ZFMode,
    diversity_order,
    e2e_outage,
    end_to_end_outage,
    link_dims,
    link_outage,
    link_snr_pdf,
    rate_to_snr_threshold,
    regularized_lower_gamma,
)
from fdrelay.wishart import CoeffTable, WishartDims, cached_table


def table(a, b):
    return cached_table(WishartDims(a, b))


# -- configuration types -----------------------------------------------------


def test_antenna_config_validation():
    AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE)
    with pytest.raises(ValueError):
        AntennaConfig(2, 1, 2, 1, ZFMode.RECEIVE)  # projection needs n_r1 >= 2
    with pytest.raises(ValueError):
        AntennaConfig(2, 2, 1, 1, ZFMode.TRANSMIT)
    with pytest.raises(ValueError):
        AntennaConfig(0, 2, 2, 1, ZFMode.RECEIVE)
    # single relay-tx antenna is fine when the null is on the receive side
    AntennaConfig(2, 2, 1, 1, ZFMode.RECEIVE)


def test_link_budget_scales():
    b = LinkBudget(p_s=2.0, p_r=4.0, gammabar_sr=10.0, gammabar_rd=5.0,
                   alpha_sr=0.5, alpha_rd=2.0)
    assert b.effective_p_s == pytest.approx(0.5)
    assert b.effective_p_r == pytest.approx(16.0)
    assert b.scale_sr == pytest.approx(5.0)
    assert b.scale_rd == pytest.approx(80.0)
    with pytest.raises(ValueError):
        LinkBudget(p_s=0.0)


def test_outage_query_validation():
    with pytest.raises(ValueError):
        OutageQuery()
    with pytest.raises(ValueError):
        OutageQuery(gamma_t=1.0, rate_r0=1.0)
    with pytest.raises(ValueError):
        OutageQuery.snr(-1.0)
    assert OutageQuery.snr(3.0).snr_threshold() == 3.0
    assert OutageQuery.rate(1.0).snr_threshold() == 1.0


# -- link dims ------------------------------------------------------------------


def test_link_dims_receive():
    cfg = AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE)
    assert link_dims(cfg, "sr") == WishartDims(2, 2)   # (n_r1 - 1) x n_s
    assert link_dims(cfg, "rd") == WishartDims(1, 2)   # n_r2 x n_d


def test_link_dims_transmit():
    cfg = AntennaConfig(2, 3, 2, 2, ZFMode.TRANSMIT)
    assert link_dims(cfg, "sr") == WishartDims(2, 3)   # full n_r1 x n_s
    assert link_dims(cfg, "rd") == WishartDims(1, 2)   # (n_r2 - 1) x n_d
    with pytest.raises(ValueError):
        link_dims(cfg, "xx")


# -- regularized lower gamma -------------------------------------------------------


def test_regularized_gamma_examples():
    assert regularized_lower_gamma(1, 0.0) == 0.0
    assert regularized_lower_gamma(1, math.log(2.0)) == pytest.approx(0.5, rel=1e-14)
    assert regularized_lower_gamma(3, 1e4) == 1.0
    with pytest.raises(ValueError):
        regularized_lower_gamma(0, 1.0)
    with pytest.raises(ValueError):
        regularized_lower_gamma(1, -0.5)


@given(st.integers(1, 25), st.floats(min_value=0.0, max_value=1e4,
                                     allow_nan=False, allow_infinity=False))
def test_regularized_gamma_matches_scipy(s, x):
    ours = regularized_lower_gamma(s, x)
    ref = float(special.gammainc(s, x))
    assert ours == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_regularized_gamma_monotone():
    xs = np.linspace(0.0, 50.0, 400)
    for s in (1, 3, 8):
        vals = [regularized_lower_gamma(s, float(x)) for x in xs]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


# -- per-hop outage ------------------------------------------------------------------


def test_link_outage_limits():
    t = table(2, 3)
    assert link_outage(t, 2.0, 0.0) == 0.0
    assert link_outage(t, 2.0, 1e9) == pytest.approx(1.0, abs=1e-12)


def test_link_outage_erlang_two():
    # Erlang(2) CDF at 1: 1 - 2/e; cross-checked by quadrature of x e^-x
    t = table(1, 2)
    expected = 1.0 - 2.0 * math.exp(-1.0)
    assert link_outage(t, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)
    quad, _ = integrate.quad(lambda x: x * math.exp(-x), 0.0, 1.0)
    assert link_outage(t, 1.0, 1.0) == pytest.approx(quad, rel=1e-9)


@pytest.mark.parametrize("a,b,scale", [(1, 2, 1.0), (2, 2, 3.7), (2, 3, 0.6), (1, 1, 5.0)])
def test_link_outage_consistent_with_pdf(a, b, scale):
    t = table(a, b)
    for gamma_t in (0.4, 1.3, 6.0):
        ref, err = integrate.quad(lambda x: link_snr_pdf(t, scale, x), 0.0, gamma_t,
                                  limit=200)
        assert link_outage(t, scale, gamma_t) == pytest.approx(ref, abs=max(1e-8, 10 * err))


def test_link_outage_monotone_in_threshold_and_scale():
    t = table(2, 2)
    thresholds = np.linspace(0.0, 20.0, 60)
    vals = [link_outage(t, 2.5, float(g)) for g in thresholds]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    scales = np.linspace(0.2, 40.0, 60)
    vals = [link_outage(t, float(s), 3.0) for s in scales]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_link_outage_rejects_bogus_weights():
    good = table(1, 2)
    bogus = CoeffTable(good.dims, good.norm_const, {(1, 1): F(3, 2)})
    with pytest.raises(InvalidProbabilityError):
        link_outage(bogus, 1.0, 1e6)  # weights sum to 1.5 -> "probability" 1.5


# -- pdf ---------------------------------------------------------------------------------


def test_pdf_values():
    assert link_snr_pdf(table(1, 1), 1.0, 0.0) == pytest.approx(1.0)
    # scaled Erlang(2): (x / scale) e^{-x/scale} / scale at x=2, scale=2
    assert link_snr_pdf(table(1, 2), 2.0, 2.0) == pytest.approx(0.5 * math.exp(-1.0))


@pytest.mark.parametrize("a,b", [(1, 1), (1, 2), (2, 2), (2, 3)])
def test_pdf_normalization(a, b):
    t = table(a, b)
    total, err = integrate.quad(lambda x: link_snr_pdf(t, 1.7, x), 0.0, np.inf, limit=300)
    assert total == pytest.approx(1.0, abs=1e-8)


# -- combination --------------------------------------------------------------------------


def test_e2e_examples():
    assert e2e_outage(0.0, 0.4) == 0.4
    assert e2e_outage(1.0, 0.3) == 1.0
    assert e2e_outage(0.1, 0.2) == pytest.approx(0.28)
    with pytest.raises(ValueError):
        e2e_outage(-0.1, 0.5)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_e2e_properties(p, q):
    v = e2e_outage(p, q)
    assert v == pytest.approx(1.0 - (1.0 - p) * (1.0 - q), abs=1e-15)
    assert v == pytest.approx(e2e_outage(q, p), abs=1e-15)
    assert 0.0 <= v <= 1.0


# -- rate threshold -----------------------------------------------------------------------


def test_rate_to_snr_threshold():
    assert rate_to_snr_threshold(0.0) == 0.0
    assert rate_to_snr_threshold(1.0) == 1.0
    assert rate_to_snr_threshold(3.0) == 7.0
    with pytest.raises(ValueError):
        rate_to_snr_threshold(-1.0)


def test_rate_path_is_bitwise_same_as_snr_path():
    cfg = AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE)
    budget = LinkBudget(gammabar_sr=30.0, gammabar_rd=30.0)
    for r0 in (0.5, 1.0, 2.0, 3.5):
        via_rate = end_to_end_outage(cfg, budget, OutageQuery.rate(r0))
        via_snr = end_to_end_outage(cfg, budget, OutageQuery.snr(2.0 ** r0 - 1.0))
        assert via_rate == via_snr


# -- end-to-end closed form ----------------------------------------------------------------


def test_e2e_zero_threshold():
    cfg = AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE)
    assert end_to_end_outage(cfg, LinkBudget(), OutageQuery.snr(0.0)) == 0.0


def test_e2e_monotone_in_average_snr():
    cfg = AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE)
    q = OutageQuery.snr(10.0)
    vals = []
    for g_db in range(0, 35, 5):
        g = 10.0 ** (g_db / 10.0)
        vals.append(end_to_end_outage(cfg, LinkBudget(gammabar_sr=g, gammabar_rd=g), q))
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_antenna_split_ordering_high_snr():
    q = OutageQuery.snr(10.0)
    for g_db in (20, 25, 30):
        g = 10.0 ** (g_db / 10.0)
        budget = LinkBudget(gammabar_sr=g, gammabar_rd=g)
        p_2321 = end_to_end_outage(AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE), budget, q)
        p_2231 = end_to_end_outage(AntennaConfig(2, 2, 3, 1, ZFMode.RECEIVE), budget, q)
        assert p_2321 <= p_2231


# -- diversity order --------------------------------------------------------------------------


@pytest.mark.parametrize("antennas,mode,expected", [
    ((2, 3, 2, 1), ZFMode.RECEIVE, 2),
    ((2, 3, 2, 2), ZFMode.RECEIVE, 4),
    ((2, 3, 2, 3), ZFMode.RECEIVE, 4),
    ((3, 2, 2, 2), ZFMode.RECEIVE, 3),
    ((2, 3, 2, 1), ZFMode.TRANSMIT, 1),
    ((2, 2, 3, 1), ZFMode.TRANSMIT, 2),
])
def test_diversity_order(antennas, mode, expected):
    assert diversity_order(AntennaConfig(*antennas, mode)) == expected


def test_high_snr_slope_quick():
    # log-log slope of the analytic curve over 30..40 dB tracks -order
    cfg = AntennaConfig(2, 3, 2, 1, ZFMode.RECEIVE)
    q = OutageQuery.snr(10.0)
    points = []
    for g_db in np.arange(30.0, 40.1, 2.5):
        g = 10.0 ** (g_db / 10.0)
        p = end_to_end_outage(cfg, LinkBudget(gammabar_sr=g, gammabar_rd=g), q)
        points.append((g_db / 10.0, math.log10(p)))
    slope = np.polyfit(*zip(*points), 1)[0]
    assert abs(slope + diversity_order(cfg)) <= 0.3
