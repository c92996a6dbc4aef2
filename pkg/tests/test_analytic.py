"""Closed forms and limits, cross-checked against the payoff algebra."""

import math

import numpy as np
import pytest

from qpauction import (
    AuctionInstance,
    DomainError,
    PaymentRule,
    efficiency,
    foc_residual,
    revenue,
    utility_gradient,
)
from qpauction.analytic import (
    ManyBuyerLimit,
    TwoBidderAllPayEq,
    allpay_two_bidder_power,
    logweight_bid_bound,
    manybuyer_limits,
    uniform_equilibrium,
    winnerpay_proportional_best_response,
    winnerpay_proportional_two_bidder,
)


# --- two-bidder all-pay closed form ----------------------------------------


def test_allpay_two_bidder_known_points():
    eq = allpay_two_bidder_power(4.0, 0.5)
    assert eq.low_bid == pytest.approx(1.0 / 9.0, rel=1e-14)
    assert eq.high_bid == pytest.approx(4.0 / 9.0, rel=1e-14)
    assert eq.revenue == pytest.approx(5.0 / 9.0, rel=1e-14)
    assert eq.efficiency == pytest.approx(3.0, rel=1e-14)

    sym = allpay_two_bidder_power(1.0, 1.0)
    assert sym.low_bid == pytest.approx(0.25, rel=1e-15)
    assert sym.high_bid == pytest.approx(0.25, rel=1e-15)
    assert sym.revenue == pytest.approx(0.5, rel=1e-15)
    assert sym.efficiency == pytest.approx(1.0, rel=1e-15)

    big = allpay_two_bidder_power(1024.0, 0.5)
    assert big.revenue == pytest.approx(1025.0 * 16.0 / 1089.0, rel=1e-14)
    assert big.revenue == pytest.approx(15.06, abs=5e-3)


def test_allpay_two_bidder_structure():
    rng = np.random.default_rng(3)
    for _ in range(200):
        alpha = float(np.exp(rng.uniform(0.0, np.log(1e6))))
        gamma = float(rng.uniform(0.05, 1.0))
        eq = allpay_two_bidder_power(alpha, gamma)
        assert eq.high_bid == pytest.approx(alpha * eq.low_bid, rel=1e-14)
        assert eq.revenue == pytest.approx(eq.low_bid + eq.high_bid, rel=1e-14)
        assert eq.low_bid > 0 and eq.high_bid > 0
        assert eq.revenue > 0 and eq.efficiency > 0
        assert eq.high_bid <= alpha and eq.low_bid <= 1.0


def test_allpay_two_bidder_domain():
    with pytest.raises(DomainError):
        allpay_two_bidder_power(0.5, 0.5)
    with pytest.raises(DomainError):
        allpay_two_bidder_power(4.0, 0.0)
    with pytest.raises(DomainError):
        allpay_two_bidder_power(4.0, 1.5)


@pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("alpha", [float(2**k) for k in range(11)])
def test_allpay_closed_form_is_stationary(alpha, gamma):
    eq = allpay_two_bidder_power(alpha, gamma)
    inst = AuctionInstance.make("all_pay", (alpha, 1.0), f"power:{gamma:g}")
    bids = (eq.high_bid, eq.low_bid)
    for i in range(2):
        assert abs(foc_residual(inst, i, bids)) <= 1e-9
    assert revenue(inst, bids) == pytest.approx(eq.revenue, rel=1e-13)
    assert efficiency(inst, bids) == pytest.approx(eq.efficiency, rel=1e-13)


def test_allpay_revenue_approaches_power_law():
    # revenue / (gamma * alpha**(1-gamma)) -> 1; the gap shrinks like
    # alpha**(-gamma), so smaller gamma needs larger alpha to enter the band
    for alpha, gamma in [(1e8, 1.0), (1e8, 0.5), (1e14, 0.25)]:
        eq = allpay_two_bidder_power(alpha, gamma)
        ratio = eq.revenue / (gamma * alpha ** (1.0 - gamma))
        assert abs(ratio - 1.0) <= 1e-3


# --- winners-pay proportional best response --------------------------------


def test_best_response_known_points():
    assert winnerpay_proportional_best_response(1.0 / 3.0, 1.0) == pytest.approx(
        1.0 / 3.0, rel=1e-15
    )
    assert winnerpay_proportional_best_response(0.0, 5.0) == 0.0
    assert winnerpay_proportional_best_response(0.41005, 4.0) == pytest.approx(
        0.93470, abs=1e-5
    )


def test_best_response_matches_naive_formula():
    rng = np.random.default_rng(8)
    for _ in range(500):
        s = float(np.exp(rng.uniform(np.log(1e-6), np.log(1e6))))
        v = float(np.exp(rng.uniform(np.log(1e-3), np.log(1e6))))
        stable = winnerpay_proportional_best_response(s, v)
        naive = math.sqrt(s * (s + v)) - s
        # the naive form itself carries ~eps*(s+v) of cancellation error
        assert stable == pytest.approx(naive, rel=1e-11, abs=1e-14 * (s + v))


def test_best_response_is_stable_at_extreme_ratios():
    # naive sqrt(s*(s+v)) overflows near 1e300; the answer is still ~v/2
    assert winnerpay_proportional_best_response(1e300, 1.0) == pytest.approx(
        0.5, rel=1e-12
    )
    # and sqrt cancellation would lose everything for tiny s
    b = winnerpay_proportional_best_response(1e-300, 1.0)
    assert b == pytest.approx(1e-150, rel=1e-12)


def test_best_response_monotone_with_half_value_limit():
    prev = 0.0
    for s in np.geomspace(1e-9, 1e12, 100):
        b = winnerpay_proportional_best_response(float(s), 1.0)
        assert b > prev
        assert b < 0.5
        prev = b
    assert winnerpay_proportional_best_response(1e10, 1.0) == pytest.approx(
        0.5, abs=1e-9
    )
    for v_lo, v_hi in [(1.0, 2.0), (3.0, 10.0)]:
        assert winnerpay_proportional_best_response(
            1.0, v_hi
        ) > winnerpay_proportional_best_response(1.0, v_lo)


def test_best_response_domain():
    with pytest.raises(DomainError):
        winnerpay_proportional_best_response(-0.1, 1.0)
    with pytest.raises(DomainError):
        winnerpay_proportional_best_response(1.0, 0.0)


# --- winners-pay two-bidder fixed point ------------------------------------
# frozen reference values: root of 3b^3 + (4a-2)b^2 - 4ab + a = 0 in
# [1/3, 1/2], computed at 40 digits, cross-checked by iterating the mutual
# best-response map to a 1e-35 fixed point (both derivations agree)

WP_FIXED = {
    4.0: (0.4100542223438479, 0.9346990467123792, 0.7747196434913356, 3.085213105378881),
    100.0: (0.4820628001326778, 6.477726317113587, 6.062442707946886, 93.14286447345436),
    1e6: (0.4998231921071917, 706.4821015629852, 705.9829851024495, 999293.0191355923),
}


@pytest.mark.parametrize("alpha", sorted(WP_FIXED))
def test_winners_pay_two_bidder_frozen_points(alpha):
    low, high, rev, eff = WP_FIXED[alpha]
    eq = winnerpay_proportional_two_bidder(alpha)
    assert eq.low_bid == pytest.approx(low, rel=1e-12)
    assert eq.high_bid == pytest.approx(high, rel=1e-12)
    assert eq.revenue == pytest.approx(rev, rel=1e-12)
    assert eq.efficiency == pytest.approx(eff, rel=1e-12)


def test_winners_pay_two_bidder_symmetric_case():
    eq = winnerpay_proportional_two_bidder(1.0)
    assert eq.low_bid == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert eq.high_bid == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert eq.revenue == pytest.approx(1.0 / 3.0, rel=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 3.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6])
def test_winners_pay_two_bidder_is_mutual_best_response(alpha):
    eq = winnerpay_proportional_two_bidder(alpha)
    assert 1.0 / 3.0 - 1e-12 <= eq.low_bid < 0.5
    assert winnerpay_proportional_best_response(eq.low_bid, alpha) == pytest.approx(
        eq.high_bid, rel=1e-10
    )
    assert winnerpay_proportional_best_response(eq.high_bid, 1.0) == pytest.approx(
        eq.low_bid, rel=1e-10
    )
    inst = AuctionInstance.make("winners_pay", (alpha, 1.0), "power:1")
    bids = (eq.high_bid, eq.low_bid)
    for i in range(2):
        assert abs(utility_gradient(inst, i, bids)) <= 1e-8
    assert revenue(inst, bids) == pytest.approx(eq.revenue, rel=1e-12)


# --- symmetric uniform-value equilibria ------------------------------------


def test_uniform_known_points():
    wp = uniform_equilibrium(2, 1.0, 1.0, "winners_pay")
    assert wp.bid == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert wp.revenue == pytest.approx(1.0 / 3.0, rel=1e-15)

    ap = uniform_equilibrium(3, 2.0, 0.5, "all_pay")
    assert ap.bid == pytest.approx(2.0 / 9.0, rel=1e-15)
    assert ap.revenue == pytest.approx(2.0 / 3.0, rel=1e-15)

    wp_sqrt = uniform_equilibrium(2, 1.0, 0.5, "winners_pay")
    assert wp_sqrt.bid == pytest.approx(0.2, rel=1e-15)
    assert wp_sqrt.revenue == pytest.approx(0.2, rel=1e-15)


@pytest.mark.parametrize("rule", ["all_pay", "winners_pay"])
@pytest.mark.parametrize("n", [2, 3, 5, 10])
@pytest.mark.parametrize("gamma", [0.5, 1.0])
@pytest.mark.parametrize("value", [1.0, 10.0])
def test_uniform_is_stationary_and_consistent(rule, n, gamma, value):
    eq = uniform_equilibrium(n, value, gamma, rule)
    assert eq.bid <= value
    if eq.rule is PaymentRule.ALL_PAY:
        assert eq.revenue == pytest.approx(n * eq.bid, rel=1e-15)
    else:
        assert eq.revenue == pytest.approx(eq.bid, rel=1e-15)
    inst = AuctionInstance.make(rule, (value,) * n, f"power:{gamma:g}")
    bids = (eq.bid,) * n
    for i in range(n):
        assert abs(foc_residual(inst, i, bids)) <= 1e-9
    assert revenue(inst, bids) == pytest.approx(eq.revenue, rel=1e-13)


def test_uniform_winners_pay_matches_alternate_form_at_linear_weight():
    # at gamma=1 the derived expression reduces to V / (1 + n/(n-1))
    for n in [2, 3, 5, 10]:
        for value in [1.0, 10.0]:
            eq = uniform_equilibrium(n, value, 1.0, "winners_pay")
            assert eq.bid == pytest.approx(value / (1.0 + n / (n - 1)), rel=1e-14)


def test_uniform_domain():
    with pytest.raises(DomainError):
        uniform_equilibrium(1, 1.0, 0.5, "all_pay")
    with pytest.raises(DomainError):
        uniform_equilibrium(2, 0.0, 0.5, "all_pay")
    with pytest.raises(DomainError):
        uniform_equilibrium(2, 1.0, 2.0, "all_pay")
    with pytest.raises(DomainError):
        uniform_equilibrium(True, 1.0, 0.5, "all_pay")


# --- log-weight bid bound ---------------------------------------------------


def test_logweight_bid_bound_values():
    assert logweight_bid_bound(math.e**2) == pytest.approx(math.e**2 / 4.0, rel=1e-12)
    assert logweight_bid_bound(math.e**4) == pytest.approx(math.e**4 / 16.0, rel=1e-12)
    assert logweight_bid_bound(1e6) == pytest.approx(
        1e6 / math.log(1e6) ** 2, rel=1e-15
    )
    assert logweight_bid_bound(1e6) == pytest.approx(5239.2, abs=0.1)


def test_logweight_bid_bound_domain():
    with pytest.raises(DomainError):
        logweight_bid_bound(1.0)
    with pytest.raises(DomainError):
        logweight_bid_bound(0.5)
    with pytest.raises(DomainError):
        logweight_bid_bound(float("inf"))


# --- many-buyer limits -------------------------------------------------------


def test_manybuyer_limits_winners_pay():
    assert manybuyer_limits(100.0, 1.0, "winners_pay") == ManyBuyerLimit(0.5, 0.5)
    lim = manybuyer_limits(100.0, 0.5, "winners_pay")
    assert lim.low_bid == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert lim.revenue == pytest.approx(1.0 / 3.0, rel=1e-15)


def test_manybuyer_limits_all_pay_reports_coefficient():
    assert manybuyer_limits(100.0, 1.0, "all_pay") == ManyBuyerLimit(1.0, 1.0)
    assert manybuyer_limits(7.0, 0.5, "all_pay") == ManyBuyerLimit(0.5, 0.5)


def test_manybuyer_limits_do_not_depend_on_alpha():
    for rule in ["all_pay", "winners_pay"]:
        assert manybuyer_limits(1.0, 0.5, rule) == manybuyer_limits(1e6, 0.5, rule)


def test_manybuyer_limits_match_uniform_formula_at_large_n():
    # with alpha = 1 the profile is exactly uniform, so the symmetric closed
    # form at n = 5000 should sit next to the limit
    for gamma in [0.5, 1.0]:
        wp = uniform_equilibrium(5000, 1.0, gamma, "winners_pay")
        lim = manybuyer_limits(1.0, gamma, "winners_pay")
        assert wp.revenue == pytest.approx(lim.revenue, abs=2e-4)
        ap = uniform_equilibrium(5000, 1.0, gamma, "all_pay")
        lim_ap = manybuyer_limits(1.0, gamma, "all_pay")
        assert ap.revenue == pytest.approx(lim_ap.revenue, abs=2e-4)
        assert ap.bid * 5000 == pytest.approx(lim_ap.low_bid, abs=2e-3)


def test_manybuyer_limits_domain():
    with pytest.raises(DomainError):
        manybuyer_limits(0.5, 0.5, "all_pay")
    with pytest.raises(DomainError):
        manybuyer_limits(4.0, 0.0, "all_pay")
